// chainbench: compose dependency-chained multi-problem benchmarks from
// single-problem QA datasets, run them against chat endpoints, and score and
// analyze the transcripts.

#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chainbench/commands.hpp"

namespace {

std::atomic<bool> g_cancel{false};

void handle_sigint(int) { g_cancel.store(true); }

std::vector<int> parse_lengths(const std::string& spec) {
    std::vector<int> out;
    for (const std::string& part : chainbench::split(spec, ',')) {
        auto v = chainbench::parse_int(chainbench::trim(part));
        if (!v || *v < 1) throw CLI::ValidationError("--n", "expected positive integers");
        out.push_back(static_cast<int>(*v));
    }
    if (out.empty()) throw CLI::ValidationError("--n", "empty length list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace chainbench;

    CLI::App app{"dependency-chained multi-problem benchmark toolkit"};
    app.require_subcommand(1);

    FilterArgs filter_args;
    auto* filter = app.add_subcommand("filter", "filter a raw QA dataset into seeds");
    filter->add_option("--input", filter_args.input, "raw JSONL dataset")->required();
    filter->add_option("--output-dir", filter_args.output_dir, "run directory")
        ->required();
    filter->add_option("--judge", filter_args.judge_config,
                       "judge config file (default: offline accept-all)");
    filter->add_option("--cache", filter_args.verdict_cache,
                       "verdict cache path (default: <output-dir>/verdicts.jsonl)");
    filter->add_option("--judge-concurrency", filter_args.judge_concurrency,
                       "concurrent judge calls");

    ComposeArgs compose_args;
    std::string lengths_spec = "4";
    auto* compose = app.add_subcommand("compose", "compose seeds into chained problems");
    compose->add_option("--seeds", compose_args.seeds, "seeds.jsonl from filter")
        ->required();
    compose->add_option("--output-dir", compose_args.output_dir, "run directory")
        ->required();
    compose->add_option("--n", lengths_spec,
                        "chain length, or comma list cycled per chain (mixed-n)");
    compose->add_option("--mode", compose_args.mode, "sequential | direct");
    compose->add_option("--threshold", compose_args.threshold,
                        "reject chains with expected accuracy <= threshold (0 = off)");
    compose->add_option("--seed", compose_args.rng_seed, "rng seed");
    compose->add_option("--rate-model", compose_args.rate_model,
                        "pass-rate column for expected accuracy");
    compose->add_option("--ordering", compose_args.ordering,
                        "none | easy-hard | hard-easy (sorts chains by pass rate)");
    compose->add_flag("--keep-order", compose_args.preserve_order,
                      "group consecutive seeds instead of shuffling (curated chains)");
    compose->add_option("--template", compose_args.template_id,
                        "math | code | path to a template file");
    compose->add_option("--id-prefix", compose_args.id_prefix, "composed id prefix");
    compose->add_option("--pass-rates", compose_args.pass_rates,
                        "overlay JSONL of {id, model, rate} rows");

    InferArgs infer_args;
    auto* infer = app.add_subcommand("infer", "run prompts against a chat endpoint");
    infer->add_option("--prompts", infer_args.prompts, "prompts.jsonl from compose")
        ->required();
    infer->add_option("--endpoint", infer_args.endpoint_config, "endpoint config file")
        ->required();
    infer->add_option("--output-dir", infer_args.output_dir, "run directory")->required();
    infer->add_option("--k", infer_args.k, "samples per prompt");
    infer->add_option("--concurrency", infer_args.concurrency, "max in-flight requests");
    infer->add_option("--journal", infer_args.journal,
                      "journal path (default: <output-dir>/journal.jsonl)");

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "extract answers and score transcripts");
    score->add_option("--transcripts", score_args.transcripts, "transcripts.jsonl")
        ->required();
    score->add_option("--composed", score_args.composed, "composed.jsonl")->required();
    score->add_option("--output-dir", score_args.output_dir, "run directory")->required();
    score->add_option("--judge", score_args.judge_config,
                      "judge config enabling judge-based extraction");
    score->add_option("--extract", score_args.extract, "auto | rule | judge | both");
    score->add_option("--executor", score_args.executor,
                      "external command that runs exported code blocks");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "error taxonomy and budget analysis");
    analyze->add_option("--transcripts", analyze_args.transcripts, "transcripts.jsonl")
        ->required();
    analyze->add_option("--scores", analyze_args.scores, "scores.jsonl")->required();
    analyze->add_option("--composed", analyze_args.composed, "composed.jsonl")
        ->required();
    analyze->add_option("--output-dir", analyze_args.output_dir, "run directory")
        ->required();
    analyze->add_option("--tokenizer", analyze_args.tokenizer,
                        "approx | vocab:<file> (token counting mode)");
    analyze->add_option("--lexicon", analyze_args.lexicon,
                        "reflection marker file (default: built-in list)");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "render CSV tables and SVG charts");
    report->add_option("--run-dir", report_args.run_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_code::kOk : exit_code::kUsage;
    }

    std::signal(SIGINT, handle_sigint);
    infer_args.cancel = &g_cancel;

    try {
        if (*filter) return cmd_filter(filter_args);
        if (*compose) {
            compose_args.lengths = parse_lengths(lengths_spec);
            return cmd_compose(compose_args);
        }
        if (*infer) return cmd_infer(infer_args);
        if (*score) return cmd_score(score_args);
        if (*analyze) return cmd_analyze(analyze_args);
        if (*report) return cmd_report(report_args);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUsage;
    }
    return exit_code::kUsage;
}
