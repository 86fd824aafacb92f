#pragma once

// Pipeline commands behind the CLI: filter, compose, infer, score, analyze,
// report. Each one validates inputs, does its stage, updates the run
// manifest, and returns a process exit code:
//   0 success, 1 usage error, 2 upstream/endpoint failure, 3 bad data.

#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "chainbench/analysis.hpp"
#include "chainbench/composer.hpp"
#include "chainbench/inference.hpp"
#include "chainbench/judge.hpp"
#include "chainbench/manifest.hpp"
#include "chainbench/report.hpp"
#include "chainbench/scoring.hpp"
#include "chainbench/seed_filter.hpp"
#include "chainbench/templates.hpp"

namespace chainbench {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kUpstream = 2;
constexpr int kBadData = 3;
}  // namespace exit_code

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline bool require_file(const std::string& path, const std::string& what) {
    if (file_exists(path)) return true;
    std::cerr << "error: " << what << " not found: " << path << "\n";
    return false;
}

inline void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

// Endpoint/judge trouble -> 2, everything else data-shaped -> 3.
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const AuthMissing& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUpstream;
    } catch (const EndpointUnreachable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUpstream;
    } catch (const JudgeUnavailable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUpstream;
    } catch (const RequestFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kUpstream;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kBadData;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// filter

struct FilterArgs {
    std::string input;
    std::string output_dir;
    std::string judge_config;   // empty: offline accept-all policy
    std::string verdict_cache;  // empty: <output_dir>/verdicts.jsonl
    int judge_concurrency = 1;
};

inline int cmd_filter(const FilterArgs& args) {
    if (!detail::require_file(args.input, "input dataset")) return exit_code::kBadData;
    return detail::guarded([&] {
        detail::ensure_dir(args.output_dir);
        const std::string cache_path =
            args.verdict_cache.empty() ? detail::join_path(args.output_dir, "verdicts.jsonl")
                                       : args.verdict_cache;

        std::unique_ptr<KeyVariableVerifier> verifier;
        std::string judge_mode = "offline";
        if (args.judge_config.empty()) {
            verifier = std::make_unique<AcceptAllVerifier>();
        } else {
            if (!detail::require_file(args.judge_config, "judge config"))
                return exit_code::kBadData;
            JudgeConfig jc = JudgeConfig::from_config(KeyValueConfig::load(args.judge_config));
            judge_mode = jc.mode == JudgeConfig::Mode::kLive ? "live" : "offline";
            verifier = std::make_unique<JudgeClient>(std::move(jc));
        }
        VerdictCache cache(cache_path);

        FilterStats io_stats;
        std::vector<RawProblem> rows = load_raw_problems(args.input, &io_stats);
        FilterOptions opts;
        opts.judge_concurrency = static_cast<std::size_t>(
            args.judge_concurrency < 1 ? 1 : args.judge_concurrency);
        FilterResult result = filter_seeds(rows, *verifier, cache, opts);
        result.stats.raw += io_stats.malformed;  // unparseable lines count as raw rows
        result.stats.malformed += io_stats.malformed;

        const std::string seeds_path = detail::join_path(args.output_dir, "seeds.jsonl");
        {
            JsonlWriter out(seeds_path);
            for (const SeedProblem& s : result.seeds) out.write(seed_to_json(s));
        }
        std::cout << "filter: " << result.stats.raw << " -> " << result.seeds.size()
                  << " seeds (malformed " << result.stats.malformed
                  << ", integer-answer " << result.stats.integer_answer
                  << ", key-verified " << result.stats.key_verified << ")\n";

        update_manifest(args.output_dir, "filter",
                        Json{{"command", "filter"},
                             {"config",
                              Json{{"input", args.input},
                                   {"judge_mode", judge_mode},
                                   {"verdict_cache", cache_path},
                                   {"judge_concurrency", args.judge_concurrency}}},
                             {"inputs", Json{{args.input, hash_file(args.input)}}},
                             {"outputs", Json::array({"seeds.jsonl"})}});
        return exit_code::kOk;
    });
}

// ---------------------------------------------------------------------------
// compose

struct ComposeArgs {
    std::string seeds;
    std::string output_dir;
    std::vector<int> lengths{4};
    std::string mode = "sequential";
    double threshold = 0.0;
    std::uint64_t rng_seed = 0;
    std::string rate_model;
    std::string ordering = "none";  // none | easy-hard | hard-easy
    bool preserve_order = false;
    std::string template_id;  // empty: math for sequential, code for direct
    std::string id_prefix = "c";
    std::string pass_rates;  // optional overlay file {"id","model","rate"}
};

inline int cmd_compose(const ComposeArgs& args) {
    if (!detail::require_file(args.seeds, "seed file")) return exit_code::kBadData;
    return detail::guarded([&] {
        detail::ensure_dir(args.output_dir);
        std::vector<SeedProblem> pool = load_seed_problems(args.seeds);
        if (!args.pass_rates.empty()) {
            if (!detail::require_file(args.pass_rates, "pass-rate file"))
                return exit_code::kBadData;
            std::map<std::string, std::map<std::string, double>> overlay;
            for_each_jsonl(args.pass_rates, [&](const Json& j, std::size_t) {
                overlay[j.at("id").get<std::string>()][j.at("model").get<std::string>()] =
                    j.at("rate").get<double>();
            });
            for (SeedProblem& s : pool) {
                auto it = overlay.find(s.id);
                if (it == overlay.end()) continue;
                for (const auto& [model, rate] : it->second) s.pass_rates[model] = rate;
            }
        }

        CompositionConfig cfg;
        cfg.lengths = args.lengths;
        cfg.mode = compose_mode_from_name(args.mode);
        cfg.expected_accuracy_threshold = args.threshold;
        cfg.rng_seed = args.rng_seed;
        cfg.rate_model = args.rate_model;
        cfg.preserve_order = args.preserve_order;
        cfg.id_prefix = args.id_prefix;
        if (args.ordering == "none") cfg.ordering = CompositionConfig::Ordering::kNone;
        else if (args.ordering == "easy-hard")
            cfg.ordering = CompositionConfig::Ordering::kEasyToHard;
        else if (args.ordering == "hard-easy")
            cfg.ordering = CompositionConfig::Ordering::kHardToEasy;
        else {
            std::cerr << "error: unknown ordering: " << args.ordering << "\n";
            return exit_code::kUsage;
        }
        cfg.template_id = !args.template_id.empty()
                              ? args.template_id
                              : (cfg.mode == ComposeMode::kSequential ? "math" : "code");
        const PromptTemplate tmpl = get_template(cfg.template_id);

        std::vector<ComposedProblem> composed = sample_compositions(pool, cfg);
        const std::string composed_path =
            detail::join_path(args.output_dir, "composed.jsonl");
        const std::string prompts_path =
            detail::join_path(args.output_dir, "prompts.jsonl");
        {
            JsonlWriter composed_out(composed_path);
            JsonlWriter prompts_out(prompts_path);
            for (const ComposedProblem& cp : composed) {
                composed_out.write(composed_to_json(cp));
                Json gold = Json::array();
                for (const SubProblem& sp : cp.sub_problems) gold.push_back(sp.gold_answer);
                prompts_out.write(Json{{"id", cp.id},
                                       {"prompt", render_prompt(cp, tmpl)},
                                       {"gold_answers", gold}});
            }
        }
        std::cout << "compose: " << pool.size() << " seeds -> " << composed.size()
                  << " composed problems (mode=" << args.mode << ", template="
                  << cfg.template_id << ", threshold=" << fmt_double(args.threshold, 2)
                  << ")\n";

        Json lengths = Json::array();
        for (int n : args.lengths) lengths.push_back(n);
        update_manifest(args.output_dir, "compose",
                        Json{{"command", "compose"},
                             {"config",
                              Json{{"seeds", args.seeds},
                                   {"lengths", lengths},
                                   {"mode", args.mode},
                                   {"threshold", args.threshold},
                                   {"ordering", args.ordering},
                                   {"preserve_order", args.preserve_order},
                                   {"rate_model", args.rate_model},
                                   {"template", cfg.template_id}}},
                             {"rng_seed", args.rng_seed},
                             {"inputs", Json{{args.seeds, hash_file(args.seeds)}}},
                             {"outputs", Json::array({"composed.jsonl", "prompts.jsonl"})}});
        return exit_code::kOk;
    });
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
    std::string prompts;
    std::string endpoint_config;
    std::string output_dir;
    int k = 1;
    int concurrency = 1;
    std::string journal;  // empty: <output_dir>/journal.jsonl
    std::atomic<bool>* cancel = nullptr;
};

inline int cmd_infer(const InferArgs& args) {
    if (!detail::require_file(args.prompts, "prompt file")) return exit_code::kBadData;
    if (!detail::require_file(args.endpoint_config, "endpoint config"))
        return exit_code::kBadData;
    if (args.k < 1 || args.concurrency < 1) {
        std::cerr << "error: k and concurrency must be >= 1\n";
        return exit_code::kUsage;
    }
    return detail::guarded([&] {
        detail::ensure_dir(args.output_dir);
        ModelEndpoint endpoint =
            ModelEndpoint::from_config(KeyValueConfig::load(args.endpoint_config));
        const std::string journal_path =
            args.journal.empty() ? detail::join_path(args.output_dir, "journal.jsonl")
                                 : args.journal;
        std::vector<PromptRow> prompts = load_prompts(args.prompts);
        Journal journal(journal_path);
        const std::size_t already = journal.size();

        BatchOptions opts;
        opts.k = args.k;
        opts.concurrency = args.concurrency;
        opts.cancel = args.cancel;
        std::vector<Transcript> transcripts = run_batch(prompts, endpoint, journal, opts);

        const bool cancelled = args.cancel && args.cancel->load();
        if (!cancelled) {
            JsonlWriter out(detail::join_path(args.output_dir, "transcripts.jsonl"));
            for (const Transcript& t : transcripts) out.write(transcript_to_json(t));
        }
        std::size_t errors = 0;
        for (const Transcript& t : transcripts)
            if (t.finish_reason == FinishReason::kError) ++errors;
        std::cout << "infer: " << prompts.size() << " prompts x " << args.k << " -> "
                  << transcripts.size() << " transcripts (" << already
                  << " from journal, " << errors << " errors"
                  << (cancelled ? ", cancelled mid-run" : "") << ")\n";
        if (cancelled) return exit_code::kOk;

        update_manifest(args.output_dir, "infer",
                        Json{{"command", "infer"},
                             {"config",
                              Json{{"prompts", args.prompts},
                                   {"endpoint", args.endpoint_config},
                                   {"model", endpoint.model_tag},
                                   {"k", args.k},
                                   {"concurrency", args.concurrency},
                                   {"journal", journal_path}}},
                             {"inputs", Json{{args.prompts, hash_file(args.prompts)}}},
                             {"outputs", Json::array({"transcripts.jsonl"})}});
        return exit_code::kOk;
    });
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
    std::string transcripts;
    std::string composed;
    std::string output_dir;
    std::string judge_config;         // enables judge extraction when present
    std::string extract = "auto";     // auto | rule | judge | both
    std::string executor;             // external command for extracted code blocks
};

inline int cmd_score(const ScoreArgs& args) {
    if (!detail::require_file(args.transcripts, "transcript file"))
        return exit_code::kBadData;
    if (!detail::require_file(args.composed, "composed file")) return exit_code::kBadData;
    return detail::guarded([&] {
        detail::ensure_dir(args.output_dir);
        std::vector<ComposedProblem> composed = load_composed(args.composed);
        std::map<std::string, const ComposedProblem*> by_id;
        std::map<std::string, ComposedMeta> meta;
        for (const ComposedProblem& cp : composed) {
            by_id[cp.id] = &cp;
            meta[cp.id] = ComposedMeta{cp.dataset, static_cast<int>(cp.size()),
                                       cp.expected_accuracy};
        }
        std::vector<Transcript> transcripts = load_transcripts(args.transcripts);

        std::unique_ptr<JudgeClient> judge;
        if (!args.judge_config.empty()) {
            if (!detail::require_file(args.judge_config, "judge config"))
                return exit_code::kBadData;
            JudgeConfig jc =
                JudgeConfig::from_config(KeyValueConfig::load(args.judge_config));
            if (jc.mode != JudgeConfig::Mode::kOffline)
                judge = std::make_unique<JudgeClient>(std::move(jc));
        }
        bool use_rule = true, use_judge = false;
        if (args.extract == "rule") use_judge = false;
        else if (args.extract == "judge" || args.extract == "both" ||
                 args.extract == "auto")
            use_judge = judge != nullptr;
        if ((args.extract == "judge" || args.extract == "both") && !judge) {
            std::cerr << "error: --extract " << args.extract
                      << " needs a judge config with mode live or replay\n";
            return exit_code::kUsage;
        }

        std::vector<ScoreRecord> rule_records, judge_records;
        std::size_t code_rows = 0;
        JsonlWriter codeblocks(detail::join_path(args.output_dir, "codeblocks.jsonl"));
        for (const Transcript& t : transcripts) {
            auto it = by_id.find(t.composed_id);
            if (it == by_id.end())
                throw std::runtime_error("transcript references unknown composed id: " +
                                         t.composed_id);
            const ComposedProblem& cp = *it->second;
            bool integer_gold = true;
            std::vector<long long> gold;
            for (const SubProblem& sp : cp.sub_problems) {
                auto v = parse_int(sp.gold_answer);
                if (!v) { integer_gold = false; break; }
                gold.push_back(*v);
            }
            if (!integer_gold) {
                // Code-style rows: export fenced blocks for the external executor.
                ++code_rows;
                auto blocks = extract_code_blocks(t.raw_text);
                for (std::size_t b = 0; b < blocks.size(); ++b)
                    codeblocks.write(Json{{"composed_id", t.composed_id},
                                          {"sample_index", t.sample_index},
                                          {"block_index", b},
                                          {"language", blocks[b].language},
                                          {"code", blocks[b].body}});
                continue;
            }
            if (use_rule) {
                ScoreRecord r = score(extract_boxed(t.raw_text), gold);
                r.composed_id = t.composed_id;
                r.sample_index = t.sample_index;
                rule_records.push_back(std::move(r));
            }
            if (use_judge) {
                ScoreRecord r = score(extract_via_judge(t.raw_text, *judge), gold);
                r.composed_id = t.composed_id;
                r.sample_index = t.sample_index;
                judge_records.push_back(std::move(r));
            }
        }

        // Judge extraction is the default when configured; rule otherwise.
        const std::vector<ScoreRecord>& primary =
            use_judge ? judge_records : rule_records;
        {
            JsonlWriter out(detail::join_path(args.output_dir, "scores.jsonl"));
            for (const ScoreRecord& r : primary) out.write(score_to_json(r));
        }
        {
            JsonlWriter out(detail::join_path(args.output_dir, "rewards.jsonl"));
            for (const ScoreRecord& r : primary) out.write(reward_row(r));
        }
        if (use_rule && use_judge) {
            JsonlWriter rule_out(detail::join_path(args.output_dir, "scores_rule.jsonl"));
            for (const ScoreRecord& r : rule_records) rule_out.write(score_to_json(r));
            ConsistencyReport rep = consistency_rate(rule_records, judge_records);
            write_file(detail::join_path(args.output_dir, "consistency.csv"),
                       "records,acc_agreement,answer_agreement\n" +
                           std::to_string(rep.records) + "," +
                           fmt_double(rep.acc_agreement, 6) + "," +
                           fmt_double(rep.answer_agreement, 6) + "\n");
        }

        std::string model = "model";
        for (const Transcript& t : transcripts)
            if (!t.model.empty()) { model = t.model; break; }
        std::vector<SummaryRow> rows =
            primary.empty() ? std::vector<SummaryRow>{} : aggregate(primary, meta, model);
        write_file(detail::join_path(args.output_dir, "summary.csv"), summary_csv(rows));

        if (!args.executor.empty())
            std::cout << "score: code blocks exported; run them with: " << args.executor
                      << " <codeblocks.jsonl>\n";
        std::cout << "score: " << primary.size() << " records ("
                  << (use_judge ? "judge" : "rule") << " extraction";
        if (use_rule && use_judge) std::cout << ", rule recorded alongside";
        if (code_rows > 0) std::cout << ", " << code_rows << " code rows exported";
        std::cout << ")\n";
        for (const SummaryRow& r : rows) {
            std::cout << "  " << (r.dataset.empty() ? "-" : r.dataset) << " n=" << r.n
                      << " k=" << r.k << " acc_all=" << fmt_double(r.acc_all, 4)
                      << " acc_last=" << fmt_double(r.acc_last, 4);
            if (r.acc_expected)
                std::cout << " acc_expected=" << fmt_double(*r.acc_expected, 4)
                          << " gap=" << fmt_double(*r.gap, 4);
            std::cout << "\n";
        }

        update_manifest(args.output_dir, "score",
                        Json{{"command", "score"},
                             {"config",
                              Json{{"transcripts", args.transcripts},
                                   {"composed", args.composed},
                                   {"extract", use_judge ? "judge" : "rule"},
                                   {"model", model}}},
                             {"inputs",
                              Json{{args.transcripts, hash_file(args.transcripts)},
                                   {args.composed, hash_file(args.composed)}}},
                             {"outputs",
                              Json::array({"scores.jsonl", "rewards.jsonl", "summary.csv",
                                           "codeblocks.jsonl"})}});
        return exit_code::kOk;
    });
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::string transcripts;
    std::string scores;
    std::string composed;
    std::string output_dir;
    std::string tokenizer = "approx";  // approx | vocab:<file>
    std::string lexicon;               // empty: built-in markers
};

inline int cmd_analyze(const AnalyzeArgs& args) {
    if (!detail::require_file(args.transcripts, "transcript file"))
        return exit_code::kBadData;
    if (!detail::require_file(args.scores, "score file")) return exit_code::kBadData;
    if (!detail::require_file(args.composed, "composed file")) return exit_code::kBadData;
    return detail::guarded([&] {
        detail::ensure_dir(args.output_dir);
        auto tokenizer = make_tokenizer(args.tokenizer);
        ReflectionLexicon lexicon = args.lexicon.empty()
                                        ? ReflectionLexicon::defaults()
                                        : ReflectionLexicon::load(args.lexicon);

        std::vector<ComposedProblem> composed = load_composed(args.composed);
        std::map<std::string, const ComposedProblem*> by_id;
        std::map<std::string, ComposedMeta> meta;
        for (const ComposedProblem& cp : composed) {
            by_id[cp.id] = &cp;
            meta[cp.id] = ComposedMeta{cp.dataset, static_cast<int>(cp.size()),
                                       cp.expected_accuracy};
        }
        std::map<std::pair<std::string, int>, ScoreRecord> scores;
        for_each_jsonl(args.scores, [&](const Json& j, std::size_t) {
            ScoreRecord r = score_from_json(j);
            scores[{r.composed_id, r.sample_index}] = std::move(r);
        });
        std::vector<Transcript> transcripts = load_transcripts(args.transcripts);

        std::string model = "model";
        for (const Transcript& t : transcripts)
            if (!t.model.empty()) { model = t.model; break; }

        std::vector<AnalysisRecord> records;
        std::size_t skipped = 0;
        for (const Transcript& t : transcripts) {
            auto sit = scores.find({t.composed_id, t.sample_index});
            auto cit = by_id.find(t.composed_id);
            if (sit == scores.end() || cit == by_id.end()) { ++skipped; continue; }
            records.push_back(analyze_transcript(t, sit->second, *cit->second,
                                                 *tokenizer, lexicon));
        }
        {
            JsonlWriter out(detail::join_path(args.output_dir, "analysis.jsonl"));
            for (const AnalysisRecord& r : records) out.write(analysis_to_json(r));
        }
        std::vector<AnalysisSummaryRow> rows = aggregate_analysis(records, meta, model);
        write_file(detail::join_path(args.output_dir, "error_types.csv"),
                   error_types_csv(rows));
        write_file(detail::join_path(args.output_dir, "budget.csv"),
                   budget_csv(rows, tokenizer->mode()));
        write_file(detail::join_path(args.output_dir, "reflection.csv"),
                   reflection_csv(rows, lexicon.hash()));

        std::cout << "analyze: " << records.size() << " transcripts (skipped " << skipped
                  << " without scores), tokenizer=" << tokenizer->mode()
                  << ", lexicon=" << lexicon.hash() << "\n";

        update_manifest(
            args.output_dir, "analyze",
            Json{{"command", "analyze"},
                 {"config",
                  Json{{"transcripts", args.transcripts},
                       {"scores", args.scores},
                       {"composed", args.composed},
                       {"model", model}}},
                 {"tokenizer_mode", tokenizer->mode()},
                 {"lexicon_hash", lexicon.hash()},
                 {"inputs",
                  Json{{args.transcripts, hash_file(args.transcripts)},
                       {args.scores, hash_file(args.scores)},
                       {args.composed, hash_file(args.composed)}}},
                 {"outputs",
                  Json::array({"analysis.jsonl", "error_types.csv", "budget.csv",
                               "reflection.csv"})}});
        return exit_code::kOk;
    });
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::string run_dir;
};

inline int cmd_report(const ReportArgs& args) {
    return detail::guarded([&] {
        const std::string scores_path = detail::join_path(args.run_dir, "scores.jsonl");
        const std::string analysis_path =
            detail::join_path(args.run_dir, "analysis.jsonl");
        const std::string composed_path =
            detail::join_path(args.run_dir, "composed.jsonl");
        for (const auto& [path, stage] :
             {std::pair<std::string, std::string>{scores_path, "score"},
              {analysis_path, "analyze"},
              {composed_path, "compose"}})
            if (!file_exists(path))
                throw MissingStage("run the '" + stage + "' stage first: missing " + path);

        std::map<std::string, ComposedMeta> meta;
        for (const ComposedProblem& cp : load_composed(composed_path))
            meta[cp.id] = ComposedMeta{cp.dataset, static_cast<int>(cp.size()),
                                       cp.expected_accuracy};
        std::vector<ScoreRecord> scores;
        for_each_jsonl(scores_path, [&](const Json& j, std::size_t) {
            scores.push_back(score_from_json(j));
        });
        std::vector<AnalysisRecord> analysis;
        for_each_jsonl(analysis_path, [&](const Json& j, std::size_t) {
            analysis.push_back(analysis_from_json(j));
        });

        // Model tag plus tokenizer/lexicon metadata come from the manifest.
        std::string model = "model", tokenizer_mode = "unknown", lexicon_hash = "unknown";
        const std::string manifest_path =
            detail::join_path(args.run_dir, "manifest.json");
        if (file_exists(manifest_path)) {
            Json manifest = Json::parse(read_file(manifest_path), nullptr, false);
            if (!manifest.is_discarded() && manifest.contains("stages")) {
                const Json& stages = manifest["stages"];
                if (stages.contains("analyze")) {
                    tokenizer_mode = stages["analyze"].value("tokenizer_mode", "unknown");
                    lexicon_hash = stages["analyze"].value("lexicon_hash", "unknown");
                    if (stages["analyze"].contains("config"))
                        model = stages["analyze"]["config"].value("model", "model");
                }
                if (model == "model" && stages.contains("score") &&
                    stages["score"].contains("config"))
                    model = stages["score"]["config"].value("model", "model");
            }
        }

        const std::string report_dir = detail::join_path(args.run_dir, "report");
        detail::ensure_dir(report_dir);
        std::vector<SummaryRow> summary =
            scores.empty() ? std::vector<SummaryRow>{} : aggregate(scores, meta, model);
        write_file(detail::join_path(report_dir, "accuracy_vs_n.csv"),
                   summary_csv(summary));
        write_file(detail::join_path(report_dir, "accuracy_vs_n.svg"),
                   accuracy_chart_svg(summary));
        std::vector<AnalysisSummaryRow> rows = aggregate_analysis(analysis, meta, model);
        write_file(detail::join_path(report_dir, "error_types.csv"),
                   error_types_csv(rows));
        write_file(detail::join_path(report_dir, "error_types.svg"),
                   error_types_svg(rows));
        write_file(detail::join_path(report_dir, "budget_allocation.csv"),
                   budget_csv(rows, tokenizer_mode));
        write_file(detail::join_path(report_dir, "budget_allocation.svg"),
                   budget_svg(rows));
        write_file(detail::join_path(report_dir, "reflection.csv"),
                   reflection_csv(rows, lexicon_hash));
        write_file(detail::join_path(report_dir, "reflection.svg"),
                   reflection_svg(rows));

        std::cout << "report: wrote " << report_dir << "/{accuracy_vs_n,error_types,"
                  << "budget_allocation,reflection}.{csv,svg}\n";
        update_manifest(args.run_dir, "report",
                        Json{{"command", "report"},
                             {"config", Json{{"run_dir", args.run_dir}}},
                             {"outputs",
                              Json::array({"report/accuracy_vs_n.csv",
                                           "report/accuracy_vs_n.svg",
                                           "report/error_types.csv",
                                           "report/error_types.svg",
                                           "report/budget_allocation.csv",
                                           "report/budget_allocation.svg",
                                           "report/reflection.csv",
                                           "report/reflection.svg"})}});
        return exit_code::kOk;
    });
}

}  // namespace chainbench
