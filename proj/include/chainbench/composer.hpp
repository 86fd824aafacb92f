#pragma once

// Dependency-chain composition. A chain of seeds becomes one composed problem:
// for each link, one key variable of the next question is replaced in place by
// "[variableK]" and a constraint ties it to the previous answer through an
// affine offset. Direct mode concatenates questions untouched.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainbench/rng.hpp"
#include "chainbench/seed_filter.hpp"

namespace chainbench {

struct EmptyKeyVariables : std::runtime_error {
    explicit EmptyKeyVariables(const std::string& id)
        : std::runtime_error("seed has no key variables: " + id) {}
};
struct MissingPassRate : std::runtime_error {
    explicit MissingPassRate(const std::string& what) : std::runtime_error(what) {}
};
struct InsufficientPool : std::runtime_error {
    explicit InsufficientPool(const std::string& what) : std::runtime_error(what) {}
};
struct ThresholdUnsatisfiable : std::runtime_error {
    explicit ThresholdUnsatisfiable(const std::string& what)
        : std::runtime_error(what) {}
};
struct CompositionError : std::runtime_error {
    explicit CompositionError(const std::string& what) : std::runtime_error(what) {}
};

enum class ComposeMode { kSequential, kDirect };

inline std::string compose_mode_name(ComposeMode m) {
    return m == ComposeMode::kSequential ? "sequential" : "direct";
}

inline ComposeMode compose_mode_from_name(const std::string& s) {
    if (s == "sequential") return ComposeMode::kSequential;
    if (s == "direct") return ComposeMode::kDirect;
    throw std::runtime_error("unknown compose mode: " + s);
}

inline std::string placeholder_name(int chain_index) {
    return "[variable" + std::to_string(chain_index) + "]";
}

inline std::string answer_ref(int chain_index) {
    return "[answer" + std::to_string(chain_index) + "]";
}

struct DependencySpec {
    int chain_index = 0;        // 1-based position of the dependent sub-problem
    std::string placeholder;    // "[variableK]"
    long long key_value = 0;    // the substituted integer m
    long long offset = 0;       // m - previous gold answer
    std::size_t sub_start = 0;  // original byte span of m in the seed question
    std::size_t sub_end = 0;
};

// "[variable3] = [answer2] - 150"; a zero offset renders "+ 0".
inline std::string render_constraint_expr(const DependencySpec& d) {
    long long c = d.offset;
    std::string sign = c < 0 ? "-" : "+";
    unsigned long long mag =
        c < 0 ? ~static_cast<unsigned long long>(c) + 1ull
              : static_cast<unsigned long long>(c);
    return d.placeholder + " = " + answer_ref(d.chain_index - 1) + " " + sign + " " +
           std::to_string(mag);
}

inline std::string render_constraint_sentence(const DependencySpec& d) {
    return "Using the result " + answer_ref(d.chain_index - 1) +
           " from the previous calculation, " + render_constraint_expr(d) + ".";
}

struct SubProblem {
    std::string seed_id;
    std::string modified_question;  // placeholder substituted; verbatim for index 1
    std::string gold_answer;        // canonical decimal in sequential mode
};

struct ComposedProblem {
    std::string id;
    ComposeMode mode = ComposeMode::kSequential;
    std::vector<SubProblem> sub_problems;
    std::vector<DependencySpec> dependencies;  // empty in direct mode and for n = 1
    std::optional<double> expected_accuracy;
    std::uint64_t rng_seed = 0;
    std::string dataset;  // source tag, "mixed" when constituents disagree

    std::size_t size() const { return sub_problems.size(); }

    std::vector<long long> gold_integers() const {
        std::vector<long long> out;
        out.reserve(sub_problems.size());
        for (const auto& sp : sub_problems) {
            auto v = parse_int(sp.gold_answer);
            if (!v) throw CompositionError("non-integer gold answer in " + id);
            out.push_back(*v);
        }
        return out;
    }
};

struct CompositionConfig {
    std::vector<int> lengths{4};  // 2+ entries cycle per chain (mixed-n datasets)
    double expected_accuracy_threshold = 0.0;  // 0 disables the rejection filter
    std::uint64_t rng_seed = 0;
    ComposeMode mode = ComposeMode::kSequential;
    std::string template_id = "math";
    std::string rate_model;  // pass-rate column for Acc_expected
    enum class Ordering { kNone, kEasyToHard, kHardToEasy };
    Ordering ordering = Ordering::kNone;
    bool preserve_order = false;  // curated chains: consecutive grouping, no shuffle
    std::string id_prefix = "c";
    int max_attempts_per_chain = 100;
};

// Acc_expected: the product of constituent pass rates.
inline double expected_accuracy(const std::vector<double>& pass_rates) {
    double p = 1.0;
    for (double r : pass_rates) p *= r;
    return p;
}

inline double pass_rate_for(const SeedProblem& seed, const std::string& model) {
    if (!model.empty()) {
        auto it = seed.pass_rates.find(model);
        if (it == seed.pass_rates.end())
            throw MissingPassRate("seed " + seed.id + " has no pass rate for model '" +
                                  model + "'");
        return it->second;
    }
    if (seed.pass_rates.size() == 1) return seed.pass_rates.begin()->second;
    throw MissingPassRate("seed " + seed.id +
                          (seed.pass_rates.empty() ? " has no pass rates"
                                                   : " has several pass rates; pick a model"));
}

inline std::optional<double> try_expected_accuracy(
    const std::vector<const SeedProblem*>& seeds, const std::string& model) {
    std::vector<double> rates;
    rates.reserve(seeds.size());
    for (const SeedProblem* s : seeds) {
        try {
            rates.push_back(pass_rate_for(*s, model));
        } catch (const MissingPassRate&) {
            return std::nullopt;
        }
    }
    return expected_accuracy(rates);
}

namespace detail {

inline std::string dataset_tag(const std::vector<const SeedProblem*>& seeds) {
    std::string tag;
    for (const SeedProblem* s : seeds) {
        if (tag.empty()) tag = s->source;
        else if (tag != s->source) return "mixed";
    }
    return tag;
}

inline std::size_t count_occurrences(const std::string& text, const std::string& sub) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(sub, pos)) != std::string::npos) {
        ++count;
        pos += sub.size();
    }
    return count;
}

}  // namespace detail

// Algorithm: walk the chain; for each dependent sub-problem pick one key
// variable (seeded-uniform), replace its span with the placeholder, and record
// the affine offset from the previous gold answer. Gold answers are the seed
// answers; substituting them back through the offsets recovers every original
// question byte for byte.
inline ComposedProblem build_chain(const std::vector<const SeedProblem*>& seeds,
                                   Rng& rng, const std::string& id,
                                   std::uint64_t recorded_seed) {
    if (seeds.empty()) throw CompositionError("build_chain: empty seed list");
    ComposedProblem cp;
    cp.id = id;
    cp.mode = ComposeMode::kSequential;
    cp.rng_seed = recorded_seed;
    cp.dataset = detail::dataset_tag(seeds);

    cp.sub_problems.push_back(
        {seeds[0]->id, seeds[0]->question, std::to_string(seeds[0]->answer)});
    for (std::size_t i = 0; i + 1 < seeds.size(); ++i) {
        const SeedProblem& next = *seeds[i + 1];
        if (next.key_variables.empty()) throw EmptyKeyVariables(next.id);
        const IntegerOccurrence& m =
            next.key_variables[rng.index(next.key_variables.size())];
        const int chain_index = static_cast<int>(i) + 2;
        DependencySpec dep;
        dep.chain_index = chain_index;
        dep.placeholder = placeholder_name(chain_index);
        dep.key_value = m.value;
        dep.offset = m.value - seeds[i]->answer;
        dep.sub_start = m.start;
        dep.sub_end = m.end;

        std::string modified = next.question;
        modified.replace(m.start, m.end - m.start, dep.placeholder);
        if (detail::count_occurrences(modified, dep.placeholder) != 1)
            throw CompositionError("placeholder " + dep.placeholder +
                                   " is not unique in sub-problem from seed " + next.id);
        cp.sub_problems.push_back(
            {next.id, std::move(modified), std::to_string(next.answer)});
        cp.dependencies.push_back(std::move(dep));
    }
    return cp;
}

// Plain concatenation: original texts, no dependencies. Covers the code-task
// format and the independent-composition ablation for math.
inline ComposedProblem compose_direct(const std::vector<const SeedProblem*>& seeds,
                                      const std::string& id,
                                      std::uint64_t recorded_seed) {
    if (seeds.empty()) throw CompositionError("compose_direct: empty seed list");
    ComposedProblem cp;
    cp.id = id;
    cp.mode = ComposeMode::kDirect;
    cp.rng_seed = recorded_seed;
    cp.dataset = detail::dataset_tag(seeds);
    for (const SeedProblem* s : seeds)
        cp.sub_problems.push_back({s->id, s->question, std::to_string(s->answer)});
    return cp;
}

// Raw-problem variant for datasets that never pass the integer filter
// (code tasks keep their answers as opaque text).
inline ComposedProblem compose_direct_raw(const std::vector<const RawProblem*>& rows,
                                          const std::string& id,
                                          std::uint64_t recorded_seed) {
    if (rows.empty()) throw CompositionError("compose_direct: empty problem list");
    ComposedProblem cp;
    cp.id = id;
    cp.mode = ComposeMode::kDirect;
    cp.rng_seed = recorded_seed;
    std::string tag;
    for (const RawProblem* r : rows) {
        if (tag.empty()) tag = r->source;
        else if (tag != r->source) tag = "mixed";
        cp.sub_problems.push_back({r->id, r->question, r->answer});
    }
    cp.dataset = tag;
    return cp;
}

// Seeded-random grouping without seed reuse. Chains whose Acc_expected fails
// the threshold are redrawn up to max_attempts_per_chain times. Deterministic
// for a fixed (pool, config): the sampler and each chain use derived streams,
// so construction order never changes the output.
inline std::vector<ComposedProblem> sample_compositions(
    const std::vector<SeedProblem>& pool, const CompositionConfig& cfg) {
    if (pool.empty()) throw InsufficientPool("empty seed pool");
    if (cfg.lengths.empty()) throw CompositionError("no chain lengths configured");
    for (int n : cfg.lengths)
        if (n < 1) throw CompositionError("chain length must be >= 1");
    int min_n = *std::min_element(cfg.lengths.begin(), cfg.lengths.end());
    if (pool.size() < static_cast<std::size_t>(min_n))
        throw InsufficientPool("pool of " + std::to_string(pool.size()) +
                               " cannot form a chain of " + std::to_string(min_n));
    if (cfg.mode == ComposeMode::kSequential)
        for (const SeedProblem& s : pool)
            if (s.key_variables.empty()) throw EmptyKeyVariables(s.id);

    // Work over an id-sorted view so input file order never matters.
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pool[a].id < pool[b].id;
    });
    Rng sampler(derive_stream(cfg.rng_seed, 0));
    if (!cfg.preserve_order) sampler.shuffle(order);
    std::deque<std::size_t> remaining(order.begin(), order.end());

    const bool threshold_active = cfg.expected_accuracy_threshold > 0.0;
    std::vector<ComposedProblem> out;
    std::size_t chain_ordinal = 0;
    std::size_t length_cursor = 0;
    while (true) {
        const int n = cfg.lengths[length_cursor % cfg.lengths.size()];
        if (remaining.size() < static_cast<std::size_t>(n)) break;
        ++length_cursor;

        std::vector<const SeedProblem*> members;
        std::optional<double> exp_acc;
        if (!threshold_active || cfg.preserve_order) {
            members.reserve(n);
            for (int i = 0; i < n; ++i) {
                members.push_back(&pool[remaining.front()]);
                remaining.pop_front();
            }
            if (threshold_active) {
                exp_acc = try_expected_accuracy(members, cfg.rate_model);
                if (!exp_acc)
                    throw MissingPassRate("threshold filtering needs pass rates");
                if (*exp_acc <= cfg.expected_accuracy_threshold) continue;  // drop
            } else {
                exp_acc = try_expected_accuracy(members, cfg.rate_model);
            }
        } else {
            bool accepted = false;
            for (int attempt = 0; attempt < cfg.max_attempts_per_chain; ++attempt) {
                // Draw n distinct positions from what is left.
                std::vector<std::size_t> picks;
                picks.reserve(n);
                std::vector<std::size_t> snapshot(remaining.begin(), remaining.end());
                for (int i = 0; i < n; ++i) {
                    std::size_t j = sampler.index(snapshot.size() - i);
                    picks.push_back(snapshot[j]);
                    std::swap(snapshot[j], snapshot[snapshot.size() - 1 - i]);
                }
                members.clear();
                for (std::size_t idx : picks) members.push_back(&pool[idx]);
                exp_acc = try_expected_accuracy(members, cfg.rate_model);
                if (!exp_acc)
                    throw MissingPassRate("threshold filtering needs pass rates");
                if (*exp_acc > cfg.expected_accuracy_threshold) {
                    for (std::size_t idx : picks)
                        remaining.erase(std::find(remaining.begin(), remaining.end(), idx));
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                throw ThresholdUnsatisfiable(
                    "no chain above threshold " +
                    fmt_double(cfg.expected_accuracy_threshold, 4) + " after " +
                    std::to_string(cfg.max_attempts_per_chain) + " attempts");
        }

        if (cfg.ordering != CompositionConfig::Ordering::kNone) {
            std::stable_sort(members.begin(), members.end(),
                             [&](const SeedProblem* a, const SeedProblem* b) {
                                 double ra = pass_rate_for(*a, cfg.rate_model);
                                 double rb = pass_rate_for(*b, cfg.rate_model);
                                 return cfg.ordering ==
                                                CompositionConfig::Ordering::kEasyToHard
                                            ? ra > rb
                                            : ra < rb;
                             });
        }

        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "%s%d-%05zu",
                      cfg.mode == ComposeMode::kSequential ? "s" : "d", n,
                      chain_ordinal);
        const std::string id = cfg.id_prefix + "-" + suffix;
        const std::uint64_t chain_seed = derive_stream(cfg.rng_seed, 1 + chain_ordinal);
        Rng chain_rng(chain_seed);
        ComposedProblem cp = cfg.mode == ComposeMode::kSequential
                                 ? build_chain(members, chain_rng, id, chain_seed)
                                 : compose_direct(members, id, chain_seed);
        cp.expected_accuracy = exp_acc;
        out.push_back(std::move(cp));
        ++chain_ordinal;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL round trip

inline Json composed_to_json(const ComposedProblem& cp) {
    Json subs = Json::array();
    for (const auto& sp : cp.sub_problems)
        subs.push_back(Json{{"seed_id", sp.seed_id},
                            {"modified_question", sp.modified_question},
                            {"gold_answer", sp.gold_answer}});
    Json deps = Json::array();
    for (const auto& d : cp.dependencies)
        deps.push_back(Json{{"chain_index", d.chain_index},
                            {"placeholder", d.placeholder},
                            {"key_value", d.key_value},
                            {"offset", d.offset},
                            {"start", d.sub_start},
                            {"end", d.sub_end}});
    Json j{{"id", cp.id},
           {"mode", compose_mode_name(cp.mode)},
           {"sub_problems", subs},
           {"dependencies", deps},
           {"rng_seed", cp.rng_seed},
           {"dataset", cp.dataset}};
    if (cp.expected_accuracy) j["expected_accuracy"] = *cp.expected_accuracy;
    return j;
}

inline ComposedProblem composed_from_json(const Json& j) {
    ComposedProblem cp;
    cp.id = j.at("id").get<std::string>();
    cp.mode = compose_mode_from_name(j.at("mode").get<std::string>());
    for (const auto& s : j.at("sub_problems"))
        cp.sub_problems.push_back({s.at("seed_id").get<std::string>(),
                                   s.at("modified_question").get<std::string>(),
                                   s.at("gold_answer").get<std::string>()});
    for (const auto& d : j.at("dependencies")) {
        DependencySpec dep;
        dep.chain_index = d.at("chain_index").get<int>();
        dep.placeholder = d.at("placeholder").get<std::string>();
        dep.key_value = d.at("key_value").get<long long>();
        dep.offset = d.at("offset").get<long long>();
        dep.sub_start = d.at("start").get<std::size_t>();
        dep.sub_end = d.at("end").get<std::size_t>();
        cp.dependencies.push_back(std::move(dep));
    }
    if (j.contains("expected_accuracy"))
        cp.expected_accuracy = j.at("expected_accuracy").get<double>();
    cp.rng_seed = j.value("rng_seed", std::uint64_t{0});
    cp.dataset = j.value("dataset", "");
    return cp;
}

inline std::vector<ComposedProblem> load_composed(const std::string& path) {
    std::vector<ComposedProblem> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        out.push_back(composed_from_json(j));
    });
    return out;
}

}  // namespace chainbench
