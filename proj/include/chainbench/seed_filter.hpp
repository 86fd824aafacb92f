#pragma once

// Seed problem filtering: every question with at least one extracted integer
// and an integer answer survives, annotated with the occurrences a verifier
// confirms as key variables. Verifier verdicts go through an append-only
// cache so reruns are reproducible and judge costs are paid once.

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "chainbench/jsonl.hpp"
#include "chainbench/normalize.hpp"
#include "chainbench/rng.hpp"
#include "chainbench/util.hpp"

namespace chainbench {

struct RawProblem {
    std::string id;
    std::string question;
    std::string answer;
    std::string source;
    std::map<std::string, double> pass_rates;  // optional input annotation
};

struct IntegerOccurrence {
    long long value = 0;
    std::size_t start = 0;  // half-open byte span into the question text
    std::size_t end = 0;

    friend bool operator==(const IntegerOccurrence& a, const IntegerOccurrence& b) {
        return a.value == b.value && a.start == b.start && a.end == b.end;
    }
};

struct SeedProblem {
    std::string id;
    std::string question;
    long long answer = 0;
    std::vector<IntegerOccurrence> integers;
    std::vector<IntegerOccurrence> key_variables;  // subset of integers
    std::map<std::string, double> pass_rates;
    std::string source;
};

// Parses the text slice of an occurrence back to its value: optional leading
// '-', digit-group commas dropped. Returns nullopt when the slice is not a
// well-formed integer (or overflows 64 bits).
inline std::optional<long long> parse_spanned_integer(std::string_view text,
                                                      std::size_t start,
                                                      std::size_t end) {
    if (start >= end || end > text.size()) return std::nullopt;
    std::string digits;
    digits.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
        char c = text[i];
        if (c == ',') continue;
        if (c == '-' && i == start) { digits.push_back(c); continue; }
        if (!is_ascii_digit(c)) return std::nullopt;
        digits.push_back(c);
    }
    return parse_int(digits);
}

// Extraction rule for I(q). A hit is a maximal ASCII digit run where
//   - a leading group of 1..3 digits may absorb ",ddd" thousands groups when
//     each group is exactly three digits and terminal,
//   - runs touching a '.' with digits on the far side are decimals and are
//     skipped entirely,
//   - a '-' immediately before the run is part of the value when the
//     character before it is not a digit (unary, not subtraction).
// Digit runs inside math delimiters count; occurrences are reported in span
// order and never overlap. Runs that overflow long long are dropped.
inline std::vector<IntegerOccurrence> extract_integers(std::string_view text) {
    std::vector<IntegerOccurrence> out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        if (!is_ascii_digit(text[i])) { ++i; continue; }
        std::size_t start = i;
        std::size_t end = i;
        while (end < n && is_ascii_digit(text[end])) ++end;
        if (end - start <= 3) {
            while (end + 3 < n && text[end] == ',' && is_ascii_digit(text[end + 1]) &&
                   is_ascii_digit(text[end + 2]) && is_ascii_digit(text[end + 3]) &&
                   (end + 4 >= n || !is_ascii_digit(text[end + 4]))) {
                end += 4;
            }
        }
        bool decimal = false;
        if (start > 0 && text[start - 1] == '.' && start >= 2 &&
            is_ascii_digit(text[start - 2]))
            decimal = true;
        if (end < n && text[end] == '.' && end + 1 < n && is_ascii_digit(text[end + 1]))
            decimal = true;
        if (decimal) { i = end; continue; }
        if (start > 0 && text[start - 1] == '-' &&
            (start == 1 || !is_ascii_digit(text[start - 2])))
            start -= 1;
        if (auto value = parse_spanned_integer(text, start, end))
            out.push_back({*value, start, end});
        i = end;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Key-variable verification

class KeyVariableVerifier {
public:
    virtual ~KeyVariableVerifier() = default;
    // True when removing the occurrence renders the problem unsolvable.
    virtual bool unsolvable_without(const std::string& question,
                                    const IntegerOccurrence& m) = 0;
    virtual std::string name() const = 0;
};

// Offline policy: every occurrence is a key variable. Keeps test runs and
// judge-free pipelines fully deterministic.
class AcceptAllVerifier final : public KeyVariableVerifier {
public:
    bool unsolvable_without(const std::string&, const IntegerOccurrence&) override {
        return true;
    }
    std::string name() const override { return "offline-accept-all"; }
};

// Append-only verdict store keyed by (question hash, span). File rows:
// {"qhash","start","end","verdict","judge_model"}.
class VerdictCache {
public:
    VerdictCache() = default;

    explicit VerdictCache(const std::string& path) : path_(path) {
        if (file_exists(path)) {
            for_each_jsonl(path, [&](const Json& row, std::size_t) {
                Key k{row.at("qhash").get<std::string>(),
                      row.at("start").get<std::size_t>(),
                      row.at("end").get<std::size_t>()};
                verdicts_[k] = row.at("verdict").get<bool>();
            });
        }
        out_ = std::make_unique<JsonlWriter>(path, /*append=*/true);
    }

    static std::string question_hash(std::string_view question) {
        return fnv1a64_hex(question);
    }

    std::optional<bool> lookup(const std::string& qhash,
                               const IntegerOccurrence& m) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = verdicts_.find(Key{qhash, m.start, m.end});
        if (it == verdicts_.end()) return std::nullopt;
        return it->second;
    }

    void record(const std::string& qhash, const IntegerOccurrence& m, bool verdict,
                const std::string& judge_model) {
        std::lock_guard<std::mutex> lock(mu_);
        Key k{qhash, m.start, m.end};
        if (verdicts_.count(k)) return;
        verdicts_[k] = verdict;
        if (out_) {
            out_->write(Json{{"qhash", qhash},
                             {"start", m.start},
                             {"end", m.end},
                             {"verdict", verdict},
                             {"judge_model", judge_model}});
            out_->flush();
        }
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return verdicts_.size();
    }

private:
    using Key = std::tuple<std::string, std::size_t, std::size_t>;
    std::map<Key, bool> verdicts_;
    std::unique_ptr<JsonlWriter> out_;
    std::string path_;
    mutable std::mutex mu_;
};

// Cache-first verification of one occurrence.
inline bool verify_key_variable(const std::string& question,
                                const IntegerOccurrence& m,
                                KeyVariableVerifier& verifier, VerdictCache& cache) {
    const std::string qhash = VerdictCache::question_hash(question);
    if (auto hit = cache.lookup(qhash, m)) return *hit;
    bool verdict = verifier.unsolvable_without(question, m);
    cache.record(qhash, m, verdict, verifier.name());
    return verdict;
}

// ---------------------------------------------------------------------------
// Filtering

struct FilterStats {
    std::size_t raw = 0;
    std::size_t malformed = 0;        // skipped rows (missing fields, bad JSON, dup ids)
    std::size_t integer_answer = 0;   // had >=1 integer and an integer answer
    std::size_t key_verified = 0;     // survived key-variable verification
};

struct FilterOptions {
    std::size_t judge_concurrency = 1;
};

struct FilterResult {
    std::vector<SeedProblem> seeds;  // sorted by id
    FilterStats stats;
};

inline FilterResult filter_seeds(const std::vector<RawProblem>& dataset,
                                 KeyVariableVerifier& verifier, VerdictCache& cache,
                                 const FilterOptions& opts = {}) {
    FilterResult result;
    result.stats.raw = dataset.size();

    struct Candidate {
        const RawProblem* row;
        long long answer;
        std::vector<IntegerOccurrence> integers;
        std::vector<IntegerOccurrence> keys;
    };
    std::vector<Candidate> candidates;
    std::set<std::string> seen_ids;
    for (const RawProblem& row : dataset) {
        if (row.id.empty() || row.question.empty() || !seen_ids.insert(row.id).second) {
            ++result.stats.malformed;
            continue;
        }
        auto answer = parse_integer_answer(row.answer);
        if (!answer) continue;
        auto integers = extract_integers(row.question);
        if (integers.empty()) continue;
        ++result.stats.integer_answer;
        candidates.push_back({&row, *answer, std::move(integers), {}});
    }

    // Verification may fan out across rows; cache writes stay serialized.
    bounded_parallel_for(candidates.size(), opts.judge_concurrency, [&](std::size_t i) {
        Candidate& c = candidates[i];
        for (const IntegerOccurrence& m : c.integers)
            if (verify_key_variable(c.row->question, m, verifier, cache))
                c.keys.push_back(m);
    });

    for (Candidate& c : candidates) {
        if (c.keys.empty()) continue;
        ++result.stats.key_verified;
        SeedProblem seed;
        seed.id = c.row->id;
        seed.question = c.row->question;
        seed.answer = c.answer;
        seed.integers = std::move(c.integers);
        seed.key_variables = std::move(c.keys);
        seed.pass_rates = c.row->pass_rates;
        seed.source = c.row->source;
        result.seeds.push_back(std::move(seed));
    }
    // Order-independent output regardless of verification scheduling.
    std::sort(result.seeds.begin(), result.seeds.end(),
              [](const SeedProblem& a, const SeedProblem& b) { return a.id < b.id; });
    return result;
}

// ---------------------------------------------------------------------------
// JSONL round trip

inline Json occurrence_to_json(const IntegerOccurrence& m) {
    return Json{{"value", m.value}, {"start", m.start}, {"end", m.end}};
}

inline IntegerOccurrence occurrence_from_json(const Json& j) {
    return IntegerOccurrence{j.at("value").get<long long>(),
                             j.at("start").get<std::size_t>(),
                             j.at("end").get<std::size_t>()};
}

inline Json seed_to_json(const SeedProblem& s) {
    Json integers = Json::array();
    for (const auto& m : s.integers) integers.push_back(occurrence_to_json(m));
    Json keys = Json::array();
    for (const auto& m : s.key_variables) keys.push_back(occurrence_to_json(m));
    Json j{{"id", s.id},
           {"question", s.question},
           {"answer", s.answer},
           {"integers", integers},
           {"key_variables", keys},
           {"source", s.source}};
    if (!s.pass_rates.empty()) j["pass_rates"] = s.pass_rates;
    return j;
}

inline SeedProblem seed_from_json(const Json& j) {
    SeedProblem s;
    s.id = j.at("id").get<std::string>();
    s.question = j.at("question").get<std::string>();
    s.answer = j.at("answer").get<long long>();
    for (const auto& m : j.at("integers")) s.integers.push_back(occurrence_from_json(m));
    for (const auto& m : j.at("key_variables"))
        s.key_variables.push_back(occurrence_from_json(m));
    if (j.contains("pass_rates"))
        s.pass_rates = j.at("pass_rates").get<std::map<std::string, double>>();
    if (j.contains("source")) s.source = j.at("source").get<std::string>();
    return s;
}

// Tolerant raw-dataset reader: malformed rows are counted, not fatal.
inline std::vector<RawProblem> load_raw_problems(const std::string& path,
                                                 FilterStats* stats = nullptr) {
    std::vector<RawProblem> rows;
    for_each_jsonl(
        path,
        [&](const Json& j, std::size_t) {
            if (!j.is_object() || !j.contains("id") || !j.contains("question") ||
                !j.contains("answer")) {
                if (stats) ++stats->malformed;
                return;
            }
            RawProblem r;
            try {
                r.id = j.at("id").is_string() ? j.at("id").get<std::string>()
                                              : j.at("id").dump();
                r.question = j.at("question").get<std::string>();
                r.answer = j.at("answer").is_string() ? j.at("answer").get<std::string>()
                                                      : j.at("answer").dump();
                r.source = j.value("source", "");
                if (j.contains("pass_rates"))
                    r.pass_rates = j.at("pass_rates").get<std::map<std::string, double>>();
            } catch (const Json::exception&) {
                if (stats) ++stats->malformed;
                return;
            }
            rows.push_back(std::move(r));
        },
        [&](std::size_t, const std::string&) {
            if (stats) ++stats->malformed;
        });
    return rows;
}

inline std::vector<SeedProblem> load_seed_problems(const std::string& path) {
    std::vector<SeedProblem> seeds;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        seeds.push_back(seed_from_json(j));
    });
    return seeds;
}

}  // namespace chainbench
