#pragma once

// Answer extraction and scoring: per-sub-problem answers out of a transcript,
// all-or-nothing and last-answer accuracy, the two verifiable rewards, and the
// rule-vs-judge consistency statistic.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainbench/composer.hpp"
#include "chainbench/jsonl.hpp"
#include "chainbench/normalize.hpp"

namespace chainbench {

struct KeyMismatch : std::runtime_error {
    explicit KeyMismatch(const std::string& what) : std::runtime_error(what) {}
};

enum class ExtractionMethod { kRule, kJudge };

inline std::string extraction_method_name(ExtractionMethod m) {
    return m == ExtractionMethod::kRule ? "rule" : "judge";
}

struct ExtractedAnswers {
    std::map<int, std::string> answers;  // 1-based sub-problem index -> answer text
    ExtractionMethod method = ExtractionMethod::kRule;
};

struct ScoreRecord {
    std::string composed_id;
    int sample_index = 0;
    ExtractedAnswers extracted;
    std::vector<bool> per_problem_correct;
    int acc_all = 0;
    int acc_last = 0;
    int reward_last = 0;  // == acc_last
    int reward_all = 0;   // == acc_all
};

// Rule extraction: "Problem K: ... \boxed{V}" on one line, whitespace-tolerant,
// V captured with balanced braces. A later line for the same K overwrites the
// earlier one, so a restated final-answer block wins over mid-reasoning boxes.
inline ExtractedAnswers extract_boxed(const std::string& text) {
    ExtractedAnswers out;
    out.method = ExtractionMethod::kRule;
    const std::size_t n = text.size();
    std::size_t line_start = 0;
    while (line_start < n) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = n;
        std::size_t pos = line_start;
        while (pos < line_end) {
            std::size_t hit = text.find("Problem", pos);
            if (hit == std::string::npos || hit >= line_end) break;
            pos = hit + 7;
            if (hit > line_start && (is_ascii_alpha(text[hit - 1]) || is_ascii_digit(text[hit - 1])))
                continue;
            std::size_t p = pos;
            while (p < line_end && is_space(text[p])) ++p;
            std::size_t dstart = p;
            while (p < line_end && is_ascii_digit(text[p])) ++p;
            if (p == dstart || p - dstart > 9) continue;
            int index = std::stoi(std::string(text.substr(dstart, p - dstart)));
            while (p < line_end && is_space(text[p])) ++p;
            if (p >= line_end || text[p] != ':') continue;
            std::size_t box = text.find("\\boxed", p + 1);
            if (box == std::string::npos || box >= line_end) continue;
            std::size_t q = box + 6;
            while (q < line_end && is_space(text[q])) ++q;
            if (q >= line_end || text[q] != '{') continue;
            int depth = 0;
            std::size_t vstart = q + 1, vend = std::string::npos;
            for (std::size_t k = q; k < line_end; ++k) {
                if (text[k] == '{') ++depth;
                else if (text[k] == '}') {
                    --depth;
                    if (depth == 0) { vend = k; break; }
                }
            }
            if (vend == std::string::npos) continue;
            std::string value = trim(text.substr(vstart, vend - vstart));
            if (index >= 1 && !value.empty()) out.answers[index] = value;
            pos = vend + 1;
        }
        line_start = line_end + 1;
    }
    return out;
}

// Extraction backends: the rule scanner above, a chat judge, or replayed
// judge output. Implementations live with the judge client.
class AnswerExtractor {
public:
    virtual ~AnswerExtractor() = default;
    virtual std::map<int, std::string> extract(const std::string& transcript_text) = 0;
    virtual std::string name() const = 0;
};

inline ExtractedAnswers extract_via_judge(const std::string& text,
                                          AnswerExtractor& judge) {
    ExtractedAnswers out;
    out.method = ExtractionMethod::kJudge;
    out.answers = judge.extract(text);
    return out;
}

// Eq-style scoring: per-index integer comparison after canonical
// normalization; a missing index is incorrect. Total: every transcript gets a
// record. acc_all demands every sub-problem; acc_last only the final one; the
// rewards mirror them.
inline ScoreRecord score(const ExtractedAnswers& extracted,
                         const std::vector<long long>& gold) {
    if (gold.empty()) throw std::invalid_argument("score: empty gold answers");
    ScoreRecord rec;
    rec.extracted = extracted;
    rec.per_problem_correct.resize(gold.size(), false);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        auto it = extracted.answers.find(static_cast<int>(i) + 1);
        rec.per_problem_correct[i] =
            it != extracted.answers.end() && answer_matches(it->second, gold[i]);
    }
    bool all = std::all_of(rec.per_problem_correct.begin(),
                           rec.per_problem_correct.end(), [](bool b) { return b; });
    rec.acc_all = all ? 1 : 0;
    rec.acc_last = rec.per_problem_correct.back() ? 1 : 0;
    rec.reward_all = rec.acc_all;
    rec.reward_last = rec.acc_last;
    return rec;
}

// ---------------------------------------------------------------------------
// Rule-vs-judge consistency (two readings, both reported: agreement of the
// all-correct verdict, and agreement of the full normalized answer maps).

struct ConsistencyReport {
    std::size_t records = 0;
    double acc_agreement = 1.0;     // share with identical acc_all
    double answer_agreement = 1.0;  // share with identical normalized maps
};

inline ConsistencyReport consistency_rate(const std::vector<ScoreRecord>& rule_records,
                                          const std::vector<ScoreRecord>& judge_records) {
    using K = std::pair<std::string, int>;
    std::map<K, const ScoreRecord*> rule, judge;
    for (const auto& r : rule_records) rule[{r.composed_id, r.sample_index}] = &r;
    for (const auto& r : judge_records) judge[{r.composed_id, r.sample_index}] = &r;
    if (rule.size() != rule_records.size() || judge.size() != judge_records.size())
        throw KeyMismatch("duplicate (composed_id, sample_index) keys");
    if (rule.size() != judge.size())
        throw KeyMismatch("record sets differ in size: " + std::to_string(rule.size()) +
                          " vs " + std::to_string(judge.size()));
    ConsistencyReport rep;
    rep.records = rule.size();
    if (rep.records == 0) return rep;
    std::size_t acc_agree = 0, ans_agree = 0;
    auto jt = judge.begin();
    for (auto rt = rule.begin(); rt != rule.end(); ++rt, ++jt) {
        if (rt->first != jt->first)
            throw KeyMismatch("record sets keyed differently near " + rt->first.first);
        if (rt->second->acc_all == jt->second->acc_all) ++acc_agree;
        auto normalized = [](const ScoreRecord& r) {
            std::map<int, std::string> m;
            for (const auto& [k, v] : r.extracted.answers) m[k] = normalize_answer(v);
            return m;
        };
        if (normalized(*rt->second) == normalized(*jt->second)) ++ans_agree;
    }
    rep.acc_agreement = static_cast<double>(acc_agree) / static_cast<double>(rep.records);
    rep.answer_agreement =
        static_cast<double>(ans_agree) / static_cast<double>(rep.records);
    return rep;
}

// ---------------------------------------------------------------------------
// Aggregation

struct ComposedMeta {
    std::string dataset;
    int n = 0;
    std::optional<double> expected_accuracy;
};

struct SummaryRow {
    std::string dataset;
    std::string model;
    int n = 0;
    int k = 0;  // samples per prompt seen in the group
    std::size_t records = 0;
    double acc_all = 0.0;
    double acc_last = 0.0;
    std::optional<double> acc_expected;  // mean over the group, Acc_expected
    std::optional<double> gap;           // acc_all - acc_expected
};

// Mean acc_all within a group of k-sample records is exactly avg@k.
inline std::vector<SummaryRow> aggregate(
    const std::vector<ScoreRecord>& records,
    const std::map<std::string, ComposedMeta>& meta, const std::string& model) {
    if (records.empty()) return {};
    struct Acc {
        std::size_t count = 0;
        std::size_t all = 0, last = 0;
        double expected_sum = 0.0;
        std::size_t expected_count = 0;
        int max_sample = 0;
    };
    std::map<std::pair<std::string, int>, Acc> groups;
    for (const ScoreRecord& r : records) {
        auto mit = meta.find(r.composed_id);
        if (mit == meta.end())
            throw std::runtime_error("no composed metadata for " + r.composed_id);
        Acc& g = groups[{mit->second.dataset, mit->second.n}];
        ++g.count;
        g.all += static_cast<std::size_t>(r.acc_all);
        g.last += static_cast<std::size_t>(r.acc_last);
        if (mit->second.expected_accuracy) {
            g.expected_sum += *mit->second.expected_accuracy;
            ++g.expected_count;
        }
        g.max_sample = std::max(g.max_sample, r.sample_index);
    }
    std::vector<SummaryRow> rows;
    for (const auto& [key, g] : groups) {
        SummaryRow row;
        row.dataset = key.first;
        row.model = model;
        row.n = key.second;
        row.k = g.max_sample + 1;
        row.records = g.count;
        row.acc_all = static_cast<double>(g.all) / static_cast<double>(g.count);
        row.acc_last = static_cast<double>(g.last) / static_cast<double>(g.count);
        if (g.expected_count == g.count && g.count > 0) {
            row.acc_expected = g.expected_sum / static_cast<double>(g.count);
            row.gap = row.acc_all - *row.acc_expected;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Code-answer path: fenced blocks are extracted here and handed to an external
// executor; running them is out of scope.

struct CodeBlock {
    std::string language;
    std::string body;
};

inline std::vector<CodeBlock> extract_code_blocks(const std::string& text) {
    std::vector<CodeBlock> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = text.find("```", pos);
        if (open == std::string::npos) break;
        std::size_t lang_end = text.find('\n', open + 3);
        if (lang_end == std::string::npos) break;
        std::string language = trim(text.substr(open + 3, lang_end - open - 3));
        std::size_t close = text.find("```", lang_end + 1);
        if (close == std::string::npos) break;
        std::string body = text.substr(lang_end + 1, close - lang_end - 1);
        if (!body.empty() && body.back() == '\n') body.pop_back();
        out.push_back({std::move(language), std::move(body)});
        pos = close + 3;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL round trip

inline Json score_to_json(const ScoreRecord& r) {
    Json answers = Json::object();
    for (const auto& [k, v] : r.extracted.answers) answers[std::to_string(k)] = v;
    return Json{{"composed_id", r.composed_id},
                {"sample_index", r.sample_index},
                {"method", extraction_method_name(r.extracted.method)},
                {"answers", answers},
                {"per_problem_correct", r.per_problem_correct},
                {"acc_all", r.acc_all},
                {"acc_last", r.acc_last},
                {"reward_last", r.reward_last},
                {"reward_all", r.reward_all}};
}

inline ScoreRecord score_from_json(const Json& j) {
    ScoreRecord r;
    r.composed_id = j.at("composed_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<int>();
    r.extracted.method = j.at("method").get<std::string>() == "judge"
                             ? ExtractionMethod::kJudge
                             : ExtractionMethod::kRule;
    for (const auto& [k, v] : j.at("answers").items())
        r.extracted.answers[std::stoi(k)] = v.get<std::string>();
    r.per_problem_correct = j.at("per_problem_correct").get<std::vector<bool>>();
    r.acc_all = j.at("acc_all").get<int>();
    r.acc_last = j.at("acc_last").get<int>();
    r.reward_last = j.at("reward_last").get<int>();
    r.reward_all = j.at("reward_all").get<int>();
    return r;
}

inline Json reward_row(const ScoreRecord& r) {
    return Json{{"composed_id", r.composed_id},
                {"sample_index", r.sample_index},
                {"reward_last", r.reward_last},
                {"reward_all", r.reward_all}};
}

}  // namespace chainbench
