#pragma once

// Transcript diagnostics: per-sub-problem segmentation, the four-way error
// taxonomy, first-error token position, thinking-budget allocation, and
// reflection statistics over an editable marker lexicon.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "chainbench/composer.hpp"
#include "chainbench/scoring.hpp"
#include "chainbench/tokenizer.hpp"
#include "chainbench/transcript.hpp"

namespace chainbench {

struct NoError : std::runtime_error {
    NoError() : std::runtime_error("record has no error index") {}
};

// ---------------------------------------------------------------------------
// Segmentation

// Starts of the n per-sub-problem segments. token_starts.front() > 0 means the
// transcript opens with a preamble; preamble + segment widths always sum to
// total_tokens. All token math uses the configured tokenizer, not the
// inference-side count.
struct Segmentation {
    std::vector<std::size_t> token_starts;
    std::vector<std::size_t> byte_starts;
    std::size_t total_tokens = 0;
    std::size_t total_bytes = 0;

    std::size_t preamble_tokens() const {
        return token_starts.empty() ? 0 : token_starts.front();
    }

    std::size_t width(std::size_t i) const {
        std::size_t begin = token_starts[i];
        std::size_t end = i + 1 < token_starts.size() ? token_starts[i + 1] : total_tokens;
        return end - begin;
    }

    std::vector<std::size_t> widths() const {
        std::vector<std::size_t> out(token_starts.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = width(i);
        return out;
    }

    // 1-based sub-problem owning a byte offset.
    std::size_t segment_of_byte(std::size_t byte) const {
        std::size_t seg = 1;
        for (std::size_t i = 1; i < byte_starts.size(); ++i)
            if (byte >= byte_starts[i]) seg = i + 1;
        return seg;
    }
};

namespace detail {

// "Problem K" heading (word-bounded, K exact) or a "[variableK]" mention,
// whichever comes first at or after `from`.
inline std::optional<std::size_t> find_segment_marker(const std::string& text, int k,
                                                      std::size_t from) {
    std::optional<std::size_t> best;
    const std::string digits = std::to_string(k);
    auto consider = [&](std::size_t pos) {
        if (!best || pos < *best) best = pos;
    };
    // problem K
    for (std::size_t pos = from; pos + 7 <= text.size(); ++pos) {
        if (ascii_lower(text[pos]) != 'p') continue;
        static const char word[] = "problem";
        bool match = true;
        for (std::size_t i = 0; i < 7; ++i)
            if (ascii_lower(text[pos + i]) != word[i]) { match = false; break; }
        if (!match) continue;
        if (pos > 0 && (is_ascii_alpha(text[pos - 1]) || is_ascii_digit(text[pos - 1])))
            continue;
        std::size_t p = pos + 7;
        while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
        if (text.compare(p, digits.size(), digits) != 0) continue;
        std::size_t after = p + digits.size();
        if (after < text.size() && is_ascii_digit(text[after])) continue;
        consider(pos);
        break;
    }
    // [variableK] / variableK
    const std::string needle = "variable" + digits;
    std::string lower = to_lower(text);
    std::size_t pos = from;
    while ((pos = lower.find(needle, pos)) != std::string::npos) {
        std::size_t after = pos + needle.size();
        bool bounded = (after >= lower.size() || !is_ascii_digit(lower[after])) &&
                       (pos == 0 || !is_ascii_alpha(lower[pos - 1]));
        if (bounded) {
            std::size_t start = pos;
            if (start > 0 && text[start - 1] == '[') --start;
            consider(start);
            break;
        }
        pos = after;
    }
    return best;
}

}  // namespace detail

// Boundaries sit at the first marker of each sub-problem's solution; markers
// never move backwards. Sub-problems without a marker collapse to zero width:
// at the end when nothing follows, directly before the next found marker
// otherwise. No markers at all puts the whole transcript in segment 1.
inline Segmentation segment_transcript(const std::string& text, std::size_t n,
                                       const Tokenizer& tok) {
    Segmentation seg;
    seg.total_bytes = text.size();
    seg.total_tokens = tok.count(text);
    if (n == 0) return seg;

    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> starts(n, kUnset);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < n; ++k) {
        auto hit = detail::find_segment_marker(text, static_cast<int>(k) + 1, cursor);
        if (hit) {
            starts[k] = *hit;
            cursor = *hit + 1;
        }
    }
    // Fill the gaps: leading missing -> 0, inner missing -> next found start,
    // trailing missing -> end of text.
    std::size_t next_known = text.size();
    for (std::size_t k = n; k-- > 0;) {
        if (starts[k] == kUnset) starts[k] = (k == 0) ? 0 : next_known;
        else next_known = starts[k];
    }
    if (starts[0] == kUnset) starts[0] = 0;

    seg.byte_starts = starts;
    seg.token_starts.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        seg.token_starts[k] = tok.count(std::string_view(text).substr(0, starts[k]));
    return seg;
}

// ---------------------------------------------------------------------------
// Error taxonomy

enum class ErrorCategory {
    kNone,
    kProblemReasoning,
    kDependencyReasoning,
    kEarlyStop,
    kOutputTruncation,
};

inline std::string error_category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::kNone: return "none";
        case ErrorCategory::kProblemReasoning: return "problem_reasoning";
        case ErrorCategory::kDependencyReasoning: return "dependency_reasoning";
        case ErrorCategory::kEarlyStop: return "early_stop";
        case ErrorCategory::kOutputTruncation: return "output_truncation";
    }
    return "none";
}

struct ErrorRecord {
    ErrorCategory category = ErrorCategory::kNone;
    std::optional<int> first_error_index;           // 1-based
    std::optional<std::size_t> error_position_tokens;
};

namespace detail {

inline std::string strip_leg(std::string leg) {
    leg = trim(leg);
    while (!leg.empty() && (leg.back() == '.' || leg.back() == ',' || leg.back() == ';' ||
                            leg.back() == '!' || leg.back() == '?' || leg.back() == '$' ||
                            leg.back() == '*'))
        leg.pop_back();
    while (!leg.empty() && (leg.front() == '$' || leg.front() == '*')) leg.erase(0, 1);
    return trim(leg);
}

// Digits, operators and bracketed references only: the leg is still part of
// one arithmetic chain. Free words end the statement.
inline bool leg_is_arithmetic(const std::string& leg) {
    int bracket = 0;
    for (char c : leg) {
        if (c == '[') ++bracket;
        else if (c == ']') bracket = bracket > 0 ? bracket - 1 : 0;
        else if (is_ascii_alpha(c) && bracket == 0) return false;
    }
    return true;
}

}  // namespace detail

// Last "variableK = ... = V" statement resolving to an integer. Bracketed and
// spaced forms match. The equality chain is walked leg by leg: a bare integer
// leg sets the value, an arithmetic leg ("809 - 805", "[answer1] - 805") keeps
// the chain open, and free text closes the statement (salvaging a leading
// integer, so "variable2 = 5 and then" still reads 5). Statements that never
// resolve, like a pure constraint echo, are ignored.
inline std::optional<long long> stated_variable_value(const std::string& text, int k) {
    const std::string lower = to_lower(text);
    const std::string needle = "variable" + std::to_string(k);
    std::optional<long long> last_value;
    std::size_t pos = 0;
    while ((pos = lower.find(needle, pos)) != std::string::npos) {
        std::size_t p = pos + needle.size();
        if (p < text.size() && is_ascii_digit(text[p])) { pos = p; continue; }
        if (pos > 0 && is_ascii_alpha(lower[pos - 1])) { pos = p; continue; }
        std::size_t q = p;
        while (q < text.size() && (text[q] == ']' || text[q] == ' ' || text[q] == '\t')) ++q;
        if (q >= text.size() || text[q] != '=') { pos = p; continue; }
        std::size_t line_end = text.find('\n', q);
        if (line_end == std::string::npos) line_end = text.size();
        std::optional<long long> statement_value;
        std::size_t leg_start = q + 1;
        while (leg_start <= line_end) {
            std::size_t leg_end = text.find('=', leg_start);
            if (leg_end == std::string::npos || leg_end > line_end) leg_end = line_end;
            std::string leg = detail::strip_leg(text.substr(leg_start, leg_end - leg_start));
            if (auto v = parse_int(leg)) {
                statement_value = *v;
            } else if (!detail::leg_is_arithmetic(leg)) {
                if (!statement_value) {
                    std::size_t sp = leg.find_first_of(" \t");
                    if (auto lead = parse_int(detail::strip_leg(leg.substr(0, sp))))
                        statement_value = *lead;
                }
                break;
            }
            if (leg_end >= line_end) break;
            leg_start = leg_end + 1;
        }
        if (statement_value) last_value = statement_value;
        pos = p;
    }
    return last_value;
}

// Decision order: all correct -> none; endpoint truncation -> truncation;
// a clean stop with every answered index correct before the first missing one
// -> early stop; first wrong index with a mis-stated dependency value (and the
// previous answer correct) -> dependency reasoning; anything else -> problem
// reasoning. Exactly one category per record.
inline ErrorRecord classify_error(const ScoreRecord& score, const Transcript& transcript,
                                  const ComposedProblem& cp) {
    ErrorRecord rec;
    const std::size_t n = cp.size();
    if (score.acc_all == 1) return rec;

    int first_wrong = 0;
    for (std::size_t i = 0; i < score.per_problem_correct.size(); ++i)
        if (!score.per_problem_correct[i]) { first_wrong = static_cast<int>(i) + 1; break; }
    int first_missing = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (!score.extracted.answers.count(static_cast<int>(i))) {
            first_missing = static_cast<int>(i);
            break;
        }
    rec.first_error_index = first_wrong;

    if (transcript.finish_reason == FinishReason::kLength) {
        rec.category = ErrorCategory::kOutputTruncation;
        return rec;
    }
    if (first_missing > 0 && first_missing == first_wrong) {
        // Nothing answered before the gap is wrong: the model stopped early.
        rec.category = ErrorCategory::kEarlyStop;
        return rec;
    }
    const int k = first_wrong;
    if (k >= 2 && cp.mode == ComposeMode::kSequential &&
        score.per_problem_correct[static_cast<std::size_t>(k) - 2]) {
        for (const DependencySpec& d : cp.dependencies) {
            if (d.chain_index != k) continue;
            const long long expected =
                cp.gold_integers()[static_cast<std::size_t>(k) - 2] + d.offset;
            auto stated = stated_variable_value(transcript.raw_text, k);
            if (stated && *stated != expected) {
                rec.category = ErrorCategory::kDependencyReasoning;
                return rec;
            }
            break;
        }
    }
    rec.category = ErrorCategory::kProblemReasoning;
    return rec;
}

// Token offset where the first erroneous sub-problem's segment begins.
inline std::size_t error_position(const ErrorRecord& rec, const Segmentation& seg) {
    if (!rec.first_error_index) throw NoError();
    std::size_t idx = static_cast<std::size_t>(*rec.first_error_index) - 1;
    if (idx >= seg.token_starts.size())
        throw std::out_of_range("error index beyond segmentation");
    return seg.token_starts[idx];
}

// ---------------------------------------------------------------------------
// Thinking-budget allocation

struct BudgetAllocation {
    std::vector<std::size_t> per_problem_tokens;
    std::vector<double> fractions;  // sum to 1 when any tokens were spent
};

inline BudgetAllocation budget_allocation(const Segmentation& seg) {
    BudgetAllocation b;
    b.per_problem_tokens = seg.widths();
    std::size_t total = 0;
    for (std::size_t w : b.per_problem_tokens) total += w;
    b.fractions.resize(b.per_problem_tokens.size(), 0.0);
    if (total > 0)
        for (std::size_t i = 0; i < b.fractions.size(); ++i)
            b.fractions[i] = static_cast<double>(b.per_problem_tokens[i]) /
                             static_cast<double>(total);
    return b;
}

// ---------------------------------------------------------------------------
// Reflection statistics

struct ReflectionLexicon {
    std::vector<std::string> markers;

    static ReflectionLexicon defaults() {
        return {{"wait", "let me check", "let me verify", "alternatively",
                 "on second thought", "re-examine", "double-check", "hmm"}};
    }

    // One marker per line; '#' comments and blank lines skipped.
    static ReflectionLexicon load(const std::string& path) {
        ReflectionLexicon lex;
        for (const std::string& line : split(read_file(path), '\n')) {
            std::string m = trim(line);
            if (m.empty() || m[0] == '#') continue;
            lex.markers.push_back(to_lower(m));
        }
        return lex;
    }

    // Recorded in every report so lexicon edits are visible in comparisons.
    std::string hash() const {
        std::string joined;
        for (const std::string& m : markers) {
            joined += to_lower(m);
            joined += '\n';
        }
        return fnv1a64_hex(joined);
    }
};

struct ReflectionStats {
    std::size_t reflection_count = 0;
    bool long_reflection = false;
    std::vector<std::size_t> per_problem_counts;
};

namespace detail {

// Case-insensitive marker match at `pos`; a space in the marker eats any
// whitespace run. Word-bounded on both sides.
inline std::size_t match_marker(const std::string& text, std::size_t pos,
                                const std::string& marker) {
    if (pos > 0 && is_ascii_alpha(text[pos - 1])) return 0;
    std::size_t i = pos, j = 0;
    while (j < marker.size()) {
        if (marker[j] == ' ') {
            if (i >= text.size() || !is_space(text[i])) return 0;
            while (i < text.size() && is_space(text[i])) ++i;
            ++j;
            continue;
        }
        if (i >= text.size() || ascii_lower(text[i]) != marker[j]) return 0;
        ++i;
        ++j;
    }
    if (i < text.size() && is_ascii_alpha(text[i])) return 0;
    return i - pos;
}

// True when [begin, end) mentions sub-problem j < current via "problem j",
// "answerj" or "variablej" (brackets optional).
inline bool references_earlier_problem(const std::string& text, std::size_t begin,
                                       std::size_t end, std::size_t current) {
    const std::string lower = to_lower(text.substr(begin, end - begin));
    auto scan = [&](const std::string& word, bool allow_space) {
        std::size_t pos = 0;
        while ((pos = lower.find(word, pos)) != std::string::npos) {
            if (pos > 0 && is_ascii_alpha(lower[pos - 1])) { pos += word.size(); continue; }
            std::size_t p = pos + word.size();
            if (allow_space)
                while (p < lower.size() && (lower[p] == ' ' || lower[p] == '\t')) ++p;
            std::size_t d = p;
            while (d < lower.size() && is_ascii_digit(lower[d])) ++d;
            if (d > p) {
                int idx = std::stoi(lower.substr(p, d - p));
                if (idx >= 1 && static_cast<std::size_t>(idx) < current) return true;
            }
            pos += word.size();
        }
        return false;
    };
    return scan("problem", true) || scan("answer", false) || scan("variable", false);
}

}  // namespace detail

// Counts lexicon markers per segment. A reflection is long-range when its
// sentence also references an earlier sub-problem.
inline ReflectionStats reflection_stats(const std::string& text, const Segmentation& seg,
                                        const ReflectionLexicon& lexicon) {
    ReflectionStats stats;
    stats.per_problem_counts.assign(seg.token_starts.size(), 0);
    if (text.empty() || seg.token_starts.empty()) return stats;
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
        std::size_t matched = 0;
        for (const std::string& marker : lexicon.markers) {
            matched = detail::match_marker(text, pos, marker);
            if (matched) break;
        }
        if (!matched) continue;
        const std::size_t segment = seg.segment_of_byte(pos);
        ++stats.per_problem_counts[segment - 1];
        ++stats.reflection_count;
        if (!stats.long_reflection && segment > 1) {
            std::size_t begin = pos;
            while (begin > 0 && text[begin - 1] != '\n' && text[begin - 1] != '.' &&
                   text[begin - 1] != '?' && text[begin - 1] != '!')
                --begin;
            std::size_t end = pos + matched;
            while (end < text.size() && text[end] != '\n' && text[end] != '.' &&
                   text[end] != '?' && text[end] != '!')
                ++end;
            if (detail::references_earlier_problem(text, begin, end, segment))
                stats.long_reflection = true;
        }
        pos += matched - 1;
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Per-transcript analysis row

struct AnalysisRecord {
    std::string composed_id;
    int sample_index = 0;
    ErrorRecord error;
    BudgetAllocation budget;
    ReflectionStats reflection;
};

inline AnalysisRecord analyze_transcript(const Transcript& t, const ScoreRecord& score,
                                         const ComposedProblem& cp, const Tokenizer& tok,
                                         const ReflectionLexicon& lexicon) {
    AnalysisRecord rec;
    rec.composed_id = t.composed_id;
    rec.sample_index = t.sample_index;
    Segmentation seg = segment_transcript(t.raw_text, cp.size(), tok);
    rec.error = classify_error(score, t, cp);
    if (rec.error.first_error_index)
        rec.error.error_position_tokens = error_position(rec.error, seg);
    rec.budget = budget_allocation(seg);
    rec.reflection = reflection_stats(t.raw_text, seg, lexicon);
    return rec;
}

inline Json analysis_to_json(const AnalysisRecord& r) {
    Json j{{"composed_id", r.composed_id},
           {"sample_index", r.sample_index},
           {"category", error_category_name(r.error.category)},
           {"per_problem_tokens", r.budget.per_problem_tokens},
           {"reflection_count", r.reflection.reflection_count},
           {"per_problem_reflections", r.reflection.per_problem_counts},
           {"long_reflection", r.reflection.long_reflection}};
    if (r.error.first_error_index) j["first_error_index"] = *r.error.first_error_index;
    if (r.error.error_position_tokens)
        j["error_position"] = *r.error.error_position_tokens;
    return j;
}

inline AnalysisRecord analysis_from_json(const Json& j) {
    AnalysisRecord r;
    r.composed_id = j.at("composed_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<int>();
    const std::string cat = j.at("category").get<std::string>();
    if (cat == "none") r.error.category = ErrorCategory::kNone;
    else if (cat == "problem_reasoning") r.error.category = ErrorCategory::kProblemReasoning;
    else if (cat == "dependency_reasoning")
        r.error.category = ErrorCategory::kDependencyReasoning;
    else if (cat == "early_stop") r.error.category = ErrorCategory::kEarlyStop;
    else if (cat == "output_truncation")
        r.error.category = ErrorCategory::kOutputTruncation;
    else throw std::runtime_error("unknown error category: " + cat);
    if (j.contains("first_error_index"))
        r.error.first_error_index = j.at("first_error_index").get<int>();
    if (j.contains("error_position"))
        r.error.error_position_tokens = j.at("error_position").get<std::size_t>();
    r.budget.per_problem_tokens =
        j.at("per_problem_tokens").get<std::vector<std::size_t>>();
    std::size_t total = 0;
    for (std::size_t w : r.budget.per_problem_tokens) total += w;
    r.budget.fractions.assign(r.budget.per_problem_tokens.size(), 0.0);
    if (total > 0)
        for (std::size_t i = 0; i < r.budget.fractions.size(); ++i)
            r.budget.fractions[i] = static_cast<double>(r.budget.per_problem_tokens[i]) /
                                    static_cast<double>(total);
    r.reflection.reflection_count = j.at("reflection_count").get<std::size_t>();
    r.reflection.per_problem_counts =
        j.at("per_problem_reflections").get<std::vector<std::size_t>>();
    r.reflection.long_reflection = j.at("long_reflection").get<bool>();
    return r;
}

}  // namespace chainbench
