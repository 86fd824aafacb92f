#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "chainbench/util.hpp"

namespace chainbench {

// Canonical numeric normalization shared by the answer-integer check at filter
// time and by score-time comparison: strips surrounding whitespace, $...$
// delimiters, \boxed{...} wrappers, digit-group commas, and a leading '+'.
// A string that then parses as a base-10 integer is returned in canonical
// decimal form; anything else is returned stripped but otherwise intact.
// Idempotent: normalize(normalize(s)) == normalize(s).
inline std::string normalize_answer(std::string_view raw) {
    std::string s = trim(raw);
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
            s = trim(std::string_view(s).substr(1, s.size() - 2));
            changed = true;
            continue;
        }
        // \boxed{...} (the braces must close at the very end)
        static constexpr std::string_view kBoxed = "\\boxed";
        if (s.size() > kBoxed.size() && std::string_view(s).substr(0, kBoxed.size()) == kBoxed) {
            std::size_t p = kBoxed.size();
            while (p < s.size() && is_space(s[p])) ++p;
            if (p < s.size() && s[p] == '{' && s.back() == '}') {
                int depth = 0;
                bool wraps_all = true;
                for (std::size_t i = p; i < s.size(); ++i) {
                    if (s[i] == '{') ++depth;
                    else if (s[i] == '}') {
                        --depth;
                        if (depth == 0 && i + 1 != s.size()) { wraps_all = false; break; }
                    }
                }
                if (wraps_all && depth == 0) {
                    s = trim(std::string_view(s).substr(p + 1, s.size() - p - 2));
                    changed = true;
                    continue;
                }
            }
        }
    }
    // drop commas sitting between digits (thousands separators)
    std::string no_commas;
    no_commas.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && i + 1 < s.size() && is_ascii_digit(s[i - 1]) &&
            is_ascii_digit(s[i + 1]))
            continue;
        no_commas.push_back(s[i]);
    }
    s = std::move(no_commas);
    if (!s.empty() && s[0] == '+') s.erase(0, 1);
    if (auto v = parse_int(s)) return std::to_string(*v);
    return s;
}

// The a ∈ Z gate: integer value of an answer string, if it has one.
inline std::optional<long long> parse_integer_answer(std::string_view raw) {
    return parse_int(normalize_answer(raw));
}

// Score-time equality of an extracted answer against an integer gold value.
inline bool answer_matches(std::string_view extracted, long long gold) {
    auto v = parse_int(normalize_answer(extracted));
    return v && *v == gold;
}

}  // namespace chainbench
