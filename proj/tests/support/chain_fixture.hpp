#pragma once

// Curated four-problem chain used across tests: real contest problems whose
// answers feed the next problem's pinned key variable (809 -> 4, 204 -> 54,
// 721 -> 1).

#include <stdexcept>
#include <string>
#include <vector>

#include "chainbench/seed_filter.hpp"

namespace testsupport {

struct ChainSpec {
    std::string id;
    std::string question;
    long long answer;
    long long key_value;  // occurrence pinned as the only key variable
};

inline std::vector<ChainSpec> chain4_specs() {
    return {
        {"aime-tokens",
         "Alice and Bob play the following game. A stack of $n$ tokens lies before "
         "them. The players take turns with Alice going first. On each turn, the "
         "player removes either $1$ token or $4$ tokens from the stack. Whoever "
         "removes the last token wins. Find the number of positive integers $n$ less "
         "than or equal to $2024$ for which there exists a strategy for Bob that "
         "guarantees that Bob will win the game regardless of Alice's play.",
         809, 0},
        {"aime-walk",
         "Every morning Aya goes for a $9$-kilometer-long walk and stops at a coffee "
         "shop afterwards. When she walks at a constant speed of $s$ kilometers per "
         "hour, the walk takes her 4 hours, including $t$ minutes spent in the coffee "
         "shop. When she walks $s+2$ kilometers per hour, the walk takes her 2 hours "
         "and 24 minutes, including $t$ minutes spent in the coffee shop. Suppose Aya "
         "walks at $s+\\frac{1}{2}$ kilometers per hour. Find the number of minutes "
         "the walk takes her, including the $t$ minutes spent in the coffee shop.",
         204, 4},
        {"aime-boxes",
         "Let $\\mathcal{B}$ be the set of rectangular boxes with surface area $54$ "
         "and volume $23$. Let $r$ be the radius of the smallest sphere that can "
         "contain each of the rectangular boxes that are elements of $\\mathcal{B}$. "
         "The value of $r^2$ can be written as $\\frac{p}{q}$, where $p$ and $q$ are "
         "relatively prime positive integers. Find $p+q$.",
         721, 54},
        {"aime-unity",
         "Let $\\omega \\neq 1$ be a 13th root of unity. Find the remainder when "
         "$\\prod_{k=0}^{12}(2-2\\omega^k+\\omega^{2k})$ is divided by 1000.",
         321, 1},
    };
}

// key_value 0 (the chain head) keeps every extracted occurrence; later links
// pin the single occurrence the chain substitutes.
inline std::vector<chainbench::SeedProblem> chain4_seeds() {
    std::vector<chainbench::SeedProblem> seeds;
    for (const ChainSpec& spec : chain4_specs()) {
        chainbench::SeedProblem s;
        s.id = spec.id;
        s.question = spec.question;
        s.answer = spec.answer;
        s.integers = chainbench::extract_integers(spec.question);
        s.source = "aime24";
        if (spec.key_value == 0) {
            s.key_variables = s.integers;
        } else {
            for (const auto& m : s.integers)
                if (m.value == spec.key_value) s.key_variables.push_back(m);
            if (s.key_variables.size() != 1)
                throw std::logic_error("fixture key variable is not unique for " + s.id);
        }
        seeds.push_back(std::move(s));
    }
    return seeds;
}

}  // namespace testsupport
