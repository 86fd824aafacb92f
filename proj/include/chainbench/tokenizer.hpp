#pragma once

// Token counting for transcript analysis. Two modes ship: an explicit
// approximation (bytes / 4, labeled as such) and greedy longest-match counting
// over an operator-supplied vocabulary file. Reports carry the mode string so
// cross-model comparisons are only made within one mode.

#include <algorithm>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "chainbench/util.hpp"

namespace chainbench {

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    virtual std::string mode() const = 0;
};

class ApproxTokenizer final : public Tokenizer {
public:
    explicit ApproxTokenizer(std::size_t bytes_per_token = 4)
        : bytes_per_token_(bytes_per_token == 0 ? 1 : bytes_per_token) {}

    std::size_t count(std::string_view text) const override {
        return (text.size() + bytes_per_token_ - 1) / bytes_per_token_;
    }

    std::string mode() const override {
        return "approx-bytes/" + std::to_string(bytes_per_token_);
    }

private:
    std::size_t bytes_per_token_;
};

// Greedy longest match; a byte no vocabulary entry covers costs one token.
class VocabTokenizer final : public Tokenizer {
public:
    explicit VocabTokenizer(std::vector<std::string> tokens) {
        std::string joined;
        for (const std::string& t : tokens) {
            if (t.empty()) continue;
            max_len_ = std::max(max_len_, t.size());
            joined += t;
            joined += '\n';
            vocab_.insert(t);
        }
        hash_ = fnv1a64_hex(joined);
    }

    // One token per line; blank lines and '#' comments skipped.
    static VocabTokenizer load(const std::string& path) {
        std::vector<std::string> tokens;
        for (const std::string& line : split(read_file(path), '\n')) {
            if (line.empty() || line[0] == '#') continue;
            tokens.push_back(line);
        }
        return VocabTokenizer(std::move(tokens));
    }

    std::size_t count(std::string_view text) const override {
        std::size_t tokens = 0, pos = 0;
        while (pos < text.size()) {
            std::size_t len = std::min(max_len_, text.size() - pos);
            for (; len > 1; --len)
                if (vocab_.count(std::string(text.substr(pos, len)))) break;
            if (len <= 1 && !vocab_.count(std::string(text.substr(pos, 1)))) len = 1;
            pos += len;
            ++tokens;
        }
        return tokens;
    }

    std::string mode() const override { return "vocab-" + hash_; }

private:
    std::unordered_set<std::string> vocab_;
    std::size_t max_len_ = 1;
    std::string hash_;
};

inline std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec) {
    if (spec.empty() || spec == "approx") return std::make_unique<ApproxTokenizer>();
    if (spec.rfind("vocab:", 0) == 0)
        return std::make_unique<VocabTokenizer>(VocabTokenizer::load(spec.substr(6)));
    throw std::runtime_error("unknown tokenizer spec: " + spec +
                             " (expected 'approx' or 'vocab:<file>')");
}

}  // namespace chainbench
