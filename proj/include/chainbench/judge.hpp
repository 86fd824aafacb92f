#pragma once

// Judge client: chat-backed key-variable verification and answer extraction.
// Three modes — live (chat endpoint), offline (accept-all verification, no
// extraction), replay (answer extraction served from a recorded cache).

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "chainbench/http_client.hpp"
#include "chainbench/scoring.hpp"
#include "chainbench/seed_filter.hpp"

namespace chainbench {

struct JudgeUnavailable : std::runtime_error {
    explicit JudgeUnavailable(const std::string& what) : std::runtime_error(what) {}
};
struct JudgeMalformedReply : std::runtime_error {
    explicit JudgeMalformedReply(const std::string& what) : std::runtime_error(what) {}
};

// Slots: {question}, {value}. The reply is parsed by the first standalone
// yes/no token; the paper leaves both the prompt and the parse unspecified, so
// this surface is ours and editable via a template file.
inline const char* kVerifyPromptText =
    "You are verifying whether a number is essential to a problem.\n"
    "\n"
    "Problem: {question}\n"
    "\n"
    "If the number {value} were removed from the problem statement, would the "
    "problem become unsolvable? Answer with a single word: Yes or No.\n";

// Extraction instruction; the transcript goes into {response}.
inline const char* kExtractPromptText =
    "You are a helpful assistant. Extract the question numbers and corresponding "
    "answers from the given results, and return them in JSON format, where the "
    "key is the question number and the value is the answer.\n"
    "\n"
    "{response}\n";

namespace detail {

inline std::string fill_slot(std::string text, const std::string& slot,
                             const std::string& value) {
    std::size_t pos;
    while ((pos = text.find(slot)) != std::string::npos)
        text.replace(pos, slot.size(), value);
    return text;
}

// First standalone "yes"/"no" token decides; nothing found is malformed.
inline std::optional<bool> parse_yes_no(const std::string& reply) {
    const std::string lower = to_lower(reply);
    for (std::size_t i = 0; i < lower.size(); ++i) {
        auto bounded = [&](std::size_t start, std::size_t len) {
            bool left = start == 0 || !is_ascii_alpha(lower[start - 1]);
            bool right = start + len >= lower.size() || !is_ascii_alpha(lower[start + len]);
            return left && right;
        };
        if (lower.compare(i, 3, "yes") == 0 && bounded(i, 3)) return true;
        if (lower.compare(i, 2, "no") == 0 && bounded(i, 2)) return false;
    }
    return std::nullopt;
}

// Judges often wrap JSON in markdown fences; accept both.
inline std::string strip_code_fence(const std::string& reply) {
    std::size_t open = reply.find("```");
    if (open == std::string::npos) return reply;
    std::size_t body = reply.find('\n', open);
    if (body == std::string::npos) return reply;
    std::size_t close = reply.find("```", body);
    if (close == std::string::npos) return reply;
    return reply.substr(body + 1, close - body - 1);
}

inline std::map<int, std::string> parse_extraction_reply(const std::string& reply) {
    std::string body = strip_code_fence(reply);
    Json obj = Json::parse(body, nullptr, false);
    if (obj.is_discarded()) {
        // Fall back to the first {...} object embedded in prose.
        std::size_t open = body.find('{');
        std::size_t close = body.rfind('}');
        if (open == std::string::npos || close == std::string::npos || close <= open)
            throw JudgeMalformedReply("no JSON object in judge reply");
        obj = Json::parse(body.substr(open, close - open + 1), nullptr, false);
        if (obj.is_discarded())
            throw JudgeMalformedReply("unparseable JSON in judge reply");
    }
    if (!obj.is_object()) throw JudgeMalformedReply("judge reply is not a JSON object");
    std::map<int, std::string> out;
    for (const auto& [key, value] : obj.items()) {
        auto idx = parse_int(trim(key));
        if (!idx || *idx < 1)
            throw JudgeMalformedReply("non-numeric key in judge reply: " + key);
        std::string text = value.is_string() ? value.get<std::string>() : value.dump();
        if (!text.empty()) out[static_cast<int>(*idx)] = text;
    }
    return out;
}

}  // namespace detail

// Cache of judge extraction results keyed by transcript hash. Rows:
// {"thash","answers":{...},"judge_model"}.
class ExtractionCache {
public:
    ExtractionCache() = default;

    explicit ExtractionCache(const std::string& path) : path_(path) {
        if (file_exists(path)) {
            for_each_jsonl(path, [&](const Json& row, std::size_t) {
                std::map<int, std::string> answers;
                for (const auto& [k, v] : row.at("answers").items())
                    answers[std::stoi(k)] = v.get<std::string>();
                entries_[row.at("thash").get<std::string>()] = std::move(answers);
            });
        }
        out_ = std::make_unique<JsonlWriter>(path, /*append=*/true);
    }

    std::optional<std::map<int, std::string>> lookup(const std::string& thash) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find(thash);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    void record(const std::string& thash, const std::map<int, std::string>& answers,
                const std::string& judge_model) {
        std::lock_guard<std::mutex> lock(mu_);
        if (entries_.count(thash)) return;
        entries_[thash] = answers;
        if (out_) {
            Json obj = Json::object();
            for (const auto& [k, v] : answers) obj[std::to_string(k)] = v;
            out_->write(Json{{"thash", thash}, {"answers", obj}, {"judge_model", judge_model}});
            out_->flush();
        }
    }

private:
    std::map<std::string, std::map<int, std::string>> entries_;
    std::unique_ptr<JsonlWriter> out_;
    std::string path_;
    mutable std::mutex mu_;
};

struct JudgeConfig {
    enum class Mode { kOffline, kLive, kReplay };
    Mode mode = Mode::kOffline;
    ModelEndpoint endpoint;          // live mode only
    std::string verdict_cache_path;  // key-variable verdicts
    std::string extract_cache_path;  // extraction replies
    std::string verify_prompt = kVerifyPromptText;
    std::string extract_prompt = kExtractPromptText;
    int malformed_retries = 2;

    static JudgeConfig from_config(const KeyValueConfig& cfg) {
        JudgeConfig jc;
        const std::string mode = cfg.get("mode", "offline");
        if (mode == "offline") jc.mode = Mode::kOffline;
        else if (mode == "live") jc.mode = Mode::kLive;
        else if (mode == "replay") jc.mode = Mode::kReplay;
        else throw std::runtime_error("judge config: unknown mode " + mode);
        if (jc.mode == Mode::kLive) jc.endpoint = ModelEndpoint::from_config(cfg);
        jc.verdict_cache_path = cfg.get("verdict_cache");
        jc.extract_cache_path = cfg.get("extract_cache");
        if (cfg.has("verify_prompt_file"))
            jc.verify_prompt = read_file(cfg.get("verify_prompt_file"));
        if (cfg.has("extract_prompt_file"))
            jc.extract_prompt = read_file(cfg.get("extract_prompt_file"));
        return jc;
    }
};

// KeyVariableVerifier + AnswerExtractor in one client, mode-dispatched.
class JudgeClient final : public KeyVariableVerifier, public AnswerExtractor {
public:
    explicit JudgeClient(JudgeConfig config) : config_(std::move(config)) {
        if (config_.mode == JudgeConfig::Mode::kLive)
            client_ = std::make_unique<ChatClient>(config_.endpoint);
        if (!config_.extract_cache_path.empty())
            extract_cache_ = std::make_unique<ExtractionCache>(config_.extract_cache_path);
    }

    std::string name() const override {
        switch (config_.mode) {
            case JudgeConfig::Mode::kOffline: return "offline-accept-all";
            case JudgeConfig::Mode::kReplay: return "replay";
            case JudgeConfig::Mode::kLive: return config_.endpoint.model_tag;
        }
        return "judge";
    }

    bool unsolvable_without(const std::string& question,
                            const IntegerOccurrence& m) override {
        if (config_.mode == JudgeConfig::Mode::kOffline) return true;
        if (config_.mode == JudgeConfig::Mode::kReplay)
            throw JudgeUnavailable("replay mode answers only cached verdicts; "
                                   "run filtering against a warm verdict cache");
        std::string prompt = detail::fill_slot(config_.verify_prompt, "{question}", question);
        prompt = detail::fill_slot(prompt, "{value}", std::to_string(m.value));
        for (int attempt = 0;; ++attempt) {
            if (auto verdict = detail::parse_yes_no(ask(prompt))) return *verdict;
            if (attempt >= config_.malformed_retries)
                throw JudgeMalformedReply("no yes/no verdict in judge reply");
        }
    }

    std::map<int, std::string> extract(const std::string& transcript_text) override {
        const std::string thash = fnv1a64_hex(transcript_text);
        if (extract_cache_)
            if (auto hit = extract_cache_->lookup(thash)) return *hit;
        if (config_.mode == JudgeConfig::Mode::kReplay)
            throw JudgeUnavailable("transcript missing from extraction cache: " + thash);
        if (config_.mode == JudgeConfig::Mode::kOffline)
            throw JudgeUnavailable("offline judge cannot extract answers");
        const std::string prompt =
            detail::fill_slot(config_.extract_prompt, "{response}", transcript_text);
        std::map<int, std::string> answers;
        for (int attempt = 0;; ++attempt) {
            try {
                answers = detail::parse_extraction_reply(ask(prompt));
                break;
            } catch (const JudgeMalformedReply&) {
                if (attempt >= config_.malformed_retries) throw;
            }
        }
        if (extract_cache_) extract_cache_->record(thash, answers, name());
        return answers;
    }

private:
    std::string ask(const std::string& prompt) {
        try {
            Rng jitter(fnv1a64(prompt));
            return client_->complete(prompt, jitter).text;
        } catch (const RequestFailed& e) {
            throw JudgeUnavailable(e.what());
        }
    }

    JudgeConfig config_;
    std::unique_ptr<ChatClient> client_;
    std::unique_ptr<ExtractionCache> extract_cache_;
};

}  // namespace chainbench
