#pragma once

// OpenAI-compatible chat-completions client with retry/backoff. Shared by the
// batch inference runner and the judge client.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "httplib.h"

#include "chainbench/jsonl.hpp"
#include "chainbench/rng.hpp"
#include "chainbench/util.hpp"

namespace chainbench {

struct AuthMissing : std::runtime_error {
    explicit AuthMissing(const std::string& var)
        : std::runtime_error("auth environment variable not set: " + var) {}
};
struct EndpointUnreachable : std::runtime_error {
    explicit EndpointUnreachable(const std::string& what) : std::runtime_error(what) {}
};
struct RequestFailed : std::runtime_error {
    explicit RequestFailed(const std::string& what) : std::runtime_error(what) {}
};

struct UrlParts {
    std::string host_origin;  // scheme://host[:port]
    std::string path_prefix;  // e.g. "/v1"

    static UrlParts parse(const std::string& url) {
        std::size_t scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw std::runtime_error("base_url must start with http:// or https://: " + url);
        std::size_t path_start = url.find('/', scheme_end + 3);
        UrlParts parts;
        if (path_start == std::string::npos) {
            parts.host_origin = url;
        } else {
            parts.host_origin = url.substr(0, path_start);
            parts.path_prefix = url.substr(path_start);
            while (!parts.path_prefix.empty() && parts.path_prefix.back() == '/')
                parts.path_prefix.pop_back();
        }
        return parts;
    }
};

struct SamplingParams {
    double temperature = 1.0;
    double top_p = 0.95;
    int top_k = 0;  // 0: omit from the request
    int max_new_tokens = 4096;
};

struct ModelEndpoint {
    std::string base_url;
    std::string model_tag;
    std::string auth_token_env;  // token is only ever read from the environment
    SamplingParams sampling;
    double request_timeout_s = 300.0;
    int max_retries = 3;
    int backoff_base_ms = 500;
    std::map<std::string, Json> extra_request_fields;  // vendor toggles, pass-through

    static ModelEndpoint from_config(const KeyValueConfig& cfg) {
        ModelEndpoint ep;
        ep.base_url = cfg.get("base_url");
        if (ep.base_url.empty()) throw std::runtime_error("endpoint config: base_url missing");
        ep.model_tag = cfg.get("model_tag", cfg.get("model"));
        ep.auth_token_env = cfg.get("auth_token_env");
        ep.sampling.temperature = cfg.get_double("temperature", 1.0);
        ep.sampling.top_p = cfg.get_double("top_p", 0.95);
        ep.sampling.top_k = static_cast<int>(cfg.get_int("top_k", 0));
        ep.sampling.max_new_tokens = static_cast<int>(cfg.get_int("max_new_tokens", 4096));
        ep.request_timeout_s = cfg.get_double("request_timeout_s", 300.0);
        ep.max_retries = static_cast<int>(cfg.get_int("max_retries", 3));
        ep.backoff_base_ms = static_cast<int>(cfg.get_int("backoff_base_ms", 500));
        for (const auto& [key, value] : cfg.items()) {
            if (key.rfind("extra.", 0) != 0) continue;
            Json parsed = Json::parse(value, nullptr, false);
            ep.extra_request_fields[key.substr(6)] =
                parsed.is_discarded() ? Json(value) : parsed;
        }
        return ep;
    }

    // Empty when no variable is configured; throws when one is named but unset.
    std::optional<std::string> auth_token() const {
        if (auth_token_env.empty()) return std::nullopt;
        const char* v = std::getenv(auth_token_env.c_str());
        if (!v) throw AuthMissing(auth_token_env);
        return std::string(v);
    }
};

struct ChatResult {
    std::string text;
    std::optional<std::size_t> completion_tokens;
    std::string finish_reason;  // as reported: "stop", "length", ...
    int retries = 0;
    long latency_ms = 0;
};

class ChatClient {
public:
    explicit ChatClient(ModelEndpoint endpoint)
        : endpoint_(std::move(endpoint)), url_(UrlParts::parse(endpoint_.base_url)) {
        endpoint_.auth_token();  // fail fast on a named-but-unset variable
    }

    const ModelEndpoint& endpoint() const { return endpoint_; }

    // One prompt in, one completion out; retries transient failures with
    // exponential backoff plus jitter. Throws RequestFailed when retries are
    // exhausted, or immediately on a non-retriable client error.
    ChatResult complete(const std::string& prompt, Rng& jitter_rng,
                        const std::atomic<bool>* cancel = nullptr) const {
        Json body{{"model", endpoint_.model_tag},
                  {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", endpoint_.sampling.temperature},
                  {"top_p", endpoint_.sampling.top_p},
                  {"max_tokens", endpoint_.sampling.max_new_tokens},
                  {"stream", false}};
        if (endpoint_.sampling.top_k > 0) body["top_k"] = endpoint_.sampling.top_k;
        for (const auto& [k, v] : endpoint_.extra_request_fields) body[k] = v;
        const std::string payload = body.dump();

        std::string last_error;
        const auto start = std::chrono::steady_clock::now();
        for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
            if (cancel && cancel->load()) throw RequestFailed("cancelled");
            if (attempt > 0) {
                long delay = static_cast<long>(endpoint_.backoff_base_ms) * (1L << (attempt - 1));
                delay += static_cast<long>(jitter_rng.unit() * static_cast<double>(delay));
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }
            auto outcome = attempt_once(payload);
            if (outcome.ok) {
                outcome.result.retries = attempt;
                outcome.result.latency_ms = static_cast<long>(
                    std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count());
                return outcome.result;
            }
            last_error = outcome.error;
            if (!outcome.retriable)
                throw RequestFailed(endpoint_.base_url + ": " + last_error);
        }
        throw RequestFailed(endpoint_.base_url + ": " + last_error + " (after " +
                            std::to_string(endpoint_.max_retries) + " retries)");
    }

private:
    struct Attempt {
        bool ok = false;
        bool retriable = true;
        std::string error;
        ChatResult result;
    };

    Attempt attempt_once(const std::string& payload) const {
        // One client per request: httplib clients are not thread-safe and the
        // runner fans requests out across a pool.
        httplib::Client client(url_.host_origin);
        client.set_connection_timeout(std::chrono::milliseconds(
            static_cast<long>(endpoint_.request_timeout_s * 1000)));
        client.set_read_timeout(std::chrono::milliseconds(
            static_cast<long>(endpoint_.request_timeout_s * 1000)));
        httplib::Headers headers;
        if (auto token = endpoint_.auth_token())
            headers.emplace("Authorization", "Bearer " + *token);

        auto res = client.Post((url_.path_prefix + "/chat/completions").c_str(), headers,
                               payload, "application/json");
        Attempt out;
        if (!res) {
            out.error = "transport error: " + httplib::to_string(res.error());
            return out;
        }
        if (res->status == 429 || res->status >= 500) {
            out.error = "HTTP " + std::to_string(res->status);
            return out;
        }
        if (res->status != 200) {
            out.retriable = false;
            out.error = "HTTP " + std::to_string(res->status) + ": " + res->body;
            return out;
        }
        Json reply = Json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
            out.error = "malformed completion payload";
            return out;
        }
        const Json& choice = reply["choices"][0];
        out.ok = true;
        out.result.text = choice.contains("message")
                              ? choice["message"].value("content", "")
                              : choice.value("text", "");
        out.result.finish_reason = choice.value("finish_reason", "stop");
        if (reply.contains("usage") && reply["usage"].contains("completion_tokens"))
            out.result.completion_tokens =
                reply["usage"]["completion_tokens"].get<std::size_t>();
        return out;
    }

    ModelEndpoint endpoint_;
    UrlParts url_;
};

}  // namespace chainbench
