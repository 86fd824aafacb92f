#pragma once

#include <string>

#include "chainbench/jsonl.hpp"

namespace chainbench {

enum class FinishReason { kStop, kLength, kError };

inline std::string finish_reason_name(FinishReason r) {
    switch (r) {
        case FinishReason::kStop: return "stop";
        case FinishReason::kLength: return "length";
        case FinishReason::kError: return "error";
    }
    return "error";
}

inline FinishReason finish_reason_from_name(const std::string& s) {
    if (s == "stop") return FinishReason::kStop;
    if (s == "length") return FinishReason::kLength;
    return FinishReason::kError;
}

// One raw model response for one composed prompt sample.
struct Transcript {
    std::string composed_id;
    int sample_index = 0;
    std::string raw_text;
    std::size_t token_count = 0;  // response tokens
    FinishReason finish_reason = FinishReason::kStop;
    long latency_ms = 0;
    int retries = 0;
    std::string model;
};

inline Json transcript_to_json(const Transcript& t) {
    return Json{{"composed_id", t.composed_id},
                {"sample_index", t.sample_index},
                {"raw_text", t.raw_text},
                {"token_count", t.token_count},
                {"finish_reason", finish_reason_name(t.finish_reason)},
                {"latency_ms", t.latency_ms},
                {"retries", t.retries},
                {"model", t.model}};
}

inline Transcript transcript_from_json(const Json& j) {
    Transcript t;
    t.composed_id = j.at("composed_id").get<std::string>();
    t.sample_index = j.at("sample_index").get<int>();
    t.raw_text = j.at("raw_text").get<std::string>();
    t.token_count = j.at("token_count").get<std::size_t>();
    t.finish_reason = finish_reason_from_name(j.at("finish_reason").get<std::string>());
    t.latency_ms = j.value("latency_ms", 0L);
    t.retries = j.value("retries", 0);
    t.model = j.value("model", "");
    return t;
}

inline std::vector<Transcript> load_transcripts(const std::string& path) {
    std::vector<Transcript> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        out.push_back(transcript_from_json(j));
    });
    return out;
}

}  // namespace chainbench
