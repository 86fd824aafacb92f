#pragma once

// Batch inference: k samples per prompt through a bounded worker pool, every
// completion journaled as it lands so an interrupted run resumes without
// re-querying anything already answered.

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "chainbench/http_client.hpp"
#include "chainbench/tokenizer.hpp"
#include "chainbench/transcript.hpp"

namespace chainbench {

struct PromptRow {
    std::string id;  // composed problem id
    std::string prompt;
};

inline std::vector<PromptRow> load_prompts(const std::string& path) {
    std::vector<PromptRow> rows;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        rows.push_back({j.at("id").get<std::string>(), j.at("prompt").get<std::string>()});
    });
    return rows;
}

// Append-only record of completed samples, keyed by (composed_id, sample_index).
class Journal {
public:
    Journal() = default;

    explicit Journal(const std::string& path) : path_(path) {
        if (file_exists(path)) {
            for_each_jsonl(path, [&](const Json& row, std::size_t) {
                Transcript t = transcript_from_json(row);
                entries_[{t.composed_id, t.sample_index}] = std::move(t);
            });
        }
        out_ = std::make_unique<JsonlWriter>(path, /*append=*/true);
    }

    bool has(const std::string& composed_id, int sample_index) const {
        std::lock_guard<std::mutex> lock(mu_);
        return entries_.count({composed_id, sample_index}) > 0;
    }

    void append(const Transcript& t) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(t.composed_id, t.sample_index);
        if (entries_.count(key)) return;
        entries_[key] = t;
        if (out_) {
            out_->write(transcript_to_json(t));
            out_->flush();
        }
    }

    std::optional<Transcript> get(const std::string& composed_id, int sample_index) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find({composed_id, sample_index});
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return entries_.size();
    }

private:
    std::map<std::pair<std::string, int>, Transcript> entries_;
    std::unique_ptr<JsonlWriter> out_;
    std::string path_;
    mutable std::mutex mu_;
};

struct BatchOptions {
    int k = 1;
    int concurrency = 1;
    const Tokenizer* token_fallback = nullptr;  // when usage is absent
    std::atomic<bool>* cancel = nullptr;        // cooperative stop; resume later
};

// Runs every missing (prompt, sample) pair. Exactly k transcripts per prompt:
// samples that still fail after retries are recorded with finish_reason =
// error, so the count is conserved under faults. Output is sorted by
// (composed_id, sample_index) regardless of completion order. Returns partial
// results when cancelled. Throws EndpointUnreachable when every sample of a
// fresh run errored.
inline std::vector<Transcript> run_batch(const std::vector<PromptRow>& prompts,
                                         const ModelEndpoint& endpoint, Journal& journal,
                                         const BatchOptions& opts) {
    if (opts.k < 1) throw std::invalid_argument("run_batch: k must be >= 1");
    if (opts.concurrency < 1)
        throw std::invalid_argument("run_batch: concurrency must be >= 1");

    ChatClient client(endpoint);
    ApproxTokenizer approx_fallback;
    const Tokenizer& fallback =
        opts.token_fallback ? *opts.token_fallback : approx_fallback;

    struct Task {
        const PromptRow* prompt;
        int sample_index;
    };
    std::vector<Task> todo;
    for (const PromptRow& p : prompts)
        for (int s = 0; s < opts.k; ++s)
            if (!journal.has(p.id, s)) todo.push_back({&p, s});

    std::atomic<std::size_t> cursor{0};
    std::atomic<std::size_t> fresh_errors{0};
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(opts.concurrency), todo.size());
    auto worker = [&](std::size_t worker_id) {
        Rng jitter(0x9e3779b9u + worker_id);
        while (true) {
            if (opts.cancel && opts.cancel->load()) return;
            std::size_t i = cursor.fetch_add(1);
            if (i >= todo.size()) return;
            const Task& task = todo[i];
            Transcript t;
            t.composed_id = task.prompt->id;
            t.sample_index = task.sample_index;
            t.model = endpoint.model_tag;
            try {
                ChatResult res = client.complete(task.prompt->prompt, jitter, opts.cancel);
                t.raw_text = res.text;
                t.token_count = res.completion_tokens ? *res.completion_tokens
                                                      : fallback.count(res.text);
                t.latency_ms = res.latency_ms;
                t.retries = res.retries;
                t.finish_reason = res.finish_reason == "length"
                                      ? FinishReason::kLength
                                      : FinishReason::kStop;
                if (t.token_count >=
                    static_cast<std::size_t>(endpoint.sampling.max_new_tokens))
                    t.finish_reason = FinishReason::kLength;
            } catch (const RequestFailed&) {
                if (opts.cancel && opts.cancel->load()) return;  // not an outcome
                t.raw_text = "";
                t.token_count = 0;
                t.finish_reason = FinishReason::kError;
                t.retries = endpoint.max_retries;
                ++fresh_errors;
            }
            journal.append(t);
        }
    };
    if (workers <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }

    if (!todo.empty() && fresh_errors.load() == todo.size())
        throw EndpointUnreachable(endpoint.base_url + ": every sample failed");

    std::vector<Transcript> out;
    bool complete = true;
    for (const PromptRow& p : prompts) {
        for (int s = 0; s < opts.k; ++s) {
            auto t = journal.get(p.id, s);
            if (t) out.push_back(std::move(*t));
            else complete = false;
        }
    }
    (void)complete;  // cancelled runs legitimately return fewer rows
    std::sort(out.begin(), out.end(), [](const Transcript& a, const Transcript& b) {
        return a.composed_id != b.composed_id ? a.composed_id < b.composed_id
                                              : a.sample_index < b.sample_index;
    });
    return out;
}

// avg@k: arithmetic mean over per-sample 0/1 scores.
inline double avg_at_k(const std::vector<int>& per_sample_scores) {
    if (per_sample_scores.empty())
        throw std::invalid_argument("avg_at_k: empty score list");
    long long sum = 0;
    for (int s : per_sample_scores) sum += s;
    return static_cast<double>(sum) / static_cast<double>(per_sample_scores.size());
}

}  // namespace chainbench
