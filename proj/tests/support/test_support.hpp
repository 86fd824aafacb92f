#pragma once

// Shared test plumbing: scratch directories, fixture paths, and an in-process
// OpenAI-style chat endpoint with hooks for fault injection and concurrency
// probing.

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "httplib.h"

#include "chainbench/http_client.hpp"
#include "chainbench/jsonl.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
    return std::string(CHAINBENCH_SOURCE_DIR) + "/tests/fixtures/" + name;
}

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        path_ = base / ("chainbench_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

// Reply decided per request; the default echoes the prompt id-ish content.
struct MockReply {
    int status = 200;
    std::string content = "ok";
    std::string finish_reason = "stop";
    long completion_tokens = -1;  // <0: omit the usage block
    int delay_ms = 0;
};

class MockChatServer {
public:
    using Responder = std::function<MockReply(const std::string& prompt, std::size_t request_no)>;

    explicit MockChatServer(Responder responder)
        : responder_(std::move(responder)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            const std::size_t current = ++in_flight_;
            std::size_t seen = max_in_flight_.load();
            while (current > seen && !max_in_flight_.compare_exchange_weak(seen, current)) {
            }
            const std::size_t request_no = requests_.fetch_add(1);

            std::string prompt;
            auto body = chainbench::Json::parse(req.body, nullptr, false);
            if (!body.is_discarded() && body.contains("messages") &&
                !body["messages"].empty())
                prompt = body["messages"].back().value("content", "");

            MockReply reply = responder_(prompt, request_no);
            if (reply.delay_ms > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(reply.delay_ms));
            if (reply.status != 200) {
                res.status = reply.status;
                res.set_content("injected failure", "text/plain");
            } else {
                chainbench::Json out{
                    {"choices",
                     chainbench::Json::array(
                         {chainbench::Json{{"message", {{"role", "assistant"},
                                                        {"content", reply.content}}},
                                           {"finish_reason", reply.finish_reason}}})}};
                if (reply.completion_tokens >= 0)
                    out["usage"] = {{"completion_tokens", reply.completion_tokens}};
                res.set_content(out.dump(), "application/json");
            }
            --in_flight_;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    }

    std::size_t requests() const { return requests_.load(); }
    std::size_t max_in_flight() const { return max_in_flight_.load(); }

private:
    httplib::Server server_;
    Responder responder_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> max_in_flight_{0};
};

inline chainbench::ModelEndpoint mock_endpoint(const MockChatServer& server,
                                               int max_retries = 3) {
    chainbench::ModelEndpoint ep;
    ep.base_url = server.base_url();
    ep.model_tag = "mock-model";
    ep.sampling.max_new_tokens = 1 << 20;
    ep.max_retries = max_retries;
    ep.backoff_base_ms = 1;  // keep test retries fast
    ep.request_timeout_s = 10;
    return ep;
}

}  // namespace testsupport
