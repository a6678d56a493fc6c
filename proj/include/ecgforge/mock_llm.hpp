#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace ecgforge {

/// Deterministic in-process chat-completion endpoint for tests and offline
/// pipeline runs. Guider prompts get a `**Response:** ...` interpretation
/// derived from the prompt hash; judge prompts get a fixed valid scorecard.
/// A scripted status sequence can simulate 429/5xx failures.
class MockLlmServer {
public:
    MockLlmServer();
    ~MockLlmServer();

    /// Binds 127.0.0.1 on a free port and serves on a background thread.
    void start();
    void stop();

    std::string base_url() const;  // http://127.0.0.1:<port>
    int port() const { return port_; }
    long hit_count() const { return hits_; }
    int max_concurrent_seen() const { return max_in_flight_; }

    /// HTTP statuses to emit before answering normally (one per request).
    void script_statuses(std::vector<int> statuses);

    static std::string response_for(const std::string& prompt);

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<long> hits_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::vector<int> scripted_;
    std::mutex script_mutex_;
};

}  // namespace ecgforge
