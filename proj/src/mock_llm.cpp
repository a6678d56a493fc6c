#include "ecgforge/mock_llm.hpp"

#include <mutex>

#include "ecgforge/llm_client.hpp"

// resolv.h (pulled in by httplib) defines a `_res` macro that corrupts
// Eigen's headers, so anything Eigen-bearing must come first.
#include <httplib.h>
#include <json.hpp>

namespace ecgforge {

namespace {

const char* kScorecardJson = R"({
  "DiagnosisAccuracy": [
    {"Score": 2, "Explanation": "Primary diagnosis matches the reference."}
  ],
  "AnalysisCompleteness": [
    {"Score": 1, "Explanation": "Rhythm addressed."},
    {"Score": 1, "Explanation": "Intervals addressed."}
  ],
  "AnalysisRelevance": [
    {"Score": 2, "Explanation": "Findings support the diagnosis."}
  ],
  "LeadAssessmentCoverage": [
    {"Score": 1, "Explanation": "Lead I assessed."},
    {"Score": 1, "Explanation": "Lead II assessed."}
  ],
  "LeadAssessmentAccuracy": [
    {"Score": 2, "Explanation": "Lead II findings match."}
  ],
  "ECGFeatureGrounding": [
    {"Score": 80, "Explanation": "Findings cite concrete features."}
  ],
  "EvidenceBasedReasoning": [
    {"Score": 80, "Explanation": "Stepwise reasoning present."}
  ],
  "ClinicalDiagnosticFidelity": [
    {"Score": 80, "Explanation": "Structured clinical approach."}
  ]
})";

}  // namespace

std::string MockLlmServer::response_for(const std::string& prompt) {
    if (prompt.find("Evaluate the alignment and quality") != std::string::npos) {
        return kScorecardJson;
    }
    const std::string digest = sha256_hex(prompt).substr(0, 16);
    return "**Response:** The tracing shows a regular rhythm with reproducible waveform "
           "morphology across leads; measured intervals fall within the ranges listed in "
           "the computed measurements. Deterministic fixture interpretation " +
           digest + ".";
}

MockLlmServer::MockLlmServer() : server_(std::make_unique<httplib::Server>()) {}

MockLlmServer::~MockLlmServer() { stop(); }

void MockLlmServer::start() {
    server_->Post("/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
        const int current = ++in_flight_;
        int seen = max_in_flight_.load();
        while (current > seen && !max_in_flight_.compare_exchange_weak(seen, current)) {
        }
        {
            std::lock_guard<std::mutex> lock(script_mutex_);
            if (!scripted_.empty()) {
                res.status = scripted_.front();
                scripted_.erase(scripted_.begin());
                --in_flight_;
                return;
            }
        }
        ++hits_;
        std::string prompt;
        try {
            const auto j = nlohmann::json::parse(req.body);
            for (const auto& m : j.at("messages")) {
                if (m.at("role") == "user") prompt = m.at("content").get<std::string>();
            }
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            --in_flight_;
            return;
        }
        nlohmann::json out;
        out["choices"] = {{{"message", {{"role", "assistant"}, {"content", response_for(prompt)}}}}};
        res.set_content(out.dump(), "application/json");
        --in_flight_;
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server failed to bind");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void MockLlmServer::stop() {
    if (server_ && server_->is_running()) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockLlmServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
}

void MockLlmServer::script_statuses(std::vector<int> statuses) {
    std::lock_guard<std::mutex> lock(script_mutex_);
    scripted_ = std::move(statuses);
}

}  // namespace ecgforge
