#include "ecgforge/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "ecgforge/guider.hpp"

namespace ecgforge {

void ChatRequest::validate() const {
    if (model_name.empty()) throw InvalidArgument("model_name must be set");
    bool has_user = false;
    for (const auto& m : messages) {
        if (m.role != "system" && m.role != "user") {
            throw InvalidArgument("message role must be system or user, got '" + m.role + "'");
        }
        if (m.role == "user") has_user = true;
    }
    if (!has_user) throw InvalidArgument("request needs at least one user message");
    if (temperature < 0.0 || temperature > 2.0) {
        throw InvalidArgument("temperature must be in [0, 2]");
    }
    if (max_tokens <= 0) throw InvalidArgument("max_tokens must be positive");
}

std::string ChatRequest::canonical_json() const {
    nlohmann::ordered_json j;
    j["model"] = model_name;
    j["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    return j.dump();
}

std::string ChatRequest::prompt_hash() const { return sha256_hex(canonical_json()); }

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

EndpointConfig EndpointConfig::from_environment() {
    EndpointConfig cfg;
    if (const char* base = std::getenv("FORGE_API_BASE")) cfg.base_url = base;
    if (const char* key = std::getenv("FORGE_API_KEY")) cfg.api_key = key;
    return cfg;
}

namespace {

// Splits "http://host:1234/v1" into client target and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidArgument("base_url must include a scheme: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

}  // namespace

LlmClient::LlmClient(EndpointConfig config) : config_(std::move(config)) {}

std::optional<std::string> LlmClient::cache_lookup(const std::string& hash) {
    if (config_.cache_dir.empty()) return std::nullopt;
    std::lock_guard<std::mutex> lock(cache_mutex_);
    const auto path = config_.cache_dir / hash.substr(0, 2) / (hash + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        nlohmann::json j;
        in >> j;
        return j.at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;  // corrupt entry, refetch
    }
}

void LlmClient::cache_store(const std::string& hash, const ChatRequest& request,
                            const std::string& content) {
    if (config_.cache_dir.empty()) return;
    std::lock_guard<std::mutex> lock(cache_mutex_);
    const auto dir = config_.cache_dir / hash.substr(0, 2);
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["request"] = nlohmann::json::parse(request.canonical_json());
    j["content"] = content;
    std::ofstream out(dir / (hash + ".json"), std::ios::binary);
    out << j.dump(2) << "\n";
}

std::string LlmClient::complete_chat(const ChatRequest& request) {
    request.validate();
    if (config_.base_url.empty()) {
        throw InvalidArgument("endpoint base URL not configured (FORGE_API_BASE)");
    }
    const std::string hash = request.prompt_hash();
    if (auto cached = cache_lookup(hash)) return *cached;

    const auto [target, prefix] = split_base_url(config_.base_url);
    httplib::Client client(target);
    client.set_read_timeout(config_.read_timeout_s, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    const std::string body = request.canonical_json();
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            const double delay_s =
                config_.backoff_base_s * std::pow(config_.backoff_factor, attempt - 2);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
        }
        ++network_calls_;
        auto res = client.Post(prefix + "/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("unexpected HTTP " + std::to_string(res->status) + ": " +
                                res->body);
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            std::string content =
                j.at("choices").at(0).at("message").at("content").get<std::string>();
            cache_store(hash, request, content);
            return content;
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed response body: ") + e.what());
        }
    }
    throw UpstreamUnavailable("retries exhausted (" + std::to_string(config_.max_attempts) +
                              " attempts): " + last_error);
}

const std::vector<std::string>& question_bank() {
    static const std::vector<std::string> bank = {
        "Please interpret this 12-lead ECG and explain the evidence for your diagnosis.",
        "Analyze this ECG in detail, citing the specific features that support your conclusions.",
        "What does this 12-lead ECG show? Walk through each lead and justify your diagnosis.",
        "Provide a comprehensive interpretation of this ECG, grounding every finding in measurable features.",
        "Review this ECG like a cardiologist would and explain the reasoning behind your diagnosis.",
        "Examine this 12-lead ECG and describe the key abnormalities along with their supporting evidence.",
    };
    return bank;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::string pick_question(const std::string& record_id, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ fnv1a(record_id));
    std::uniform_int_distribution<size_t> dist(0, question_bank().size() - 1);
    return question_bank()[dist(rng)];
}

std::string strip_response_marker(const std::string& content) {
    static const std::string marker = "**Response:**";
    const auto pos = content.find(marker);
    if (pos == std::string::npos) {
        throw FormatViolation("model output lacks the **Response:** marker");
    }
    std::string answer = content.substr(pos + marker.size());
    const auto first = answer.find_first_not_of(" \t\r\n");
    const auto last = answer.find_last_not_of(" \t\r\n");
    if (first == std::string::npos) throw FormatViolation("empty response after marker");
    return answer.substr(first, last - first + 1);
}

InstructionPair generate_instruction_pair(const EcgRecord& record,
                                          const FeatureSequences& features,
                                          const std::string& image_path,
                                          LlmClient& client,
                                          const GenerationOptions& options) {
    if (!record.report_text || record.report_text->empty()) {
        throw MissingReport("record '" + record.record_id + "' has no reference report");
    }
    const std::string measurements = serialize_measurements(features, options.max_beats);
    const GuiderPrompt prompt = build_guider_prompt(*record.report_text, measurements);

    ChatRequest request;
    request.model_name = options.model_name;
    request.messages = {{"user", prompt.rendered}};
    request.temperature = options.temperature;
    request.max_tokens = options.max_tokens;

    const std::string content = client.complete_chat(request);

    InstructionPair pair;
    pair.record_id = record.record_id;
    pair.image_path = image_path;
    pair.question = pick_question(record.record_id, options.seed);
    pair.answer = strip_response_marker(content);
    pair.model_name = options.model_name;
    pair.prompt_hash = request.prompt_hash();
    pair.timestamp = "";  // filled by callers that want wall-clock provenance
    return pair;
}

void write_dataset(const std::vector<InstructionPair>& pairs,
                   const std::filesystem::path& out_path) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path.string());
    for (const auto& pair : pairs) {
        if (pair.answer.empty()) throw InvalidArgument("instruction pair with empty answer");
        nlohmann::ordered_json j;
        j["id"] = pair.record_id;
        j["image"] = pair.image_path;
        j["conversations"] = nlohmann::ordered_json::array();
        j["conversations"].push_back(
            {{"from", "human"}, {"value", "<image>\n" + pair.question}});
        j["conversations"].push_back({{"from", "gpt"}, {"value", pair.answer}});
        j["provenance"] = {{"model_name", pair.model_name},
                           {"prompt_hash", pair.prompt_hash},
                           {"timestamp", pair.timestamp}};
        out << j.dump() << "\n";
    }
}

std::vector<InstructionPair> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<InstructionPair> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        InstructionPair pair;
        pair.record_id = j.at("id").get<std::string>();
        pair.image_path = j.at("image").get<std::string>();
        const auto& conv = j.at("conversations");
        std::string human = conv.at(0).at("value").get<std::string>();
        const std::string image_tag = "<image>\n";
        if (human.rfind(image_tag, 0) == 0) human = human.substr(image_tag.size());
        pair.question = human;
        pair.answer = conv.at(1).at("value").get<std::string>();
        if (j.contains("provenance")) {
            pair.model_name = j["provenance"].value("model_name", "");
            pair.prompt_hash = j["provenance"].value("prompt_hash", "");
            pair.timestamp = j["provenance"].value("timestamp", "");
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace ecgforge
