#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ecgforge/features.hpp"
#include "ecgforge/record.hpp"

namespace ecgforge {

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::string content;
};

struct ChatRequest {
    std::string model_name;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;

    void validate() const;
    /// Canonical JSON body; the SHA-256 of these bytes is the cache key.
    std::string canonical_json() const;
    std::string prompt_hash() const;
};

struct EndpointConfig {
    std::string base_url;      // e.g. http://127.0.0.1:8089/v1
    std::string api_key;
    std::filesystem::path cache_dir;  // empty disables caching
    int max_attempts = 5;
    double backoff_base_s = 1.0;
    double backoff_factor = 2.0;
    int read_timeout_s = 120;

    /// FORGE_API_BASE / FORGE_API_KEY, overridable field by field.
    static EndpointConfig from_environment();
};

std::string sha256_hex(const std::string& bytes);

/// Chat-completion call with exponential-backoff retries on transport
/// errors, 429 and 5xx, and a content-addressed on-disk response cache
/// (`cache/<first2>/<hash>.json`). Thread-safe.
class LlmClient {
public:
    explicit LlmClient(EndpointConfig config);

    std::string complete_chat(const ChatRequest& request);

    /// HTTP attempts actually made (cache misses, including retries).
    long network_calls() const { return network_calls_; }

private:
    std::optional<std::string> cache_lookup(const std::string& hash);
    void cache_store(const std::string& hash, const ChatRequest& request,
                     const std::string& content);

    EndpointConfig config_;
    std::mutex cache_mutex_;
    std::atomic<long> network_calls_{0};
};

struct InstructionPair {
    std::string record_id;
    std::string image_path;
    std::string question;
    std::string answer;
    std::string model_name;
    std::string prompt_hash;
    std::string timestamp;  // provenance only; excluded from equality

    bool operator==(const InstructionPair& other) const {
        return record_id == other.record_id && image_path == other.image_path &&
               question == other.question && answer == other.answer &&
               model_name == other.model_name && prompt_hash == other.prompt_hash;
    }
};

/// Fixed interpretation-request bank; picked per record by seeded RNG.
const std::vector<std::string>& question_bank();
std::string pick_question(const std::string& record_id, std::uint64_t seed);

struct GenerationOptions {
    std::string model_name = "gpt-4o";
    double temperature = 0.7;
    int max_tokens = 1024;
    std::uint64_t seed = 0;
    size_t max_beats = 0;
};

/// Builds the guider prompt, calls the model, and extracts the text after
/// the `**Response:**` marker. A missing marker raises FormatViolation.
InstructionPair generate_instruction_pair(const EcgRecord& record,
                                          const FeatureSequences& features,
                                          const std::string& image_path,
                                          LlmClient& client,
                                          const GenerationOptions& options);

std::string strip_response_marker(const std::string& content);

/// Conversation-JSONL writer/reader. One object per line:
/// {"id", "image", "conversations": [{"from": "human", ...}, {"from": "gpt", ...}]}.
void write_dataset(const std::vector<InstructionPair>& pairs,
                   const std::filesystem::path& out_path);
std::vector<InstructionPair> read_dataset(const std::filesystem::path& path);

}  // namespace ecgforge
