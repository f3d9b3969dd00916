// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ca {

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.2;
    double top_p = 0.9;
    int max_tokens = 1024;
    std::string model_id;

    /// Throws InvariantError when a decoding parameter is out of range.
    void validate() const;

    /// Stable request key: FNV-1a 64 over the UTF-8 system prompt, a NUL
    /// separator, and the user prompt, as 16 hex digits.
    std::string fingerprint() const;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
    int total_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::optional<TokenUsage> usage;
    std::chrono::milliseconds latency{0};
};

/// Transport behind the gateway. Implementations throw TransportError with
/// the transient flag set for timeouts, 5xx and 429.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Scripted replies keyed by request fingerprint. Unknown fingerprints raise
/// MissingScriptError; there is no default reply.
class MockChatClient : public ChatClient {
public:
    MockChatClient() = default;
    explicit MockChatClient(std::map<std::string, std::string> script) : script_(std::move(script)) {}

    static MockChatClient from_file(const std::filesystem::path& path);

    void add(const std::string& fingerprint, std::string text);
    void add(const std::string& system_prompt, const std::string& user_prompt, std::string text);

    ChatResponse complete(const ChatRequest& request) override;

    const std::map<std::string, std::string>& script() const noexcept { return script_; }

private:
    std::map<std::string, std::string> script_;
};

void save_mock_script(const std::map<std::string, std::string>& script, const std::filesystem::path& path);

/// Wraps another client and captures fingerprint -> reply pairs so a live run
/// can later be replayed through MockChatClient.
class RecordingChatClient : public ChatClient {
public:
    explicit RecordingChatClient(std::shared_ptr<ChatClient> inner) : inner_(std::move(inner)) {}

    ChatResponse complete(const ChatRequest& request) override;

    std::map<std::string, std::string> recorded() const;
    void save(const std::filesystem::path& path) const;

private:
    std::shared_ptr<ChatClient> inner_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> recorded_;
};

struct HttpChatConfig {
    std::string base_url;  // e.g. https://api.example.com/v1
    std::string api_key;
    std::chrono::seconds timeout{60};
};

/// OpenAI-style POST {base_url}/chat/completions.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpChatConfig config);
    ChatResponse complete(const ChatRequest& request) override;

private:
    HttpChatConfig config_;
    std::string origin_;
    std::string path_prefix_;
};

struct RetryPolicy {
    std::vector<std::chrono::milliseconds> backoff{std::chrono::seconds(1), std::chrono::seconds(2),
                                                   std::chrono::seconds(4)};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct GatewayOptions {
    std::string model_id;
    std::size_t max_in_flight = 4;
    RetryPolicy retry;
};

/// The one place the pipeline talks to a language model: fixed decoding
/// defaults, bounded concurrency, retries on transient transport failures.
class LlmGateway {
public:
    explicit LlmGateway(std::shared_ptr<ChatClient> client, GatewayOptions options = {});

    /// Request with the default decoding parameters and configured model.
    ChatRequest make_request(std::string system_prompt, std::string user_prompt) const;

    ChatResponse chat(const ChatRequest& request);
    std::string complete(std::string system_prompt, std::string user_prompt);

    std::size_t max_in_flight() const noexcept { return options_.max_in_flight; }

private:
    std::shared_ptr<ChatClient> client_;
    GatewayOptions options_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t in_flight_ = 0;
};

/// First ```json fenced block (or ``` block) holding a JSON object; a reply
/// that is itself a bare JSON object is accepted too.
std::optional<nlohmann::json> extract_fenced_json(const std::string& text);

/// HTTP client for CA_LLM_BASE_URL / CA_LLM_API_KEY, or nullptr when no
/// base URL is set.
std::shared_ptr<ChatClient> http_client_from_environment();

/// Gateway configured from CA_LLM_BASE_URL / CA_LLM_API_KEY / CA_LLM_MODEL,
/// or nullptr when no base URL is set.
std::shared_ptr<LlmGateway> gateway_from_environment();

} // namespace ca
