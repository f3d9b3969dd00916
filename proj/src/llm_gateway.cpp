// SPDX-License-Identifier: Apache-2.0
#include "ca/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "ca/error.hpp"
#include "ca/text.hpp"

namespace ca {

using json = nlohmann::json;

void ChatRequest::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw InvariantError("temperature outside [0, 2]");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw InvariantError("top_p outside (0, 1]");
    if (max_tokens < 1) throw InvariantError("max_tokens must be >= 1");
}

std::string ChatRequest::fingerprint() const {
    std::uint64_t h = fnv1a64(system_prompt);
    h = fnv1a64(std::string_view("\0", 1), h);
    h = fnv1a64(user_prompt, h);
    return hex64(h);
}

MockChatClient MockChatClient::from_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError(path);
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::map<std::string, std::string> script;
    try {
        const auto j = json::parse(buf.str());
        if (!j.is_object()) throw FormatError(path, "mock script must be a JSON object");
        for (const auto& [k, v] : j.items()) script[k] = v.get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(path, std::string("malformed mock script: ") + e.what());
    }
    return MockChatClient(std::move(script));
}

void MockChatClient::add(const std::string& fingerprint, std::string text) {
    script_[fingerprint] = std::move(text);
}

void MockChatClient::add(const std::string& system_prompt, const std::string& user_prompt, std::string text) {
    ChatRequest r;
    r.system_prompt = system_prompt;
    r.user_prompt = user_prompt;
    add(r.fingerprint(), std::move(text));
}

ChatResponse MockChatClient::complete(const ChatRequest& request) {
    const auto fp = request.fingerprint();
    auto it = script_.find(fp);
    if (it == script_.end()) throw MissingScriptError(fp);
    return ChatResponse{it->second, std::nullopt, std::chrono::milliseconds(0)};
}

void save_mock_script(const std::map<std::string, std::string>& script, const std::filesystem::path& path) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : script) j[k] = v;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError(path, "cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out) throw PersistenceError(path, "write failed");
}

ChatResponse RecordingChatClient::complete(const ChatRequest& request) {
    auto response = inner_->complete(request);
    std::lock_guard lock(mu_);
    recorded_[request.fingerprint()] = response.text;
    return response;
}

std::map<std::string, std::string> RecordingChatClient::recorded() const {
    std::lock_guard lock(mu_);
    return recorded_;
}

void RecordingChatClient::save(const std::filesystem::path& path) const {
    save_mock_script(recorded(), path);
}

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {
    auto url = config_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvariantError("base URL needs a scheme: " + config_.base_url);
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
    request.validate();
    json body;
    body["model"] = request.model_id;
    body["messages"] = json::array({{{"role", "system"}, {"content", request.system_prompt}},
                                    {{"role", "user"}, {"content", request.user_prompt}}});
    body["temperature"] = request.temperature;
    body["top_p"] = request.top_p;
    body["max_tokens"] = request.max_tokens;

    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (!res) throw TransportError("chat request failed: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500) {
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status), true);
    }
    if (res->status != 200) {
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body, false);
    }
    try {
        const auto j = json::parse(res->body);
        ChatResponse out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        out.latency = latency;
        if (j.contains("usage") && j["usage"].is_object()) {
            const auto& u = j["usage"];
            out.usage = TokenUsage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0),
                                   u.value("total_tokens", 0)};
        }
        return out;
    } catch (const json::exception& e) {
        throw TransportError(std::string("unparseable chat response: ") + e.what(), false);
    }
}

LlmGateway::LlmGateway(std::shared_ptr<ChatClient> client, GatewayOptions options)
    : client_(std::move(client)), options_(std::move(options)) {
    if (!client_) throw InvariantError("gateway needs a chat client");
    if (options_.max_in_flight == 0) options_.max_in_flight = 1;
    if (!options_.retry.sleep) options_.retry.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ChatRequest LlmGateway::make_request(std::string system_prompt, std::string user_prompt) const {
    ChatRequest r;
    r.system_prompt = std::move(system_prompt);
    r.user_prompt = std::move(user_prompt);
    r.model_id = options_.model_id;
    return r;
}

ChatResponse LlmGateway::chat(const ChatRequest& request) {
    request.validate();
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        LlmGateway* g;
        ~Release() {
            {
                std::lock_guard lock(g->mu_);
                --g->in_flight_;
            }
            g->cv_.notify_one();
        }
    } release{this};

    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return client_->complete(request);
        } catch (const TransportError& e) {
            if (!e.transient() || attempt >= options_.retry.backoff.size()) {
                throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) + " attempts)",
                                     e.transient());
            }
            options_.retry.sleep(options_.retry.backoff[attempt]);
        }
    }
}

std::string LlmGateway::complete(std::string system_prompt, std::string user_prompt) {
    return chat(make_request(std::move(system_prompt), std::move(user_prompt))).text;
}

std::optional<json> extract_fenced_json(const std::string& text) {
    std::size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string::npos) {
        auto body_start = text.find('\n', pos + 3);
        if (body_start == std::string::npos) break;
        const auto lang = trim(text.substr(pos + 3, body_start - pos - 3));
        const auto close = text.find("```", body_start + 1);
        if (close == std::string::npos) break;
        if (lang.empty() || to_lower(lang) == "json") {
            try {
                auto j = json::parse(text.substr(body_start + 1, close - body_start - 1));
                if (j.is_object()) return j;
            } catch (const json::exception&) {
            }
        }
        pos = close + 3;
    }
    try {
        auto j = json::parse(trim(text));
        if (j.is_object()) return j;
    } catch (const json::exception&) {
    }
    return std::nullopt;
}

std::shared_ptr<ChatClient> http_client_from_environment() {
    const char* base = std::getenv("CA_LLM_BASE_URL");
    if (!base || !*base) return nullptr;
    HttpChatConfig cfg;
    cfg.base_url = base;
    if (const char* key = std::getenv("CA_LLM_API_KEY")) cfg.api_key = key;
    return std::make_shared<HttpChatClient>(std::move(cfg));
}

std::shared_ptr<LlmGateway> gateway_from_environment() {
    auto client = http_client_from_environment();
    if (!client) return nullptr;
    GatewayOptions opts;
    if (const char* model = std::getenv("CA_LLM_MODEL")) opts.model_id = model;
    return std::make_shared<LlmGateway>(std::move(client), std::move(opts));
}

} // namespace ca
