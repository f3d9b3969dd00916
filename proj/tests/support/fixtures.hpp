// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ca/llm_gateway.hpp"
#include "ca/schema_knowledge.hpp"

namespace ca::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Creates (or extends) a database file by running a SQL script.
void exec_script(const std::filesystem::path& db, const std::string& script);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// customer / "order" / sales, with a declared customer_id edge.
void create_shop_db(const std::filesystem::path& db);
/// schools / frpm in the shape of the BIRD california_schools database.
void create_schools_db(const std::filesystem::path& db);

/// Chat client answering through a function; throws TransportError
/// (permanent) when the function returns nullopt.
class FunctionChatClient : public ChatClient {
public:
    using Fn = std::function<std::optional<std::string>(const ChatRequest&)>;
    explicit FunctionChatClient(Fn fn) : fn_(std::move(fn)) {}
    ChatResponse complete(const ChatRequest& request) override;

private:
    Fn fn_;
};

/// Gateway whose retry sleeps are no-ops.
std::shared_ptr<LlmGateway> make_gateway(std::shared_ptr<ChatClient> client);

/// The scripted model behind the end-to-end fixture: column semantics
/// (including the DOC glossary), routing confidences, and a SQL generator
/// that writes the correct ratio query only when the prompt spells out the
/// DOC codes.
std::shared_ptr<ChatClient> scripted_model();

struct E2eFixture {
    std::filesystem::path root;  // BIRD layout: dev.json + dev_databases/<db>/<db>.sqlite
    std::filesystem::path fewshot;  // library file built from train pairs
    std::vector<nlohmann::json> records;
};

/// Ten questions over california_schools and shop.
E2eFixture write_e2e_fixture(const std::filesystem::path& dir);

/// Small hand-built knowledge object (no database behind it).
SchemaKnowledge toy_knowledge();

} // namespace ca::testing
