// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "ca/bench.hpp"
#include "support/fixtures.hpp"

namespace ca {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using testing::TempDir;

struct Invocation {
    int code = -1;
    std::string out;
};

// Runs the CLI with no live model configured; stdout is captured, stderr
// goes to a side file.
Invocation ca_cli(const TempDir& dir, const std::string& args, const std::string& env = "") {
    const auto out = dir / "stdout.txt";
    const std::string cmd = "env -u CA_LLM_BASE_URL -u CA_LLM_API_KEY " + env + " '" + std::string(CA_CLI_PATH) +
                            "' " + args + " > '" + out.string() + "' 2> '" + (dir / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    Invocation inv;
    inv.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    inv.out = fs::exists(out) ? testing::read_file(out) : "";
    return inv;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, UsageErrorsExitOne) {
    TempDir dir;
    EXPECT_EQ(ca_cli(dir, "").code, 1);
    EXPECT_EQ(ca_cli(dir, "route").code, 1);
    EXPECT_EQ(ca_cli(dir, "route q --knowledge x --tau 2").code, 1);
    EXPECT_EQ(ca_cli(dir, "--help").code, 0);
}

TEST(Cli, DataErrorsExitTwo) {
    TempDir dir;
    EXPECT_EQ(ca_cli(dir, "mine " + q(dir / "absent.sqlite") + " --out " + q(dir.path())).code, 2);
    testing::write_file(dir / "bad.knowledge.json", "{");
    EXPECT_EQ(ca_cli(dir, "route q --knowledge " + q(dir / "bad.knowledge.json")).code, 2);
}

TEST(Cli, MineIsByteStableUnderFixedEpoch) {
    TempDir dir;
    testing::create_shop_db(dir / "shop.sqlite");
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    const std::string env = "SOURCE_DATE_EPOCH=1700000000";
    ASSERT_EQ(ca_cli(dir, "mine " + q(dir / "shop.sqlite") + " --out " + q(dir / "a"), env).code, 0);
    ASSERT_EQ(ca_cli(dir, "mine " + q(dir / "shop.sqlite") + " --out " + q(dir / "b"), env).code, 0);
    const auto a = testing::read_file(dir / "a" / "shop.knowledge.json");
    EXPECT_EQ(a, testing::read_file(dir / "b" / "shop.knowledge.json"));
    EXPECT_NE(a.find("\"created_at\": \"2023-11-14T22:13:20Z\""), std::string::npos);
}

TEST(Cli, RouteEvidenceAndConfigFile) {
    TempDir dir;
    testing::create_shop_db(dir / "shop.sqlite");
    ASSERT_EQ(ca_cli(dir, "mine " + q(dir / "shop.sqlite") + " --out " + q(dir.path())).code, 0);
    const auto knowledge = q(dir / "shop.knowledge.json");

    auto r = ca_cli(dir, "route 'average age of customers' --knowledge " + knowledge);
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    EXPECT_EQ(j["source"], "heuristic");
    EXPECT_NE(std::find(j["labels"].begin(), j["labels"].end(), "NumericReasoning"), j["labels"].end());

    // A threshold above every score only comes from the config file here; the flag wins when given.
    testing::write_file(dir / "ca.toml", "[route]\ntau = 1.0\n");
    r = ca_cli(dir, "--config " + q(dir / "ca.toml") + " route 'average age of customers' --knowledge " + knowledge);
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["threshold"], 1.0);
    r = ca_cli(dir, "--config " + q(dir / "ca.toml") + " route 'average age' --knowledge " + knowledge + " --tau 0.5");
    EXPECT_EQ(json::parse(r.out)["threshold"], 0.5);

    r = ca_cli(dir, "evidence 'What is the average age of customers?' --knowledge " + knowledge);
    ASSERT_EQ(r.code, 0);
    j = json::parse(r.out);
    EXPECT_EQ(j["question"], "What is the average age of customers?");
    ASSERT_FALSE(j["items"].empty());
    EXPECT_EQ(j["items"][0]["kind"], "NumericTemplate");

    r = ca_cli(dir, "evidence 'What is the average age of customers?' --prompt --knowledge " + knowledge);
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("Evidence:\n"), std::string::npos);
}

TEST(Cli, EvalExitCodesAndReport) {
    TempDir dir;
    const auto fx = testing::write_e2e_fixture(dir / "fx");
    const auto ds = load_bird(fx.root);
    Predictions gold;
    for (const auto& e : ds.examples) gold[e.question_id] = e.gold_sql;
    testing::write_file(dir / "gold.json", predictions_to_json(gold).dump());
    auto r = ca_cli(dir, "eval --predictions " + q(dir / "gold.json") + " --bird " + q(fx.root) + " --out " +
                             q(dir / "result.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("100.00"), std::string::npos);

    auto partial = gold;
    partial.begin()->second = std::nullopt;
    testing::write_file(dir / "partial.json", predictions_to_json(partial).dump());
    EXPECT_EQ(ca_cli(dir, "eval --predictions " + q(dir / "partial.json") + " --bird " + q(fx.root)).code, 3);

    r = ca_cli(dir, "report --result " + q(dir / "result.json") + " --format csv");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "metric,simple,moderate,challenging,total");
}

TEST(Cli, RunWithoutModelIsAUsageError) {
    TempDir dir;
    const auto fx = testing::write_e2e_fixture(dir / "fx");
    EXPECT_EQ(ca_cli(dir, "run --bird " + q(fx.root) + " --mode ca --out " + q(dir / "out")).code, 1);
}

} // namespace
} // namespace ca
