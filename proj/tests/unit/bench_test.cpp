// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "ca/bench.hpp"
#include "ca/error.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace ca {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using testing::TempDir;

json record(std::int64_t qid, const std::string& db, const std::string& evidence, const std::string& difficulty) {
    return {{"question_id", qid}, {"db_id", db}, {"question", "q" + std::to_string(qid)},
            {"evidence", evidence}, {"SQL", "SELECT 1"}, {"difficulty", difficulty}};
}

fs::path bird_dir(const TempDir& dir, const json& records) {
    const auto root = dir / "bird";
    for (const char* db : {"shop", "california_schools"}) {
        fs::create_directories(root / "dev_databases" / db);
        if (std::string(db) == "shop") testing::create_shop_db(root / "dev_databases" / db / "shop.sqlite");
        else testing::create_schools_db(root / "dev_databases" / db / "california_schools.sqlite");
    }
    testing::write_file(root / "dev.json", records.dump(2));
    return root;
}

TEST(LoadBird, ExamplesAndRegistry) {
    TempDir dir;
    const auto root = bird_dir(dir, json::array({record(1, "shop", "x > 1", "simple"),
                                                 record(2, "california_schools", "", "moderate"),
                                                 record(3, "shop", "", "challenging")}));
    const auto ds = load_bird(root);
    ASSERT_EQ(ds.examples.size(), 3u);
    EXPECT_EQ(ds.databases.size(), 2u);
    EXPECT_EQ(ds.databases.at("shop"), root / "dev_databases" / "shop" / "shop.sqlite");
    EXPECT_EQ(ds.examples[0].gold_evidence, std::optional<std::string>("x > 1"));
    EXPECT_FALSE(ds.examples[1].gold_evidence);
    EXPECT_EQ(ds.examples[2].difficulty, Difficulty::challenging);
    EXPECT_TRUE(ds.rejected.empty());
}

TEST(LoadBird, RejectsUnknownDatabasesAndMalformedRecords) {
    TempDir dir;
    auto root = bird_dir(dir, json::array({record(1, "shop", "", "simple"), record(2, "atlantis", "", "simple")}));
    auto ds = load_bird(root);
    EXPECT_EQ(ds.examples.size(), 1u);
    ASSERT_EQ(ds.rejected.size(), 1u);
    EXPECT_NE(ds.rejected[0].find("atlantis"), std::string::npos);

    auto bad = record(1, "shop", "", "simple");
    bad.erase("difficulty");
    testing::write_file(root / "dev.json", json::array({record(0, "shop", "", "simple"), bad}).dump());
    try {
        load_bird(root);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("record 1 lacks 'difficulty'"), std::string::npos) << e.what();
    }
    testing::write_file(root / "dev.json", json::array({record(0, "shop", "", "trivial")}).dump());
    EXPECT_THROW(load_bird(root), Error);
    fs::remove(root / "dev.json");
    EXPECT_THROW(load_bird(root), MissingFileError);
}

TEST(Missingness, EndpointsAndNesting) {
    const auto none = missingness_mask(10, {0.0, 3});
    EXPECT_EQ(std::count(none.begin(), none.end(), true), 0);
    const auto all = missingness_mask(10, {1.0, 3});
    EXPECT_EQ(std::count(all.begin(), all.end(), true), 10);
    const auto half = missingness_mask(10, {0.5, 3});
    const auto more = missingness_mask(10, {0.7, 3});
    EXPECT_EQ(std::count(half.begin(), half.end(), true), 5);
    for (std::size_t i = 0; i < 10; ++i)
        if (half[i]) EXPECT_TRUE(more[i]);
    EXPECT_THROW((MissingnessSpec{1.5, 0}.validate()), InvariantError);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = rng() % 60;
        const std::uint64_t seed = rng();
        const double a = static_cast<double>(rng() % 101) / 100, b = static_cast<double>(rng() % 101) / 100;
        const auto ma = missingness_mask(n, {std::min(a, b), seed});
        const auto mb = missingness_mask(n, {std::max(a, b), seed});
        for (std::size_t i = 0; i < n; ++i) ASSERT_TRUE(!ma[i] || mb[i]);
        auto order = missingness_order(n, seed);
        std::sort(order.begin(), order.end());
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(order[i], i);
    }
}

TEST(Missingness, RemovesOnlyEvidence) {
    std::vector<BenchExample> ex(4);
    for (std::size_t i = 0; i < 4; ++i) {
        ex[i].question_id = static_cast<std::int64_t>(i);
        ex[i].gold_evidence = "e" + std::to_string(i);
    }
    const auto masked = apply_missingness(ex, {0.5, 9});
    int removed = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(masked[i].question_id, ex[i].question_id);
        removed += !masked[i].gold_evidence;
    }
    EXPECT_EQ(removed, 2);
}

TEST(Execute, RowsErrorsAndTimeout) {
    TempDir dir;
    testing::create_shop_db(dir / "shop.sqlite");
    auto one = execute_sql(dir / "shop.sqlite", "SELECT 1");
    ASSERT_EQ(one.status, ExecStatus::ok);
    ASSERT_EQ(one.rows.size(), 1u);
    EXPECT_EQ(one.rows[0], (Row{Value{std::int64_t{1}}}));
    EXPECT_EQ(execute_sql(dir / "shop.sqlite", "SELEC 1").status, ExecStatus::error);
    EXPECT_EQ(execute_sql(dir / "shop.sqlite", "DELETE FROM customer").status, ExecStatus::error);
    const auto start = std::chrono::steady_clock::now();
    const auto slow = execute_sql(dir / "shop.sqlite",
                                  "SELECT COUNT(*) FROM customer a, customer b, customer c, customer d, customer e, "
                                  "customer f, customer g, customer h, customer i",
                                  std::chrono::milliseconds(300));
    EXPECT_EQ(slow.status, ExecStatus::timeout);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(ResultsEqual, Examples) {
    const Value i1{std::int64_t{1}}, i2{std::int64_t{2}}, i3{std::int64_t{3}}, i4{std::int64_t{4}};
    EXPECT_TRUE(results_equal({{i1, i2}, {i3, i4}}, {{i3, i4}, {i1, i2}}));
    EXPECT_FALSE(results_equal({{i1, i2}}, {{i2, i1}}));
    EXPECT_TRUE(results_equal({{i1}}, {{Value{1.0}}}));
    EXPECT_TRUE(results_equal({{Value{}}}, {{Value{}}}));
    EXPECT_FALSE(results_equal({{Value{std::string("1")}}}, {{i1}}));
    EXPECT_TRUE(results_equal({{i1}, {i1}}, {{i1}}));
    EXPECT_FALSE(results_equal({{i1}}, {}));
    EXPECT_TRUE(results_equal({}, {}));
}

Value random_value(std::mt19937_64& rng) {
    switch (rng() % 6) {
    case 0: return Value{};
    case 1: return Value{static_cast<std::int64_t>(rng() % 4)};
    case 2: return Value{static_cast<double>(rng() % 4)};
    case 3: return Value{static_cast<double>(rng() % 4) + 0.5};
    case 4: return Value{std::string(1, static_cast<char>('a' + rng() % 3))};
    default: return Value{Blob{{static_cast<std::uint8_t>(rng() % 2)}}};
    }
}

TEST(ResultsEqual, AgreesWithBruteForceOracle) {
    std::mt19937_64 rng(5);
    int equal_cases = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t width = 1 + rng() % 3;
        Rows a;
        for (std::size_t r = rng() % 5; r > 0; --r) {
            Row row;
            for (std::size_t c = 0; c < width; ++c) row.push_back(random_value(rng));
            a.push_back(row);
        }
        Rows b = a;
        std::shuffle(b.begin(), b.end(), rng);
        switch (rng() % 4) {
        case 0: break;  // reordering only
        case 1:  // retype integral values
            for (auto& row : b)
                for (auto& v : row)
                    if (auto* d = std::get_if<double>(&v); d && *d == std::floor(*d))
                        v = Value{static_cast<std::int64_t>(*d)};
            break;
        case 2:
            if (!b.empty()) b.push_back(b.front());  // duplicate row
            break;
        default:
            if (!b.empty()) b[rng() % b.size()][rng() % width] = random_value(rng);
        }
        const bool oracle = testing::brute_rows_equal(a, b);
        equal_cases += oracle;
        ASSERT_EQ(results_equal(a, b), oracle) << "trial " << trial;
    }
    EXPECT_GT(equal_cases, 100);
}

TEST(Evaluate, GoldAgainstItselfScoresFullMarks) {
    TempDir dir;
    const auto fx = testing::write_e2e_fixture(dir.path());
    const auto ds = load_bird(fx.root);
    Predictions preds;
    for (const auto& e : ds.examples) preds[e.question_id] = e.gold_sql;
    const auto r = evaluate(preds, ds.examples, ds.databases);
    EXPECT_EQ(format_ex(r.simple), "100.00");
    EXPECT_EQ(format_ex(r.moderate), "100.00");
    EXPECT_EQ(format_ex(r.challenging), "100.00");
    EXPECT_EQ(format_ex(r.total), "100.00");
    EXPECT_EQ(r.total.total, ds.examples.size());
    EXPECT_EQ(evaluate(preds, ds.examples, ds.databases), r);
}

TEST(Evaluate, FailuresCountAgainstTheirStratum) {
    TempDir dir;
    const auto fx = testing::write_e2e_fixture(dir.path());
    const auto ds = load_bird(fx.root);
    Predictions preds;
    std::size_t i = 0;
    for (const auto& e : ds.examples) {
        switch (i++ % 4) {
        case 0: preds[e.question_id] = e.gold_sql; break;
        case 1: preds[e.question_id] = std::nullopt; break;
        case 2: preds[e.question_id] = "SELECT nonsense FROM nowhere"; break;
        default: break;  // missing prediction
        }
    }
    EvalOptions opts;
    opts.workers = 3;
    const auto r = evaluate(preds, ds.examples, ds.databases, opts);
    EXPECT_EQ(r.total.correct, r.simple.correct + r.moderate.correct + r.challenging.correct);
    EXPECT_EQ(r.total.total, r.simple.total + r.moderate.total + r.challenging.total);
    EXPECT_EQ(r.total.correct, 3u);
    EXPECT_EQ(r.failures(), 7u);
    ASSERT_EQ(r.per_example.size(), 10u);
    EXPECT_EQ(r.per_example[1].failure, std::optional<std::string>("generation failed"));
    EXPECT_EQ(r.per_example[3].failure, std::optional<std::string>("no prediction"));
    EXPECT_EQ(r.per_example[2].failure->rfind("execution error: ", 0), 0u);
    EXPECT_EQ(eval_result_from_json(to_json(r)), r);

    Predictions stray{{999, "SELECT 1"}};
    EXPECT_THROW(evaluate(stray, ds.examples, ds.databases), DataError);
}

TEST(Report, FormattingAndShape) {
    EXPECT_EQ(format_ex({7, 10}), "70.00");
    EXPECT_EQ(format_ex({2, 3}), "66.67");
    EXPECT_EQ(format_ex({1, 8}), "12.50");
    EXPECT_EQ(format_ex({0, 0}), "-");
    // Half-up at the third decimal: 1/16 = 6.25 exactly, 1/32 = 3.125 -> 3.13.
    EXPECT_EQ(format_ex({1, 32}), "3.13");

    EvalResult r;
    r.simple = {6, 6};
    r.moderate = {2, 3};
    r.challenging = {0, 1};
    r.total = {8, 10};
    const auto table = render_report(r);
    const auto header = table.substr(0, table.find('\n'));
    std::string squeezed;
    for (char c : header)
        if (c != ' ') squeezed += c;
    EXPECT_EQ(squeezed, "Simple|Moderate|Challenging|Total");
    EXPECT_NE(table.find("100.00"), std::string::npos);
    EXPECT_NE(table.find("66.67"), std::string::npos);
    EXPECT_NE(table.find("80.00"), std::string::npos);
    const auto csv = render_report(r, ReportFormat::csv);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,simple,moderate,challenging,total");
}

TEST(Predictions, JsonRoundTrip) {
    TempDir dir;
    Predictions p{{3, "SELECT 1"}, {7, std::nullopt}};
    testing::write_file(dir / "p.json", predictions_to_json(p).dump(2));
    EXPECT_EQ(load_predictions(dir / "p.json"), p);
}

} // namespace
} // namespace ca
