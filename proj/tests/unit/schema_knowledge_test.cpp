// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ca/error.hpp"
#include "ca/profiler.hpp"
#include "ca/schema_knowledge.hpp"
#include "support/fixtures.hpp"

namespace ca {
namespace {

using testing::TempDir;

SchemaKnowledge mined_shop(const TempDir& dir, LlmGateway* gateway = nullptr) {
    testing::create_shop_db(dir / "shop.sqlite");
    MiningOptions opts;
    opts.created_at = parse_timestamp("2024-05-01T12:00:00Z");
    opts.workers = 2;
    return mine_schema_knowledge(dir / "shop.sqlite", gateway, opts).knowledge;
}

TEST(SchemaKnowledge, TimestampFormat) {
    const auto t = parse_timestamp("2024-05-01T12:00:00Z");
    EXPECT_EQ(format_timestamp(t), "2024-05-01T12:00:00Z");
    EXPECT_THROW(parse_timestamp("2024-05-01 12:00:00"), Error);
}

TEST(SchemaKnowledge, SaveLoadSaveIsByteIdentical) {
    TempDir dir;
    auto gw = testing::make_gateway(testing::scripted_model());
    const auto sk = mined_shop(dir, gw.get());
    save(sk, dir / "a.json");
    const auto loaded = load_schema_knowledge(dir / "a.json");
    EXPECT_EQ(loaded, sk);
    save(loaded, dir / "b.json");
    EXPECT_EQ(testing::read_file(dir / "a.json"), testing::read_file(dir / "b.json"));
}

TEST(SchemaKnowledge, TopLevelKeyOrder) {
    TempDir dir;
    const auto j = to_json(mined_shop(dir));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"db_id", "tool_version", "created_at", "tables", "fk_edges"}));
}

TEST(SchemaKnowledge, LoadErrorsAreDistinguished) {
    TempDir dir;
    EXPECT_THROW(load_schema_knowledge(dir / "absent.json"), MissingFileError);
    testing::write_file(dir / "bad.json", "{not json");
    EXPECT_THROW(load_schema_knowledge(dir / "bad.json"), FormatError);

    auto sk = mined_shop(dir);
    sk.tables[0].columns[0].profile.null_fraction = 2.0;
    auto j = to_json(sk);
    testing::write_file(dir / "invalid.json", j.dump(2));
    EXPECT_THROW(load_schema_knowledge(dir / "invalid.json"), InvariantError);
}

TEST(SchemaKnowledge, ValidationCatchesBrokenInvariants) {
    TempDir dir;
    const auto base = mined_shop(dir);
    EXPECT_NO_THROW(validate(base));

    auto dup = base;
    dup.tables.push_back(dup.tables[0]);
    EXPECT_THROW(validate(dup), InvariantError);

    auto dangling = base;
    dangling.fk_edges.push_back({{"customer", "nope"}, {"sales", "sale_id"}, EdgeSource::declared, std::nullopt});
    EXPECT_THROW(validate(dangling), InvariantError);

    auto inferred_without_score = base;
    inferred_without_score.fk_edges.push_back(
        {{"sales", "year"}, {"order", "year"}, EdgeSource::inferred, std::nullopt});
    EXPECT_THROW(validate(inferred_without_score), InvariantError);

    auto bad_glossary = base;
    bad_glossary.tables[0].columns[2].semantics.enum_glossary["X"] = "unobserved";
    EXPECT_THROW(validate(bad_glossary), InvariantError);

    auto too_many_rows = base;
    too_many_rows.tables[0].sample_rows.resize(kSampleRowsCap + 1, too_many_rows.tables[0].sample_rows[0]);
    EXPECT_THROW(validate(too_many_rows), InvariantError);
}

TEST(SchemaKnowledge, LookupsFallBackToCaseInsensitive) {
    TempDir dir;
    const auto sk = mined_shop(dir);
    ASSERT_NE(sk.find_table("CUSTOMER"), nullptr);
    EXPECT_EQ(sk.find_table("CUSTOMER")->name, "customer");
    EXPECT_NE(sk.find_column({"Order", "Amount"}), nullptr);
    EXPECT_EQ(sk.find_column({"order", "missing"}), nullptr);
}

TEST(SchemaKnowledge, GlossaryKeysMatchNumerically) {
    const std::vector<Value> samples{std::int64_t{52}, 54.0, std::string("x")};
    EXPECT_TRUE(glossary_key_observed("52", samples));
    EXPECT_TRUE(glossary_key_observed("54", samples));
    EXPECT_TRUE(glossary_key_observed("x", samples));
    EXPECT_FALSE(glossary_key_observed("56", samples));
}

} // namespace
} // namespace ca
