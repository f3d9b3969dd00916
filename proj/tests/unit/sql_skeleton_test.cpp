// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "ca/error.hpp"
#include "ca/sql_skeleton.hpp"
#include "support/sql_corpus.hpp"

namespace ca {
namespace {

TEST(Skeleton, ReplacesLiteralsAndIdentifiers) {
    EXPECT_EQ(skeletonize_sql("SELECT name FROM customer WHERE age > 30"),
              "SELECT <col> FROM <tab> WHERE <col> > <num>");
    EXPECT_EQ(skeletonize_sql("select count(*) from t where s = 'a''b'"),
              "SELECT COUNT ( * ) FROM <tab> WHERE <col> = <str>");
}

TEST(Skeleton, QualifiedNamesAndAliases) {
    EXPECT_EQ(skeletonize_sql("SELECT T1.a FROM x AS T1 JOIN y T2 ON T1.id = T2.xid"),
              "SELECT <col> FROM <tab> AS <tab> JOIN <tab> <tab> ON <col> = <col>");
}

TEST(Skeleton, WindowAndCast) {
    EXPECT_EQ(skeletonize_sql("SELECT RANK() OVER (ORDER BY s DESC), CAST(x AS REAL) FROM t"),
              "SELECT RANK ( ) OVER ( ORDER BY <col> DESC ) , CAST ( <col> AS REAL ) FROM <tab>");
}

TEST(Skeleton, DoubleQuotedValueAfterComparisonIsAString) {
    EXPECT_EQ(skeletonize_sql("SELECT a FROM t WHERE b = \"x y\""), "SELECT <col> FROM <tab> WHERE <col> = <str>");
}

TEST(Skeleton, UnterminatedQuoteFails) {
    EXPECT_THROW(skeletonize_sql("SELECT 'oops FROM t"), SkeletonError);
}

TEST(Skeleton, CorpusIsAbstractDeterministicAndIdempotent) {
    const auto corpus = testing::sql_corpus();
    ASSERT_EQ(corpus.size(), 100u);
    for (const auto& q : corpus) {
        const auto s = skeletonize_sql(q);
        EXPECT_TRUE(testing::skeleton_is_abstract(s)) << q << "\n -> " << s;
        EXPECT_EQ(skeletonize_sql(q), s);
        EXPECT_EQ(skeletonize_sql(s), s) << q;
    }
}

TEST(References, TablesColumnsAliasesAndCtes) {
    const auto r = referenced_identifiers(
        "WITH top AS (SELECT id FROM emp) SELECT e.name AS who, COUNT(*) AS n FROM emp e JOIN top ON top.id = e.id "
        "GROUP BY who");
    EXPECT_TRUE(r.tables.count("emp"));
    EXPECT_TRUE(r.ctes.count("top"));
    EXPECT_TRUE(r.columns.count("name"));
    EXPECT_TRUE(r.columns.count("id"));
    EXPECT_TRUE(r.column_aliases.count("who"));
    EXPECT_TRUE(r.column_aliases.count("n"));
    EXPECT_TRUE(r.table_aliases.count("e"));
}

} // namespace
} // namespace ca

namespace ca {
namespace {

TEST(Skeleton, LowercaseJoinWithAliases) {
    EXPECT_EQ(skeletonize_sql("select T1.a from t1 AS T1 join t2 on T1.k = t2.k"),
              "SELECT <col> FROM <tab> AS <tab> JOIN <tab> ON <col> = <col>");
}

TEST(Skeleton, SubqueryWithRankKeepsStructure) {
    const auto s = skeletonize_sql(
        "SELECT name FROM (SELECT name, RANK() OVER (PARTITION BY dept ORDER BY sales DESC) AS r FROM emp) "
        "WHERE r <= 3");
    EXPECT_NE(s.find("RANK ( ) OVER"), std::string::npos);
    EXPECT_NE(s.find("( SELECT"), std::string::npos);
}

} // namespace
} // namespace ca
