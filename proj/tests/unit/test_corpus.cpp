#include <gtest/gtest.h>

#include "advfact/corpus.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using advfact::testing::fixture_world;

namespace {

const corpus::FactStatement& stmt(const std::string& id) {
  for (const auto& s : fixture_world().corpus.statements) {
    if (s.id == id) return s;
  }
  throw std::runtime_error("no statement " + id);
}

}  // namespace

TEST(Snapshot, FixtureLoadsAndResolvesNames) {
  const auto& snap = fixture_world().snapshot;
  EXPECT_GE(snap.articles().size(), 50u);
  ASSERT_NE(snap.find("O2 Arena"), nullptr);
  EXPECT_EQ(snap.resolve_name("O2"), snap.find("O2 (company)"));
  EXPECT_EQ(corpus::display_name("O2 (company)"), "O2");
  EXPECT_THROW(snap.at("No Such Article"), ValidationError);
}

TEST(Snapshot, SerializationRoundTripsAndDigestIsStable) {
  const auto& snap = fixture_world().snapshot;
  auto again = corpus::parse_snapshot(corpus::serialize_snapshot(snap));
  EXPECT_EQ(again.articles(), snap.articles());
  EXPECT_EQ(again.digest(), snap.digest());
}

TEST(Snapshot, RejectsMalformedRecords) {
  std::string header = make_header(corpus::kSnapshotFormat).dump() + "\n";
  EXPECT_THROW(corpus::parse_snapshot(header + "{\"title\": \"A\"}\n"), Error);
  std::string dup = R"({"title":"A","category":"venue","sentences":["A is a place."],"links":[]})";
  EXPECT_THROW(corpus::parse_snapshot(header + dup + "\n" + dup + "\n"), Error);
}

TEST(Snapshot, DanglingLinksAreWarnings) {
  corpus::KnowledgeSnapshot s({{"A", "venue", {"A is a venue."}, {"Missing"}, {}}});
  EXPECT_EQ(s.warnings().size(), 1u);
}

TEST(Annotate, FindsEntitiesRolesAndExpressions) {
  const auto& s = stmt("s01");
  ASSERT_FALSE(s.entities.empty());
  EXPECT_EQ(s.entities.front().surface, "The O2 Arena");
  EXPECT_EQ(s.entities.front().role, corpus::Role::subject);
  EXPECT_EQ(s.entities.front().article, "O2 Arena");
  ASSERT_EQ(s.temporal_exprs.size(), 1u);
  EXPECT_EQ(s.temporal_exprs[0].year_lo, 2008);
  EXPECT_TRUE(s.numeric_exprs.empty());
  for (const auto& e : s.entities) EXPECT_EQ(s.text.substr(e.span.begin, e.span.size()), e.surface);
}

TEST(Annotate, PredicateFrameOnCopularSentence) {
  const auto& s = stmt("s03");
  ASSERT_TRUE(s.predicate_frame.has_value());
  EXPECT_EQ(s.predicate_frame->subject, "Taylor Swift");
  EXPECT_EQ(s.predicate_frame->copula, "is");
  ASSERT_EQ(s.numeric_exprs.size(), 1u);
  EXPECT_EQ(s.numeric_exprs[0].value, Rational(6));
}

TEST(Annotate, RejectsBadInput) {
  const auto& snap = fixture_world().snapshot;
  EXPECT_THROW(corpus::annotate_statement("The O2 Arena is big. It is in London.", "O2 Arena", snap), ValidationError);
  EXPECT_THROW(corpus::annotate_statement("The big arena.", "O2 Arena", snap), ValidationError);
  EXPECT_THROW(corpus::annotate_statement("The O2 Arena is big.", "Nowhere", snap), ValidationError);
}

TEST(Annotate, CorpusSkipsFailuresWithReasons) {
  const auto& snap = fixture_world().snapshot;
  std::vector<corpus::StatementRecord> recs{
      {"a", "The O2 Arena is located in London.", "O2 Arena", "venue"},
      {"b", "Two sentences here. And here.", "O2 Arena", "venue"},
  };
  auto c = corpus::annotate_corpus(recs, snap);
  EXPECT_EQ(c.statements.size(), 1u);
  ASSERT_EQ(c.skipped.size(), 1u);
  EXPECT_EQ(c.skipped[0].id, "b");
  EXPECT_FALSE(c.skipped[0].reason.empty());
}

TEST(Annotate, FixtureCorpusFullyAnnotated) {
  EXPECT_EQ(fixture_world().corpus.statements.size(), 12u);
  EXPECT_TRUE(fixture_world().corpus.skipped.empty());
}

TEST(Annotate, CorpusRoundTrip) {
  const auto& c = fixture_world().corpus;
  auto again = corpus::parse_corpus(corpus::serialize_corpus(c));
  EXPECT_EQ(again.statements, c.statements);
}

TEST(Sampling, PerCategoryIsSeededAndOrdered) {
  const auto& all = fixture_world().corpus.statements;
  auto a = corpus::sample_by_category(all, 1, 3);
  auto b = corpus::sample_by_category(all, 1, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
  std::set<std::string> cats;
  for (const auto& s : a) EXPECT_TRUE(cats.insert(s.category).second);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].id, a[i].id);
}
