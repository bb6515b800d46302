#include <gtest/gtest.h>

#include <map>
#include <tuple>

#include "advfact/suite.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using namespace advfact::attack;
using advfact::testing::fixture_suite;
using advfact::testing::fixture_world;

TEST(Suite, DefaultFixtureCounts) {
  auto s = fixture_suite();
  EXPECT_EQ(s.originals.size(), 24u);
  EXPECT_EQ(s.clozes.size(), 9u);
  EXPECT_EQ(s.instances.size(), 136u);
  EXPECT_EQ(s.seed, 7u);
  EXPECT_FALSE(s.config_digest.empty());
}

TEST(Suite, ByteIdenticalForFixedSeed) {
  EXPECT_EQ(serialize_suite(fixture_suite()), serialize_suite(fixture_suite()));
  EXPECT_NE(serialize_suite(fixture_suite({}, 7)), serialize_suite(fixture_suite({}, 8)));
}

TEST(Suite, FormPairing) {
  SuiteConfig cfg;
  cfg.flips = {true, false};
  cfg.hops = {1, 2, 3};
  cfg.hop_modes = {HopMode::MHOE, HopMode::OHOE};
  auto s = fixture_suite(cfg);
  using Key = std::tuple<std::string, Method, Label, std::string>;
  std::map<Key, std::pair<int, int>> pairs;
  for (const auto& a : s.instances) {
    if (a.method == Method::reversal) continue;
    auto& p = pairs[{a.parent_id, a.method, a.expected_label, a.variant}];
    (a.form == Form::declarative ? p.first : p.second)++;
  }
  for (const auto& [k, v] : pairs) EXPECT_EQ(v.first, v.second) << std::get<0>(k);
}

TEST(Suite, EveryInstanceValidates) {
  SuiteConfig cfg;
  cfg.flips = {true, false};
  auto s = fixture_suite(cfg);
  for (const auto& a : s.instances) EXPECT_NO_THROW(validate_instance(a)) << a.id;
  std::set<std::string> ids;
  for (const auto& a : s.instances) EXPECT_TRUE(ids.insert(a.id).second) << a.id;
}

TEST(Suite, MethodsPerParentWithinFiveToSeven) {
  for (const auto& [parent, methods] : methods_by_parent(fixture_suite())) {
    EXPECT_GE(methods.size(), 5u) << parent;
    EXPECT_LE(methods.size(), 7u) << parent;
  }
}

TEST(Suite, TooFewMethodsIsSkippedWithReason) {
  SuiteConfig cfg;
  cfg.methods = {Method::temporal, Method::numerical, Method::semantic, Method::exaggeration, Method::reversal};
  auto s = fixture_suite(cfg);
  bool saw_suite_skip = false;
  for (const auto& k : s.skipped) saw_suite_skip |= k.stage == "suite";
  EXPECT_TRUE(saw_suite_skip);
  for (const auto& [parent, methods] : methods_by_parent(s)) EXPECT_GE(methods.size(), 5u);
}

TEST(Suite, MinMethodsIsConfigurable) {
  SuiteConfig cfg;
  cfg.methods = {Method::semantic, Method::reversal};
  cfg.min_methods = 2;
  auto s = fixture_suite(cfg);
  EXPECT_FALSE(s.instances.empty());
}

TEST(Suite, RoundTripAndCanonicalOrder) {
  auto s = fixture_suite();
  auto again = parse_suite(serialize_suite(s));
  EXPECT_EQ(again.instances, s.instances);
  EXPECT_EQ(again.clozes, s.clozes);
  EXPECT_EQ(again.originals, s.originals);
  EXPECT_EQ(again.seed, s.seed);
  EXPECT_EQ(again.config_digest, s.config_digest);
  for (std::size_t i = 1; i < s.instances.size(); ++i) {
    EXPECT_LE(s.instances[i - 1].parent_id, s.instances[i].parent_id);
  }
}

TEST(Suite, ConfigJsonAndDigest) {
  SuiteConfig a;
  SuiteConfig b;
  b.hops = {1, 2};
  EXPECT_NE(config_digest(a), config_digest(b));
  json j = b;
  EXPECT_EQ(config_digest(j.get<SuiteConfig>()), config_digest(b));
  EXPECT_THROW(json({{"hops", {0}}}).get<SuiteConfig>(), Error);
}

TEST(Suite, CombinatorialCountWithMockConfig) {
  SuiteConfig cfg;
  cfg.flips = {true, false};
  cfg.hops = {1, 2, 3};
  cfg.hop_modes = {HopMode::MHOE, HopMode::OHOE};
  auto s = fixture_suite(cfg);
  EXPECT_EQ(s.instances.size() + s.clozes.size(), 477u);
}
