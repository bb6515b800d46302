#include <gtest/gtest.h>

#include <regex>

#include "advfact/attackgen.hpp"
#include "advfact/question.hpp"
#include "advfact/text.hpp"
#include "../support/oracles.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using namespace advfact::attack;
using advfact::testing::fixture_world;

namespace {

const corpus::FactStatement& stmt(const std::string& id) {
  for (const auto& s : fixture_world().corpus.statements) {
    if (s.id == id) return s;
  }
  throw std::runtime_error("no statement " + id);
}

const corpus::KnowledgeSnapshot& snap() { return fixture_world().snapshot; }

}  // namespace

TEST(InstanceId, Layout) {
  EXPECT_EQ(instance_id("s01", Method::multihop, true, "h2.mhoe", Form::question), "s01.multihop.flip.h2.mhoe.q");
  EXPECT_EQ(instance_id("s01", Method::semantic, false, "", Form::declarative), "s01.semantic.keep.d");
}

TEST(Multihop, MhoeKeepsOneErrorAtTheLastHop) {
  auto a = multihop_extend(stmt("s01"), snap(), 3, HopMode::MHOE, true, 7);
  EXPECT_EQ(a.hop_count, 3);
  EXPECT_EQ(a.error_count, 1);
  EXPECT_EQ(a.expected_label, Label::truth_flipping);
  ASSERT_EQ(a.chain.size(), 4u);
  int flipped_hop = 0;
  for (const auto& p : a.perturbations) {
    if (p.flips_truth) flipped_hop = p.hop_index;
  }
  EXPECT_EQ(flipped_hop, 3);
  EXPECT_NO_THROW(validate_instance(a));
}

TEST(Multihop, OhoeAddsAnErrorPerHop) {
  for (int h = 1; h <= 3; ++h) {
    auto a = multihop_extend(stmt("s01"), snap(), h, HopMode::OHOE, true, 7);
    EXPECT_EQ(a.error_count, h);
  }
}

TEST(Multihop, PreservingChainIsTrue) {
  auto a = multihop_extend(stmt("s06"), snap(), 2, HopMode::MHOE, false, 7);
  EXPECT_EQ(a.error_count, 0);
  EXPECT_EQ(a.expected_label, Label::truth_preserving);
  EXPECT_NE(a.text.find(stmt("s06").text.substr(0, stmt("s06").text.size() - 1)), std::string::npos);
}

TEST(Multihop, ChainIsCoherent) {
  auto a = multihop_extend(stmt("s01"), snap(), 3, HopMode::MHOE, false, 7);
  for (std::size_t i = 1; i < a.chain.size(); ++i) {
    const auto* prev = snap().find(a.chain[i - 1]);
    ASSERT_NE(prev, nullptr);
    EXPECT_NE(std::find(prev->links.begin(), prev->links.end(), a.chain[i]), prev->links.end())
        << a.chain[i - 1] << " -> " << a.chain[i];
  }
}

TEST(Multihop, UnreachableHopsNamesDepth) {
  const auto& s = stmt("s01");
  int depth = max_hop_depth(s, snap());
  try {
    multihop_extend(s, snap(), depth + 1, HopMode::MHOE, true, 7);
    FAIL() << "expected UnreachableHops";
  } catch (const UnreachableHops& e) {
    EXPECT_EQ(e.achieved(), depth);
  }
}

TEST(Multihop, MhoePrefixProperty) {
  for (const auto& s : fixture_world().corpus.statements) {
    int depth = std::min(3, max_hop_depth(s, snap()));
    for (int h1 = 1; h1 < depth; ++h1) {
      auto a = multihop_extend(s, snap(), h1, HopMode::MHOE, true, 7);
      auto b = multihop_extend(s, snap(), h1 + 1, HopMode::MHOE, true, 7);
      // The true hops of the shorter chain lead the longer one.
      for (std::size_t i = 0; i + 1 < a.chain.size(); ++i) EXPECT_EQ(a.chain[i], b.chain[i]) << s.id;
    }
  }
}

TEST(Temporal, FlipAndKeepAreDecidedByIntervals) {
  const auto& s = stmt("s01");
  for (auto kind : {TemporalKind::direct, TemporalKind::vague, TemporalKind::relative}) {
    for (bool flip : {true, false}) {
      try {
        auto a = temporal_modify(s, kind, flip, 7);
        ASSERT_EQ(a.perturbations.size(), 1u);
        auto o = advfact::testing::oracle_flip(s, a.perturbations[0]);
        ASSERT_TRUE(o.has_value()) << a.text;
        EXPECT_EQ(*o, flip) << a.text;
        EXPECT_NO_THROW(validate_instance(a));
      } catch (const NotApplicable&) {
      }
    }
  }
}

TEST(Temporal, NotApplicableWithoutTime) {
  EXPECT_THROW(temporal_modify(stmt("s09"), TemporalKind::direct, true, 7), NotApplicable);
}

TEST(Semantic, NeverTouchesTheSubject) {
  for (const auto& s : fixture_world().corpus.statements) {
    for (bool flip : {true, false}) {
      try {
        auto a = semantic_replace(s, flip, 7);
        for (const auto& p : a.perturbations) {
          ASSERT_TRUE(p.site.has_value());
          for (const auto& e : s.entities) {
            if (e.role == corpus::Role::subject) EXPECT_FALSE(p.site->overlaps(e.span)) << a.text;
          }
        }
      } catch (const NotApplicable&) {
      }
    }
  }
}

TEST(Semantic, AntonymFlipsSynonymKeeps) {
  auto f = semantic_replace(stmt("s06"), true, 7);
  auto k = semantic_replace(stmt("s06"), false, 7);
  EXPECT_EQ(f.expected_label, Label::truth_flipping);
  EXPECT_EQ(k.expected_label, Label::truth_preserving);
  ASSERT_EQ(f.perturbations.size(), 1u);
  EXPECT_TRUE(Lexicon::builtin().antonymous(text::to_lower(f.perturbations[0].original),
                                            text::to_lower(f.perturbations[0].replacement)));
}

TEST(Distraction, InsertedClauseRecordsTruth) {
  const auto& s = stmt("s01");
  const auto& subject = s.entities.front();
  auto fab = distraction_inject(s, snap(), subject, true, 7);
  auto keep = distraction_inject(s, snap(), subject, false, 7);
  EXPECT_EQ(fab.expected_label, Label::truth_flipping);
  EXPECT_EQ(keep.expected_label, Label::truth_preserving);
  ASSERT_TRUE(fab.target.has_value());
  EXPECT_EQ(fab.target->role, corpus::Role::subject);
  ASSERT_FALSE(fab.perturbations.empty());
  EXPECT_FALSE(fab.perturbations[0].original.empty());
  EXPECT_GT(fab.text.size(), s.text.size());
}

TEST(Exaggeration, ScalesByAtLeastTen) {
  auto a = facts_exaggerate(stmt("s06"), 7);
  EXPECT_EQ(a.expected_label, Label::truth_flipping);
  ASSERT_EQ(a.perturbations.size(), 1u);
  ASSERT_TRUE(a.perturbations[0].scale_factor.has_value());
  auto f = *a.perturbations[0].scale_factor;
  EXPECT_TRUE(f >= Rational(10) || f <= Rational(1, 10));
}

TEST(Exaggeration, HyperboleWhenNothingScales) {
  auto a = facts_exaggerate(stmt("s01"), 7);
  ASSERT_EQ(a.perturbations.size(), 1u);
  const auto& phrases = hyperbole_phrases();
  EXPECT_NE(std::find(phrases.begin(), phrases.end(), text::trim(a.perturbations[0].replacement)), phrases.end())
      << a.perturbations[0].replacement;
}

TEST(Reversal, WhQuestionWithoutSubjectAndWithGold) {
  static const std::regex wh("^(What|Which|Who|Whom|Whose|When|Where|How)\\b.*\\?$");
  for (const auto& s : fixture_world().corpus.statements) {
    try {
      auto a = facts_reverse(s);
      EXPECT_EQ(a.form, Form::question);
      EXPECT_TRUE(std::regex_match(a.text, wh)) << a.text;
      ASSERT_TRUE(a.gold_answer.has_value());
      ASSERT_TRUE(s.predicate_frame.has_value());
      EXPECT_EQ(text::find_word(a.text, s.predicate_frame->subject, true), std::string::npos) << a.text;
    } catch (const NotApplicable&) {
    }
  }
}

TEST(Reversal, O2Example) {
  auto a = facts_reverse(stmt("s01"));
  EXPECT_EQ(*a.gold_answer, "The O2 Arena");
  EXPECT_NE(a.text.find("2008"), std::string::npos);
}

TEST(Numerical, ReplacesQuantityWithComparative) {
  auto a = numerical_manipulate(stmt("s03"), true, 7);
  ASSERT_EQ(a.perturbations.size(), 1u);
  const auto& p = a.perturbations[0];
  EXPECT_EQ(p.layer, "numeric");
  ASSERT_TRUE(p.predicate.has_value());
  EXPECT_FALSE(eval_numeric_predicate(Rational(6), *p.predicate));
  auto k = numerical_manipulate(stmt("s03"), false, 7);
  EXPECT_TRUE(eval_numeric_predicate(Rational(6), *k.perturbations[0].predicate));
}

TEST(Numerical, FallsBackToYears) {
  auto a = numerical_manipulate(stmt("s07"), true, 7);
  EXPECT_EQ(a.perturbations[0].layer, "temporal");
  EXPECT_THROW(numerical_manipulate(stmt("s09"), true, 7), NotApplicable);
}

TEST(Generators, PureFunctionsOfInputsAndSeed) {
  for (const auto& s : fixture_world().corpus.statements) {
    for (std::uint64_t seed : {1u, 7u}) {
      auto run = [&] {
        std::vector<json> out;
        auto add = [&](auto f) {
          try {
            out.push_back(f());
          } catch (const NotApplicable&) {
            out.push_back(nullptr);
          }
        };
        add([&] { return multihop_extend(s, snap(), 2, HopMode::MHOE, true, seed); });
        add([&] { return temporal_modify(s, TemporalKind::vague, true, seed); });
        add([&] { return semantic_replace(s, true, seed); });
        add([&] { return facts_exaggerate(s, seed); });
        add([&] { return numerical_manipulate(s, false, seed); });
        return json(out).dump();
      };
      EXPECT_EQ(run(), run()) << s.id;
    }
  }
}

TEST(Generators, LabelAgreesWithPerturbations) {
  AttackInstance a = semantic_replace(stmt("s06"), true, 7);
  a.perturbations[0].flips_truth = false;
  EXPECT_THROW(validate_instance(a), InvariantViolation);
}

TEST(Generators, InstanceJsonRoundTrip) {
  auto a = multihop_extend(stmt("s01"), snap(), 2, HopMode::OHOE, true, 7);
  json j = a;
  EXPECT_EQ(j.get<AttackInstance>(), a);
}

TEST(Question, PolarTemplates) {
  EXPECT_EQ(question_text("Taylor Swift is an American singer-songwriter."),
            "Is Taylor Swift an American singer-songwriter?");
  EXPECT_EQ(question_text("The Beatles formed in Liverpool."), "Did The Beatles form in Liverpool?");
  auto fallback = question_text("Remarkably, few arenas compare.");
  EXPECT_TRUE(is_fallback_question(fallback)) << fallback;
}

TEST(Question, TwinKeepsLabelAndPerturbations) {
  auto d = semantic_replace(stmt("s06"), true, 7);
  auto q = to_question(d);
  EXPECT_EQ(q.form, Form::question);
  EXPECT_EQ(q.parent_id, d.parent_id);
  EXPECT_EQ(q.method, d.method);
  EXPECT_EQ(q.expected_label, d.expected_label);
  EXPECT_EQ(q.perturbations, d.perturbations);
  EXPECT_EQ(q.text.back(), '?');
}

TEST(Cloze, YearBlankAndReinsertion) {
  auto c = cloze_generate(stmt("s01"));
  EXPECT_EQ(c.blank_kind, BlankKind::year);
  EXPECT_EQ(c.gold_answer, "2008");
  EXPECT_NE(c.text.find(kYearBlank), std::string::npos);
  EXPECT_EQ(cloze_fill(c, c.gold_answer), stmt("s01").text);
}

TEST(Cloze, QuantityBlank) {
  auto c = cloze_generate(stmt("s06"));
  EXPECT_EQ(c.blank_kind, BlankKind::quantity);
  EXPECT_EQ(cloze_fill(c, c.gold_answer), stmt("s06").text);
  EXPECT_THROW(cloze_generate(stmt("s09")), NotApplicable);
}
