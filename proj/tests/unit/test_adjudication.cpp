#include <gtest/gtest.h>

#include "advfact/adjudication.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using namespace advfact::judge;
using advfact::testing::fixture_path;
using advfact::testing::read_file;
using advfact::testing::response_from_answer;

namespace {

Judgment base_judgment() {
  Judgment j;
  j.instance_id = "s01.semantic.flip.d";
  j.engine = "mock";
  j.mode = "grounded";
  j.annotator = "human:ann1";
  j.verdict = Verdict::deny;
  j.is_correct = true;
  return j;
}

ProbeInfo attack_probe() {
  ProbeInfo p;
  p.id = "s01.temporal.flip.direct.d";
  p.parent_id = "s01";
  p.kind = ItemKind::attack;
  p.method = attack::Method::temporal;
  p.text = "The O2 Arena was the busiest music arena in 1999.";
  p.expected_label = attack::Label::truth_flipping;
  attack::PerturbationRecord r;
  r.original = "2008";
  r.replacement = "1999";
  r.flips_truth = true;
  r.layer = "temporal";
  p.perturbations.push_back(r);
  return p;
}

}  // namespace

TEST(Transcripts, FixtureCasesMatchExpectations) {
  auto cases = json::parse(read_file(fixture_path("transcripts.json")))["cases"];
  ASSERT_GE(cases.size(), 10u);
  RuleJudge rules;
  for (const auto& c : cases) {
    auto probe = advfact::testing::probe_from_json(c["probe"]);
    auto resp = response_from_answer(probe.id, c["answer"]);
    auto st = rules.stance(probe, resp);
    const auto& e = c["expect"];
    SCOPED_TRACE(c["name"].get<std::string>());
    EXPECT_EQ(to_string(st.verdict), e["verdict"].get<std::string>());
    EXPECT_EQ(detect_contradiction(probe, resp, st.verdict), e["contradiction"].get<bool>());
    EXPECT_EQ(decide_correct(probe, st.verdict, resp.raw_text), e["is_correct"].get<bool>());
    if (e.contains("hedged")) EXPECT_EQ(st.hedged, e["hedged"].get<bool>());
  }
}

TEST(Gold, MatchesAtWordBoundaries) {
  EXPECT_TRUE(gold_matches("It was the O2 Arena, in London.", "The O2 Arena"));
  EXPECT_TRUE(gold_matches("answer: 2008", "2008"));
  EXPECT_FALSE(gold_matches("In 20080 nothing happened.", "2008"));
  EXPECT_FALSE(gold_matches("Wembley Arena", "The O2 Arena"));
}

TEST(Correctness, DependsOnLabelAndVerdict) {
  auto p = attack_probe();
  EXPECT_TRUE(decide_correct(p, Verdict::deny, ""));
  EXPECT_TRUE(decide_correct(p, Verdict::correct_with_fix, ""));
  EXPECT_FALSE(decide_correct(p, Verdict::affirm, ""));
  EXPECT_FALSE(decide_correct(p, Verdict::abstain, ""));
  p.expected_label = attack::Label::truth_preserving;
  EXPECT_TRUE(decide_correct(p, Verdict::affirm, ""));
  EXPECT_FALSE(decide_correct(p, Verdict::deny, ""));
  EXPECT_TRUE(decide_correct(p, Verdict::abstain, "", ScoringPolicy{false}) == decide_correct(p, Verdict::deny, ""));
  p.gold_required = true;
  EXPECT_THROW(decide_correct(p, Verdict::affirm, "anything"), InvariantViolation);
  p.gold_answer = "2008";
  EXPECT_TRUE(decide_correct(p, Verdict::affirm, "It was 2008."));
  EXPECT_FALSE(decide_correct(p, Verdict::affirm, "It was 2009."));
}

TEST(Contradiction, OnlyOnAffirmationsOfFlips) {
  auto p = attack_probe();
  auto resp = response_from_answer(p.id, "Yes, it was the busiest arena, and that was in 2008 [1].\n[1]: https://a.example");
  EXPECT_TRUE(detect_contradiction(p, resp, Verdict::affirm));
  EXPECT_FALSE(detect_contradiction(p, resp, Verdict::deny));
  EXPECT_TRUE(asserts_value("It happened in 2008.", "2008"));
  EXPECT_FALSE(asserts_value("It happened in 2009.", "2008"));
}

TEST(Validation, RangesAndForms) {
  EXPECT_NO_THROW(validate_judgment(base_judgment()));
  auto j = base_judgment();
  j.fluency = 6;
  EXPECT_THROW(validate_judgment(j), ValidationError);
  j = base_judgment();
  j.annotator = "ann1";
  EXPECT_THROW(validate_judgment(j), ValidationError);
  j = base_judgment();
  j.contradiction = true;
  EXPECT_THROW(validate_judgment(j), ValidationError);
  EXPECT_TRUE(is_human(base_judgment()));
}

TEST(Validation, VectorLengthsAgainstResponse) {
  auto resp = response_from_answer("x", "One [1]. Two [1][2].\n[1]: https://a\n[2]: https://b");
  auto j = base_judgment();
  j.statement_support = {true, false};
  j.citation_support = {true, true, false};
  j.citation_relevant = {true, true, true};
  EXPECT_NO_THROW(validate_against(j, resp));
  j.citation_support.pop_back();
  EXPECT_THROW(validate_against(j, resp), ValidationError);
}

TEST(Import, FiveAnnotatorFixtureLoads) {
  auto js = import_judgments(fixture_path("judgments/human_5x10.jsonl"));
  EXPECT_EQ(js.size(), 50u);
  std::set<std::string> annotators;
  for (const auto& j : js) annotators.insert(j.annotator);
  EXPECT_EQ(annotators.size(), 5u);
}

TEST(Import, OutOfRangeNamesTheLine) {
  try {
    import_judgments(fixture_path("judgments/bad_fluency.jsonl"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("fluency"), std::string::npos) << msg;
  }
}

TEST(Import, DuplicateNamesBothLines) {
  try {
    import_judgments(fixture_path("judgments/duplicate.jsonl"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("lines 4 and 6"), std::string::npos) << msg;
  }
}

TEST(Import, MalformedJsonIsParseErrorWithLine) {
  std::string text = make_header(kJudgmentFormat).dump() + "\n{\"instance_id\": 3}\n";
  EXPECT_THROW(parse_judgments(text), Error);
}

TEST(Import, SerializeRoundTripSorted) {
  auto js = import_judgments(fixture_path("judgments/human_5x10.jsonl"));
  auto again = parse_judgments(serialize_judgments(js));
  auto sorted = js;
  sort_judgments(sorted);
  sort_judgments(again);
  EXPECT_EQ(again, sorted);
}

TEST(AutoJudge, SupportFromCitedSnippets) {
  const auto& idx = *advfact::testing::fixture_world().index;
  auto resp = response_from_answer(
      "x", "Mount Everest is 8,849 metres tall [1]. Penguins live on it [1].\n[1]: https://a \"Mount Everest is 8,849 metres tall.\"");
  auto labels = auto_support(resp, idx);
  EXPECT_EQ(labels.statement_support, (std::vector<bool>{true, false}));
  EXPECT_EQ(labels.citation_support.size(), 2u);
  RuleJudge rules;
  auto p = attack_probe();
  auto j = auto_judge(p, resp, rules, idx);
  EXPECT_EQ(j.annotator, "auto:rules");
  EXPECT_NO_THROW(validate_judgment(j));
  EXPECT_NO_THROW(validate_against(j, resp));
}

TEST(HttpJudge, ParsesVerdictAndFailsCleanly) {
  std::string seen;
  auto transport = [&](const std::string&, const std::string& body, const std::map<std::string, std::string>&,
                       double) -> engines::HttpReply {
    seen = body;
    return {200, R"({"verdict": "deny"})", ""};
  };
  HttpJudge j("http://judge.local", "Claim: {{claim}}\nAnswer: {{answer}}", "", transport);
  auto p = attack_probe();
  auto resp = response_from_answer(p.id, "No, it was 2008 [1].\n[1]: https://a");
  EXPECT_EQ(j.stance(p, resp).verdict, Verdict::deny);
  auto prompt = json::parse(seen)["prompt"].get<std::string>();
  EXPECT_NE(prompt.find(p.text), std::string::npos);
  EXPECT_EQ(prompt.find("[1]"), std::string::npos);

  HttpJudge down("http://judge.local", "{{claim}}", "",
                 [](const std::string&, const std::string&, const std::map<std::string, std::string>&, double) {
                   return engines::HttpReply{503, "", ""};
                 });
  EXPECT_THROW(down.stance(p, resp), ExternalError);
  HttpJudge nonsense("http://judge.local", "{{claim}}", "",
                     [](const std::string&, const std::string&, const std::map<std::string, std::string>&, double) {
                       return engines::HttpReply{200, R"({"verdict": "maybe"})", ""};
                     });
  EXPECT_THROW(nonsense.stance(p, resp), ExternalError);
}

TEST(MakeJudge, Kinds) {
  EXPECT_EQ(make_judge(json{{"kind", "rules"}})->name(), "rules");
  EXPECT_THROW(make_judge(json{{"kind", "oracle"}}), ConfigError);
  EXPECT_THROW(make_judge(json{{"kind", "http"}}), ConfigError);
}
