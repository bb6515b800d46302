#include <gtest/gtest.h>

#include <httplib.h>

#include "advfact/annotation_service.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using namespace advfact::annotation;
using advfact::testing::TempDir;

namespace {

struct Fixture {
  std::map<std::string, judge::ProbeInfo> probes;
  std::vector<engines::EngineResponse> responses;
};

const Fixture& fixture() {
  static const Fixture* f = [] {
    auto* out = new Fixture;
    out->probes = judge::probes_of(advfact::testing::fixture_suite());
    engines::MockEngineConfig cfg;
    cfg.seed = 7;
    int n = 0;
    for (const auto& [id, p] : out->probes) {
      if (n++ >= 6) break;
      auto r = engines::mock_answer(cfg, *advfact::testing::fixture_world().index, p.text);
      r.instance_id = id;
      r.engine = "mock";
      r.mode = "grounded";
      out->responses.push_back(r);
    }
    return out;
  }();
  return *f;
}

std::vector<AnnotatorProfile> people(int n, int quota = 0) {
  std::vector<AnnotatorProfile> out;
  for (int i = 1; i <= n; ++i) out.push_back({"ann" + std::to_string(i), "Annotator " + std::to_string(i), quota});
  return out;
}

json answer_for(const json& task, const std::string& verdict = "deny") {
  std::size_t s = task["rubric"]["statement_count"], c = task["rubric"]["citation_occurrences"];
  return {{"version", kApiVersion},
          {"verdict", verdict},
          {"statement_support", std::vector<bool>(s, true)},
          {"citation_support", std::vector<bool>(c, true)},
          {"citation_relevant", std::vector<bool>(c, true)},
          {"fluency", 4},
          {"utility", 3}};
}

ServiceOptions options(std::size_t k) {
  ServiceOptions o;
  o.redundancy = k;
  o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return o;
}

}  // namespace

TEST(Tasks, OrderedIdsAndBlindPayload) {
  auto tasks = make_tasks(fixture().probes, fixture().responses);
  ASSERT_EQ(tasks.size(), fixture().responses.size());
  EXPECT_EQ(tasks[0].task_id, "task-0001");
  for (const auto& t : tasks) {
    auto p = task_payload(t, "ann1", TaskStatus::open);
    std::string dump = p.dump();
    EXPECT_EQ(dump.find(t.probe.id), std::string::npos) << dump;
    EXPECT_FALSE(p["instance"].contains("expected_label"));
    EXPECT_FALSE(p["instance"].contains("perturbations"));
    EXPECT_FALSE(p["instance"].contains("gold_answer"));
    if (t.probe.gold_answer) EXPECT_EQ(dump.find("\"" + *t.probe.gold_answer + "\""), std::string::npos);
    EXPECT_EQ(p["instance"]["text"], t.probe.text);
  }
}

TEST(Service, RedundancyAndNoRepeats) {
  auto tasks = make_tasks(fixture().probes, fixture().responses);
  std::size_t n = tasks.size();
  AnnotationService svc(tasks, people(3), {}, options(2));
  std::map<std::string, int> served;
  for (int round = 0; round < 10; ++round) {
    for (int a = 1; a <= 3; ++a) {
      std::string who = "ann" + std::to_string(a);
      auto t = svc.next_task(who);
      if (!t) continue;
      svc.submit(who, (*t)["task_id"], answer_for(*t));
      served[(*t)["task_id"].get<std::string>()]++;
    }
  }
  EXPECT_EQ(served.size(), n);
  for (const auto& [id, k] : served) EXPECT_EQ(k, 2) << id;
  EXPECT_EQ(svc.judgments().size(), 2 * n);
  for (int a = 1; a <= 3; ++a) EXPECT_FALSE(svc.next_task("ann" + std::to_string(a)).has_value());
}

TEST(Service, SameTaskUntilSubmitted) {
  AnnotationService svc(make_tasks(fixture().probes, fixture().responses), people(1), {}, options(1));
  auto a = svc.next_task("ann1");
  auto b = svc.next_task("ann1");
  ASSERT_TRUE(a && b);
  EXPECT_EQ((*a)["task_id"], (*b)["task_id"]);
}

TEST(Service, QuotaStopsServing) {
  AnnotationService svc(make_tasks(fixture().probes, fixture().responses), people(1, 2), {}, options(1));
  for (int i = 0; i < 2; ++i) {
    auto t = svc.next_task("ann1");
    ASSERT_TRUE(t);
    svc.submit("ann1", (*t)["task_id"], answer_for(*t));
  }
  EXPECT_FALSE(svc.next_task("ann1").has_value());
}

TEST(Service, ErrorKinds) {
  std::vector<judge::Judgment> persisted;
  AnnotationService svc(make_tasks(fixture().probes, fixture().responses), people(2), [&](const judge::Judgment& j) {
    persisted.push_back(j);
  }, options(1));
  EXPECT_THROW(svc.next_task("stranger"), AuthError);
  auto t = svc.next_task("ann1");
  ASSERT_TRUE(t);
  std::string id = (*t)["task_id"];
  EXPECT_THROW(svc.submit("ann2", id, answer_for(*t)), PreconditionError);
  EXPECT_THROW(svc.submit("ann1", "task-9999", answer_for(*t)), PreconditionError);
  auto bad = answer_for(*t);
  bad["fluency"] = 9;
  EXPECT_THROW(svc.submit("ann1", id, bad), ValidationError);
  auto short_vec = answer_for(*t);
  short_vec["statement_support"].push_back(true);
  EXPECT_THROW(svc.submit("ann1", id, short_vec), ValidationError);
  EXPECT_NO_THROW(svc.submit("ann1", id, answer_for(*t)));
  EXPECT_THROW(svc.submit("ann1", id, answer_for(*t)), ConflictError);
  ASSERT_EQ(persisted.size(), 1u);
  EXPECT_EQ(persisted[0].annotator, "human:ann1");
  EXPECT_EQ(persisted[0].timestamp, "2026-01-01T00:00:00Z");
}

TEST(Service, CorrectnessDerivedFromVerdict) {
  AnnotationService svc(make_tasks(fixture().probes, fixture().responses), people(1), {}, options(1));
  auto tasks = make_tasks(fixture().probes, fixture().responses);
  for (const auto& item : tasks) {
    if (item.probe.gold_required) continue;
    json payload = {{"verdict", "affirm"},
                    {"statement_support", std::vector<bool>(item.response.statements.size(), true)},
                    {"citation_support", std::vector<bool>(engines::citation_occurrences(item.response.statements), true)},
                    {"citation_relevant", std::vector<bool>(engines::citation_occurrences(item.response.statements), true)}};
    auto j = svc.to_judgment(item, "ann1", payload);
    EXPECT_EQ(j.is_correct, judge::decide_correct(item.probe, judge::Verdict::affirm, ""));
  }
}

TEST(Service, ExistingJudgmentsCountAsSubmissions) {
  auto tasks = make_tasks(fixture().probes, fixture().responses);
  std::vector<judge::Judgment> existing;
  {
    AnnotationService first(tasks, people(1), [&](const judge::Judgment& j) { existing.push_back(j); }, options(1));
    auto t = first.next_task("ann1");
    first.submit("ann1", (*t)["task_id"], answer_for(*t));
  }
  AnnotationService again(tasks, people(1), {}, options(1), existing);
  auto t = again.next_task("ann1");
  ASSERT_TRUE(t);
  EXPECT_NE((*t)["task_id"], "task-0001");
}

TEST(Service, AgreementStats) {
  auto tasks = make_tasks(fixture().probes, fixture().responses);
  AnnotationService svc(tasks, people(3), {}, options(3));
  for (int a = 1; a <= 3; ++a) {
    std::string who = "ann" + std::to_string(a);
    while (auto t = svc.next_task(who)) svc.submit(who, (*t)["task_id"], answer_for(*t, a == 3 ? "affirm" : "deny"));
  }
  auto s = svc.agreement_stats();
  EXPECT_EQ(s["complete"], tasks.size());
  EXPECT_EQ(s["fields"]["verdict"]["raters_per_item"], 3);
  EXPECT_EQ(s["fields"]["fluency"]["kappa"], nullptr);
  EXPECT_FALSE(s["fields"]["fluency"]["warnings"].empty());
}

TEST(Tokens, StoredHashedAndReloadable) {
  TempDir dir;
  std::string token;
  {
    TokenRegistry reg(dir / "tokens.json");
    token = reg.issue({"ann1", "One", 0});
    EXPECT_EQ(reg.authenticate(token), std::optional<std::string>("ann1"));
    EXPECT_FALSE(reg.authenticate("nope").has_value());
    EXPECT_THROW(reg.issue({"bad id!", "", 0}), ValidationError);
  }
  std::string stored = advfact::testing::read_file(dir / "tokens.json");
  EXPECT_EQ(stored.find(token), std::string::npos);
  EXPECT_NE(stored.find(sha256_hex(token)), std::string::npos);
  TokenRegistry again(dir / "tokens.json");
  EXPECT_EQ(again.authenticate(token), std::optional<std::string>("ann1"));
  auto rotated = again.issue({"ann1", "One", 0});
  EXPECT_FALSE(again.authenticate(token).has_value());
  EXPECT_TRUE(again.authenticate(rotated).has_value());
}

TEST(Http, EndpointsAndStatusCodes) {
  TempDir dir;
  TokenRegistry reg(dir / "tokens.json");
  std::string t1 = reg.issue({"ann1", "One", 0});
  std::string t2 = reg.issue({"ann2", "Two", 0});
  JudgmentLog log(dir / "human.jsonl");
  AnnotationService svc(make_tasks(fixture().probes, fixture().responses), reg.annotators(),
                        [&](const judge::Judgment& j) { log.append(j); }, options(1));
  AnnotationServer server(svc, reg);
  int port = server.bind("127.0.0.1", 0);
  server.start();

  httplib::Client cli("127.0.0.1", port);
  auto auth = [](const std::string& t) { return httplib::Headers{{"Authorization", "Bearer " + t}}; };

  auto health = cli.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  EXPECT_EQ(cli.Get("/tasks/next")->status, 401);
  EXPECT_EQ(cli.Get("/tasks/next", auth("wrong"))->status, 401);

  auto next = cli.Get("/tasks/next", auth(t1));
  ASSERT_EQ(next->status, 200);
  json task = json::parse(next->body)["task"];
  std::string id = task["task_id"];
  std::string body = answer_for(task).dump();
  std::string path = "/tasks/" + id + "/judgment";

  EXPECT_EQ(cli.Post(path, auth(t2), body, "application/json")->status, 403);
  EXPECT_EQ(cli.Post("/tasks/task-9999/judgment", auth(t1), body, "application/json")->status, 404);
  EXPECT_EQ(cli.Post(path, auth(t1), "{not json", "application/json")->status, 400);
  auto ok = cli.Post(path, auth(t1), body, "application/json");
  ASSERT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body)["status"], "stored");
  auto again = cli.Post(path, auth(t1), body, "application/json");
  EXPECT_EQ(again->status, 409);
  EXPECT_EQ(json::parse(again->body)["error"], "conflict");

  auto stats = cli.Get("/stats/agreement", auth(t2));
  ASSERT_EQ(stats->status, 200);
  EXPECT_EQ(json::parse(stats->body)["version"], kApiVersion);
  server.stop();

  auto stored = log.load();
  ASSERT_EQ(stored.size(), 1u);
  EXPECT_EQ(stored[0].annotator, "human:ann1");
}
