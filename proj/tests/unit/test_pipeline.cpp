#include <gtest/gtest.h>

#include <httplib.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "advfact/pipeline.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using namespace advfact::pipeline;
using advfact::testing::read_file;
using advfact::testing::source_path;
using advfact::testing::TempDir;
using advfact::testing::tree_contents;

namespace {

json small_config() {
  return {{"run_id", "unit"},
          {"seed", 7},
          {"clock", "fixed"},
          {"corpus",
           {{"snapshot", source_path("data/fixtures/snapshot.jsonl").string()},
            {"statements", source_path("data/fixtures/statements.jsonl").string()}}},
          {"engines", {{{"name", "mock"}, {"kind", "mock"}, {"mock", {{"behavior", "gullible"}}}}}},
          {"judge", {{"kind", "rules"}}},
          {"annotation", {{"redundancy", 2}}}};
}

PipelineConfig cfg(const json& j = small_config(), std::optional<std::uint64_t> seed = std::nullopt) {
  return parse_config(j, source_path("config"), seed);
}

std::vector<std::pair<std::string, std::string>> outputs(const std::filesystem::path& dir) {
  auto all = tree_contents(dir);
  std::erase_if(all, [](const auto& f) { return f.first == "manifest.json"; });
  return all;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(ADVFACT_CLI_PATH) + " -q " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, Errors) {
  EXPECT_NO_THROW(cfg());
  auto j = small_config();
  j["clock"] = "lunar";
  EXPECT_THROW(cfg(j), ConfigError);
  j = small_config();
  j["engines"] = json::array();
  EXPECT_THROW(cfg(j), ConfigError);
  j = small_config();
  j["annotation"]["redundancy"] = 0;
  EXPECT_THROW(cfg(j), ConfigError);
  EXPECT_THROW(load_config(source_path("config/missing.json")), Error);
}

TEST(Config, DigestCoversSeed) {
  EXPECT_EQ(cfg().digest, cfg().digest);
  EXPECT_NE(cfg().digest, cfg(small_config(), 8).digest);
  EXPECT_EQ(cfg(small_config(), 8).seed, 8u);
}

TEST(Config, Stages) {
  EXPECT_EQ(parse_stages("all"), all_stages());
  EXPECT_EQ(parse_stages("ingest,generate"), (std::vector<Stage>{Stage::ingest, Stage::generate}));
  EXPECT_THROW(parse_stages("ingest,dance"), ConfigError);
}

TEST(RunLockTest, SecondHolderIsRefused) {
  TempDir dir;
  RunLock first(dir.path());
  EXPECT_THROW(RunLock second(dir.path()), PreconditionError);
}

TEST(Pipeline, PredecessorsRequired) {
  TempDir dir;
  Pipeline p(dir.path(), cfg());
  EXPECT_THROW(p.run({Stage::generate}), PreconditionError);
}

TEST(Pipeline, MissingCredentialStopsBeforeAnyStage) {
  TempDir dir;
  auto j = small_config();
  j["engines"] = {{{"name", "live"}, {"kind", "http_chat"}, {"endpoint", "https://api.invalid/v1"},
                   {"auth_env", "ADVFACT_TEST_NO_SUCH_KEY"}}};
  ::unsetenv("ADVFACT_TEST_NO_SUCH_KEY");
  Pipeline p(dir.path(), cfg(j));
  EXPECT_THROW(p.run(all_stages()), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(dir / "suite"));
}

TEST(Pipeline, DeterministicIdempotentAndResumable) {
  TempDir a, b;
  Pipeline pa(a.path(), cfg());
  pa.run(all_stages());
  auto first = outputs(a.path());
  ASSERT_FALSE(first.empty());
  pa.run(all_stages());
  EXPECT_EQ(outputs(a.path()), first);

  Pipeline pb(b.path(), cfg());
  pb.run({Stage::ingest, Stage::annotate_corpus, Stage::generate});
  pb.run(all_stages());
  EXPECT_EQ(outputs(b.path()), first);

  auto m = pa.manifest();
  for (auto s : all_stages()) EXPECT_TRUE(m["stages"][to_string(s)]["done"].get<bool>()) << to_string(s);
}

TEST(Pipeline, ChangedConfigIsRefused) {
  TempDir dir;
  Pipeline p(dir.path(), cfg());
  p.run({Stage::ingest});
  auto j = small_config();
  j["suite"] = {{"hops", {1}}};
  Pipeline changed(dir.path(), cfg(j));
  try {
    changed.run({Stage::ingest});
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("suite"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, ReplayGivesIdenticalMetrics) {
  TempDir live, replayed;
  Pipeline p(live.path(), cfg());
  p.run(all_stages());
  RunOptions opts;
  opts.replay_from = live.path();
  Pipeline r(replayed.path(), cfg(), opts);
  r.run(all_stages());
  EXPECT_EQ(read_file(replayed / "reports/metrics.json"), read_file(live / "reports/metrics.json"));
  Pipeline again(live.path(), cfg(), opts);
  EXPECT_THROW(again.run({Stage::query}), PreconditionError);
}

TEST(Pipeline, HumanJudgmentsViaApiAndImportAgree) {
  TempDir api, imported, file;
  auto config = cfg();
  Pipeline pa(api.path(), config);
  pa.run(all_stages());
  Pipeline pi(imported.path(), config);
  pi.run(all_stages());
  auto before = read_file(api / "reports/metrics.json");

  std::vector<std::string> tokens{pa.issue_token({"ann1", "One", 0}), pa.issue_token({"ann2", "Two", 0})};
  pa.serve_annotation("127.0.0.1", 0, [&](int port, annotation::AnnotationServer&) {
    httplib::Client cli("127.0.0.1", port);
    for (int round = 0; round < 4; ++round) {
      for (const auto& t : tokens) {
        httplib::Headers h{{"Authorization", "Bearer " + t}};
        auto next = cli.Get("/tasks/next", h);
        ASSERT_EQ(next->status, 200);
        json task = json::parse(next->body)["task"];
        if (task.is_null()) continue;
        std::size_t s = task["rubric"]["statement_count"], c = task["rubric"]["citation_occurrences"];
        json body = {{"verdict", "deny"},
                     {"statement_support", std::vector<bool>(s, false)},
                     {"citation_support", std::vector<bool>(c, false)},
                     {"citation_relevant", std::vector<bool>(c, true)},
                     {"fluency", 2},
                     {"utility", 2}};
        auto res = cli.Post("/tasks/" + task["task_id"].get<std::string>() + "/judgment", h, body.dump(),
                            "application/json");
        ASSERT_EQ(res->status, 200) << res->body;
      }
    }
  });
  auto human = pa.judgments();
  ASSERT_FALSE(human.empty());

  std::ofstream(file / "human.jsonl") << read_file(api / "judgments/human.jsonl");
  EXPECT_EQ(pi.import_human_judgments(file / "human.jsonl"), 8u);
  EXPECT_THROW(pi.import_human_judgments(file / "human.jsonl"), ValidationError);

  pa.run({Stage::metrics, Stage::report});
  pi.run({Stage::metrics, Stage::report});
  EXPECT_NE(read_file(api / "reports/metrics.json"), before);
  EXPECT_EQ(tree_contents(api / "reports"), tree_contents(imported / "reports"));
}

TEST(Pipeline, ImportRejectsUnknownResponses) {
  TempDir dir, file;
  Pipeline p(dir.path(), cfg());
  p.run(all_stages());
  std::ofstream(file / "h.jsonl") << read_file(advfact::testing::fixture_path("judgments/human_5x10.jsonl"));
  EXPECT_THROW(p.import_human_judgments(file / "h.jsonl"), ValidationError);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  std::ofstream(dir / "config.json") << small_config().dump();
  std::ofstream(dir / "bad.json") << "{\"clock\": \"lunar\"}";
  std::string run = " --run-dir " + (dir / "run").string();
  std::string conf = " --config " + (dir / "config.json").string();
  EXPECT_EQ(run_cli(run + " --config " + (dir / "bad.json").string() + " ingest"), 1);
  EXPECT_EQ(run_cli(run + conf + " generate"), 2);
  EXPECT_EQ(run_cli(run + conf + " --stages ingest,annotate-corpus"), 0);
  EXPECT_EQ(run_cli(run + conf + " --seed 9 ingest"), 2);
  EXPECT_EQ(run_cli(run + conf + " judge --import " + (dir / "missing.jsonl").string()), 2);
  EXPECT_EQ(run_cli(run + conf + " --stages generate,query"), 0);
  EXPECT_EQ(run_cli(run + conf + " judge --import " + (dir / "missing.jsonl").string()), 3);
}
