#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "advfact/adjudication.hpp"
#include "advfact/corpus.hpp"
#include "advfact/metrics.hpp"
#include "advfact/mock_engine.hpp"
#include "advfact/suite.hpp"

namespace advfact::testing {

std::filesystem::path source_path(const std::string& rel);
std::filesystem::path fixture_path(const std::string& rel);

/// Bundled fixture snapshot and annotated statements, loaded once.
struct FixtureWorld {
  corpus::KnowledgeSnapshot snapshot;
  corpus::AnnotatedCorpus corpus;
  std::unique_ptr<engines::SnapshotIndex> index;
};
const FixtureWorld& fixture_world();

/// Suite at seed 7 with the given config (default config when omitted).
attack::AttackSuite fixture_suite(const attack::SuiteConfig& config = {}, std::uint64_t seed = 7);

/// Removes itself on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "advfact");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Probe described in the transcript fixture format.
judge::ProbeInfo probe_from_json(const json& j);
/// Parses a bracket_numeric answer into a response.
engines::EngineResponse response_from_answer(const std::string& instance_id, const std::string& raw,
                                             const std::string& engine = "fixture", const std::string& mode = "");

/// One published per-engine aggregate: O originals, C answered correctly, Tc attacks per correct
/// original and Ti per incorrect one, W1 and W2 wrong answers among them.
struct AggregateShape {
  std::string engine;
  int originals = 0;
  int correct = 0;
  int per_correct = 0;
  int per_incorrect = 0;
  int wrong_correct = 0;
  int wrong_incorrect = 0;
};
/// Judged records realizing the shape; wrong answers are dealt round-robin.
std::vector<metrics::EvalRecord> records_for_shape(const AggregateShape& shape);

std::string read_file(const std::filesystem::path& p);
/// Every regular file under `dir` by relative path, with contents.
std::vector<std::pair<std::string, std::string>> tree_contents(const std::filesystem::path& dir);

}  // namespace advfact::testing
