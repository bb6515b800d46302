#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "advfact/adjudication.hpp"
#include "advfact/annotation_service.hpp"
#include "advfact/corpus.hpp"
#include "advfact/engines.hpp"
#include "advfact/metrics.hpp"
#include "advfact/suite.hpp"

namespace advfact::pipeline {

enum class Stage { ingest, annotate_corpus, generate, query, judge, metrics, report };

const std::vector<Stage>& all_stages();
std::string to_string(Stage s);
Stage stage_from_string(std::string_view s);
/// Comma-separated stage names, or "all".
std::vector<Stage> parse_stages(std::string_view list);

struct PipelineConfig {
  /// Relative paths in the config resolve against this directory.
  std::filesystem::path base_dir;
  json raw;
  std::string run_id;
  std::uint64_t seed = 7;
  /// Fixed timestamps and zero latency everywhere.
  bool fixed_clock = false;
  std::filesystem::path snapshot_path;
  std::filesystem::path statements_path;
  attack::SuiteConfig suite;
  std::vector<engines::EngineSpec> engines;
  json judge = json{{"kind", "rules"}};
  judge::ScoringPolicy scoring;
  std::size_t redundancy = 5;
  /// "all" responses or only the "pending" ones the automatic judge left.
  std::string annotation_scope = "all";
  std::string annotation_host = "127.0.0.1";
  int annotation_port = 8080;
  std::vector<std::vector<std::string>> group_by;
  metrics::Averaging averaging = metrics::Averaging::macro;
  /// Over the config document and the seed.
  std::string digest;

  /// Per-section digests, for mismatch reports.
  std::map<std::string, std::string> section_digests() const;
};

/// Throws ConfigError on invalid content, IoError when unreadable.
PipelineConfig parse_config(const json& j, const std::filesystem::path& base_dir,
                            std::optional<std::uint64_t> seed_override = std::nullopt);
PipelineConfig load_config(const std::filesystem::path& path,
                           std::optional<std::uint64_t> seed_override = std::nullopt);

inline constexpr std::string_view kManifestFormat = "advfact.manifest";
inline constexpr std::string_view kPendingFormat = "advfact.pending";

struct RunOptions {
  engines::HttpTransport transport;
  /// Recorded transcripts (a file, a transcripts/ directory or a run
  /// directory) used instead of live queries.
  std::optional<std::filesystem::path> replay_from;
  std::function<void(const std::string&)> log;
};

/// Exclusive lock on a run directory, held by an O_EXCL lock file.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

class Pipeline {
 public:
  Pipeline(std::filesystem::path run_dir, PipelineConfig config, RunOptions options = {});

  /// Runs the requested stages in pipeline order and returns the manifest.
  /// A completed stage with unchanged digest is skipped; a changed digest is
  /// refused with PreconditionError. Missing predecessors raise
  /// PreconditionError, missing credentials ConfigError before any stage runs.
  json run(const std::vector<Stage>& stages);

  /// Validates a judgment file against stored responses and appends its
  /// human judgments to judgments/human.jsonl. Returns the count.
  std::size_t import_human_judgments(const std::filesystem::path& file);

  /// Issues a bearer token for an annotator (stored hashed).
  std::string issue_token(const annotation::AnnotatorProfile& profile);

  /// Serves the annotation API until the process is stopped. `on_ready`
  /// receives the bound port and the server, which the caller may stop.
  void serve_annotation(const std::string& host, int port,
                        const std::function<void(int, annotation::AnnotationServer&)>& on_ready = {});

  json manifest() const;
  corpus::KnowledgeSnapshot snapshot() const;
  corpus::AnnotatedCorpus corpus() const;
  attack::AttackSuite suite() const;
  /// Latest successful response per (engine, instance), in (engine key,
  /// instance) order.
  std::vector<engines::EngineResponse> responses() const;
  std::vector<judge::Judgment> judgments() const;
  std::vector<metrics::EvalRecord> records() const;
  std::vector<metrics::MetricsReport> reports() const;

  const std::filesystem::path& run_dir() const { return run_dir_; }
  const PipelineConfig& config() const { return config_; }
  std::filesystem::path transcript_path(const engines::EngineSpec& spec) const;

 private:
  json header_extra() const;
  std::string now() const;
  void log(const std::string& msg) const;
  void save_manifest(const json& m) const;
  json load_or_create_manifest() const;
  std::string stage_digest(Stage s, const json& manifest) const;
  std::string stage_inputs(Stage s) const;
  void require_done(const json& manifest, Stage s, Stage needed) const;

  void run_ingest();
  void run_annotate();
  void run_generate();
  void run_query();
  void run_judge();
  void run_metrics();
  void run_report();

  std::filesystem::path run_dir_;
  PipelineConfig config_;
  RunOptions options_;
};

}  // namespace advfact::pipeline
