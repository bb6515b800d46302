#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "advfact/adjudication.hpp"
#include "advfact/engines.hpp"

namespace httplib {
class Server;
}

namespace advfact::annotation {

inline constexpr int kApiVersion = 1;

struct AnnotatorProfile {
  std::string id;
  std::string display_name;
  /// Maximum tasks served to this annotator; 0 = unlimited.
  int quota = 0;
};

/// One (probe, engine response) pair to be judged.
struct TaskItem {
  std::string task_id;
  judge::ProbeInfo probe;
  engines::EngineResponse response;
};

/// Items in (instance, engine key) order with ids "task-0001", ...
std::vector<TaskItem> make_tasks(const std::map<std::string, judge::ProbeInfo>& probes,
                                 const std::vector<engines::EngineResponse>& responses);

enum class TaskStatus { open, submitted, superseded };
std::string to_string(TaskStatus s);

/// What an annotator sees: statement and citation structure, the probe text,
/// form and method. No instance id, label, perturbations or gold answer.
json task_payload(const TaskItem& item, const std::string& annotator_id, TaskStatus status);

/// Append-only judgment file with an "advfact.judgments" header.
class JudgmentLog {
 public:
  explicit JudgmentLog(std::filesystem::path path, json header_extra = json::object());
  void append(const judge::Judgment& j);
  std::vector<judge::Judgment> load() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

/// Bearer tokens per annotator, stored as SHA-256 digests.
class TokenRegistry {
 public:
  /// Loads `path` when it exists.
  explicit TokenRegistry(std::filesystem::path path);
  /// Creates or replaces the annotator's token and returns it in clear.
  std::string issue(const AnnotatorProfile& profile);
  std::optional<std::string> authenticate(std::string_view token) const;
  std::vector<AnnotatorProfile> annotators() const;

 private:
  void save() const;

  std::filesystem::path path_;
  std::map<std::string, AnnotatorProfile> profiles_;
  std::map<std::string, std::string> digest_to_id_;
};

struct ServiceOptions {
  /// Distinct annotators per item.
  std::size_t redundancy = 5;
  judge::ScoringPolicy policy;
  std::function<std::string()> clock;
};

class AnnotationService {
 public:
  /// `existing` are judgments already on file; they count as submissions.
  AnnotationService(std::vector<TaskItem> tasks, std::vector<AnnotatorProfile> annotators,
                    std::function<void(const judge::Judgment&)> persist, ServiceOptions options = {},
                    const std::vector<judge::Judgment>& existing = {});

  /// The oldest task assigned to the annotator and not yet submitted, else a
  /// fresh assignment to an item with fewer than k assignees the annotator
  /// has not seen. nullopt when nothing is left. AuthError for an unknown
  /// annotator.
  std::optional<json> next_task(const std::string& annotator_id);

  /// Validates and persists the judgment. ConflictError on resubmission,
  /// PreconditionError for an unknown task or one not assigned to the
  /// annotator, ValidationError on a bad payload.
  json submit(const std::string& annotator_id, const std::string& task_id, const json& payload);

  bool has_task(const std::string& task_id) const;
  json agreement_stats() const;
  std::vector<judge::Judgment> judgments() const;
  void add_annotator(const AnnotatorProfile& profile);

  /// Judgment a payload would produce, without storing it.
  judge::Judgment to_judgment(const TaskItem& item, const std::string& annotator_id, const json& payload) const;

 private:
  struct State {
    std::vector<std::string> assigned;  // in assignment order
    std::set<std::string> submitted;
  };

  std::vector<TaskItem> tasks_;
  std::map<std::string, std::size_t> task_index_;
  std::map<std::string, AnnotatorProfile> annotators_;
  std::function<void(const judge::Judgment&)> persist_;
  ServiceOptions options_;
  mutable std::mutex mu_;
  std::vector<State> state_;
  std::map<std::string, std::size_t> served_;
  std::vector<judge::Judgment> judgments_;
};

/// HTTP front end: GET /healthz, GET /tasks/next, POST /tasks/{id}/judgment,
/// GET /stats/agreement.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationService& service, const TokenRegistry& tokens);
  ~AnnotationServer();
  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  /// Runs on a background thread.
  void start();
  void stop();

 private:
  AnnotationService& service_;
  const TokenRegistry& tokens_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace advfact::annotation
