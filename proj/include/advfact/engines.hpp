#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/citations.hpp"
#include "advfact/mock_engine.hpp"
#include "advfact/response.hpp"

namespace advfact::engines {

enum class EngineKind { http_chat, http_search, mock, command };

std::string to_string(EngineKind k);
EngineKind engine_kind_from_string(std::string_view s);

struct EngineSpec {
  std::string name;
  EngineKind kind = EngineKind::mock;
  std::string mode;
  std::string endpoint;
  /// argv for kind=command; the prompt is written to its stdin.
  std::vector<std::string> command;
  /// Name of the environment variable holding the credential.
  std::string auth_env;
  MarkerStyle marker_style = MarkerStyle::bracket_numeric;
  double rate_limit_per_minute = 0;  // 0 = unlimited
  double timeout_s = 60;
  int max_retries = 3;
  int backoff_ms = 500;
  /// Request body; every string "{{prompt}}" / "{{mode}}" is substituted.
  json request_template;
  /// JSON pointer to the answer text in the reply.
  std::string response_pointer = "/choices/0/message/content";
  /// Optional JSON pointer to an array of {url, title, snippet} objects,
  /// rendered as a citation list after the answer text.
  std::string citations_pointer;
  MockEngineConfig mock;

  std::string key() const { return engine_key(name, mode); }
};

void to_json(json& j, const EngineSpec& s);
/// Throws ConfigError on missing fields or a malformed auth variable name.
void from_json(const json& j, EngineSpec& s);

std::vector<EngineSpec> parse_engine_config(const json& j);

/// Throws ConfigError naming the first live engine whose auth variable is unset.
void check_credentials(const std::vector<EngineSpec>& engines);

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTranscriptFormat = "advfact.transcript";

struct TranscriptRecord {
  std::string instance_id;
  std::string engine;
  std::string mode;
  std::string prompt;
  bool ok = false;
  std::string error_kind;  // "timeout", "external", "config"
  std::string error;
  int attempts = 0;
  std::optional<EngineResponse> response;
  std::string timestamp;
};

void to_json(json& j, const TranscriptRecord& r);
void from_json(const json& j, TranscriptRecord& r);

/// Append-only JSONL file; appends are serialized.
class TranscriptStore {
 public:
  TranscriptStore(std::filesystem::path path, json header_extra = json::object());
  void append(const TranscriptRecord& record);
  std::size_t appended() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::size_t appended_ = 0;
};

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path);

/// Recorded responses keyed by (engine key, instance id).
class ReplaySource {
 public:
  void add(const TranscriptRecord& r);
  void add_file(const std::filesystem::path& path);
  const EngineResponse* find(const std::string& engine_key, const std::string& instance_id) const;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, EngineResponse> responses_;
};

// ---------------------------------------------------------------------------
// Querying
// ---------------------------------------------------------------------------

struct HttpReply {
  int status = 0;  // 0: connection failure
  std::string body;
  std::string error;
};

using HttpTransport = std::function<HttpReply(const std::string& url, const std::string& body,
                                              const std::map<std::string, std::string>& headers, double timeout_s)>;

/// httplib-backed POST.
HttpReply http_post(const std::string& url, const std::string& body, const std::map<std::string, std::string>& headers,
                    double timeout_s);

class TokenBucket {
 public:
  explicit TokenBucket(double per_minute, double burst = 1);
  /// Blocks until a token is available. No-op when unlimited.
  void acquire();

 private:
  double rate_per_s_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

struct ClientOptions {
  /// Fixed timestamps and zero latency, for byte-reproducible runs.
  bool deterministic_clock = false;
  HttpTransport transport;  // defaults to http_post
  std::function<void(int)> sleep_ms;  // defaults to std::this_thread::sleep_for
};

/// One engine. Every query call appends exactly one transcript record,
/// including failures, before returning or throwing.
class EngineClient {
 public:
  /// Throws ConfigError when the auth variable is unset (before any network
  /// traffic). `snapshot` is required for kind=mock.
  EngineClient(EngineSpec spec, TranscriptStore& store, const SnapshotIndex* snapshot, ClientOptions options = {});

  EngineResponse query(const std::string& instance_id, const std::string& prompt);
  const EngineSpec& spec() const { return spec_; }

 private:
  std::string call_raw(const std::string& prompt, int* attempts);
  std::string now() const;

  EngineSpec spec_;
  TranscriptStore& store_;
  const SnapshotIndex* snapshot_;
  ClientOptions options_;
  TokenBucket bucket_;
  std::string secret_;
};

/// Renders a request body from the template.
json render_request(const json& request_template, const std::string& prompt, const std::string& mode);

/// Extracts the answer text (and citation list) from an HTTP reply body.
std::string extract_answer(const EngineSpec& spec, const std::string& body);

}  // namespace advfact::engines
