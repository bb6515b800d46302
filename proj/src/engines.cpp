#include "advfact/engines.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <regex>
#include <thread>

#include <httplib.h>

#include "advfact/text.hpp"

namespace advfact::engines {

// ---------------------------------------------------------------------------
// Response JSON
// ---------------------------------------------------------------------------

std::string engine_key(const std::string& engine, const std::string& mode) {
  return mode.empty() ? engine : engine + "/" + mode;
}

void to_json(json& j, const EngineResponse& r) {
  j = json{{"instance_id", r.instance_id}, {"engine", r.engine},         {"mode", r.mode},
           {"raw_text", r.raw_text},       {"statements", r.statements}, {"citations", r.citations},
           {"latency_ms", r.latency_ms},   {"timestamp", r.timestamp}};
}

void from_json(const json& j, EngineResponse& r) {
  j.at("instance_id").get_to(r.instance_id);
  j.at("engine").get_to(r.engine);
  r.mode = j.value("mode", std::string());
  j.at("raw_text").get_to(r.raw_text);
  j.at("statements").get_to(r.statements);
  j.at("citations").get_to(r.citations);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.timestamp = j.value("timestamp", std::string());
  check_referential_integrity(r.statements, r.citations);
}

// ---------------------------------------------------------------------------
// Engine specs
// ---------------------------------------------------------------------------

std::string to_string(EngineKind k) {
  switch (k) {
    case EngineKind::http_chat:
      return "http_chat";
    case EngineKind::http_search:
      return "http_search";
    case EngineKind::mock:
      return "mock";
    case EngineKind::command:
      return "command";
  }
  return "mock";
}

EngineKind engine_kind_from_string(std::string_view s) {
  if (s == "http_chat") return EngineKind::http_chat;
  if (s == "http_search") return EngineKind::http_search;
  if (s == "mock") return EngineKind::mock;
  if (s == "command") return EngineKind::command;
  throw ConfigError("unknown engine kind '" + std::string(s) + "'");
}

void to_json(json& j, const EngineSpec& s) {
  j = json{{"name", s.name},
           {"kind", to_string(s.kind)},
           {"mode", s.mode},
           {"marker_style", to_string(s.marker_style)},
           {"rate_limit_per_minute", s.rate_limit_per_minute},
           {"timeout_s", s.timeout_s},
           {"max_retries", s.max_retries},
           {"backoff_ms", s.backoff_ms}};
  if (!s.auth_env.empty()) j["auth_env"] = s.auth_env;
  if (!s.endpoint.empty()) j["endpoint"] = s.endpoint;
  if (!s.command.empty()) j["command"] = s.command;
  if (s.kind == EngineKind::http_chat || s.kind == EngineKind::http_search) {
    j["request_template"] = s.request_template;
    j["response_pointer"] = s.response_pointer;
    if (!s.citations_pointer.empty()) j["citations_pointer"] = s.citations_pointer;
  }
  if (s.kind == EngineKind::mock) j["mock"] = s.mock;
}

void from_json(const json& j, EngineSpec& s) {
  if (!j.is_object()) throw ConfigError("engine entry must be an object");
  if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty()) {
    throw ConfigError("engine entry needs a name");
  }
  s.name = j["name"].get<std::string>();
  s.kind = engine_kind_from_string(j.value("kind", std::string("mock")));
  s.mode = j.value("mode", std::string());
  s.endpoint = j.value("endpoint", std::string());
  s.command = j.value("command", std::vector<std::string>{});
  s.auth_env = j.value("auth_env", std::string());
  s.marker_style = marker_style_from_string(j.value("marker_style", std::string("bracket_numeric")));
  s.rate_limit_per_minute = j.value("rate_limit_per_minute", 0.0);
  s.timeout_s = j.value("timeout_s", 60.0);
  s.max_retries = j.value("max_retries", 3);
  s.backoff_ms = j.value("backoff_ms", 500);
  static const std::regex env_name("^[A-Z_][A-Z0-9_]*$");
  if (!s.auth_env.empty() && !std::regex_match(s.auth_env, env_name)) {
    throw ConfigError("engine " + s.name + ": auth_env must name an environment variable, not hold a value");
  }
  if (s.rate_limit_per_minute < 0 || s.timeout_s <= 0 || s.max_retries < 0 || s.backoff_ms < 0) {
    throw ConfigError("engine " + s.name + ": negative rate limit, timeout or retry setting");
  }
  switch (s.kind) {
    case EngineKind::http_chat:
    case EngineKind::http_search: {
      if (s.endpoint.rfind("http://", 0) != 0 && s.endpoint.rfind("https://", 0) != 0) {
        throw ConfigError("engine " + s.name + ": endpoint must be an http(s) URL");
      }
      bool chat = s.kind == EngineKind::http_chat;
      s.request_template = j.value(
          "request_template", chat ? json{{"messages", json::array({json{{"role", "user"}, {"content", "{{prompt}}"}}})}}
                                   : json{{"query", "{{prompt}}"}});
      s.response_pointer = j.value("response_pointer", std::string(chat ? "/choices/0/message/content" : "/answer"));
      s.citations_pointer = j.value("citations_pointer", std::string());
      break;
    }
    case EngineKind::command:
      if (s.command.empty()) throw ConfigError("engine " + s.name + ": command kind needs a command line");
      break;
    case EngineKind::mock:
      s.mock = j.value("mock", MockEngineConfig{});
      if (s.mode.empty()) s.mode = to_string(s.mock.behavior);
      s.marker_style = MarkerStyle::bracket_numeric;
      break;
  }
}

std::vector<EngineSpec> parse_engine_config(const json& j) {
  const json& list = j.is_object() && j.contains("engines") ? j["engines"] : j;
  if (!list.is_array() || list.empty()) throw ConfigError("engine config needs a non-empty 'engines' array");
  std::vector<EngineSpec> out;
  for (const auto& e : list) {
    EngineSpec s = e.get<EngineSpec>();
    for (const auto& prev : out) {
      if (prev.key() == s.key()) throw ConfigError("duplicate engine " + s.key());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void check_credentials(const std::vector<EngineSpec>& engines) {
  for (const auto& e : engines) {
    if (e.auth_env.empty()) continue;
    const char* v = std::getenv(e.auth_env.c_str());
    if (!v || !*v) throw ConfigError("engine " + e.key() + ": environment variable " + e.auth_env + " is not set");
  }
}

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

void to_json(json& j, const TranscriptRecord& r) {
  j = json{{"instance_id", r.instance_id}, {"engine", r.engine},     {"mode", r.mode},
           {"prompt", r.prompt},           {"status", r.ok ? "ok" : "error"}, {"attempts", r.attempts},
           {"timestamp", r.timestamp}};
  if (r.ok) {
    j["response"] = *r.response;
  } else {
    j["error_kind"] = r.error_kind;
    j["error"] = r.error;
  }
}

void from_json(const json& j, TranscriptRecord& r) {
  j.at("instance_id").get_to(r.instance_id);
  j.at("engine").get_to(r.engine);
  r.mode = j.value("mode", std::string());
  j.at("prompt").get_to(r.prompt);
  std::string status = j.at("status").get<std::string>();
  if (status != "ok" && status != "error") throw ValidationError("unknown transcript status '" + status + "'");
  r.ok = status == "ok";
  r.attempts = j.value("attempts", 0);
  r.timestamp = j.value("timestamp", std::string());
  if (r.ok) {
    r.response = j.at("response").get<EngineResponse>();
  } else {
    r.error_kind = j.value("error_kind", std::string());
    r.error = j.value("error", std::string());
  }
}

TranscriptStore::TranscriptStore(std::filesystem::path path, json header_extra) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    // Appending to an existing transcript: the header must match.
    parse_jsonl(read_text(path_), kTranscriptFormat);
    return;
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  json header = make_header(kTranscriptFormat);
  for (auto& [k, v] : header_extra.items()) header[k] = v;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw IoError("cannot create " + path_.string());
  out << header.dump() << '\n';
}

void TranscriptStore::append(const TranscriptRecord& record) {
  json j = record;
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path_.string());
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw IoError("write failed on " + path_.string());
  ++appended_;
}

std::size_t TranscriptStore::appended() const {
  std::lock_guard<std::mutex> lock(mu_);
  return appended_;
}

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path) {
  auto doc = read_jsonl(path, kTranscriptFormat);
  std::vector<TranscriptRecord> out;
  for (const auto& rec : doc.records) {
    try {
      out.push_back(rec.value.get<TranscriptRecord>());
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), rec.line);
    } catch (const ValidationError& e) {
      throw ParseError(path.string() + ": " + e.what(), rec.line);
    }
  }
  return out;
}

void ReplaySource::add(const TranscriptRecord& r) {
  if (!r.ok) return;
  // Later records win: a retried query supersedes the earlier one.
  responses_[{engine_key(r.engine, r.mode), r.instance_id}] = *r.response;
}

void ReplaySource::add_file(const std::filesystem::path& path) {
  for (const auto& r : load_transcript(path)) add(r);
}

const EngineResponse* ReplaySource::find(const std::string& key, const std::string& instance_id) const {
  auto it = responses_.find({key, instance_id});
  return it == responses_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

HttpReply http_post(const std::string& url, const std::string& body, const std::map<std::string, std::string>& headers,
                    double timeout_s) {
  std::size_t scheme = url.find("://");
  std::size_t path_at = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  std::string origin = path_at == std::string::npos ? url : url.substr(0, path_at);
  std::string path = path_at == std::string::npos ? "/" : url.substr(path_at);
  httplib::Client cli(origin);
  auto secs = static_cast<time_t>(timeout_s);
  auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers h;
  for (const auto& [k, v] : headers) {
    if (k != "Content-Type") h.emplace(k, v);
  }
  auto res = cli.Post(path, h, body, "application/json");
  HttpReply reply;
  if (!res) {
    reply.error = httplib::to_string(res.error());
    return reply;
  }
  reply.status = res->status;
  reply.body = res->body;
  return reply;
}

TokenBucket::TokenBucket(double per_minute, double burst)
    : rate_per_s_(per_minute / 60.0), burst_(burst), tokens_(burst), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_per_s_ <= 0) return;
  std::unique_lock<std::mutex> lock(mu_);
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_per_s_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    double wait = (1.0 - tokens_) / rate_per_s_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    lock.lock();
  }
}

namespace {

void substitute(json& node, const std::string& prompt, const std::string& mode) {
  if (node.is_string()) {
    std::string s = node.get<std::string>();
    for (auto [key, value] : {std::pair<std::string, const std::string*>{"{{prompt}}", &prompt},
                              std::pair<std::string, const std::string*>{"{{mode}}", &mode}}) {
      std::size_t pos;
      while ((pos = s.find(key)) != std::string::npos) s.replace(pos, key.size(), *value);
    }
    node = s;
  } else if (node.is_array() || node.is_object()) {
    for (auto& child : node) substitute(child, prompt, mode);
  }
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

std::string run_command(const std::vector<std::string>& argv, const std::string& prompt) {
  auto tmp = std::filesystem::temp_directory_path() /
             ("advfact-prompt-" + std::to_string(fnv1a64(prompt)) + "-" +
              std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  {
    std::ofstream f(tmp, std::ios::binary);
    f << prompt;
  }
  std::string cmd;
  for (const auto& a : argv) cmd += (cmd.empty() ? "" : " ") + shell_quote(a);
  cmd += " < " + shell_quote(tmp.string());
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    std::filesystem::remove(tmp);
    throw ExternalError("cannot start command " + argv.front());
  }
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  std::filesystem::remove(tmp);
  if (status != 0) throw ExternalError("command " + argv.front() + " exited with status " + std::to_string(status));
  return out;
}

}  // namespace

json render_request(const json& request_template, const std::string& prompt, const std::string& mode) {
  json body = request_template;
  substitute(body, prompt, mode);
  return body;
}

std::string extract_answer(const EngineSpec& spec, const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ExternalError("engine " + spec.key() + " returned invalid JSON: " + e.what());
  }
  json::json_pointer ptr(spec.response_pointer);
  if (!j.contains(ptr) || !j[ptr].is_string()) {
    throw ExternalError("engine " + spec.key() + " reply has no string at " + spec.response_pointer);
  }
  std::string text = j[ptr].get<std::string>();
  if (spec.citations_pointer.empty() || spec.marker_style == MarkerStyle::url_inline) return text;
  json::json_pointer cptr(spec.citations_pointer);
  if (!j.contains(cptr) || !j[cptr].is_array()) return text;
  std::size_t n = 0;
  for (const auto& c : j[cptr]) {
    ++n;
    std::string url = c.value("url", c.value("link", c.value("title", std::string())));
    std::string snippet = c.value("snippet", std::string());
    std::string id = c.contains("id") ? (c["id"].is_string() ? c["id"].get<std::string>() : c["id"].dump())
                                      : std::to_string(n);
    text += spec.marker_style == MarkerStyle::bracket_numeric ? "\n[" + id + "]: " : "\n" + id + ". ";
    text += url.empty() ? "-" : url;
    if (!snippet.empty()) text += " \"" + snippet + "\"";
  }
  return text;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

EngineClient::EngineClient(EngineSpec spec, TranscriptStore& store, const SnapshotIndex* snapshot,
                           ClientOptions options)
    : spec_(std::move(spec)),
      store_(store),
      snapshot_(snapshot),
      options_(std::move(options)),
      bucket_(spec_.rate_limit_per_minute) {
  if (!spec_.auth_env.empty()) {
    const char* v = std::getenv(spec_.auth_env.c_str());
    if (!v || !*v) throw ConfigError("engine " + spec_.key() + ": environment variable " + spec_.auth_env + " is not set");
    secret_ = v;
  }
  if (spec_.kind == EngineKind::mock && !snapshot_) throw ConfigError("mock engine " + spec_.key() + " needs a snapshot");
  if (!options_.transport) options_.transport = http_post;
  if (!options_.sleep_ms) {
    options_.sleep_ms = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
  }
}

std::string EngineClient::now() const {
  if (options_.deterministic_clock) return "1970-01-01T00:00:00Z";
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string EngineClient::call_raw(const std::string& prompt, int* attempts) {
  switch (spec_.kind) {
    case EngineKind::mock:
      *attempts = 1;
      bucket_.acquire();
      return mock_raw_answer(spec_.mock, *snapshot_, prompt);
    case EngineKind::command:
      *attempts = 1;
      bucket_.acquire();
      return run_command(spec_.command, prompt);
    case EngineKind::http_chat:
    case EngineKind::http_search:
      break;
  }
  std::map<std::string, std::string> headers{{"Content-Type", "application/json"}};
  if (!secret_.empty()) headers["Authorization"] = "Bearer " + secret_;
  std::string body = render_request(spec_.request_template, prompt, spec_.mode).dump();
  std::string last;
  for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
    *attempts = attempt + 1;
    bucket_.acquire();
    HttpReply r = options_.transport(spec_.endpoint, body, headers, spec_.timeout_s);
    if (r.status >= 200 && r.status < 300) return extract_answer(spec_, r.body);
    bool transient = r.status == 0 || r.status == 429 || r.status >= 500;
    last = r.status == 0 ? "connection failed (" + r.error + ")" : "HTTP " + std::to_string(r.status);
    if (!transient) throw ExternalError("engine " + spec_.key() + ": " + last);
    if (attempt < spec_.max_retries) options_.sleep_ms(spec_.backoff_ms << attempt);
  }
  throw TimeoutError("engine " + spec_.key() + ": gave up after " + std::to_string(*attempts) + " attempts, last " + last);
}

EngineResponse EngineClient::query(const std::string& instance_id, const std::string& prompt) {
  TranscriptRecord rec;
  rec.instance_id = instance_id;
  rec.engine = spec_.name;
  rec.mode = spec_.mode;
  rec.prompt = prompt;
  rec.timestamp = now();
  auto start = std::chrono::steady_clock::now();
  auto fail = [&](const char* kind, const std::string& what) {
    rec.ok = false;
    rec.error_kind = kind;
    rec.error = what;
    store_.append(rec);
  };
  try {
    std::string raw = call_raw(prompt, &rec.attempts);
    EngineResponse r;
    r.instance_id = instance_id;
    r.engine = spec_.name;
    r.mode = spec_.mode;
    r.raw_text = raw;
    auto parsed = parse_citations(raw, spec_.marker_style);
    r.statements = std::move(parsed.statements);
    r.citations = std::move(parsed.citations);
    check_referential_integrity(r.statements, r.citations);
    r.timestamp = rec.timestamp;
    if (!options_.deterministic_clock) {
      r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    rec.ok = true;
    rec.response = r;
    store_.append(rec);
    return r;
  } catch (const TimeoutError& e) {
    fail("timeout", e.what());
    throw;
  } catch (const ExternalError& e) {
    fail("external", e.what());
    throw;
  } catch (const Error& e) {
    fail("error", e.what());
    throw;
  }
}

}  // namespace advfact::engines
