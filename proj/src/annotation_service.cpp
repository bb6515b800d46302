#include "advfact/annotation_service.hpp"

#include <openssl/rand.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <regex>

#include <httplib.h>

#include "advfact/metrics.hpp"

namespace advfact::annotation {

std::vector<TaskItem> make_tasks(const std::map<std::string, judge::ProbeInfo>& probes,
                                 const std::vector<engines::EngineResponse>& responses) {
  std::vector<const engines::EngineResponse*> sorted;
  for (const auto& r : responses) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::make_pair(a->instance_id, engines::engine_key(a->engine, a->mode)) <
           std::make_pair(b->instance_id, engines::engine_key(b->engine, b->mode));
  });
  std::vector<TaskItem> out;
  for (const auto* r : sorted) {
    auto p = probes.find(r->instance_id);
    if (p == probes.end()) throw ValidationError("response for unknown probe " + r->instance_id);
    char id[32];
    std::snprintf(id, sizeof id, "task-%04zu", out.size() + 1);
    out.push_back({id, p->second, *r});
  }
  return out;
}

std::string to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::open:
      return "open";
    case TaskStatus::submitted:
      return "submitted";
    case TaskStatus::superseded:
      return "superseded";
  }
  return "open";
}

json task_payload(const TaskItem& item, const std::string& annotator_id, TaskStatus status) {
  json statements = json::array();
  std::size_t occurrences = 0;
  for (const auto& s : item.response.statements) {
    statements.push_back({{"text", s.text}, {"citation_refs", s.citation_refs}});
    occurrences += s.citation_refs.size();
  }
  json citations = json::array();
  for (const auto& c : item.response.citations) {
    citations.push_back({{"id", c.id}, {"url", c.url_or_title}, {"snippet", c.snippet}});
  }
  json instance = {{"text", item.probe.text}, {"form", attack::to_string(item.probe.form)}};
  instance["method"] = item.probe.kind == judge::ItemKind::cloze ? "cloze"
                       : item.probe.method                      ? attack::to_string(*item.probe.method)
                                                                : "original";
  return {{"version", kApiVersion},
          {"task_id", item.task_id},
          {"instance", instance},
          {"response",
           {{"engine", item.response.engine},
            {"mode", item.response.mode},
            {"statements", statements},
            {"citations", citations}}},
          {"rubric",
           {{"fields", {"verdict", "statement_support", "citation_support", "citation_relevant", "fluency", "utility"}},
            {"statement_count", item.response.statements.size()},
            {"citation_occurrences", occurrences},
            {"likert", {1, 5}},
            {"verdicts", {"affirm", "deny", "correct_with_fix", "abstain"}}}},
          {"assigned_to", annotator_id},
          {"status", to_string(status)}};
}

// ---------------------------------------------------------------------------
// Judgment log
// ---------------------------------------------------------------------------

JudgmentLog::JudgmentLog(std::filesystem::path path, json header_extra) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    parse_jsonl(read_text(path_), judge::kJudgmentFormat);
    return;
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  json header = make_header(judge::kJudgmentFormat);
  for (auto& [k, v] : header_extra.items()) header[k] = v;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw IoError("cannot create " + path_.string());
  out << header.dump() << '\n';
}

void JudgmentLog::append(const judge::Judgment& j) {
  json rec = j;
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path_.string());
  out << rec.dump() << '\n';
  out.flush();
  if (!out) throw IoError("write failed on " + path_.string());
}

std::vector<judge::Judgment> JudgmentLog::load() const { return judge::import_judgments(path_); }

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

TokenRegistry::TokenRegistry(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  json j;
  try {
    j = json::parse(read_text(path_));
  } catch (const json::exception& e) {
    throw ParseError(path_.string() + ": " + e.what(), 0);
  }
  for (const auto& a : j.value("annotators", json::array())) {
    AnnotatorProfile p{a.at("id").get<std::string>(), a.value("display_name", std::string()), a.value("quota", 0)};
    profiles_[p.id] = p;
    digest_to_id_[a.at("token_sha256").get<std::string>()] = p.id;
  }
}

std::string TokenRegistry::issue(const AnnotatorProfile& profile) {
  static const std::regex id_re("^[A-Za-z0-9_.-]+$");
  if (!std::regex_match(profile.id, id_re)) throw ValidationError("annotator id '" + profile.id + "' is not allowed");
  unsigned char raw[24];
  if (RAND_bytes(raw, sizeof raw) != 1) throw Error("random token generation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string token;
  for (unsigned char c : raw) {
    token.push_back(kHex[c >> 4]);
    token.push_back(kHex[c & 0xF]);
  }
  for (auto it = digest_to_id_.begin(); it != digest_to_id_.end();) {
    it = it->second == profile.id ? digest_to_id_.erase(it) : std::next(it);
  }
  profiles_[profile.id] = profile;
  digest_to_id_[sha256_hex(token)] = profile.id;
  save();
  return token;
}

std::optional<std::string> TokenRegistry::authenticate(std::string_view token) const {
  if (token.empty()) return std::nullopt;
  auto it = digest_to_id_.find(sha256_hex(token));
  if (it == digest_to_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<AnnotatorProfile> TokenRegistry::annotators() const {
  std::vector<AnnotatorProfile> out;
  for (const auto& [id, p] : profiles_) out.push_back(p);
  return out;
}

void TokenRegistry::save() const {
  json list = json::array();
  for (const auto& [digest, id] : digest_to_id_) {
    const auto& p = profiles_.at(id);
    list.push_back({{"id", p.id}, {"display_name", p.display_name}, {"quota", p.quota}, {"token_sha256", digest}});
  }
  std::sort(list.begin(), list.end(), [](const json& a, const json& b) { return a["id"] < b["id"]; });
  write_text_atomic(path_, json{{"annotators", list}}.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

AnnotationService::AnnotationService(std::vector<TaskItem> tasks, std::vector<AnnotatorProfile> annotators,
                                     std::function<void(const judge::Judgment&)> persist, ServiceOptions options,
                                     const std::vector<judge::Judgment>& existing)
    : tasks_(std::move(tasks)), persist_(std::move(persist)), options_(std::move(options)) {
  if (options_.redundancy < 1) throw ConfigError("annotation redundancy must be at least 1");
  for (const auto& a : annotators) {
    if (!annotators_.emplace(a.id, a).second) throw ValidationError("annotator '" + a.id + "' listed twice");
  }
  state_.resize(tasks_.size());
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> by_item;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (!task_index_.emplace(tasks_[i].task_id, i).second) {
      throw ValidationError("duplicate task id " + tasks_[i].task_id);
    }
    const auto& r = tasks_[i].response;
    by_item[{r.instance_id, r.engine, r.mode}] = i;
  }
  for (const auto& j : existing) {
    if (!judge::is_human(j)) continue;
    auto it = by_item.find({j.instance_id, j.engine, j.mode});
    if (it == by_item.end()) continue;
    std::string who = j.annotator.substr(6);
    auto& st = state_[it->second];
    if (std::find(st.assigned.begin(), st.assigned.end(), who) == st.assigned.end()) st.assigned.push_back(who);
    st.submitted.insert(who);
    ++served_[who];
    judgments_.push_back(j);
  }
}

void AnnotationService::add_annotator(const AnnotatorProfile& profile) {
  std::lock_guard<std::mutex> lock(mu_);
  annotators_[profile.id] = profile;
}

bool AnnotationService::has_task(const std::string& task_id) const { return task_index_.count(task_id) > 0; }

std::optional<json> AnnotationService::next_task(const std::string& annotator_id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto a = annotators_.find(annotator_id);
  if (a == annotators_.end()) throw AuthError("unknown annotator '" + annotator_id + "'");
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const auto& st = state_[i];
    bool mine = std::find(st.assigned.begin(), st.assigned.end(), annotator_id) != st.assigned.end();
    if (mine && !st.submitted.count(annotator_id)) return task_payload(tasks_[i], annotator_id, TaskStatus::open);
  }
  if (a->second.quota > 0 && served_[annotator_id] >= static_cast<std::size_t>(a->second.quota)) return std::nullopt;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    auto& st = state_[i];
    if (st.assigned.size() >= options_.redundancy) continue;
    if (std::find(st.assigned.begin(), st.assigned.end(), annotator_id) != st.assigned.end()) continue;
    st.assigned.push_back(annotator_id);
    ++served_[annotator_id];
    return task_payload(tasks_[i], annotator_id, TaskStatus::open);
  }
  return std::nullopt;
}

judge::Judgment AnnotationService::to_judgment(const TaskItem& item, const std::string& annotator_id,
                                               const json& payload) const {
  if (!payload.is_object()) throw ValidationError("judgment payload must be a JSON object");
  if (payload.contains("version") && payload["version"] != kApiVersion) {
    throw ValidationError("unsupported payload version " + payload["version"].dump());
  }
  json j = payload;
  j.erase("version");
  j["instance_id"] = item.response.instance_id;
  j["engine"] = item.response.engine;
  j["mode"] = item.response.mode;
  j["annotator"] = "human:" + annotator_id;
  j["timestamp"] = options_.clock ? options_.clock() : std::string();
  if (!j.contains("verdict")) throw ValidationError("payload needs a verdict");
  for (const char* key : {"statement_support", "citation_support", "citation_relevant"}) {
    if (!j.contains(key)) throw ValidationError(std::string("payload needs ") + key);
  }
  if (!j.contains("is_correct")) {
    // Annotators state the stance; correctness follows from the probe.
    if (!j["verdict"].is_string()) throw ValidationError("verdict must be a string");
    auto verdict = judge::verdict_from_string(j["verdict"].get<std::string>());
    std::string answer;
    for (const auto& s : item.response.statements) answer += (answer.empty() ? "" : " ") + s.text;
    j["is_correct"] = judge::decide_correct(item.probe, verdict, answer, options_.policy);
  }
  judge::Judgment out;
  try {
    out = j.get<judge::Judgment>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed judgment payload: ") + e.what());
  }
  judge::validate_judgment(out);
  judge::validate_against(out, item.response);
  return out;
}

json AnnotationService::submit(const std::string& annotator_id, const std::string& task_id, const json& payload) {
  std::unique_lock<std::mutex> lock(mu_);
  if (!annotators_.count(annotator_id)) throw AuthError("unknown annotator '" + annotator_id + "'");
  auto t = task_index_.find(task_id);
  if (t == task_index_.end()) throw PreconditionError("unknown task " + task_id);
  auto& st = state_[t->second];
  if (st.submitted.count(annotator_id)) {
    throw ConflictError(task_id + " was already submitted by " + annotator_id);
  }
  if (std::find(st.assigned.begin(), st.assigned.end(), annotator_id) == st.assigned.end()) {
    throw PreconditionError(task_id + " is not assigned to " + annotator_id);
  }
  judge::Judgment j = to_judgment(tasks_[t->second], annotator_id, payload);
  if (persist_) persist_(j);
  st.submitted.insert(annotator_id);
  judgments_.push_back(j);
  return {{"version", kApiVersion},
          {"status", "stored"},
          {"task_id", task_id},
          {"is_correct", j.is_correct},
          {"submissions", st.submitted.size()},
          {"redundancy", options_.redundancy}};
}

std::vector<judge::Judgment> AnnotationService::judgments() const {
  std::lock_guard<std::mutex> lock(mu_);
  return judgments_;
}

json AnnotationService::agreement_stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const judge::Judgment*>> by_item;
  for (const auto& j : judgments_) by_item[{j.instance_id, j.engine, j.mode}].push_back(&j);

  std::size_t complete = 0, partial = 0, unstarted = 0;
  for (const auto& st : state_) {
    if (st.submitted.size() >= options_.redundancy) {
      ++complete;
    } else if (st.submitted.empty()) {
      ++unstarted;
    } else {
      ++partial;
    }
  }

  using Getter = std::function<std::optional<std::string>(const judge::Judgment&)>;
  std::vector<std::pair<std::string, Getter>> fields = {
      {"is_correct", [](const judge::Judgment& j) { return std::optional<std::string>(j.is_correct ? "1" : "0"); }},
      {"verdict", [](const judge::Judgment& j) { return std::optional<std::string>(judge::to_string(j.verdict)); }},
      {"fluency",
       [](const judge::Judgment& j) {
         return j.fluency ? std::optional<std::string>(std::to_string(*j.fluency)) : std::nullopt;
       }},
      {"utility",
       [](const judge::Judgment& j) {
         return j.utility ? std::optional<std::string>(std::to_string(*j.utility)) : std::nullopt;
       }},
  };
  json out = {{"version", kApiVersion},
              {"redundancy", options_.redundancy},
              {"tasks", tasks_.size()},
              {"complete", complete},
              {"pending", partial},
              {"unstarted", unstarted},
              {"coverage", tasks_.empty() ? 0.0 : static_cast<double>(complete) / tasks_.size()},
              {"fields", json::object()},
              {"warnings", json::array()}};
  for (const auto& [name, get] : fields) {
    std::vector<std::vector<std::string>> labels;
    for (const auto& [key, js] : by_item) {
      std::vector<std::string> l;
      for (const auto* j : js) {
        if (auto v = get(*j)) l.push_back(*v);
      }
      labels.push_back(std::move(l));
    }
    std::vector<std::size_t> dropped;
    auto matrix = metrics::rating_matrix(labels, &dropped);
    json f = {{"items", matrix.size()}, {"dropped_items", dropped.size()}, {"kappa", nullptr}, {"warnings", json::array()}};
    int raters = matrix.empty() ? 0 : std::accumulate(matrix.front().begin(), matrix.front().end(), 0);
    f["raters_per_item"] = raters;
    if (matrix.empty() || raters < 2) {
      f["warnings"].push_back("fewer than two annotators on any item");
    } else {
      try {
        f["kappa"] = metrics::fleiss_kappa(matrix);
      } catch (const UndefinedMetric& e) {
        f["warnings"].push_back(e.what());
      }
    }
    if (!dropped.empty()) {
      f["warnings"].push_back(std::to_string(dropped.size()) + " items below " + std::to_string(raters) +
                              " raters left out");
    }
    f["matrix"] = matrix;
    out["fields"][name] = f;
  }
  if (partial > 0) out["warnings"].push_back(std::to_string(partial) + " tasks below full redundancy");
  return out;
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  reply(res, status, {{"version", kApiVersion}, {"error", kind}, {"message", message}});
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationService& service, const TokenRegistry& tokens)
    : service_(service), tokens_(tokens), server_(std::make_unique<httplib::Server>()) {
  auto who = [this](const httplib::Request& req) -> std::optional<std::string> {
    std::string auth = req.get_header_value("Authorization");
    constexpr std::string_view bearer = "Bearer ";
    if (auth.rfind(bearer, 0) != 0) return std::nullopt;
    return tokens_.authenticate(std::string_view(auth).substr(bearer.size()));
  };

  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"version", kApiVersion}, {"status", "ok"}});
  });

  server_->Get("/tasks/next", [this, who](const httplib::Request& req, httplib::Response& res) {
    auto id = who(req);
    if (!id) return reply_error(res, 401, "unauthorized", "missing or unknown bearer token");
    try {
      auto task = service_.next_task(*id);
      if (!task) return reply(res, 200, {{"version", kApiVersion}, {"task", nullptr}});
      reply(res, 200, {{"version", kApiVersion}, {"task", *task}});
    } catch (const AuthError& e) {
      reply_error(res, 403, "forbidden", e.what());
    }
  });

  server_->Post(R"(/tasks/([A-Za-z0-9_.-]+)/judgment)",
                [this, who](const httplib::Request& req, httplib::Response& res) {
                  auto id = who(req);
                  if (!id) return reply_error(res, 401, "unauthorized", "missing or unknown bearer token");
                  std::string task_id = req.matches[1];
                  if (!service_.has_task(task_id)) return reply_error(res, 404, "not_found", "no task " + task_id);
                  json payload;
                  try {
                    payload = json::parse(req.body);
                  } catch (const json::exception& e) {
                    return reply_error(res, 400, "validation", std::string("body is not JSON: ") + e.what());
                  }
                  try {
                    reply(res, 200, service_.submit(*id, task_id, payload));
                  } catch (const ConflictError& e) {
                    reply_error(res, 409, "conflict", e.what());
                  } catch (const AuthError& e) {
                    reply_error(res, 403, "forbidden", e.what());
                  } catch (const PreconditionError& e) {
                    reply_error(res, 403, "not_assigned", e.what());
                  } catch (const InvariantViolation& e) {
                    reply_error(res, 500, "internal", e.what());
                  } catch (const ValidationError& e) {
                    reply_error(res, 400, "validation", e.what());
                  } catch (const json::exception& e) {
                    reply_error(res, 400, "validation", e.what());
                  } catch (const IoError& e) {
                    reply_error(res, 500, "io", e.what());
                  }
                });

  server_->Get("/stats/agreement", [this, who](const httplib::Request& req, httplib::Response& res) {
    if (!who(req)) return reply_error(res, 401, "unauthorized", "missing or unknown bearer token");
    reply(res, 200, service_.agreement_stats());
  });
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void AnnotationServer::run() { server_->listen_after_bind(); }

void AnnotationServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void AnnotationServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace advfact::annotation
