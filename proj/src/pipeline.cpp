#include "advfact/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <exception>
#include <set>
#include <thread>

#include "advfact/report.hpp"
#include "advfact/text.hpp"

namespace advfact::pipeline {

namespace fs = std::filesystem;

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> s = {Stage::ingest, Stage::annotate_corpus, Stage::generate, Stage::query,
                                       Stage::judge,  Stage::metrics,         Stage::report};
  return s;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::ingest:
      return "ingest";
    case Stage::annotate_corpus:
      return "annotate-corpus";
    case Stage::generate:
      return "generate";
    case Stage::query:
      return "query";
    case Stage::judge:
      return "judge";
    case Stage::metrics:
      return "metrics";
    case Stage::report:
      return "report";
  }
  return "ingest";
}

Stage stage_from_string(std::string_view s) {
  for (Stage st : all_stages()) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown stage '" + std::string(s) + "'");
}

std::vector<Stage> parse_stages(std::string_view list) {
  std::string l = text::trim(list);
  if (l.empty() || l == "all") return all_stages();
  std::set<Stage> picked;
  std::size_t start = 0;
  while (start <= l.size()) {
    std::size_t comma = l.find(',', start);
    if (comma == std::string::npos) comma = l.size();
    std::string name = text::trim(std::string_view(l).substr(start, comma - start));
    if (!name.empty()) picked.insert(stage_from_string(name));
    start = comma + 1;
  }
  std::vector<Stage> out;
  for (Stage st : all_stages()) {
    if (picked.count(st)) out.push_back(st);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string file_digest(const fs::path& p) {
  if (!fs::exists(p)) return "missing";
  return sha256_hex(read_text(p));
}

}  // namespace

PipelineConfig parse_config(const json& j, const fs::path& base_dir, std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  PipelineConfig c;
  c.base_dir = base_dir;
  c.raw = j;
  try {
    c.seed = seed_override ? *seed_override : j.value("seed", std::uint64_t{7});
    std::string clock = j.value("clock", std::string("system"));
    if (clock != "fixed" && clock != "system") throw ConfigError("clock must be \"fixed\" or \"system\"");
    c.fixed_clock = clock == "fixed";

    const json& corp = j.at("corpus");
    c.snapshot_path = resolve(base_dir, corp.at("snapshot").get<std::string>());
    c.statements_path = resolve(base_dir, corp.at("statements").get<std::string>());
    if (j.contains("suite")) c.suite = j["suite"].get<attack::SuiteConfig>();
    c.engines = engines::parse_engine_config(j.value("engines", json::array()));
    if (c.engines.empty()) throw ConfigError("no engines configured");
    if (j.contains("judge")) c.judge = j["judge"];
    if (j.contains("scoring")) c.scoring.abstain_incorrect = j["scoring"].value("abstain_incorrect", true);
    if (j.contains("annotation")) {
      const json& a = j["annotation"];
      c.redundancy = a.value("redundancy", std::size_t{5});
      c.annotation_scope = a.value("scope", std::string("all"));
      c.annotation_host = a.value("host", c.annotation_host);
      c.annotation_port = a.value("port", c.annotation_port);
      if (c.redundancy < 1) throw ConfigError("annotation.redundancy must be at least 1");
      if (c.annotation_scope != "all" && c.annotation_scope != "pending") {
        throw ConfigError("annotation.scope must be \"all\" or \"pending\"");
      }
    }
    c.group_by = {{"engine", "mode"},
                  {"engine", "mode", "method"},
                  {"engine", "mode", "form"},
                  {"engine", "mode", "target"},
                  {"engine", "mode", "hop_mode", "hops"}};
    if (j.contains("report")) {
      const json& r = j["report"];
      if (r.contains("group_by")) c.group_by = r["group_by"].get<std::vector<std::vector<std::string>>>();
      std::string avg = r.value("averaging", std::string("macro"));
      if (avg != "macro" && avg != "micro") throw ConfigError("report.averaging must be \"macro\" or \"micro\"");
      c.averaging = avg == "macro" ? metrics::Averaging::macro : metrics::Averaging::micro;
    }
    for (const auto& g : c.group_by) metrics::validate_group_by(g);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  c.digest = sha256_hex(j.dump() + "|seed=" + std::to_string(c.seed));
  c.run_id = j.value("run_id", "run-" + c.digest.substr(0, 12));
  return c;
}

PipelineConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."), seed_override);
}

std::map<std::string, std::string> PipelineConfig::section_digests() const {
  auto part = [&](const char* key) { return sha256_hex(raw.contains(key) ? raw[key].dump() : "null"); };
  return {{"snapshot", file_digest(snapshot_path)},
          {"statements", file_digest(statements_path)},
          {"seed", std::to_string(seed)},
          {"suite", part("suite")},
          {"engines", part("engines")},
          {"judge", part("judge")},
          {"scoring", part("scoring")},
          {"annotation", part("annotation")},
          {"report", part("report")},
          {"clock", raw.value("clock", std::string("system"))}};
}

// ---------------------------------------------------------------------------
// Lock
// ---------------------------------------------------------------------------

RunLock::RunLock(const fs::path& run_dir) : path_(run_dir / ".lock") {
  fs::create_directories(run_dir);
  int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw PreconditionError("run directory " + run_dir.string() + " is in use (" + path_.string() +
                              " exists; remove it if no other process is running)");
    }
    throw IoError("cannot create " + path_.string() + ": " + std::strerror(errno));
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kSnapshotFile = "corpus/snapshot.jsonl";
constexpr const char* kCorpusFile = "corpus/statements.jsonl";
constexpr const char* kSuiteFile = "suite/suite.jsonl";
constexpr const char* kAutoFile = "judgments/auto.jsonl";
constexpr const char* kHumanFile = "judgments/human.jsonl";
constexpr const char* kPendingFile = "judgments/pending.jsonl";
constexpr const char* kTokensFile = "judgments/tokens.json";
constexpr const char* kMetricsFile = "reports/metrics.json";

std::string safe_name(const std::string& key) {
  std::string out;
  for (char c : key) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
  return out;
}

std::string group_name(const std::vector<std::string>& g) {
  if (g.empty()) return "overall";
  std::string s;
  for (const auto& k : g) s += (s.empty() ? "" : "-") + k;
  return s;
}

}  // namespace

Pipeline::Pipeline(fs::path run_dir, PipelineConfig config, RunOptions options)
    : run_dir_(std::move(run_dir)), config_(std::move(config)), options_(std::move(options)) {}

std::string Pipeline::now() const {
  if (config_.fixed_clock) return "1970-01-01T00:00:00Z";
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Pipeline::log(const std::string& msg) const {
  if (options_.log) options_.log(msg);
}

json Pipeline::header_extra() const { return {{"run_id", config_.run_id}, {"config_digest", config_.digest}}; }

fs::path Pipeline::transcript_path(const engines::EngineSpec& spec) const {
  return run_dir_ / "transcripts" / (safe_name(spec.key()) + ".jsonl");
}

json Pipeline::manifest() const {
  fs::path p = run_dir_ / "manifest.json";
  if (!fs::exists(p)) return json();
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw ParseError(p.string() + ": " + e.what(), 0);
  }
}

void Pipeline::save_manifest(const json& m) const { write_text_atomic(run_dir_ / "manifest.json", m.dump(2) + "\n"); }

json Pipeline::load_or_create_manifest() const {
  json m = manifest();
  auto sections = config_.section_digests();
  if (m.is_null()) {
    m = make_header(kManifestFormat);
    m["run_id"] = config_.run_id;
    m["config_digest"] = config_.digest;
    m["seed"] = config_.seed;
    m["created"] = now();
    m["sections"] = sections;
    m["stages"] = json::object();
    return m;
  }
  if (m.value("format", std::string()) != kManifestFormat) throw ParseError("manifest.json has the wrong format", 0);
  if (m.value("config_digest", std::string()) != config_.digest) {
    std::string diff;
    const json& old = m.value("sections", json::object());
    for (const auto& [k, v] : sections) {
      if (!old.contains(k) || old[k] != v) diff += (diff.empty() ? "" : ", ") + k;
    }
    if (diff.empty()) diff = "config document";
    throw PreconditionError("run " + m.value("run_id", std::string("?")) +
                            " was created with a different configuration; changed: " + diff +
                            ". Use a fresh --run-dir.");
  }
  return m;
}

std::string Pipeline::stage_digest(Stage s, const json& manifest) const {
  const json& sec = manifest.at("sections");
  auto h = [](std::initializer_list<std::string> parts) {
    std::string all;
    for (const auto& p : parts) all += p + "|";
    return sha256_hex(all);
  };
  switch (s) {
    case Stage::ingest:
      return h({"ingest", sec["snapshot"]});
    case Stage::annotate_corpus:
      return h({stage_digest(Stage::ingest, manifest), sec["statements"]});
    case Stage::generate:
      return h({stage_digest(Stage::annotate_corpus, manifest), sec["suite"], sec["seed"]});
    case Stage::query:
      return h({stage_digest(Stage::generate, manifest), sec["engines"], options_.replay_from ? "replay" : "live"});
    case Stage::judge:
      return h({stage_digest(Stage::query, manifest), sec["judge"], sec["scoring"]});
    case Stage::metrics:
      return h({stage_digest(Stage::judge, manifest), sec["report"]});
    case Stage::report:
      return h({stage_digest(Stage::metrics, manifest)});
  }
  return "";
}

std::string Pipeline::stage_inputs(Stage s) const {
  // Human judgments arrive after the judge stage; new ones re-run the
  // derived stages rather than count as a configuration change.
  if (s == Stage::metrics || s == Stage::report) return file_digest(run_dir_ / kHumanFile);
  return "";
}

void Pipeline::require_done(const json& manifest, Stage s, Stage needed) const {
  const json& st = manifest["stages"];
  std::string name = to_string(needed);
  if (!st.contains(name) || !st[name].value("done", false)) {
    throw PreconditionError("stage " + to_string(s) + " needs " + name + " to have completed");
  }
}

json Pipeline::run(const std::vector<Stage>& stages) {
  RunLock lock(run_dir_);
  json m = load_or_create_manifest();
  bool wants_query = std::find(stages.begin(), stages.end(), Stage::query) != stages.end();
  if (wants_query && !options_.replay_from) engines::check_credentials(config_.engines);

  bool dirty = !fs::exists(run_dir_ / "manifest.json");
  for (Stage s : all_stages()) {
    if (std::find(stages.begin(), stages.end(), s) == stages.end()) continue;
    std::size_t idx = std::find(all_stages().begin(), all_stages().end(), s) - all_stages().begin();
    if (idx > 0) require_done(m, s, all_stages()[idx - 1]);
    std::string name = to_string(s);
    std::string digest = stage_digest(s, m);
    std::string inputs = stage_inputs(s);
    json& entry = m["stages"][name];
    if (entry.is_object() && entry.value("done", false)) {
      if (entry.value("digest", std::string()) != digest) {
        throw PreconditionError("stage " + name + " already ran with different inputs (" +
                                (options_.replay_from ? "replay requested on a live run" : "digest mismatch") +
                                "); use a fresh --run-dir");
      }
      if (entry.value("inputs", std::string()) == inputs) {
        log(name + ": up to date");
        continue;
      }
    }
    log(name + ": running");
    switch (s) {
      case Stage::ingest:
        run_ingest();
        break;
      case Stage::annotate_corpus:
        run_annotate();
        break;
      case Stage::generate:
        run_generate();
        break;
      case Stage::query:
        run_query();
        break;
      case Stage::judge:
        run_judge();
        break;
      case Stage::metrics:
        run_metrics();
        break;
      case Stage::report:
        run_report();
        break;
    }
    m["stages"][name] = {{"done", true}, {"digest", digest}, {"inputs", inputs}, {"completed_at", now()}};
    // Downstream stages are stale once an upstream stage re-ran.
    for (std::size_t k = idx + 1; k < all_stages().size(); ++k) {
      std::string later = to_string(all_stages()[k]);
      if (m["stages"].contains(later) &&
          std::find(stages.begin(), stages.end(), all_stages()[k]) == stages.end()) {
        m["stages"][later]["inputs"] = "stale";
      }
    }
    save_manifest(m);
    dirty = false;
  }
  if (dirty) save_manifest(m);
  return m;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void Pipeline::run_ingest() {
  auto snap = corpus::ingest_snapshot(config_.snapshot_path);
  for (const auto& w : snap.warnings()) log("ingest: " + w);
  write_text_atomic(run_dir_ / kSnapshotFile, corpus::serialize_snapshot(snap, header_extra()));
}

corpus::KnowledgeSnapshot Pipeline::snapshot() const {
  return corpus::parse_snapshot(read_text(run_dir_ / kSnapshotFile));
}

void Pipeline::run_annotate() {
  auto snap = snapshot();
  auto annotated = corpus::annotate_corpus(corpus::load_statements(config_.statements_path), snap);
  log("annotate-corpus: " + std::to_string(annotated.statements.size()) + " statements, " +
      std::to_string(annotated.skipped.size()) + " skipped");
  write_text_atomic(run_dir_ / kCorpusFile, corpus::serialize_corpus(annotated, header_extra()));
}

corpus::AnnotatedCorpus Pipeline::corpus() const { return corpus::parse_corpus(read_text(run_dir_ / kCorpusFile)); }

void Pipeline::run_generate() {
  auto snap = snapshot();
  auto annotated = corpus();
  auto suite = attack::generate_suite(annotated.statements, snap, config_.suite, derive_seed(config_.seed, "generate"));
  log("generate: " + std::to_string(suite.originals.size()) + " originals, " +
      std::to_string(suite.instances.size()) + " attacks, " + std::to_string(suite.clozes.size()) + " clozes");
  write_text_atomic(run_dir_ / kSuiteFile, attack::serialize_suite(suite, header_extra()));
}

attack::AttackSuite Pipeline::suite() const { return attack::parse_suite(read_text(run_dir_ / kSuiteFile)); }

namespace {

struct Prompt {
  std::string id;
  std::string text;
};

std::vector<Prompt> prompts_of(const attack::AttackSuite& suite) {
  std::vector<Prompt> out;
  for (const auto& o : suite.originals) out.push_back({o.id, o.text});
  for (const auto& a : suite.instances) out.push_back({a.id, a.text});
  for (const auto& c : suite.clozes) out.push_back({c.id, c.text});
  return out;
}

}  // namespace

void Pipeline::run_query() {
  auto snap = snapshot();
  auto s = suite();
  auto prompts = prompts_of(s);
  engines::SnapshotIndex index(snap);

  if (options_.replay_from) {
    engines::ReplaySource source;
    fs::path from = *options_.replay_from;
    if (fs::is_directory(from / "transcripts")) from /= "transcripts";
    if (fs::is_directory(from)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(from)) {
        if (e.path().extension() == ".jsonl") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) source.add_file(f);
    } else {
      source.add_file(from);
    }
    for (const auto& spec : config_.engines) {
      fs::path path = transcript_path(spec);
      fs::remove(path);
      engines::TranscriptStore store(path, header_extra());
      std::size_t missing = 0;
      for (const auto& p : prompts) {
        engines::TranscriptRecord rec;
        rec.instance_id = p.id;
        rec.engine = spec.name;
        rec.mode = spec.mode;
        rec.prompt = p.text;
        rec.attempts = 0;
        if (const auto* r = source.find(spec.key(), p.id)) {
          rec.ok = true;
          rec.response = *r;
          rec.timestamp = r->timestamp;
        } else {
          rec.error_kind = "missing";
          rec.error = "no recorded response";
          ++missing;
        }
        store.append(rec);
      }
      log("replay " + spec.key() + ": " + std::to_string(prompts.size() - missing) + " recorded, " +
          std::to_string(missing) + " missing");
    }
    return;
  }

  std::vector<std::exception_ptr> errors(config_.engines.size());
  std::vector<std::size_t> failures(config_.engines.size(), 0);
  std::vector<std::thread> workers;
  for (std::size_t e = 0; e < config_.engines.size(); ++e) {
    workers.emplace_back([&, e] {
      try {
        engines::EngineSpec spec = config_.engines[e];
        spec.mock.seed = derive_seed(config_.seed, "engine:" + spec.key());
        spec.mock.snapshot_ref = snap.digest();
        fs::path path = transcript_path(spec);
        std::set<std::string> done;
        if (fs::exists(path)) {
          for (const auto& r : engines::load_transcript(path)) {
            if (r.ok) done.insert(r.instance_id);
          }
        }
        engines::TranscriptStore store(path, header_extra());
        engines::ClientOptions opts;
        opts.deterministic_clock = config_.fixed_clock;
        opts.transport = options_.transport;
        engines::EngineClient client(spec, store, &index, opts);
        for (const auto& p : prompts) {
          if (done.count(p.id)) continue;
          try {
            client.query(p.id, p.text);
          } catch (const TimeoutError&) {
            ++failures[e];
          } catch (const ExternalError&) {
            ++failures[e];
          } catch (const ValidationError&) {
            ++failures[e];
          }
        }
      } catch (...) {
        errors[e] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  std::string all_failed;
  for (std::size_t e = 0; e < config_.engines.size(); ++e) {
    const auto key = config_.engines[e].key();
    if (failures[e] > 0) log("query " + key + ": " + std::to_string(failures[e]) + " failed queries recorded");
    if (!prompts.empty() && failures[e] == prompts.size()) all_failed += (all_failed.empty() ? "" : ", ") + key;
  }
  if (!all_failed.empty()) throw ExternalError("every query failed for " + all_failed + "; see transcripts");
}

std::vector<engines::EngineResponse> Pipeline::responses() const {
  std::vector<engines::EngineSpec> specs = config_.engines;
  std::sort(specs.begin(), specs.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  std::vector<engines::EngineResponse> out;
  for (const auto& spec : specs) {
    fs::path path = transcript_path(spec);
    if (!fs::exists(path)) continue;
    std::map<std::string, engines::EngineResponse> latest;
    for (auto& r : engines::load_transcript(path)) {
      if (r.ok && r.response) latest[r.instance_id] = *r.response;
    }
    for (auto& [id, resp] : latest) out.push_back(std::move(resp));
  }
  return out;
}

void Pipeline::run_judge() {
  auto snap = snapshot();
  auto s = suite();
  auto probes = judge::probes_of(s);
  engines::SnapshotIndex index(snap);
  auto backend = judge::make_judge(config_.judge, config_.base_dir);
  auto resp = responses();

  std::set<std::pair<std::string, std::string>> answered;
  std::vector<judge::Judgment> out;
  std::vector<json> pending;
  for (const auto& r : resp) {
    answered.insert({engines::engine_key(r.engine, r.mode), r.instance_id});
    auto p = probes.find(r.instance_id);
    if (p == probes.end()) throw ValidationError("transcript answers unknown probe " + r.instance_id);
    try {
      out.push_back(judge::auto_judge(p->second, r, *backend, index, config_.scoring));
    } catch (const ExternalError& e) {
      pending.push_back({{"instance_id", r.instance_id},
                         {"engine", r.engine},
                         {"mode", r.mode},
                         {"reason", std::string("judge failed: ") + e.what()}});
    }
  }
  for (const auto& spec : config_.engines) {
    for (const auto& [id, p] : probes) {
      if (answered.count({spec.key(), id})) continue;
      pending.push_back({{"instance_id", id}, {"engine", spec.name}, {"mode", spec.mode}, {"reason", "no response"}});
    }
  }
  std::sort(pending.begin(), pending.end(), [](const json& a, const json& b) {
    return std::tie(a["instance_id"], a["engine"], a["mode"]) < std::tie(b["instance_id"], b["engine"], b["mode"]);
  });
  judge::sort_judgments(out);
  write_text_atomic(run_dir_ / kAutoFile, judge::serialize_judgments(out, header_extra()));
  json ph = make_header(kPendingFormat);
  ph.update(header_extra());
  write_text_atomic(run_dir_ / kPendingFile, dump_jsonl(ph, pending));
  log("judge: " + std::to_string(out.size()) + " judged, " + std::to_string(pending.size()) + " pending");
}

std::vector<judge::Judgment> Pipeline::judgments() const {
  std::vector<judge::Judgment> out;
  for (const char* f : {kAutoFile, kHumanFile}) {
    if (!fs::exists(run_dir_ / f)) continue;
    auto js = judge::import_judgments(run_dir_ / f);
    out.insert(out.end(), js.begin(), js.end());
  }
  return out;
}

std::vector<metrics::EvalRecord> Pipeline::records() const {
  auto snap = snapshot();
  engines::SnapshotIndex index(snap);
  return metrics::assemble_records(judge::probes_of(suite()), responses(), judgments(), &index);
}

std::vector<metrics::MetricsReport> Pipeline::reports() const {
  auto recs = records();
  std::vector<metrics::MetricsReport> out;
  metrics::ReportOptions opts;
  opts.averaging = config_.averaging;
  for (const auto& g : config_.group_by) out.push_back(metrics::build_report(recs, g, opts));
  return out;
}

void Pipeline::run_metrics() {
  json out = {{"header",
               {{"format", "advfact.metrics"},
                {"version", kFormatVersion},
                {"run_id", config_.run_id},
                {"config_digest", config_.digest},
                {"asr_note", report::kAsrNote}}},
              {"reports", reports()}};
  write_text_atomic(run_dir_ / kMetricsFile, out.dump(2) + "\n");
}

void Pipeline::run_report() {
  report::ReportMeta meta{config_.run_id, config_.digest};
  auto recs = records();
  metrics::ReportOptions opts;
  opts.averaging = config_.averaging;
  for (const auto& g : config_.group_by) {
    auto rep = metrics::build_report(recs, g, opts);
    std::string name = group_name(g);
    write_text_atomic(run_dir_ / "reports" / (name + ".csv"), report::render_csv(rep, meta));
    write_text_atomic(run_dir_ / "reports" / (name + ".md"), report::render_markdown(rep, meta));
  }
  write_text_atomic(run_dir_ / "reports/plot_hop_curves.json", report::hop_curve_data(recs, meta).dump(2) + "\n");
  write_text_atomic(run_dir_ / "reports/plot_components.json", report::component_bar_data(recs, meta).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Human judgments and annotation
// ---------------------------------------------------------------------------

std::size_t Pipeline::import_human_judgments(const fs::path& file) {
  RunLock lock(run_dir_);
  json m = load_or_create_manifest();
  require_done(m, Stage::judge, Stage::query);
  auto resp = responses();
  std::map<std::tuple<std::string, std::string, std::string>, const engines::EngineResponse*> by_key;
  for (const auto& r : resp) by_key[{r.instance_id, r.engine, r.mode}] = &r;
  judge::ResponseLookup lookup = [&](const std::string& id, const std::string& engine,
                                     const std::string& mode) -> const engines::EngineResponse* {
    auto it = by_key.find({id, engine, mode});
    return it == by_key.end() ? nullptr : it->second;
  };
  auto incoming = judge::import_judgments(file, lookup);
  std::set<std::tuple<std::string, std::string, std::string, std::string>> have;
  if (fs::exists(run_dir_ / kHumanFile)) {
    for (const auto& j : judge::import_judgments(run_dir_ / kHumanFile)) {
      have.insert({j.instance_id, j.engine, j.mode, j.annotator});
    }
  }
  for (const auto& j : incoming) {
    if (!judge::is_human(j)) throw ValidationError("import accepts human judgments only; got " + j.annotator);
    if (have.count({j.instance_id, j.engine, j.mode, j.annotator})) {
      throw ValidationError(j.annotator + " already judged " + j.instance_id + " / " +
                            engines::engine_key(j.engine, j.mode));
    }
  }
  annotation::JudgmentLog log(run_dir_ / kHumanFile, header_extra());
  for (const auto& j : incoming) log.append(j);
  return incoming.size();
}

std::string Pipeline::issue_token(const annotation::AnnotatorProfile& profile) {
  fs::create_directories(run_dir_ / "judgments");
  annotation::TokenRegistry tokens(run_dir_ / kTokensFile);
  return tokens.issue(profile);
}

void Pipeline::serve_annotation(const std::string& host, int port,
                                const std::function<void(int, annotation::AnnotationServer&)>& on_ready) {
  RunLock lock(run_dir_);
  json m = load_or_create_manifest();
  require_done(m, Stage::judge, Stage::query);
  auto probes = judge::probes_of(suite());
  auto resp = responses();
  if (config_.annotation_scope == "pending") {
    if (!fs::exists(run_dir_ / kPendingFile)) {
      throw PreconditionError("annotation scope \"pending\" needs the judge stage to have completed");
    }
    std::set<std::tuple<std::string, std::string, std::string>> want;
    for (const auto& rec : read_jsonl(run_dir_ / kPendingFile, kPendingFormat).records) {
      want.insert({rec.value.at("instance_id").get<std::string>(), rec.value.at("engine").get<std::string>(),
                   rec.value.value("mode", std::string())});
    }
    resp.erase(std::remove_if(resp.begin(), resp.end(),
                              [&](const auto& r) { return !want.count({r.instance_id, r.engine, r.mode}); }),
               resp.end());
  }
  annotation::TokenRegistry tokens(run_dir_ / kTokensFile);
  annotation::JudgmentLog human(run_dir_ / kHumanFile, header_extra());
  annotation::ServiceOptions opts;
  opts.redundancy = config_.redundancy;
  opts.policy = config_.scoring;
  opts.clock = [this] { return now(); };
  annotation::AnnotationService service(annotation::make_tasks(probes, resp), tokens.annotators(),
                                        [&human](const judge::Judgment& j) { human.append(j); }, opts,
                                        human.load());
  annotation::AnnotationServer server(service, tokens);
  int bound = server.bind(host, port);
  log("serve-annotation: listening on " + host + ":" + std::to_string(bound));
  if (on_ready) {
    server.start();
    on_ready(bound, server);
    server.stop();
  } else {
    server.run();
  }
}

}  // namespace advfact::pipeline
