#include "advfact/suite.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <thread>

namespace advfact::attack {

void to_json(json& j, const SuiteConfig& c) {
  std::vector<std::string> methods, modes, kinds;
  for (auto m : c.methods) methods.push_back(to_string(m));
  for (auto m : c.hop_modes) modes.push_back(to_string(m));
  for (auto k : c.temporal_kinds) kinds.push_back(to_string(k));
  j = json{{"methods", methods},
           {"flips", c.flips},
           {"hops", c.hops},
           {"hop_modes", modes},
           {"temporal_kinds", kinds},
           {"distraction_targets", c.distraction_all_targets ? "all" : "one"},
           {"cloze", c.cloze},
           {"min_methods", c.min_methods}};
}

void from_json(const json& j, SuiteConfig& c) {
  SuiteConfig d;
  c = d;
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  if (j.contains("flips")) c.flips = j.at("flips").get<std::vector<bool>>();
  if (j.contains("hops")) c.hops = j.at("hops").get<std::vector<int>>();
  if (j.contains("hop_modes")) {
    c.hop_modes.clear();
    for (const auto& m : j.at("hop_modes")) c.hop_modes.push_back(hop_mode_from_string(m.get<std::string>()));
  }
  if (j.contains("temporal_kinds")) {
    c.temporal_kinds.clear();
    for (const auto& k : j.at("temporal_kinds")) c.temporal_kinds.push_back(temporal_kind_from_string(k.get<std::string>()));
  }
  if (j.contains("distraction_targets")) {
    std::string t = j.at("distraction_targets").get<std::string>();
    if (t != "one" && t != "all") throw ConfigError("distraction_targets must be \"one\" or \"all\"");
    c.distraction_all_targets = t == "all";
  }
  c.cloze = j.value("cloze", d.cloze);
  c.min_methods = j.value("min_methods", d.min_methods);
  if (c.methods.empty()) throw ConfigError("no attack methods selected");
  if (c.flips.empty()) throw ConfigError("no flip settings selected");
  for (int h : c.hops) {
    if (h < 1) throw ConfigError("hop counts must be >= 1");
  }
  if (c.hops.empty() || c.hop_modes.empty()) throw ConfigError("multihop needs hop counts and modes");
  if (c.temporal_kinds.empty()) throw ConfigError("no temporal kinds selected");
}

std::string config_digest(const SuiteConfig& c) { return sha256_hex(json(c).dump()); }

void to_json(json& j, const OriginalProbe& p) {
  j = json{{"id", p.id}, {"parent_id", p.parent_id}, {"form", to_string(p.form)}, {"text", p.text}};
}

void from_json(const json& j, OriginalProbe& p) {
  j.at("id").get_to(p.id);
  j.at("parent_id").get_to(p.parent_id);
  p.form = form_from_string(j.at("form").get<std::string>());
  j.at("text").get_to(p.text);
}

namespace {

struct StatementResult {
  std::vector<OriginalProbe> originals;
  std::vector<AttackInstance> instances;
  std::vector<ClozeInstance> clozes;
  std::vector<corpus::SkipRecord> skipped;
};

bool wants(const SuiteConfig& c, Method m) { return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end(); }

StatementResult build_for(const corpus::FactStatement& st, const corpus::KnowledgeSnapshot& snap,
                          const SuiteConfig& cfg, std::uint64_t seed) {
  StatementResult r;
  std::set<Method> applied;
  std::map<Method, std::string> reasons;
  auto emit = [&](AttackInstance a) {
    validate_instance(a);
    applied.insert(a.method);
    if (a.form == Form::declarative) r.instances.push_back(to_question(a));
    r.instances.push_back(std::move(a));
  };
  auto attempt = [&](Method m, auto&& make) {
    try {
      emit(make());
    } catch (const NotApplicable& e) {
      if (!reasons.count(m)) reasons[m] = e.what();
    } catch (const ValidationError& e) {
      if (!reasons.count(m)) reasons[m] = e.what();
    }
  };

  for (bool flip : cfg.flips) {
    if (wants(cfg, Method::multihop)) {
      for (int h : cfg.hops) {
        for (HopMode mode : cfg.hop_modes) {
          attempt(Method::multihop, [&] { return multihop_extend(st, snap, h, mode, flip, seed); });
        }
      }
    }
    if (wants(cfg, Method::temporal)) {
      auto kinds = seeded_shuffle(cfg.temporal_kinds, seed, "suite-temporal/" + st.id + (flip ? "/flip" : "/keep"));
      std::string why;
      bool done = false;
      for (TemporalKind k : kinds) {
        try {
          emit(temporal_modify(st, k, flip, seed));
          done = true;
          break;
        } catch (const NotApplicable& e) {
          if (why.empty()) why = e.what();
        }
      }
      if (!done && !reasons.count(Method::temporal)) reasons[Method::temporal] = why;
    }
    if (wants(cfg, Method::semantic)) {
      attempt(Method::semantic, [&] { return semantic_replace(st, flip, seed); });
    }
    if (wants(cfg, Method::distraction)) {
      std::vector<const corpus::EntitySpan*> targets;
      for (const auto& e : st.entities) {
        if (!e.article.empty() || snap.resolve_name(e.surface)) targets.push_back(&e);
      }
      targets = seeded_shuffle(targets, seed, "suite-distraction/" + st.id + (flip ? "/flip" : "/keep"));
      std::size_t made = 0;
      for (const auto* t : targets) {
        try {
          AttackInstance a = distraction_inject(st, snap, *t, flip, seed);
          a.variant += "." + std::to_string(t->span.begin);
          a.id = instance_id(st.id, Method::distraction, flip, a.variant, Form::declarative);
          emit(std::move(a));
          ++made;
          if (!cfg.distraction_all_targets) break;
        } catch (const NotApplicable& e) {
          if (!reasons.count(Method::distraction)) reasons[Method::distraction] = e.what();
        }
      }
      if (targets.empty()) reasons.emplace(Method::distraction, "no entity with a snapshot article");
    }
    if (wants(cfg, Method::numerical)) {
      attempt(Method::numerical, [&] { return numerical_manipulate(st, flip, seed); });
    }
  }
  // Exaggeration always flips; reversal carries no false claim. Each is
  // generated once per statement.
  if (wants(cfg, Method::exaggeration)) attempt(Method::exaggeration, [&] { return facts_exaggerate(st, seed); });
  if (wants(cfg, Method::reversal)) {
    try {
      AttackInstance a = facts_reverse(st);
      validate_instance(a);
      applied.insert(a.method);
      r.instances.push_back(std::move(a));
    } catch (const NotApplicable& e) {
      reasons[Method::reversal] = e.what();
    }
  }

  for (const auto& [m, why] : reasons) {
    if (!applied.count(m)) r.skipped.push_back({st.id, "method:" + to_string(m), why});
  }
  int needed = std::min<int>(cfg.min_methods, static_cast<int>(cfg.methods.size()));
  if (static_cast<int>(applied.size()) < needed) {
    r.instances.clear();
    r.skipped.push_back({st.id, "suite",
                         "only " + std::to_string(applied.size()) + " methods apply (need " + std::to_string(needed) +
                             ")"});
    return r;
  }

  r.originals.push_back({st.id + ".original.d", st.id, Form::declarative, st.text});
  r.originals.push_back({st.id + ".original.q", st.id, Form::question, question_text(st.text)});
  if (cfg.cloze) {
    try {
      r.clozes.push_back(cloze_generate(st));
    } catch (const NotApplicable& e) {
      r.skipped.push_back({st.id, "cloze", e.what()});
    }
  }
  return r;
}

int method_rank(Method m) {
  for (std::size_t i = 0; i < std::size(kAllMethods); ++i) {
    if (kAllMethods[i] == m) return static_cast<int>(i);
  }
  return 99;
}

}  // namespace

AttackSuite generate_suite(const std::vector<corpus::FactStatement>& corpus, const corpus::KnowledgeSnapshot& snapshot,
                           const SuiteConfig& config, std::uint64_t seed) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  std::vector<StatementResult> results(corpus.size());
  std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < corpus.size(); i += workers) results[i] = build_for(corpus[i], snapshot, config, seed);
    }));
  }
  for (auto& j : jobs) j.get();

  AttackSuite s;
  s.seed = seed;
  s.config_digest = config_digest(config);
  for (auto& r : results) {
    s.originals.insert(s.originals.end(), r.originals.begin(), r.originals.end());
    s.instances.insert(s.instances.end(), r.instances.begin(), r.instances.end());
    s.clozes.insert(s.clozes.end(), r.clozes.begin(), r.clozes.end());
    s.skipped.insert(s.skipped.end(), r.skipped.begin(), r.skipped.end());
  }
  std::sort(s.originals.begin(), s.originals.end(),
            [](const OriginalProbe& a, const OriginalProbe& b) { return std::tie(a.parent_id, a.id) < std::tie(b.parent_id, b.id); });
  std::sort(s.instances.begin(), s.instances.end(), [](const AttackInstance& a, const AttackInstance& b) {
    return std::make_tuple(a.parent_id, method_rank(a.method), a.form, a.id) <
           std::make_tuple(b.parent_id, method_rank(b.method), b.form, b.id);
  });
  std::sort(s.clozes.begin(), s.clozes.end(), [](const ClozeInstance& a, const ClozeInstance& b) { return a.id < b.id; });
  std::stable_sort(s.skipped.begin(), s.skipped.end(), [](const corpus::SkipRecord& a, const corpus::SkipRecord& b) {
    return std::tie(a.id, a.stage) < std::tie(b.id, b.stage);
  });
  return s;
}

std::vector<std::pair<std::string, std::vector<Method>>> methods_by_parent(const AttackSuite& suite) {
  std::map<std::string, std::set<int>> by;
  for (const auto& a : suite.instances) by[a.parent_id].insert(method_rank(a.method));
  std::vector<std::pair<std::string, std::vector<Method>>> out;
  for (const auto& [p, ranks] : by) {
    std::vector<Method> ms;
    for (int r : ranks) ms.push_back(kAllMethods[r]);
    out.emplace_back(p, std::move(ms));
  }
  return out;
}

std::string serialize_suite(const AttackSuite& suite, const json& header_extra) {
  json header = make_header(kSuiteFormat);
  header["seed"] = suite.seed;
  header["config_digest"] = suite.config_digest;
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  std::vector<json> records;
  for (const auto& o : suite.originals) {
    json j = o;
    j["type"] = "original";
    records.push_back(std::move(j));
  }
  for (const auto& a : suite.instances) {
    json j = a;
    j["type"] = "instance";
    records.push_back(std::move(j));
  }
  for (const auto& c : suite.clozes) {
    json j = c;
    j["type"] = "cloze";
    records.push_back(std::move(j));
  }
  for (const auto& s : suite.skipped) {
    json j = s;
    j["type"] = "skip";
    records.push_back(std::move(j));
  }
  return dump_jsonl(header, records);
}

AttackSuite parse_suite(std::string_view jsonl) {
  JsonlDocument doc = parse_jsonl(jsonl, kSuiteFormat);
  AttackSuite s;
  s.seed = doc.header.value("seed", std::uint64_t{0});
  s.config_digest = doc.header.value("config_digest", std::string());
  for (const auto& rec : doc.records) {
    try {
      std::string type = rec.value.at("type").get<std::string>();
      if (type == "original") {
        s.originals.push_back(rec.value.get<OriginalProbe>());
      } else if (type == "instance") {
        s.instances.push_back(rec.value.get<AttackInstance>());
        validate_instance(s.instances.back());
      } else if (type == "cloze") {
        s.clozes.push_back(rec.value.get<ClozeInstance>());
      } else if (type == "skip") {
        s.skipped.push_back(rec.value.get<corpus::SkipRecord>());
      } else {
        throw ParseError("unknown record type '" + type + "'", rec.line);
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), rec.line);
    } catch (const InvariantViolation& e) {
      throw ParseError(e.what(), rec.line);
    }
  }
  return s;
}

}  // namespace advfact::attack
