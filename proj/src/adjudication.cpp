#include "advfact/adjudication.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <set>

#include "advfact/expressions.hpp"
#include "advfact/text.hpp"

namespace advfact::judge {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::affirm:
      return "affirm";
    case Verdict::deny:
      return "deny";
    case Verdict::correct_with_fix:
      return "correct_with_fix";
    case Verdict::abstain:
      return "abstain";
  }
  return "abstain";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "affirm") return Verdict::affirm;
  if (s == "deny") return Verdict::deny;
  if (s == "correct_with_fix") return Verdict::correct_with_fix;
  if (s == "abstain") return Verdict::abstain;
  throw ValidationError("unknown verdict '" + std::string(s) + "'");
}

std::string to_string(ItemKind k) {
  switch (k) {
    case ItemKind::original:
      return "original";
    case ItemKind::attack:
      return "attack";
    case ItemKind::cloze:
      return "cloze";
  }
  return "original";
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

ProbeInfo probe_of(const attack::OriginalProbe& p) {
  ProbeInfo info;
  info.id = p.id;
  info.parent_id = p.parent_id;
  info.kind = ItemKind::original;
  info.form = p.form;
  info.text = p.text;
  return info;
}

ProbeInfo probe_of(const attack::AttackInstance& a) {
  ProbeInfo info;
  info.id = a.id;
  info.parent_id = a.parent_id;
  info.kind = ItemKind::attack;
  info.method = a.method;
  info.form = a.form;
  info.text = a.text;
  info.expected_label = a.expected_label;
  info.gold_answer = a.gold_answer;
  info.gold_required = a.method == attack::Method::reversal;
  info.perturbations = a.perturbations;
  if (a.target) info.target_role = a.target->role;
  info.hop_count = a.hop_count;
  info.hop_mode = a.hop_mode;
  return info;
}

ProbeInfo probe_of(const attack::ClozeInstance& c) {
  ProbeInfo info;
  info.id = c.id;
  info.parent_id = c.parent_id;
  info.kind = ItemKind::cloze;
  info.form = attack::Form::declarative;
  info.text = c.text;
  info.gold_answer = c.gold_answer;
  info.gold_required = true;
  return info;
}

std::map<std::string, ProbeInfo> probes_of(const attack::AttackSuite& suite) {
  std::map<std::string, ProbeInfo> out;
  for (const auto& p : suite.originals) out.emplace(p.id, probe_of(p));
  for (const auto& a : suite.instances) out.emplace(a.id, probe_of(a));
  for (const auto& c : suite.clozes) out.emplace(c.id, probe_of(c));
  return out;
}

// ---------------------------------------------------------------------------
// Judgment records
// ---------------------------------------------------------------------------

void to_json(json& j, const Judgment& x) {
  j = json{{"instance_id", x.instance_id},
           {"engine", x.engine},
           {"mode", x.mode},
           {"annotator", x.annotator},
           {"verdict", to_string(x.verdict)},
           {"is_correct", x.is_correct},
           {"contradiction", x.contradiction},
           {"hedged", x.hedged},
           {"statement_support", x.statement_support},
           {"citation_support", x.citation_support},
           {"citation_relevant", x.citation_relevant},
           {"fluency", x.fluency ? json(*x.fluency) : json(nullptr)},
           {"utility", x.utility ? json(*x.utility) : json(nullptr)},
           {"timestamp", x.timestamp}};
}

namespace {

std::optional<int> likert_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number_integer()) throw ValidationError(std::string(key) + " must be an integer 1-5");
  return j[key].get<int>();
}

}  // namespace

void from_json(const json& j, Judgment& x) {
  if (!j.is_object()) throw ValidationError("judgment must be an object");
  j.at("instance_id").get_to(x.instance_id);
  j.at("engine").get_to(x.engine);
  x.mode = j.value("mode", std::string());
  j.at("annotator").get_to(x.annotator);
  x.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  j.at("is_correct").get_to(x.is_correct);
  x.contradiction = j.value("contradiction", false);
  x.hedged = j.value("hedged", false);
  x.statement_support = j.value("statement_support", std::vector<bool>{});
  x.citation_support = j.value("citation_support", std::vector<bool>{});
  x.citation_relevant = j.value("citation_relevant", std::vector<bool>{});
  x.fluency = likert_field(j, "fluency");
  x.utility = likert_field(j, "utility");
  x.timestamp = j.value("timestamp", std::string());
}

bool is_human(const Judgment& j) { return j.annotator.rfind("human:", 0) == 0; }

void validate_judgment(const Judgment& j) {
  if (j.instance_id.empty()) throw ValidationError("judgment has no instance_id");
  if (j.engine.empty()) throw ValidationError("judgment " + j.instance_id + " has no engine");
  bool auto_ann = j.annotator.rfind("auto:", 0) == 0 && j.annotator.size() > 5;
  bool human_ann = j.annotator.rfind("human:", 0) == 0 && j.annotator.size() > 6;
  if (!auto_ann && !human_ann) {
    throw ValidationError("judgment " + j.instance_id + ": annotator must be auto:<judge> or human:<id>");
  }
  for (auto [name, v] : {std::pair<const char*, const std::optional<int>*>{"fluency", &j.fluency},
                         std::pair<const char*, const std::optional<int>*>{"utility", &j.utility}}) {
    if (*v && (**v < 1 || **v > 5)) {
      throw ValidationError("judgment " + j.instance_id + ": " + name + "=" + std::to_string(**v) +
                            " outside 1-5");
    }
  }
  if (j.contradiction && j.verdict != Verdict::affirm) {
    throw ValidationError("judgment " + j.instance_id + ": contradiction requires an affirm verdict");
  }
  if (j.citation_relevant.size() != j.citation_support.size()) {
    throw ValidationError("judgment " + j.instance_id + ": citation_relevant has " +
                          std::to_string(j.citation_relevant.size()) + " entries, citation_support has " +
                          std::to_string(j.citation_support.size()));
  }
}

void validate_against(const Judgment& j, const engines::EngineResponse& response) {
  std::size_t statements = response.statements.size();
  std::size_t occurrences = engines::citation_occurrences(response.statements);
  if (j.statement_support.size() != statements) {
    throw ValidationError("judgment " + j.instance_id + ": statement_support needs " + std::to_string(statements) +
                          " entries, got " + std::to_string(j.statement_support.size()));
  }
  if (j.citation_support.size() != occurrences) {
    throw ValidationError("judgment " + j.instance_id + ": citation_support needs " + std::to_string(occurrences) +
                          " entries, got " + std::to_string(j.citation_support.size()));
  }
  if (j.citation_relevant.size() != occurrences) {
    throw ValidationError("judgment " + j.instance_id + ": citation_relevant needs " + std::to_string(occurrences) +
                          " entries, got " + std::to_string(j.citation_relevant.size()));
  }
}

// ---------------------------------------------------------------------------
// Correctness
// ---------------------------------------------------------------------------

bool gold_matches(std::string_view answer, std::string_view gold) {
  std::string g = text::normalize_answer(gold);
  if (g.empty()) return false;
  return text::find_word(text::normalize_answer(answer), g) != std::string::npos;
}

bool decide_correct(const ProbeInfo& probe, Verdict verdict, std::string_view answer_text,
                    const ScoringPolicy& policy) {
  if (probe.gold_required && !probe.gold_answer) {
    throw InvariantViolation(probe.id + " needs a gold answer but has none");
  }
  if (verdict == Verdict::abstain) {
    if (policy.abstain_incorrect) return false;
    verdict = Verdict::deny;
  }
  if (probe.gold_required) return gold_matches(answer_text, *probe.gold_answer);
  if (probe.expected_label == attack::Label::truth_flipping) {
    return verdict == Verdict::deny || verdict == Verdict::correct_with_fix;
  }
  return verdict == Verdict::affirm;
}

bool decide_correct(const attack::AttackInstance& instance, Verdict verdict, std::string_view answer_text,
                    const ScoringPolicy& policy) {
  return decide_correct(probe_of(instance), verdict, answer_text, policy);
}

// ---------------------------------------------------------------------------
// Stance rules
// ---------------------------------------------------------------------------

namespace {

std::string fold(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    // Curly apostrophe and quotes to ASCII.
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 && static_cast<unsigned char>(s[i + 1]) == 0x80) {
      unsigned char c = static_cast<unsigned char>(s[i + 2]);
      if (c == 0x98 || c == 0x99) {
        out.push_back('\'');
        i += 2;
        continue;
      }
      if (c == 0x9C || c == 0x9D) {
        out.push_back('"');
        i += 2;
        continue;
      }
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
  }
  return text::trim(out);
}

bool starts_with_any(const std::string& s, std::initializer_list<std::string_view> cues) {
  for (auto c : cues) {
    if (s.rfind(c, 0) == 0) {
      if (s.size() == c.size()) return true;
      char next = s[c.size()];
      if (!std::isalnum(static_cast<unsigned char>(next))) return true;
    }
  }
  return false;
}

bool contains_any(const std::string& s, std::initializer_list<std::string_view> cues) {
  for (auto c : cues) {
    if (s.find(c) != std::string::npos) return true;
  }
  return false;
}

enum class Lead { none, affirm, deny };

Lead lead_of(const std::string& first) {
  if (starts_with_any(first, {"no", "that is not correct", "that's not correct", "that is incorrect",
                              "that's incorrect", "this is not accurate", "this is not correct", "incorrect",
                              "false", "not quite", "not exactly", "not true"})) {
    return Lead::deny;
  }
  if (starts_with_any(first, {"yes", "that is correct", "that's correct", "that is right", "that's right",
                              "this is accurate", "this is correct", "correct", "true", "indeed", "you're right",
                              "you are right", "you're mostly right", "you are mostly right", "absolutely",
                              "exactly"})) {
    return Lead::affirm;
  }
  return Lead::none;
}

bool abstains(const std::string& all) {
  return starts_with_any(all, {"i don't know", "i do not know", "i'm not sure", "i am not sure", "i cannot answer",
                               "i can't answer", "i'm unable", "i am unable", "i could not find this information",
                               "sorry"});
}

// Cues that the answer corrects the premise.
bool correction_cue(const std::string& rest) {
  return contains_any(rest, {"actually", "in fact", "rather than", "inaccura", "is wrong", "mistaken",
                             "misconception", "the source gives", "the sources say otherwise", "not accurate",
                             "not correct"});
}

bool not_but(const std::string& rest) {
  static const std::regex re("\\bnot\\b[^.;]*\\bbut\\b");
  return std::regex_search(rest, re);
}

bool evidence_denial(const std::string& all) {
  return contains_any(all, {"no information or evidence", "no evidence", "could not find any information",
                            "not supported by", "there is no information", "unable to verify",
                            "cannot be verified", "does not appear to be true"});
}

bool hedged_text(const std::string& all) {
  static const std::regex re("\\b(likely|may|might|possibly|probably|perhaps)\\b");
  return std::regex_search(all, re);
}

bool restates_truth(const ProbeInfo& probe, const engines::EngineResponse& response) {
  for (const auto& p : probe.perturbations) {
    if (!p.flips_truth || p.original.empty()) continue;
    for (const auto& s : response.statements) {
      if (asserts_value(s.text, p.original)) return true;
    }
  }
  return false;
}

}  // namespace

Stance classify_stance(const engines::EngineResponse& response, const ProbeInfo* probe) {
  Stance st;
  std::string all = fold(engines::strip_markers(response.raw_text, engines::MarkerStyle::bracket_numeric));
  if (!response.statements.empty()) {
    all.clear();
    for (const auto& s : response.statements) all += (all.empty() ? "" : " ") + fold(s.text);
  }
  if (all.empty() || abstains(all)) return st;
  std::string first = response.statements.empty() ? all : fold(response.statements.front().text);
  std::string rest = all.size() > first.size() ? all.substr(first.size()) : "";
  // The lead statement may carry its own correction after the stance word
  // ("You're mostly right! However, ...").
  Lead lead = lead_of(first);
  bool fix = correction_cue(lead == Lead::none ? all : rest);
  bool truth = probe && restates_truth(*probe, response);
  if (lead == Lead::deny) {
    st.verdict = fix || truth ? Verdict::correct_with_fix : Verdict::deny;
    return st;
  }
  if (fix || (lead == Lead::none && not_but(all))) {
    st.verdict = Verdict::correct_with_fix;
    return st;
  }
  if (evidence_denial(all)) {
    st.verdict = Verdict::deny;
    return st;
  }
  st.verdict = Verdict::affirm;
  st.hedged = hedged_text(all);
  return st;
}

bool asserts_value(std::string_view statement, std::string_view original) {
  auto ot = find_temporal_exprs(original);
  auto on = find_numeric_exprs(original);
  if (!ot.empty() || !on.empty()) {
    auto st = find_temporal_exprs(statement);
    auto sn = find_numeric_exprs(statement);
    for (const auto& o : ot) {
      for (const auto& s : st) {
        if (s.interval() == o.interval()) return true;
      }
    }
    for (const auto& o : on) {
      for (const auto& s : sn) {
        if (s.interval() == o.interval()) return true;
      }
    }
    return false;
  }
  std::string o = text::normalize_answer(original);
  if (o.empty()) return false;
  return text::find_word(text::normalize_answer(statement), o) != std::string::npos;
}

bool detect_contradiction(const ProbeInfo& probe, const engines::EngineResponse& response, Verdict verdict) {
  if (probe.expected_label != attack::Label::truth_flipping || verdict != Verdict::affirm) return false;
  return restates_truth(probe, response);
}

bool detect_contradiction(const attack::AttackInstance& instance, const engines::EngineResponse& response) {
  ProbeInfo probe = probe_of(instance);
  return detect_contradiction(probe, response, classify_stance(response, &probe).verdict);
}

Stance RuleJudge::stance(const ProbeInfo& probe, const engines::EngineResponse& response) {
  return classify_stance(response, &probe);
}

HttpJudge::HttpJudge(std::string endpoint, std::string prompt_template, std::string auth_env,
                     engines::HttpTransport transport)
    : endpoint_(std::move(endpoint)), template_(std::move(prompt_template)), transport_(std::move(transport)) {
  if (!auth_env.empty()) {
    const char* v = std::getenv(auth_env.c_str());
    if (!v || !*v) throw ConfigError("judge: environment variable " + auth_env + " is not set");
    secret_ = v;
  }
  if (!transport_) transport_ = engines::http_post;
}

Stance HttpJudge::stance(const ProbeInfo& probe, const engines::EngineResponse& response) {
  std::string prompt = template_;
  auto put = [&](const std::string& key, const std::string& value) {
    std::size_t pos;
    while ((pos = prompt.find(key)) != std::string::npos) prompt.replace(pos, key.size(), value);
  };
  put("{{claim}}", probe.text);
  put("{{answer}}", engines::strip_markers(response.raw_text, engines::MarkerStyle::bracket_numeric));
  std::map<std::string, std::string> headers{{"Content-Type", "application/json"}};
  if (!secret_.empty()) headers["Authorization"] = "Bearer " + secret_;
  auto reply = transport_(endpoint_, json{{"prompt", prompt}}.dump(), headers, 60);
  if (reply.status < 200 || reply.status >= 300) {
    throw ExternalError("judge endpoint returned " + std::to_string(reply.status));
  }
  try {
    json j = json::parse(reply.body);
    Stance st;
    st.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    st.hedged = j.value("hedged", false);
    return st;
  } catch (const std::exception& e) {
    throw ExternalError(std::string("judge reply unusable: ") + e.what());
  }
}

std::unique_ptr<JudgeBackend> make_judge(const json& config, const std::filesystem::path& base_dir) {
  std::string kind = config.value("kind", std::string("rules"));
  if (kind == "rules") return std::make_unique<RuleJudge>();
  if (kind == "http") {
    std::string endpoint = config.value("endpoint", std::string());
    if (endpoint.empty()) throw ConfigError("http judge needs an endpoint");
    std::string tmpl = "Claim: {{claim}}\nAnswer: {{answer}}\nVerdict?";
    if (config.contains("prompt_template_file")) {
      tmpl = read_text(base_dir / config["prompt_template_file"].get<std::string>());
    }
    return std::make_unique<HttpJudge>(endpoint, tmpl, config.value("auth_env", std::string()));
  }
  throw ConfigError("unknown judge kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Automatic support labels and judging
// ---------------------------------------------------------------------------

SupportLabels auto_support(const engines::EngineResponse& response, const engines::SnapshotIndex& index) {
  std::map<std::string, std::string> snippets;
  for (const auto& c : response.citations) {
    std::string snippet = c.snippet;
    if (snippet.empty()) {
      if (auto ref = engines::parse_sentence_url(c.url_or_title)) {
        if (const auto* art = index.snapshot().find(ref->first); art && ref->second < art->sentences.size()) {
          snippet = art->sentences[ref->second];
        }
      }
    }
    snippets[c.id] = snippet;
  }
  SupportLabels out;
  for (const auto& s : response.statements) {
    bool any = false;
    for (const auto& r : s.citation_refs) {
      const std::string& snip = snippets[r];
      bool sup = !snip.empty() && index.contains_claim(snip, s.text);
      out.citation_support.push_back(sup);
      out.citation_relevant.push_back(!snip.empty() && index.overlap(snip, s.text) > 0);
      any = any || sup;
    }
    out.statement_support.push_back(any);
  }
  return out;
}

Judgment auto_judge(const ProbeInfo& probe, const engines::EngineResponse& response, JudgeBackend& judge,
                    const engines::SnapshotIndex& index, const ScoringPolicy& policy) {
  Judgment j;
  j.instance_id = probe.id;
  j.engine = response.engine;
  j.mode = response.mode;
  j.annotator = "auto:" + judge.name();
  bool empty = std::all_of(response.raw_text.begin(), response.raw_text.end(),
                           [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  Stance st = empty ? Stance{} : judge.stance(probe, response);
  j.verdict = st.verdict;
  j.hedged = st.hedged;
  std::string answer = engines::strip_markers(response.raw_text, engines::MarkerStyle::bracket_numeric);
  if (!response.statements.empty()) {
    answer.clear();
    for (const auto& s : response.statements) answer += (answer.empty() ? "" : " ") + s.text;
  }
  j.is_correct = decide_correct(probe, j.verdict, answer, policy);
  j.contradiction = detect_contradiction(probe, response, j.verdict);
  auto labels = auto_support(response, index);
  j.statement_support = std::move(labels.statement_support);
  j.citation_support = std::move(labels.citation_support);
  j.citation_relevant = std::move(labels.citation_relevant);
  j.timestamp = response.timestamp;
  return j;
}

// ---------------------------------------------------------------------------
// Import / export
// ---------------------------------------------------------------------------

std::vector<Judgment> parse_judgments(std::string_view jsonl, const ResponseLookup& lookup) {
  auto doc = parse_jsonl(jsonl, kJudgmentFormat);
  std::vector<Judgment> out;
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t> seen;
  for (const auto& rec : doc.records) {
    Judgment j;
    try {
      j = rec.value.get<Judgment>();
      validate_judgment(j);
      if (lookup) {
        const auto* resp = lookup(j.instance_id, j.engine, j.mode);
        if (!resp) throw ValidationError("judgment " + j.instance_id + ": no stored response for " + j.engine);
        validate_against(j, *resp);
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), rec.line);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(rec.line) + ": " + e.what());
    }
    auto key = std::make_tuple(j.instance_id, j.engine, j.mode, j.annotator);
    auto [it, fresh] = seen.emplace(key, rec.line);
    if (!fresh) {
      throw ValidationError("duplicate judgment for " + j.instance_id + " / " + engines::engine_key(j.engine, j.mode) +
                            " by " + j.annotator + " at lines " + std::to_string(it->second) + " and " +
                            std::to_string(rec.line));
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<Judgment> import_judgments(const std::filesystem::path& path, const ResponseLookup& lookup) {
  return parse_judgments(read_text(path), lookup);
}

std::string serialize_judgments(const std::vector<Judgment>& judgments, const json& header_extra) {
  json header = make_header(kJudgmentFormat);
  for (auto& [k, v] : header_extra.items()) header[k] = v;
  std::vector<json> records;
  records.reserve(judgments.size());
  for (const auto& j : judgments) records.emplace_back(j);
  return dump_jsonl(header, records);
}

void sort_judgments(std::vector<Judgment>& judgments) {
  std::stable_sort(judgments.begin(), judgments.end(), [](const Judgment& a, const Judgment& b) {
    return std::tie(a.instance_id, a.engine, a.mode, a.annotator, a.timestamp) <
           std::tie(b.instance_id, b.engine, b.mode, b.annotator, b.timestamp);
  });
}

}  // namespace advfact::judge
