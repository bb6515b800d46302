// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "advfact/adjudication.hpp"
#include "advfact/metrics.hpp"
#include "advfact/pipeline.hpp"
#include "advfact/question.hpp"
#include "advfact/text.hpp"
#include "../support/oracles.hpp"
#include "../support/test_support.hpp"

using namespace advfact;
using namespace advfact::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

const metrics::ReportRow* find_row(const metrics::MetricsReport& r,
                                   const std::vector<std::pair<std::string, std::string>>& keys) {
  for (const auto& row : r.rows) {
    bool all = true;
    for (const auto& k : keys) {
      bool hit = false;
      for (const auto& rk : row.keys) hit |= rk == k;
      all &= hit;
    }
    if (all) return &row;
  }
  return nullptr;
}

bool close(std::optional<double> lib, std::optional<double> ref) {
  if (lib.has_value() != ref.has_value()) return false;
  return !lib || std::fabs(*lib - *ref) <= 1e-12;
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
  std::mt19937_64 rng(20240611);
  int stores = 200, mismatches = 0;
  std::size_t records = 0;
  auto t0 = std::chrono::steady_clock::now();
  for (int s = 0; s < stores; ++s) {
    auto store = synthetic_store(rng);
    records += store.records.size();
    auto rep = metrics::build_report(store.records, {"engine"});
    const metrics::ReportRow* row = rep.rows.empty() ? nullptr : &rep.rows.front();
    std::optional<double> asr, rec, prec;
    if (row) {
      asr = row->asr;
      rec = row->citation_recall;
      prec = row->citation_precision;
    }
    bool ok = close(asr, brute_asr(store)) && close(rec, brute_citation_recall(store)) &&
              close(prec, brute_citation_precision(store, false)) &&
              close(row ? row->citation_precision_filtered : std::nullopt, brute_citation_precision(store, true));
    mismatches += !ok;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {mismatches == 0 && secs < 10.0, std::to_string(stores - mismatches) + "/" + std::to_string(stores) +
                                              " stores agree (" + std::to_string(records) + " records), " +
                                              fmt("%.2f s", secs)};
}

Outcome exclusion_property() {
  std::mt19937_64 rng(99);
  int mutations = 0, changed = 0;
  while (mutations < 100) {
    auto store = synthetic_store(rng, 30, 8);
    std::vector<std::size_t> excluded;  // attacks of originals answered wrongly
    std::set<std::string> wrong_originals;
    for (const auto& r : store.records) {
      if (r.probe.kind == judge::ItemKind::original && !r.is_correct) wrong_originals.insert(r.probe.id);
    }
    for (std::size_t i = 0; i < store.records.size(); ++i) {
      const auto& r = store.records[i];
      if (r.probe.kind != judge::ItemKind::original && wrong_originals.count(r.original_id)) excluded.push_back(i);
    }
    if (excluded.empty()) continue;
    double base;
    try {
      base = metrics::build_report(store.records, {"engine"}).rows.at(0).asr.value();
    } catch (const std::exception&) {
      continue;  // no correct original with attacks
    }
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i : excluded) store.records[i].is_correct = coin(rng);
    auto after = metrics::build_report(store.records, {"engine"}).rows.at(0).asr;
    ++mutations;
    changed += !(after && same_bits(*after, base));
  }
  return {changed == 0, std::to_string(mutations - changed) + "/" + std::to_string(mutations) +
                            " mutations leave ASR bit-identical"};
}

Outcome aggregate_reconstruction() {
  json t = json::parse(read_file(fixture_path("engine_aggregates.json")));
  int ok = 0, total = 0;
  std::string bad;
  for (const auto& e : t["engines"]) {
    AggregateShape shape{e["engine"], e["originals"], e["correct_originals"], e["attacks_per_correct"],
                         e["attacks_per_incorrect"], e["wrong_under_correct"], e["wrong_under_incorrect"]};
    auto rep = metrics::build_report(records_for_shape(shape), {"engine"});
    const auto& row = rep.rows.at(0);
    const auto& pub = e["published"];
    auto check = [&](const char* name, std::optional<double> v) {
      ++total;
      double shown = std::round(v.value_or(-1) * 1000.0) / 10.0;
      if (v && std::fabs(shown - pub[name].get<double>()) <= 0.1 + 1e-9) {
        ++ok;
      } else {
        bad += " " + shape.engine + ":" + name + "=" + fmt("%.1f", shown);
      }
    };
    check("acc_before", row.acc_before);
    check("acc_after", row.acc_after);
    check("asr", row.asr);
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " published cells within 0.1" + bad};
}

Outcome flip_label_soundness() {
  const auto& w = fixture_world();
  std::set<std::pair<std::string, std::string>> seen;
  int checked = 0, agree = 0, numerical = 0, temporal = 0;
  std::string bad;
  for (std::uint64_t seed = 0; seed < 400 && (numerical < 100 || temporal < 100); ++seed) {
    for (const auto& st : w.corpus.statements) {
      for (bool flip : {true, false}) {
        std::vector<attack::AttackInstance> made;
        try {
          made.push_back(attack::numerical_manipulate(st, flip, seed));
        } catch (const NotApplicable&) {
        }
        for (auto kind : {TemporalKind::direct, TemporalKind::vague, TemporalKind::relative}) {
          try {
            made.push_back(attack::temporal_modify(st, kind, flip, seed));
          } catch (const NotApplicable&) {
          }
        }
        for (const auto& a : made) {
          if (!seen.insert({st.id, a.text}).second) continue;
          (a.method == attack::Method::numerical ? numerical : temporal)++;
          for (const auto& rec : a.perturbations) {
            ++checked;
            auto o = oracle_flip(st, rec);
            if (o && *o == rec.flips_truth) {
              ++agree;
            } else if (bad.size() < 200) {
              bad += " " + a.id + "[" + a.text + "]";
            }
          }
        }
      }
    }
  }
  bool enough = numerical >= 100 && temporal >= 100;
  return {enough && checked == agree, std::to_string(agree) + "/" + std::to_string(checked) + " records over " +
                                          std::to_string(numerical) + " numerical and " + std::to_string(temporal) +
                                          " temporal instances" + bad};
}

Outcome suite_composition() {
  const auto& w = fixture_world();
  auto suite = fixture_suite();
  auto by_parent = attack::methods_by_parent(suite);
  std::map<std::string, std::vector<attack::Method>> got(by_parent.begin(), by_parent.end());
  int rule_ok = 0, paired_ok = 0, reversal_q_only = 0;
  std::string bad;
  for (const auto& st : w.corpus.statements) {
    std::set<attack::Method> want{attack::Method::multihop, attack::Method::semantic, attack::Method::distraction,
                                  attack::Method::exaggeration, attack::Method::reversal};
    if (!st.temporal_exprs.empty()) want.insert(attack::Method::temporal);
    if (!st.temporal_exprs.empty() || !st.numeric_exprs.empty()) want.insert(attack::Method::numerical);
    auto it = got.find(st.id);
    std::set<attack::Method> have;
    if (it != got.end()) have.insert(it->second.begin(), it->second.end());
    if (have == want && have.size() >= 5 && have.size() <= 7) {
      ++rule_ok;
    } else {
      bad += " " + st.id;
    }
    int d = 0, q = 0, rq = 0, rd = 0;
    for (const auto& a : suite.instances) {
      if (a.parent_id != st.id) continue;
      bool is_q = a.form == attack::Form::question;
      if (a.method == attack::Method::reversal) {
        (is_q ? rq : rd)++;
      } else {
        (is_q ? q : d)++;
      }
    }
    paired_ok += d == q && d > 0;
    reversal_q_only += rd == 0 && rq == 1;
  }
  auto n = static_cast<int>(w.corpus.statements.size());
  return {rule_ok == n && paired_ok == n && reversal_q_only == n,
          std::to_string(rule_ok) + "/" + std::to_string(n) + " statements match the 5-7 method rule, " +
              std::to_string(paired_ok) + "/" + std::to_string(n) +
              " have equal question/declarative counts (reversal, question-only by shape, counted apart: " +
              std::to_string(reversal_q_only) + "/" + std::to_string(n) + ")" + bad};
}

Outcome reversal_and_cloze_shape() {
  const auto& w = fixture_world();
  auto suite = fixture_suite();
  std::map<std::string, const corpus::FactStatement*> parents;
  for (const auto& st : w.corpus.statements) parents[st.id] = &st;
  static const std::regex wh("^(What|Which|Who|Whom|Whose|When|Where|How)\\b.*\\?$");
  int rev = 0, rev_ok = 0, cloze_ok = 0;
  std::string bad;
  for (const auto& a : suite.instances) {
    if (a.method != attack::Method::reversal) continue;
    ++rev;
    const auto* p = parents.at(a.parent_id);
    std::string subject = p->predicate_frame ? p->predicate_frame->subject : std::string();
    bool ok = std::regex_match(a.text, wh) && a.gold_answer && !a.gold_answer->empty() && !subject.empty() &&
              text::find_word(a.text, subject, true) == std::string::npos;
    rev_ok += ok;
    if (!ok) bad += " " + a.id;
  }
  for (const auto& c : suite.clozes) {
    std::string blank(c.blank_kind == attack::BlankKind::year ? attack::kYearBlank : attack::kQuantityBlank);
    std::size_t first = c.text.find(blank);
    bool one = first != std::string::npos && c.text.find(blank, first + 1) == std::string::npos;
    bool ok = one && attack::cloze_fill(c, c.gold_answer) == parents.at(c.parent_id)->text;
    cloze_ok += ok;
    if (!ok) bad += " " + c.id;
  }
  auto nc = static_cast<int>(suite.clozes.size());
  return {rev > 0 && rev == rev_ok && nc > 0 && nc == cloze_ok,
          std::to_string(rev_ok) + "/" + std::to_string(rev) + " reversal instances well-formed, " +
              std::to_string(cloze_ok) + "/" + std::to_string(nc) + " clozes re-insert to the parent" + bad};
}

struct MockRun {
  std::vector<metrics::EvalRecord> records;
  bool identical = false;
  double seconds = 0;
  std::string error;
};

const MockRun& mock_run() {
  static const MockRun run = [] {
    MockRun r;
    try {
      auto t0 = std::chrono::steady_clock::now();
      auto config = pipeline::load_config(source_path("config/pipeline.mock.json"));
      TempDir a("advfact-accept"), b("advfact-accept");
      pipeline::Pipeline pa(a.path(), config);
      pa.run(pipeline::all_stages());
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      pipeline::Pipeline pb(b.path(), config);
      pb.run(pipeline::all_stages());
      r.identical = tree_contents(a.path()) == tree_contents(b.path());
      r.records = pa.records();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  }();
  return run;
}

Outcome mock_directional() {
  const auto& run = mock_run();
  if (!run.error.empty()) return {false, "pipeline failed: " + run.error};
  auto rep = metrics::build_report(run.records, {"engine", "mode"});
  const auto* g = find_row(rep, {{"mode", "grounded"}});
  const auto* u = find_row(rep, {{"mode", "gullible"}});
  if (!g || !u || !g->asr || !u->asr) return {false, "missing grounded or gullible ASR"};
  double gap = *u->asr - *g->asr;
  return {gap >= 0.20 && run.identical && run.seconds < 60.0,
          "gullible " + fmt("%.1f", *u->asr * 100) + " vs grounded " + fmt("%.1f", *g->asr * 100) + " (gap " +
              fmt("%.1f", gap * 100) + " pp), two runs " + (run.identical ? "byte-identical" : "DIFFER") + ", " +
              fmt("%.2f s per run", run.seconds)};
}

Outcome cloze_vs_manipulation() {
  const auto& run = mock_run();
  if (!run.error.empty()) return {false, "pipeline failed: " + run.error};
  auto rep = metrics::build_report(run.records, {"engine", "mode", "method"});
  const auto* gc = find_row(rep, {{"mode", "grounded"}, {"method", "cloze"}});
  const auto* un = find_row(rep, {{"mode", "gullible"}, {"method", "numerical"}});
  if (!gc || !un || !gc->acc_after || !un->asr) return {false, "missing cloze or numerical rows"};
  return {*gc->acc_after == 1.0 && *un->asr > 0.0,
          "grounded cloze accuracy " + fmt("%.1f", *gc->acc_after * 100) + " over " + std::to_string(gc->n_attacks) +
              ", gullible numerical ASR " + fmt("%.1f", *un->asr * 100)};
}

Outcome fleiss_kappa() {
  std::vector<std::vector<int>> perfect;
  for (int i = 0; i < 12; ++i) {
    std::vector<int> row(4, 0);
    row[static_cast<std::size_t>(i % 4)] = 5;
    perfect.push_back(row);
  }
  double k1 = metrics::fleiss_kappa(perfect);
  double k2 = metrics::fleiss_kappa(worked_kappa_matrix());
  return {k1 == 1.0 && std::fabs(k2 - kWorkedKappa) <= 1e-9,
          "perfect " + fmt("%.17g", k1) + ", worked " + fmt("%.17g", k2) + " vs oracle " + fmt("%.17g", kWorkedKappa)};
}

Outcome factscore_mean() {
  using metrics::AtomicFact;
  // Supported fractions 3/4, 1/2, 5/5 and one refusal: mean 0.75.
  std::vector<metrics::AtomicFactSet> sets{
      {"r1", true, {{"a", true}, {"b", true}, {"c", true}, {"d", false}}},
      {"r2", true, {{"a", true}, {"b", false}}},
      {"r3", false, {}},
      {"r4", true, {{"a", true}, {"b", true}, {"c", true}, {"d", true}, {"e", true}}},
  };
  double hand = metrics::factscore(sets);

  // Same pattern from engine responses: one answer from snapshot sentences
  // plus an invented one, and a refusal.
  const auto& w = fixture_world();
  const auto& art = w.snapshot.at("O2 Arena");
  std::string raw = art.sentences.at(0) + " " + art.sentences.at(1) + " The arena was built on the Moon in 1850.";
  auto resp = response_from_answer("x1", raw);
  auto refusal = response_from_answer("x2", "I don't know.");
  auto splitter = metrics::default_fact_splitter();
  auto checker = metrics::default_support_checker(*w.index);
  auto s1 = metrics::atomic_facts(resp, splitter, checker);
  auto s2 = metrics::atomic_facts(refusal, splitter, checker);
  int supported = 0;
  for (const auto& f : s1.facts) supported += f.supported;
  double expected = static_cast<double>(supported) / static_cast<double>(s1.facts.size());
  double from_responses = metrics::factscore({s1, s2});
  bool unsupported_seen = supported < static_cast<int>(s1.facts.size());
  return {hand == 0.75 && !s2.responds && unsupported_seen && from_responses == expected,
          "hand sets " + fmt("%.4f", hand) + " (want 0.7500), responses " + std::to_string(supported) + "/" +
              std::to_string(s1.facts.size()) + " facts supported, refusal excluded: " + (!s2.responds ? "yes" : "no")};
}

Outcome contradiction_detector() {
  json fx = json::parse(read_file(fixture_path("transcripts.json")));
  int flagged_cases = 0, flag_ok = 0, cases = 0, all_ok = 0;
  std::string bad;
  for (const auto& c : fx["cases"]) {
    auto probe = probe_from_json(c["probe"]);
    auto resp = response_from_answer(probe.id, c["answer"]);
    auto stance = judge::classify_stance(resp, &probe);
    std::string answer;
    for (const auto& s : resp.statements) answer += (answer.empty() ? "" : " ") + s.text;
    bool correct = judge::decide_correct(probe, stance.verdict, answer);
    bool contra = judge::detect_contradiction(probe, resp, stance.verdict);
    const auto& e = c["expect"];
    ++cases;
    bool ok = judge::to_string(stance.verdict) == e["verdict"] && correct == e["is_correct"].get<bool>() &&
              contra == e["contradiction"].get<bool>() && (!e.contains("hedged") || stance.hedged == e["hedged"]);
    all_ok += ok;
    if (!probe.gold_required) {
      ++flagged_cases;
      flag_ok += contra == e["contradiction"].get<bool>();
    }
    if (!ok) bad += " " + c["name"].get<std::string>();
  }
  return {flag_ok == flagged_cases && flagged_cases == 8 && all_ok == cases,
          std::to_string(flag_ok) + "/" + std::to_string(flagged_cases) + " contradiction flags, " +
              std::to_string(all_ok) + "/" + std::to_string(cases) + " fixtures fully as expected" + bad};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"metric-oracle-equivalence", metric_oracle},
      {"asr-exclusion-property", exclusion_property},
      {"aggregate-reconstruction", aggregate_reconstruction},
      {"flip-label-soundness", flip_label_soundness},
      {"suite-composition-rule", suite_composition},
      {"reversal-shape-and-cloze", reversal_and_cloze_shape},
      {"mock-directional-e2e", mock_directional},
      {"cloze-vs-manipulation", cloze_vs_manipulation},
      {"fleiss-kappa", fleiss_kappa},
      {"factscore-mean", factscore_mean},
      {"contradiction-detector", contradiction_detector},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << name << " (" << fmt("%.0f", ms) << " ms): " << o.detail
              << std::endl;
  }
  std::cout << (checks.size() - static_cast<std::size_t>(failed)) << "/" << checks.size() << " criteria passed"
            << std::endl;
  return failed;
}
