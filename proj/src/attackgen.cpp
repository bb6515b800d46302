#include "advfact/attackgen.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "advfact/analysis.hpp"
#include "advfact/question.hpp"
#include "advfact/text.hpp"

namespace advfact::attack {

using corpus::Article;
using corpus::EntitySpan;
using corpus::FactStatement;
using corpus::KnowledgeSnapshot;

// ---------------------------------------------------------------------------
// Enum names and JSON
// ---------------------------------------------------------------------------

namespace {

template <typename E, std::size_t N>
E enum_from(std::string_view s, const std::pair<E, const char*> (&table)[N], const char* what) {
  for (const auto& [e, name] : table) {
    if (s == name) return e;
  }
  throw ValidationError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string enum_name(E e, const std::pair<E, const char*> (&table)[N]) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "?";
}

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::multihop, "multihop"},         {Method::temporal, "temporal"},
    {Method::semantic, "semantic"},         {Method::distraction, "distraction"},
    {Method::exaggeration, "exaggeration"}, {Method::reversal, "reversal"},
    {Method::numerical, "numerical"},
};
constexpr std::pair<Form, const char*> kFormNames[] = {{Form::declarative, "declarative"},
                                                       {Form::question, "question"}};
constexpr std::pair<Label, const char*> kLabelNames[] = {{Label::truth_preserving, "truth_preserving"},
                                                         {Label::truth_flipping, "truth_flipping"}};
constexpr std::pair<HopMode, const char*> kHopModeNames[] = {{HopMode::MHOE, "MHOE"}, {HopMode::OHOE, "OHOE"}};

}  // namespace

std::string to_string(Method m) { return enum_name(m, kMethodNames); }
std::string to_string(Form f) { return enum_name(f, kFormNames); }
std::string to_string(Label l) { return enum_name(l, kLabelNames); }
std::string to_string(HopMode m) { return enum_name(m, kHopModeNames); }
Method method_from_string(std::string_view s) { return enum_from(s, kMethodNames, "method"); }
Form form_from_string(std::string_view s) { return enum_from(s, kFormNames, "form"); }
Label label_from_string(std::string_view s) { return enum_from(s, kLabelNames, "label"); }
HopMode hop_mode_from_string(std::string_view s) { return enum_from(s, kHopModeNames, "hop mode"); }

std::string instance_id(std::string_view parent_id, Method method, bool flip, std::string_view variant, Form form) {
  std::string id = std::string(parent_id) + "." + to_string(method) + (flip ? ".flip" : ".keep");
  if (!variant.empty()) id += "." + std::string(variant);
  id += form == Form::declarative ? ".d" : ".q";
  return id;
}

void to_json(json& j, const PerturbationRecord& p) {
  j = json{{"site", p.site ? json(*p.site) : json("APPEND")},
           {"original", p.original},
           {"replacement", p.replacement},
           {"flips_truth", p.flips_truth},
           {"hop_index", p.hop_index}};
  if (p.predicate) j["predicate"] = *p.predicate;
  if (!p.layer.empty()) {
    j["layer"] = p.layer;
    j["expr_index"] = p.expr_index;
  }
  if (p.scale_factor) j["scale_factor"] = *p.scale_factor;
}

void from_json(const json& j, PerturbationRecord& p) {
  const json& site = j.at("site");
  if (site.is_string()) {
    if (site.get<std::string>() != "APPEND") throw ValidationError("site must be a span or \"APPEND\"");
    p.site.reset();
  } else {
    p.site = site.get<Span>();
  }
  j.at("original").get_to(p.original);
  j.at("replacement").get_to(p.replacement);
  j.at("flips_truth").get_to(p.flips_truth);
  j.at("hop_index").get_to(p.hop_index);
  p.predicate = j.contains("predicate") ? std::optional(j.at("predicate").get<NumericPredicate>()) : std::nullopt;
  p.layer = j.value("layer", std::string());
  p.expr_index = j.value("expr_index", -1);
  p.scale_factor =
      j.contains("scale_factor") ? std::optional(j.at("scale_factor").get<Rational>()) : std::nullopt;
}

void to_json(json& j, const Target& t) {
  j = json{{"role", corpus::to_string(t.role)}, {"kind", corpus::to_string(t.kind)}, {"surface", t.surface}};
}

void from_json(const json& j, Target& t) {
  t.role = corpus::role_from_string(j.at("role").get<std::string>());
  t.kind = corpus::entity_kind_from_string(j.at("kind").get<std::string>());
  j.at("surface").get_to(t.surface);
}

void to_json(json& j, const AttackInstance& a) {
  j = json{{"id", a.id},
           {"parent_id", a.parent_id},
           {"method", to_string(a.method)},
           {"form", to_string(a.form)},
           {"text", a.text},
           {"perturbations", a.perturbations},
           {"expected_label", to_string(a.expected_label)},
           {"hop_count", a.hop_count},
           {"error_count", a.error_count},
           {"target", a.target ? json(*a.target) : json(nullptr)},
           {"gold_answer", a.gold_answer ? json(*a.gold_answer) : json(nullptr)},
           {"variant", a.variant}};
  if (a.hop_mode) j["hop_mode"] = to_string(*a.hop_mode);
  if (!a.chain.empty()) j["chain"] = a.chain;
}

void from_json(const json& j, AttackInstance& a) {
  j.at("id").get_to(a.id);
  j.at("parent_id").get_to(a.parent_id);
  a.method = method_from_string(j.at("method").get<std::string>());
  a.form = form_from_string(j.at("form").get<std::string>());
  j.at("text").get_to(a.text);
  j.at("perturbations").get_to(a.perturbations);
  a.expected_label = label_from_string(j.at("expected_label").get<std::string>());
  j.at("hop_count").get_to(a.hop_count);
  j.at("error_count").get_to(a.error_count);
  a.target = j.contains("target") && !j.at("target").is_null() ? std::optional(j.at("target").get<Target>())
                                                                 : std::nullopt;
  a.gold_answer = j.contains("gold_answer") && !j.at("gold_answer").is_null()
                      ? std::optional(j.at("gold_answer").get<std::string>())
                      : std::nullopt;
  a.variant = j.value("variant", std::string());
  a.hop_mode = j.contains("hop_mode") ? std::optional(hop_mode_from_string(j.at("hop_mode").get<std::string>()))
                                      : std::nullopt;
  a.chain = j.value("chain", std::vector<std::string>());
}

void validate_instance(const AttackInstance& a) {
  auto fail = [&](const std::string& why) { throw InvariantViolation(a.id + ": " + why); };
  bool flipping = a.expected_label == Label::truth_flipping;
  if (flipping != (a.error_count >= 1)) fail("expected_label disagrees with error_count");
  if (a.perturbations.empty()) fail("no perturbation records");
  bool any_flip = std::any_of(a.perturbations.begin(), a.perturbations.end(),
                              [](const PerturbationRecord& p) { return p.flips_truth; });
  if (any_flip != flipping) fail("perturbation flips_truth values disagree with expected_label");
  if (a.method == Method::reversal) {
    if (a.form != Form::question) fail("reversal must be a question");
    if (!a.gold_answer || a.gold_answer->empty()) fail("reversal without gold answer");
  }
  if (a.method == Method::multihop && a.hop_count < 1) fail("multihop needs hop_count >= 1");
  if (a.method == Method::distraction && a.hop_count != 1) fail("distraction needs hop_count = 1");
  if (a.method != Method::multihop && a.method != Method::distraction && a.hop_count != 0) {
    fail("hop_count must be 0");
  }
  if (a.error_count < 0 || a.hop_count < 0) fail("negative count");
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

namespace {

std::string splice(std::string_view s, Span sp, std::string_view rep) {
  return std::string(s.substr(0, sp.begin)) + std::string(rep) + std::string(s.substr(sp.end));
}

/// Inserts `addition` in front of the sentence-final period.
std::string insert_before_period(const std::string& s, std::string_view addition) {
  if (s.empty() || s.back() != '.') return s + std::string(addition);
  std::string out = s.substr(0, s.size() - 1) + std::string(addition);
  return out.back() == '.' ? out : out + ".";
}

AttackInstance base_instance(const FactStatement& st, Method m, bool flip, std::string variant) {
  AttackInstance a;
  a.id = instance_id(st.id, m, flip, variant, Form::declarative);
  a.parent_id = st.id;
  a.method = m;
  a.form = Form::declarative;
  a.expected_label = flip ? Label::truth_flipping : Label::truth_preserving;
  a.error_count = flip ? 1 : 0;
  a.variant = std::move(variant);
  return a;
}

std::string with_commas(std::int64_t v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  int n = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (n && n % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++n;
  }
  if (v < 0) out.push_back('-');
  return {out.rbegin(), out.rend()};
}

std::string render_number(const Rational& v, bool word_style, bool commas) {
  if (v.is_integer()) {
    if (word_style && v.numerator() >= 2 && v.numerator() <= 99) return number_word(static_cast<int>(v.numerator()));
    if (commas || v.numerator() >= 10000) return with_commas(v.numerator());
  }
  return v.to_string();
}

std::string ordinal(int n) {
  int mod100 = n % 100;
  const char* suf = "th";
  if (mod100 < 11 || mod100 > 13) {
    if (n % 10 == 1) suf = "st";
    if (n % 10 == 2) suf = "nd";
    if (n % 10 == 3) suf = "rd";
  }
  return std::to_string(n) + suf;
}

bool starts_relative(std::string_view s) {
  return text::starts_with_word(s, "before") || text::starts_with_word(s, "after") ||
         text::starts_with_word(s, "during");
}

// --- Fact sentences --------------------------------------------------------

struct Fact {
  const Article* article = nullptr;
  std::string sentence;
  std::string name;       // how the sentence names its article
  std::string predicate;  // remainder, without the final period
};

std::vector<std::string> article_names(const Article& a) {
  std::vector<std::string> names = {a.title, corpus::display_name(a.title)};
  names.insert(names.end(), a.aliases.begin(), a.aliases.end());
  std::vector<std::string> with_the;
  for (const auto& n : names) {
    if (n.rfind("The ", 0) != 0) with_the.push_back("The " + n);
  }
  names.insert(names.end(), with_the.begin(), with_the.end());
  std::sort(names.begin(), names.end(), [](const std::string& x, const std::string& y) {
    return x.size() != y.size() ? x.size() > y.size() : x < y;
  });
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::optional<Fact> fact_of(const Article& a, const std::string& s) {
  std::size_t off = 0;
  bool quoted = !s.empty() && s[0] == '"';
  if (quoted) off = 1;
  for (const auto& name : article_names(a)) {
    if (s.compare(off, name.size(), name) != 0) continue;
    std::size_t after = off + name.size();
    if (quoted) {
      if (after >= s.size() || s[after] != '"') continue;
      ++after;
    }
    if (after >= s.size() || s[after] != ' ') continue;
    std::string pred = text::trim(std::string_view(s).substr(after + 1));
    if (!pred.empty() && pred.back() == '.') {
      auto toks = text::tokenize(pred);
      if (toks.empty() || !text::is_abbreviation(toks.back().text)) pred.pop_back();
    }
    if (pred.empty() || !std::islower(static_cast<unsigned char>(pred[0]))) return std::nullopt;
    return Fact{&a, s, s.substr(0, after), pred};
  }
  return std::nullopt;
}

std::vector<Fact> facts_of(const Article& a) {
  std::vector<Fact> out;
  for (const auto& s : a.sentences) {
    if (auto f = fact_of(a, s)) out.push_back(std::move(*f));
  }
  return out;
}

/// Linked article named at the very end of a fact's predicate.
const Article* final_link(const Fact& f, const KnowledgeSnapshot& snap, std::string* mention) {
  const Article* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& link : f.article->links) {
    const Article* target = snap.find(link);
    if (!target) continue;
    for (const auto& n : article_names(*target)) {
      const std::string& p = f.predicate;
      if (n.size() >= p.size() || p.compare(p.size() - n.size(), n.size(), n) != 0) continue;
      if (p[p.size() - n.size() - 1] != ' ') continue;
      if (n.size() > best_len) {
        best = target;
        best_len = n.size();
        if (mention) *mention = n;
      }
    }
  }
  return best;
}

std::string relative_pronoun(const Article& a) { return a.category == "person" ? "who" : "which"; }

// --- Fabrication -----------------------------------------------------------

struct Fabricated {
  std::string predicate;
  std::string original;  // the true value the fabricated predicate contradicts
};

Fabricated fabricate(const std::string& pred, const Article& from, const KnowledgeSnapshot& snap,
                     const std::string& protected_mention, const std::vector<std::string>& chain, std::uint64_t seed,
                     const std::string& salt) {
  // (a) swap a named article for another of the same category.
  struct Mention {
    Span span;
    const Article* article;
  };
  std::vector<Mention> mentions;
  for (const auto& [title, art] : snap.articles()) {
    for (const auto& n : article_names(art)) {
      if (!text::is_capitalized(n)) continue;
      for (std::size_t pos = text::find_word(pred, n); pos != std::string::npos;
           pos = text::find_word(pred, n, false, pos + 1)) {
        mentions.push_back({{pos, pos + n.size()}, &art});
      }
    }
  }
  std::stable_sort(mentions.begin(), mentions.end(), [](const Mention& x, const Mention& y) {
    return x.span.size() != y.span.size() ? x.span.size() > y.span.size() : x.span.begin < y.span.begin;
  });
  std::vector<Mention> kept;
  for (const auto& m : mentions) {
    if (std::none_of(kept.begin(), kept.end(), [&](const Mention& k) { return k.span.overlaps(m.span); })) {
      kept.push_back(m);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Mention& x, const Mention& y) { return x.span < y.span; });
  Span protected_span{pred.size(), pred.size()};
  if (!protected_mention.empty() && pred.size() >= protected_mention.size()) {
    protected_span = {pred.size() - protected_mention.size(), pred.size()};
  }
  struct Swap {
    Span span;
    std::string original;
    std::string replacement;
  };
  std::vector<Swap> swaps;
  for (const auto& m : kept) {
    if (!protected_mention.empty() && m.span.overlaps(protected_span)) continue;
    for (const auto& [title, cand] : snap.articles()) {
      if (&cand == m.article || title == from.title || cand.category != m.article->category) continue;
      if (std::find(from.links.begin(), from.links.end(), title) != from.links.end()) continue;
      if (std::find(chain.begin(), chain.end(), title) != chain.end()) continue;
      std::string name = corpus::display_name(title);
      if (text::find_word(pred, name) != std::string::npos) continue;
      swaps.push_back({m.span, pred.substr(m.span.begin, m.span.size()), name});
    }
  }
  if (!swaps.empty()) {
    const auto& s = swaps[seeded_index(seed, salt + "/swap", swaps.size())];
    return {splice(pred, s.span, s.replacement), s.original};
  }

  // (b) shift a year or a count.
  for (const auto& t : find_temporal_exprs(pred)) {
    if (t.kind != TemporalKind::direct) continue;
    static constexpr int kShifts[] = {-12, -7, -4, 4, 7, 12};
    int shifted = t.year_lo + kShifts[seeded_index(seed, salt + "/year", std::size(kShifts))];
    return {splice(pred, t.span, std::to_string(shifted)), t.surface};
  }
  for (const auto& n : find_numeric_exprs(pred)) {
    std::string num = pred.substr(n.number_span.begin, n.number_span.size());
    auto toks = text::tokenize(num);
    if (toks.empty()) continue;
    bool word = number_word_value(text::to_lower(toks[0].text)).has_value();
    Rational head = word ? Rational(*number_word_value(text::to_lower(toks[0].text)))
                         : Rational::parse(toks[0].text);
    std::string rep = render_number(head * Rational(3), word, toks[0].text.find(',') != std::string::npos);
    Span sp{n.number_span.begin + toks[0].begin, n.number_span.begin + toks[0].end};
    return {splice(pred, sp, rep), pred.substr(sp.begin, sp.size())};
  }

  // (c) negate.
  auto toks = text::tokenize(pred);
  auto possessive_have = [&] {
    std::string a = text::to_lower(toks[0].text);
    if (a != "has" && a != "have" && a != "had") return false;
    if (toks.size() < 2) return true;
    std::string n = text::to_lower(toks[1].text);
    bool participle = text::is_irregular_participle(n) || (n.size() > 3 && n.compare(n.size() - 2, 2, "ed") == 0);
    return !participle && n != "been" && n != "not";
  };
  if (!toks.empty() && text::is_auxiliary(text::to_lower(toks[0].text)) && !possessive_have()) {
    if (toks.size() > 1 && text::to_lower(toks[1].text) == "not") {
      return {text::trim(pred.substr(0, toks[0].end) + pred.substr(toks[1].end)), pred};
    }
    return {pred.substr(0, toks[0].end) + " not" + pred.substr(toks[0].end), pred};
  }
  return {"never " + pred, pred};
}

// --- Hop chains ------------------------------------------------------------

struct Hop {
  Fact fact;
  const Article* to = nullptr;
  std::string mention;
};

using Path = std::vector<Hop>;

void extend_paths(const Article& at, const KnowledgeSnapshot& snap, const std::string& exclude_sentence, Path& path,
                  std::set<std::string>& visited, std::vector<Path>& out, std::size_t& budget) {
  bool extended = false;
  if (budget > 0 && path.size() < 8) {
    for (auto& f : facts_of(at)) {
      if (f.sentence == exclude_sentence) continue;
      std::string mention;
      const Article* next = final_link(f, snap, &mention);
      if (!next || visited.count(next->title)) continue;
      extended = true;
      --budget;
      path.push_back({f, next, mention});
      visited.insert(next->title);
      extend_paths(*next, snap, exclude_sentence, path, visited, out, budget);
      visited.erase(next->title);
      path.pop_back();
      if (budget == 0) break;
    }
  }
  if (!extended && !path.empty()) out.push_back(path);
}

std::vector<Path> deepest_paths(const FactStatement& st, const KnowledgeSnapshot& snap) {
  std::vector<Path> all;
  std::set<std::string> starts;
  for (const auto& e : st.entities) {
    if (!e.article.empty() && snap.contains(e.article)) starts.insert(e.article);
  }
  std::size_t budget = 20000;
  for (const auto& s : starts) {
    Path p;
    std::set<std::string> visited = {s};
    extend_paths(snap.at(s), snap, st.text, p, visited, all, budget);
  }
  std::size_t best = 0;
  for (const auto& p : all) best = std::max(best, p.size());
  std::vector<Path> out;
  for (auto& p : all) {
    if (p.size() == best) out.push_back(std::move(p));
  }
  return out;
}

// --- Time expressions ------------------------------------------------------

struct TimeCandidate {
  std::string text;
  TemporalKind kind;
  NumericPredicate predicate;
};

void add_year_relations(std::vector<TimeCandidate>& out, int a, int b) {
  std::set<int> ys;
  for (int d : {-10, -5, -2, -1, 0}) ys.insert(a + d);
  for (int d : {0, 1, 2, 5, 10}) ys.insert(b + d);
  for (int y : ys) {
    if (y < 1000 || y > 2099) continue;
    out.push_back({"before " + std::to_string(y), TemporalKind::relative, NumericPredicate::under(y)});
    out.push_back({"after " + std::to_string(y), TemporalKind::relative, NumericPredicate::over(y)});
  }
  for (int d = a / 10 * 10 - 20; d <= b / 10 * 10 + 20; d += 10) {
    if (d < 1000 || d > 2099) continue;
    out.push_back({"the decade after " + std::to_string(d), TemporalKind::relative,
                   NumericPredicate::in_interval(d + 1, d + 10)});
    out.push_back({"the decade before " + std::to_string(d), TemporalKind::relative,
                   NumericPredicate::in_interval(d - 10, d - 1)});
  }
}

std::vector<TimeCandidate> time_candidates(const TemporalExpr& e, TemporalKind kind, const AnchorTable& anchors) {
  int a = e.year_lo == kOpenYearLo ? e.year_hi : e.year_lo;
  int b = e.year_hi == kOpenYearHi ? e.year_lo : e.year_hi;
  std::vector<TimeCandidate> out;
  if (kind == TemporalKind::direct) {
    for (int y = a - 10; y <= b + 10; ++y) {
      if (y >= 1000 && y <= 2099) out.push_back({std::to_string(y), kind, NumericPredicate::exact(y)});
      if (y == a - 1 && b - a > 40) y = b - 1;
    }
  } else if (kind == TemporalKind::vague) {
    for (int d = a / 10 * 10 - 30; d <= b / 10 * 10 + 30; d += 10) {
      if (d < 1000 || d > 2090) continue;
      std::string ds = std::to_string(d) + "s";
      out.push_back({"the " + ds, kind, NumericPredicate::in_interval(d, d + 9)});
      out.push_back({"the early " + ds, kind, NumericPredicate::in_interval(d, d + 3)});
      out.push_back({"the mid " + ds, kind, NumericPredicate::in_interval(d + 3, d + 6)});
      out.push_back({"the late " + ds, kind, NumericPredicate::in_interval(d + 7, d + 9)});
    }
    for (int c = a / 100; c <= b / 100 + 2; ++c) {
      if (c < 1) continue;
      out.push_back({"the " + ordinal(c) + " century", kind, NumericPredicate::in_interval((c - 1) * 100, c * 100 - 1)});
    }
  } else {
    for (const auto& an : anchors.anchors()) {
      out.push_back({"before " + an.event, kind, NumericPredicate::under(an.first_year)});
      out.push_back({"after " + an.event, kind, NumericPredicate::over(an.last_year)});
      out.push_back({"during " + an.event, kind, NumericPredicate::in_interval(an.first_year, an.last_year)});
    }
    add_year_relations(out, a, b);
  }
  return out;
}

std::vector<TimeCandidate> keep_decided(std::vector<TimeCandidate> cands, const TemporalExpr& e, bool flip) {
  FlipDecision want = flip ? FlipDecision::flipping : FlipDecision::preserving;
  std::vector<TimeCandidate> out;
  for (auto& c : cands) {
    if (text::iequals(c.text, e.surface)) continue;
    if (decide_flip(e.interval(), c.predicate.satisfying_set()) == want) out.push_back(std::move(c));
  }
  return out;
}

struct Rendered {
  Span site;
  std::string replacement;
};

/// Places a new time expression where `e` was, keeping the sentence readable:
/// "in 2008" + "before X" -> "before X"; "the 1959 autobiography" + "before X"
/// -> "the autobiography from before X".
Rendered render_time(const std::string& s, const TemporalExpr& e, const std::string& cand) {
  auto toks = text::tokenize(s);
  std::size_t ti = 0, tj = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].begin == e.span.begin) ti = i;
    if (toks[i].end == e.span.end) tj = i;
  }
  std::string prev = ti > 0 ? text::to_lower(toks[ti - 1].text) : std::string();
  bool rel_cand = starts_relative(cand);
  bool attributive = e.kind == TemporalKind::direct &&
                     (prev == "the" || prev == "a" || prev == "an" || prev == "its" || prev == "his" ||
                      prev == "her" || prev == "their") &&
                     tj + 1 < toks.size() && toks[tj + 1].shape == text::TokenShape::word &&
                     !text::is_capitalized(toks[tj + 1].text);
  Rendered r{e.span, cand};
  if (attributive) {
    if (cand.rfind("the ", 0) == 0 && !rel_cand && cand.find("decade") == std::string::npos) {
      r.replacement = cand.substr(4);
    } else if (!std::isdigit(static_cast<unsigned char>(cand[0]))) {
      const auto& head = toks[tj + 1];
      r.site = {e.span.begin, head.end};
      r.replacement = head.text + " from " + cand;
    }
    return r;
  }
  if (rel_cand && prev == "in") r.site.begin = toks[ti - 1].begin;
  if (!rel_cand && starts_relative(e.surface)) r.replacement = "in " + cand;
  if (r.site.begin == 0) r.replacement = text::capitalize_first(r.replacement);
  return r;
}

template <typename T>
std::vector<std::size_t> seeded_order(const std::vector<T>& items, std::uint64_t seed, const std::string& salt) {
  std::vector<std::size_t> idx(items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return seeded_shuffle(std::move(idx), seed, salt);
}

}  // namespace

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

int max_hop_depth(const FactStatement& stmt, const KnowledgeSnapshot& snapshot) {
  auto paths = deepest_paths(stmt, snapshot);
  return paths.empty() ? 0 : static_cast<int>(paths.front().size());
}

AttackInstance multihop_extend(const FactStatement& stmt, const KnowledgeSnapshot& snapshot, int hops, HopMode mode,
                               bool flip, std::uint64_t seed) {
  if (hops < 1) throw ValidationError("hops must be >= 1");
  auto paths = deepest_paths(stmt, snapshot);
  int depth = paths.empty() ? 0 : static_cast<int>(paths.front().size());
  if (depth < hops) throw UnreachableHops(hops, depth);
  // The salt does not involve `hops`, so shorter chains are prefixes of longer ones.
  const Path& path = paths[seeded_index(seed, "multihop-path/" + stmt.id, paths.size())];

  std::string variant = "h" + std::to_string(hops) + "." + text::to_lower(to_string(mode));
  AttackInstance a = base_instance(stmt, Method::multihop, flip, variant);
  a.hop_count = hops;
  a.hop_mode = mode;
  a.chain.push_back(path.front().fact.article->title);
  for (int k = 0; k < hops; ++k) a.chain.push_back(path[k].to->title);

  std::string addition;
  int errors = 0;
  for (int k = 0; k < hops; ++k) {
    const Hop& hop = path[k];
    bool last = k + 1 == hops;
    bool fab = flip && (mode == HopMode::OHOE || last);
    std::string pred = hop.fact.predicate;
    PerturbationRecord rec;
    rec.hop_index = k + 1;
    if (fab) {
      Fabricated f = fabricate(pred, *hop.fact.article, snapshot, last ? std::string() : hop.mention, a.chain, seed,
                               "multihop/" + stmt.id + "/" + std::to_string(k));
      pred = f.predicate;
      rec.original = f.original;
      rec.flips_truth = true;
      ++errors;
    }
    std::string clause = k == 0 ? ", and " + hop.fact.name + " " + pred
                                : ", " + relative_pronoun(*hop.fact.article) + " " + pred;
    rec.replacement = clause;
    addition += clause;
    a.perturbations.push_back(std::move(rec));
  }
  a.error_count = errors;
  a.text = insert_before_period(stmt.text, addition);
  return a;
}

AttackInstance temporal_modify(const FactStatement& stmt, TemporalKind target_kind, bool flip, std::uint64_t seed,
                               const AnchorTable& anchors) {
  if (stmt.temporal_exprs.empty()) throw NotApplicable("no temporal expression");
  std::string salt = "temporal/" + stmt.id + "/" + to_string(target_kind) + (flip ? "/flip" : "/keep");
  for (std::size_t idx : seeded_order(stmt.temporal_exprs, seed, salt)) {
    const TemporalExpr& e = stmt.temporal_exprs[idx];
    auto cands = keep_decided(time_candidates(e, target_kind, anchors), e, flip);
    if (cands.empty()) continue;
    const TimeCandidate& c = cands[seeded_index(seed, salt + "/pick", cands.size())];
    Rendered r = render_time(stmt.text, e, c.text);
    AttackInstance a = base_instance(stmt, Method::temporal, flip, to_string(target_kind));
    a.text = splice(stmt.text, r.site, r.replacement);
    PerturbationRecord rec;
    rec.site = r.site;
    rec.original = stmt.text.substr(r.site.begin, r.site.size());
    rec.replacement = r.replacement;
    rec.flips_truth = flip;
    rec.predicate = c.predicate;
    rec.layer = "temporal";
    rec.expr_index = static_cast<int>(idx);
    a.perturbations.push_back(std::move(rec));
    return a;
  }
  throw NotApplicable("no " + to_string(target_kind) + " replacement with the requested label");
}

AttackInstance semantic_replace(const FactStatement& stmt, bool flip, std::uint64_t seed, const Lexicon& lexicon) {
  SentenceAnalysis an = analyze_sentence(stmt.text);
  std::vector<Span> protected_spans;
  if (an.subject) protected_spans.push_back(*an.subject);
  for (const auto& e : stmt.entities) {
    if (e.role == corpus::Role::subject) protected_spans.push_back(e.span);
  }
  std::vector<std::size_t> cands;
  for (std::size_t i = 0; i < an.tokens.size(); ++i) {
    const auto& t = an.tokens[i];
    if (t.token.shape != text::TokenShape::word || text::is_capitalized(t.token.text)) continue;
    Span sp{t.token.begin, t.token.end};
    if (std::any_of(protected_spans.begin(), protected_spans.end(), [&](const Span& p) { return p.overlaps(sp); })) {
      continue;
    }
    const LexiconEntry* entry = lexicon.find(t.lower);
    if (!entry || (flip ? entry->antonyms : entry->synonyms).empty()) continue;
    cands.push_back(i);
  }
  if (cands.empty()) throw NotApplicable("no replaceable word outside the subject");
  std::vector<std::size_t> outside;
  for (std::size_t i : cands) {
    if (an.tokens[i].token.begin >= an.main_clause_end) outside.push_back(i);
  }
  if (!outside.empty()) cands = outside;

  std::string salt = "semantic/" + stmt.id + (flip ? "/flip" : "/keep");
  std::size_t ti = cands[seeded_index(seed, salt, cands.size())];
  const auto& tok = an.tokens[ti];
  const LexiconEntry* entry = lexicon.find(tok.lower);
  const auto& options = flip ? entry->antonyms : entry->synonyms;
  std::string rep = options[seeded_index(seed, salt + "/word", options.size())];

  Span site{tok.token.begin, tok.token.end};
  if (ti > 0 && (an.tokens[ti - 1].lower == "a" || an.tokens[ti - 1].lower == "an")) {
    const auto& art = an.tokens[ti - 1];
    bool vowel = std::string_view("aeiou").find(static_cast<char>(std::tolower(rep[0]))) != std::string_view::npos;
    std::string fixed = vowel ? "an" : "a";
    if (fixed != art.lower) {
      site.begin = art.token.begin;
      rep = (text::is_capitalized(art.token.text) ? text::capitalize_first(fixed) : fixed) + " " + rep;
    }
  }
  AttackInstance a = base_instance(stmt, Method::semantic, flip, {});
  a.text = splice(stmt.text, site, rep);
  a.perturbations.push_back({site, stmt.text.substr(site.begin, site.size()), rep, flip, 0, std::nullopt, {}, -1,
                             std::nullopt});
  return a;
}

AttackInstance distraction_inject(const FactStatement& stmt, const KnowledgeSnapshot& snapshot,
                                  const EntitySpan& target, bool fabricate_clause, std::uint64_t seed) {
  const Article* art = target.article.empty() ? snapshot.resolve_name(target.surface) : snapshot.find(target.article);
  if (!art) throw NotApplicable("target '" + target.surface + "' has no snapshot article");
  std::vector<Fact> facts;
  for (auto& f : facts_of(*art)) {
    if (f.sentence == stmt.text || f.predicate.find(',') != std::string::npos) continue;
    if (stmt.text.find(f.predicate) != std::string::npos) continue;
    facts.push_back(std::move(f));
  }
  if (facts.empty()) throw NotApplicable("no usable fact about '" + art->title + "'");
  std::string salt = "distraction/" + stmt.id + "/" + std::to_string(target.span.begin) +
                     (fabricate_clause ? "/flip" : "/keep");
  const Fact& f = facts[seeded_index(seed, salt, facts.size())];
  std::string pred = f.predicate;
  PerturbationRecord rec;
  rec.hop_index = 1;
  if (fabricate_clause) {
    Fabricated fab = fabricate(pred, *art, snapshot, {}, {art->title}, seed, salt);
    pred = fab.predicate;
    rec.original = fab.original;
    rec.flips_truth = true;
  }
  std::string clause = ", " + relative_pronoun(*art) + " " + pred;
  std::size_t at = target.span.end;
  if (at < stmt.text.size() && stmt.text[at] == '"') ++at;
  // Attach to the whole noun phrase: "the Looney Tunes series" rather than
  // "the Looney Tunes".
  auto tagged = tag_tokens(stmt.text);
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    if (tagged[i].token.begin < at) continue;
    if (tagged[i].pos != Pos::noun || text::is_capitalized(tagged[i].token.text)) break;
    at = tagged[i].token.end;
  }
  bool mid = at < stmt.text.size() && stmt.text[at] == ' ';
  if (mid) clause += ",";
  // Sentence-final abbreviation ("Warner Bros.") keeps its own period.
  if (at == stmt.text.size() && stmt.text.back() == '.') at = stmt.text.size() - 1;
  rec.site = Span{at, at};
  rec.replacement = clause;

  AttackInstance a = base_instance(stmt, Method::distraction, fabricate_clause, corpus::to_string(target.role));
  a.text = stmt.text.substr(0, at) + clause + stmt.text.substr(at);
  a.hop_count = 1;
  a.target = Target{target.role, target.kind, target.surface};
  a.chain = {art->title};
  a.perturbations.push_back(std::move(rec));
  return a;
}

const std::vector<std::string>& hyperbole_phrases() {
  static const std::vector<std::string> phrases = {
      "a million times over",
      "by a margin of a million to one",
      "as a million critics agree",
  };
  return phrases;
}

AttackInstance facts_exaggerate(const FactStatement& stmt, std::uint64_t seed) {
  AttackInstance a = base_instance(stmt, Method::exaggeration, true, {});
  std::string salt = "exaggeration/" + stmt.id;
  PerturbationRecord rec;
  rec.flips_truth = true;

  if (!stmt.numeric_exprs.empty()) {
    const NumericExpr& n = stmt.numeric_exprs[seeded_index(seed, salt, stmt.numeric_exprs.size())];
    std::string num = stmt.text.substr(n.number_span.begin, n.number_span.size());
    auto toks = text::tokenize(num);
    const auto& head = toks.front();
    Span site{n.number_span.begin + head.begin, n.number_span.begin + head.end};
    std::string lw = text::to_lower(head.text);
    if (auto v = number_word_value(lw)) {
      rec.replacement = head.text + " hundred";
    } else {
      rec.replacement = render_number(Rational::parse(head.text) * Rational(100), false, true);
    }
    rec.site = site;
    rec.original = head.text;
    rec.scale_factor = Rational(100);
    a.text = splice(stmt.text, site, rec.replacement);
    a.perturbations.push_back(std::move(rec));
    return a;
  }

  static const std::map<std::string, std::string> kQuantifiers = {
      {"many", "millions of"},   {"several", "thousands of"}, {"numerous", "millions of"},
      {"few", "thousands of"},   {"often", "a thousand times a day"}, {"frequently", "a thousand times a day"},
      {"sometimes", "a thousand times a day"}, {"occasionally", "a thousand times a day"},
  };
  auto toks = text::tokenize(stmt.text);
  std::vector<std::size_t> quant;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (kQuantifiers.count(text::to_lower(toks[i].text))) quant.push_back(i);
  }
  if (!quant.empty()) {
    const auto& t = toks[quant[seeded_index(seed, salt + "/quant", quant.size())]];
    std::string rep = kQuantifiers.at(text::to_lower(t.text));
    if (t.begin == 0) rep = text::capitalize_first(rep);
    rec.site = Span{t.begin, t.end};
    rec.original = t.text;
    rec.replacement = rep;
    rec.scale_factor = Rational(1000);
    a.text = splice(stmt.text, *rec.site, rep);
    a.perturbations.push_back(std::move(rec));
    return a;
  }

  const auto& phrases = hyperbole_phrases();
  rec.replacement = phrases[seeded_index(seed, salt + "/hyperbole", phrases.size())];
  rec.scale_factor = Rational(1000000);
  a.text = insert_before_period(stmt.text, " " + rec.replacement);
  a.perturbations.push_back(std::move(rec));
  return a;
}

AttackInstance facts_reverse(const FactStatement& stmt) {
  if (!stmt.predicate_frame) throw NotApplicable("no copular subject-predicate frame");
  const auto& frame = *stmt.predicate_frame;
  std::string pred = frame.predicate_text;
  if (text::starts_with_word(pred, "a")) {
    pred = "the" + pred.substr(1);
  } else if (text::starts_with_word(pred, "an")) {
    pred = "the" + pred.substr(2);
  }
  if (auto merged = merge_coordinated_clause(pred)) pred = *merged;
  bool person = stmt.category == "person" ||
                std::any_of(stmt.entities.begin(), stmt.entities.end(), [&](const EntitySpan& e) {
                  return e.role == corpus::Role::subject && e.kind == corpus::EntityKind::person;
                });
  std::string wh = person ? "Who" : "What";
  std::string out = wh + " " + frame.copula + " " + pred + "?";
  if (out.find(frame.subject) != std::string::npos) {
    throw NotApplicable("subject '" + frame.subject + "' recurs in the predicate");
  }
  AttackInstance a = base_instance(stmt, Method::reversal, false, {});
  a.id = instance_id(stmt.id, Method::reversal, false, {}, Form::question);
  a.form = Form::question;
  a.text = out;
  a.gold_answer = frame.subject;
  PerturbationRecord rec;
  rec.site = frame.subject_span;
  rec.original = frame.subject;
  rec.replacement = wh;
  a.perturbations.push_back(std::move(rec));
  return a;
}

AttackInstance numerical_manipulate(const FactStatement& stmt, bool flip, std::uint64_t seed) {
  std::string salt = "numerical/" + stmt.id + (flip ? "/flip" : "/keep");
  FlipDecision want = flip ? FlipDecision::flipping : FlipDecision::preserving;

  for (std::size_t idx : seeded_order(stmt.numeric_exprs, seed, salt)) {
    const NumericExpr& n = stmt.numeric_exprs[idx];
    std::string num = stmt.text.substr(n.number_span.begin, n.number_span.size());
    auto toks = text::tokenize(num);
    if (toks.empty()) continue;
    std::string head = toks.front().text;
    bool word = number_word_value(text::to_lower(head)).has_value();
    Rational shown = word ? Rational(*number_word_value(text::to_lower(head))) : Rational::parse(head);
    Rational scale = shown == Rational(0) ? Rational(1) : n.value / shown;
    std::string scale_word = toks.size() > 1 ? " " + toks.back().text : std::string();
    bool currency = n.surface.find('$') != std::string::npos;
    bool commas = head.find(',') != std::string::npos;

    // Round thresholds at the leading digit: 30 -> 10, 20, 30, 40, 50.
    std::int64_t step = 1;
    double shown_d = shown.to_double();
    while (static_cast<double>(step) * 10 <= shown_d) step *= 10;
    std::int64_t base = static_cast<std::int64_t>(shown_d) / step * step;
    std::vector<std::pair<std::string, NumericPredicate>> cands;
    for (std::int64_t k = -2; k <= 2; ++k) {
      std::int64_t t = base + k * step;
      if (t <= 0) continue;
      std::string shown_t = (currency ? "$" : "") + render_number(Rational(t), word, commas) + scale_word;
      std::string more = word ? "more than " : "over ";
      std::string less = word ? "fewer than " : "under ";
      for (auto [pred, phrase] : {std::pair{NumericPredicate::over(Rational(t) * scale), more},
                                  std::pair{NumericPredicate::under(Rational(t) * scale), less}}) {
        if (decide_flip(n.interval(), pred.satisfying_set()) != want) continue;
        std::string rep = phrase + shown_t;
        if (text::iequals(rep, n.surface)) continue;
        cands.emplace_back(rep, pred);
      }
    }
    if (cands.empty()) continue;
    auto& [rep, pred] = cands[seeded_index(seed, salt + "/pick", cands.size())];
    std::string replacement = n.span.begin == 0 ? text::capitalize_first(rep) : rep;
    AttackInstance a = base_instance(stmt, Method::numerical, flip, "numeric");
    a.text = splice(stmt.text, n.span, replacement);
    PerturbationRecord rec;
    rec.site = n.span;
    rec.original = n.surface;
    rec.replacement = replacement;
    rec.flips_truth = flip;
    rec.predicate = pred;
    rec.layer = "numeric";
    rec.expr_index = static_cast<int>(idx);
    a.perturbations.push_back(std::move(rec));
    return a;
  }

  for (std::size_t idx : seeded_order(stmt.temporal_exprs, seed, salt + "/year")) {
    const TemporalExpr& e = stmt.temporal_exprs[idx];
    int lo = e.year_lo == kOpenYearLo ? e.year_hi : e.year_lo;
    int hi = e.year_hi == kOpenYearHi ? e.year_lo : e.year_hi;
    std::vector<TimeCandidate> cands;
    add_year_relations(cands, lo, hi);
    cands = keep_decided(std::move(cands), e, flip);
    if (cands.empty()) continue;
    const TimeCandidate& c = cands[seeded_index(seed, salt + "/year/pick", cands.size())];
    Rendered r = render_time(stmt.text, e, c.text);
    AttackInstance a = base_instance(stmt, Method::numerical, flip, "year");
    a.text = splice(stmt.text, r.site, r.replacement);
    PerturbationRecord rec;
    rec.site = r.site;
    rec.original = stmt.text.substr(r.site.begin, r.site.size());
    rec.replacement = r.replacement;
    rec.flips_truth = flip;
    rec.predicate = c.predicate;
    rec.layer = "temporal";
    rec.expr_index = static_cast<int>(idx);
    a.perturbations.push_back(std::move(rec));
    return a;
  }
  throw NotApplicable("no numeric or temporal expression");
}

}  // namespace advfact::attack
