#include "advfact/expressions.hpp"

#include <array>
#include <cctype>

#include "advfact/text.hpp"

namespace advfact {

using text::Token;
using text::TokenShape;

void to_json(json& j, const Span& s) { j = json::array({s.begin, s.end}); }

void from_json(const json& j, Span& s) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("span must be [begin, end]");
  s.begin = j.at(0).get<std::size_t>();
  s.end = j.at(1).get<std::size_t>();
  if (s.end < s.begin) throw ValidationError("span end before begin");
}

ValueInterval TemporalExpr::interval() const {
  ValueInterval iv;
  if (year_lo > kOpenYearLo) iv.lo = Bound::at(Rational(year_lo));
  if (year_hi < kOpenYearHi) iv.hi = Bound::at(Rational(year_hi));
  return iv;
}

ValueInterval NumericExpr::interval(const Rational& about_tolerance) const {
  switch (comparator) {
    case NumericComparator::exact:
      return ValueInterval::point(value);
    case NumericComparator::over:
      return {Bound::at(value, false), Bound::unbounded()};
    case NumericComparator::under:
      return {Bound::unbounded(), Bound::at(value, false)};
    case NumericComparator::about: {
      Rational delta = value * about_tolerance;
      if (delta < Rational(0)) delta = Rational(0) - delta;
      return ValueInterval::closed(value - delta, value + delta);
    }
  }
  return ValueInterval::point(value);
}

std::string to_string(TemporalKind k) {
  switch (k) {
    case TemporalKind::direct: return "direct";
    case TemporalKind::vague: return "vague";
    case TemporalKind::relative: return "relative";
  }
  return "direct";
}

std::string to_string(NumericComparator c) {
  switch (c) {
    case NumericComparator::exact: return "exact";
    case NumericComparator::over: return "over";
    case NumericComparator::under: return "under";
    case NumericComparator::about: return "about";
  }
  return "exact";
}

TemporalKind temporal_kind_from_string(std::string_view s) {
  if (s == "direct") return TemporalKind::direct;
  if (s == "vague") return TemporalKind::vague;
  if (s == "relative") return TemporalKind::relative;
  throw ValidationError("unknown temporal kind '" + std::string(s) + "'");
}

NumericComparator comparator_from_string(std::string_view s) {
  if (s == "exact") return NumericComparator::exact;
  if (s == "over") return NumericComparator::over;
  if (s == "under") return NumericComparator::under;
  if (s == "about") return NumericComparator::about;
  throw ValidationError("unknown comparator '" + std::string(s) + "'");
}

void to_json(json& j, const TemporalExpr& t) {
  j = json{{"span", t.span},
           {"surface", t.surface},
           {"kind", to_string(t.kind)},
           {"interval", json::array({t.year_lo, t.year_hi})}};
}

void from_json(const json& j, TemporalExpr& t) {
  t.span = j.at("span").get<Span>();
  t.surface = j.at("surface").get<std::string>();
  t.kind = temporal_kind_from_string(j.at("kind").get<std::string>());
  const json& iv = j.at("interval");
  t.year_lo = iv.at(0).get<int>();
  t.year_hi = iv.at(1).get<int>();
  if (t.year_lo > t.year_hi) throw ValidationError("temporal interval has year_lo > year_hi");
}

void to_json(json& j, const NumericExpr& n) {
  j = json{{"span", n.span},         {"surface", n.surface}, {"number_span", n.number_span},
           {"value", n.value},       {"unit", n.unit},       {"comparator", to_string(n.comparator)}};
}

void from_json(const json& j, NumericExpr& n) {
  n.span = j.at("span").get<Span>();
  n.surface = j.at("surface").get<std::string>();
  n.number_span = j.at("number_span").get<Span>();
  n.value = j.at("value").get<Rational>();
  n.unit = j.value("unit", std::string());
  n.comparator = comparator_from_string(j.at("comparator").get<std::string>());
}

// ---------------------------------------------------------------------------

namespace {

struct NumberWord {
  const char* word;
  int value;
};

constexpr std::array<NumberWord, 27> kNumberWords = {{
    {"two", 2},       {"three", 3},     {"four", 4},       {"five", 5},      {"six", 6},
    {"seven", 7},     {"eight", 8},     {"nine", 9},       {"ten", 10},      {"eleven", 11},
    {"twelve", 12},   {"thirteen", 13}, {"fourteen", 14},  {"fifteen", 15},  {"sixteen", 16},
    {"seventeen", 17}, {"eighteen", 18}, {"nineteen", 19}, {"twenty", 20},   {"thirty", 30},
    {"forty", 40},    {"fifty", 50},    {"sixty", 60},     {"seventy", 70},  {"eighty", 80},
    {"ninety", 90},   {"dozen", 12},
}};

std::optional<std::int64_t> scale_word_value(std::string_view w) {
  if (w == "hundred") return 100;
  if (w == "thousand") return 1000;
  if (w == "million") return 1000000;
  if (w == "billion") return 1000000000;
  return std::nullopt;
}

std::string lower(const Token& t) { return text::to_lower(t.text); }

bool is_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// A plain 4-digit number that reads as a calendar year.
std::optional<int> year_value(const Token& t) {
  if (t.shape != TokenShape::number || t.text.size() != 4 || !is_digits(t.text)) return std::nullopt;
  int y = std::stoi(t.text);
  if (y < 1000 || y > 2099) return std::nullopt;
  return y;
}

// "1930s" -> 1930
std::optional<int> decade_value(const Token& t) {
  if (t.text.size() != 5 || t.text.back() != 's' || !is_digits(t.text.substr(0, 4))) return std::nullopt;
  int y = std::stoi(t.text.substr(0, 4));
  if (y % 10 != 0) return std::nullopt;
  return y;
}

// "19th" -> 19
std::optional<int> ordinal_value(const Token& t) {
  std::string s = lower(t);
  if (s.size() < 3) return std::nullopt;
  std::string suffix = s.substr(s.size() - 2);
  if (suffix != "st" && suffix != "nd" && suffix != "rd" && suffix != "th") return std::nullopt;
  std::string digits = s.substr(0, s.size() - 2);
  if (!is_digits(digits) || digits.size() > 2) return std::nullopt;
  return std::stoi(digits);
}

bool is_hedge_start(const std::vector<Token>& toks, std::size_t i, NumericComparator* cmp, std::size_t* len) {
  std::string w = lower(toks[i]);
  std::string next = i + 1 < toks.size() ? lower(toks[i + 1]) : std::string();
  if ((w == "more" || w == "less" || w == "fewer") && next == "than") {
    *cmp = w == "more" ? NumericComparator::over : NumericComparator::under;
    *len = 2;
    return true;
  }
  *len = 1;
  if (w == "over" || w == "above") {
    *cmp = NumericComparator::over;
    return true;
  }
  if (w == "under" || w == "below") {
    *cmp = NumericComparator::under;
    return true;
  }
  if (w == "about" || w == "around" || w == "approximately" || w == "nearly" || w == "almost" ||
      w == "roughly") {
    *cmp = NumericComparator::about;
    return true;
  }
  return false;
}

bool preceded_by_hedge_or_currency(const std::vector<Token>& toks, std::size_t i) {
  if (i == 0) return false;
  if (toks[i - 1].text == "$") return true;
  NumericComparator c;
  std::size_t len;
  if (is_hedge_start(toks, i - 1, &c, &len)) return true;
  if (i >= 2 && is_hedge_start(toks, i - 2, &c, &len) && len == 2) return true;
  return false;
}

TemporalExpr make_temporal(std::string_view s, std::size_t b, std::size_t e, TemporalKind kind, int lo, int hi) {
  TemporalExpr t;
  t.span = {b, e};
  t.surface = std::string(s.substr(b, e - b));
  t.kind = kind;
  t.year_lo = lo;
  t.year_hi = hi;
  return t;
}

}  // namespace

std::optional<int> number_word_value(std::string_view w) {
  for (const auto& nw : kNumberWords) {
    if (w == nw.word) return nw.value;
  }
  return std::nullopt;
}

std::string number_word(int value) {
  if (value < 2 || value > 99) return {};
  for (const auto& nw : kNumberWords) {
    if (nw.value == value && std::string_view(nw.word) != "dozen") return nw.word;
  }
  int tens = value / 10 * 10;
  std::string t = number_word(tens);
  std::string u = value % 10 == 1 ? std::string("one") : number_word(value % 10);
  return t + "-" + u;
}

std::vector<TemporalExpr> find_temporal_exprs(std::string_view s, const AnchorTable& anchors) {
  std::vector<TemporalExpr> out;
  auto toks = text::tokenize(s);
  std::size_t i = 0;
  while (i < toks.size()) {
    std::string w = lower(toks[i]);

    // the decade after/before YYYY
    if (w == "the" && i + 3 < toks.size() && lower(toks[i + 1]) == "decade") {
      std::string rel = lower(toks[i + 2]);
      if (auto y = year_value(toks[i + 3]); y && (rel == "after" || rel == "before")) {
        int lo = rel == "after" ? *y + 1 : *y - 10;
        int hi = rel == "after" ? *y + 10 : *y - 1;
        out.push_back(make_temporal(s, toks[i].begin, toks[i + 3].end, TemporalKind::relative, lo, hi));
        i += 4;
        continue;
      }
    }

    // before/after/during + named event or year
    if ((w == "before" || w == "after" || w == "during") && i + 1 < toks.size()) {
      std::size_t len = 0;
      const TemporalAnchor* a = anchors.match_prefix(s.substr(toks[i + 1].begin), &len);
      if (a) {
        std::size_t end = toks[i + 1].begin + len;
        int lo = w == "before" ? kOpenYearLo : (w == "after" ? a->last_year + 1 : a->first_year);
        int hi = w == "before" ? a->first_year - 1 : (w == "after" ? kOpenYearHi : a->last_year);
        out.push_back(make_temporal(s, toks[i].begin, end, TemporalKind::relative, lo, hi));
        while (i < toks.size() && toks[i].begin < end) ++i;
        continue;
      }
      if (auto y = year_value(toks[i + 1]); y && w != "during") {
        int lo = w == "before" ? kOpenYearLo : *y + 1;
        int hi = w == "before" ? *y - 1 : kOpenYearHi;
        out.push_back(make_temporal(s, toks[i].begin, toks[i + 1].end, TemporalKind::relative, lo, hi));
        i += 2;
        continue;
      }
    }

    // (the)? (early|mid|late)? YYY0s
    {
      std::size_t j = i;
      std::size_t start = toks[i].begin;
      if (w == "the" && j + 1 < toks.size()) ++j;
      std::string part = lower(toks[j]);
      int part_kind = 0;  // 1 early, 2 mid, 3 late
      if ((part == "early" || part == "mid" || part == "late") && j + 1 < toks.size()) {
        part_kind = part == "early" ? 1 : (part == "mid" ? 2 : 3);
        ++j;
      }
      if (auto d = decade_value(toks[j])) {
        int lo = *d, hi = *d + 9;
        if (part_kind == 1) hi = *d + 3;
        if (part_kind == 2) lo = *d + 3, hi = *d + 6;
        if (part_kind == 3) lo = *d + 7;
        out.push_back(make_temporal(s, start, toks[j].end, TemporalKind::vague, lo, hi));
        i = j + 1;
        continue;
      }
    }

    // the Nth century
    if (w == "the" && i + 2 < toks.size() && lower(toks[i + 2]) == "century") {
      if (auto n = ordinal_value(toks[i + 1]); n && *n >= 1) {
        out.push_back(make_temporal(s, toks[i].begin, toks[i + 2].end, TemporalKind::vague, (*n - 1) * 100,
                                    *n * 100 - 1));
        i += 3;
        continue;
      }
    }

    if (auto y = year_value(toks[i]); y && !preceded_by_hedge_or_currency(toks, i)) {
      out.push_back(make_temporal(s, toks[i].begin, toks[i].end, TemporalKind::direct, *y, *y));
    }
    ++i;
  }
  return out;
}

std::vector<NumericExpr> find_numeric_exprs(std::string_view s) {
  std::vector<NumericExpr> out;
  auto toks = text::tokenize(s);
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t start_tok = i;
    NumericComparator cmp = NumericComparator::exact;
    std::size_t hedge_len = 0;
    std::size_t j = i;
    if (is_hedge_start(toks, i, &cmp, &hedge_len)) {
      j = i + hedge_len;
    } else {
      cmp = NumericComparator::exact;
      hedge_len = 0;
    }
    bool currency = false;
    if (j < toks.size() && toks[j].text == "$") {
      currency = true;
      ++j;
    }
    if (j >= toks.size()) {
      ++i;
      continue;
    }
    const Token& num = toks[j];
    std::optional<Rational> value;
    if (num.shape == TokenShape::number) {
      bool bare_year = year_value(num).has_value() && !currency && hedge_len == 0;
      if (!bare_year) value = Rational::parse(num.text);
    } else if (auto wv = number_word_value(lower(num))) {
      value = Rational(*wv);
    }
    if (!value) {
      ++i;
      continue;
    }
    std::size_t number_begin = num.begin;
    std::size_t number_end = num.end;
    std::size_t k = j + 1;
    if (k < toks.size()) {
      if (auto sc = scale_word_value(lower(toks[k]))) {
        value = *value * Rational(*sc);
        number_end = toks[k].end;
        ++k;
      }
    }
    NumericExpr n;
    n.span = {toks[start_tok].begin, number_end};
    n.surface = std::string(s.substr(n.span.begin, n.span.size()));
    n.number_span = {number_begin, number_end};
    n.value = *value;
    n.comparator = cmp;
    if (currency) n.unit = "$";
    if (k < toks.size() && toks[k].text == "%") {
      n.unit = "%";
    } else if (!currency) {
      // Unit: the noun closing the following run of lowercase content words.
      std::string first, plural;
      for (std::size_t u = k; u < toks.size() && u < k + 3; ++u) {
        if (toks[u].shape != TokenShape::word) break;
        std::string lw = lower(toks[u]);
        if (text::is_function_word(lw) || text::is_capitalized(toks[u].text)) break;
        if (first.empty()) first = lw;
        if (lw.size() > 2 && lw.back() == 's' && lw[lw.size() - 2] != 's') plural = lw;
      }
      n.unit = !plural.empty() ? plural : first;
    }
    out.push_back(std::move(n));
    i = k;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(PredicateKind k) {
  switch (k) {
    case PredicateKind::over: return "over";
    case PredicateKind::under: return "under";
    case PredicateKind::about: return "about";
    case PredicateKind::exact: return "exact";
    case PredicateKind::in_interval: return "in_interval";
  }
  return "exact";
}

void to_json(json& j, const NumericPredicate& p) {
  j = json{{"kind", to_string(p.kind)}};
  switch (p.kind) {
    case PredicateKind::in_interval:
      j["lo"] = p.lo;
      j["hi"] = p.hi;
      break;
    case PredicateKind::about:
      j["threshold"] = p.threshold;
      j["tolerance"] = p.tolerance;
      break;
    default:
      j["threshold"] = p.threshold;
  }
}

void from_json(const json& j, NumericPredicate& p) {
  std::string k = j.at("kind").get<std::string>();
  if (k == "in_interval") {
    p = NumericPredicate::in_interval(j.at("lo").get<Rational>(), j.at("hi").get<Rational>());
  } else if (k == "about") {
    p = NumericPredicate::about(j.at("threshold").get<Rational>(),
                                j.contains("tolerance") ? j.at("tolerance").get<Rational>() : Rational(1, 10));
  } else if (k == "over") {
    p = NumericPredicate::over(j.at("threshold").get<Rational>());
  } else if (k == "under") {
    p = NumericPredicate::under(j.at("threshold").get<Rational>());
  } else if (k == "exact") {
    p = NumericPredicate::exact(j.at("threshold").get<Rational>());
  } else {
    throw ValidationError("unknown predicate kind '" + k + "'");
  }
}

ValueInterval NumericPredicate::satisfying_set() const {
  switch (kind) {
    case PredicateKind::over:
      return {Bound::at(threshold, false), Bound::unbounded()};
    case PredicateKind::under:
      return {Bound::unbounded(), Bound::at(threshold, false)};
    case PredicateKind::exact:
      return ValueInterval::point(threshold);
    case PredicateKind::about: {
      Rational delta = threshold * tolerance;
      if (delta < Rational(0)) delta = Rational(0) - delta;
      return ValueInterval::closed(threshold - delta, threshold + delta);
    }
    case PredicateKind::in_interval:
      return ValueInterval::closed(lo, hi);
  }
  return {};
}

bool eval_numeric_predicate(const Rational& value, const NumericPredicate& predicate) {
  return predicate.satisfying_set().contains(value);
}

FlipDecision decide_flip(const ValueInterval& original, const ValueInterval& claim) {
  if (claim.contains(original)) return FlipDecision::preserving;
  if (claim.disjoint(original)) return FlipDecision::flipping;
  return FlipDecision::undecided;
}

}  // namespace advfact
