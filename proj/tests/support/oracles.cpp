#include "oracles.hpp"

#include <map>

namespace advfact::testing {

const std::vector<std::vector<int>>& worked_kappa_matrix() {
  static const std::vector<std::vector<int>> m{
      {0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
      {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7},
  };
  return m;
}

namespace {

std::vector<bool> random_bits(std::mt19937_64& rng, int n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<bool> out;
  for (int i = 0; i < n; ++i) out.push_back(coin(rng));
  return out;
}

template <typename Pred>
std::optional<double> mean_rate(const SyntheticStore& store, Pred rate) {
  double sum = 0;
  int n = 0;
  for (std::size_t i = 0; i < store.records.size(); ++i) {
    if (store.records[i].probe.kind == judge::ItemKind::original) continue;
    if (auto r = rate(store.raw[i])) {
      sum += *r;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace

SyntheticStore synthetic_store(std::mt19937_64& rng, int max_originals, int max_attacks) {
  SyntheticStore s;
  std::uniform_int_distribution<int> n_orig(1, max_originals), n_att(0, max_attacks), n_stmt(0, 5), n_cit(0, 6);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  int originals = n_orig(rng);
  for (int i = 0; i < originals; ++i) {
    std::string parent = "p" + std::to_string(i);
    metrics::EvalRecord o;
    o.engine = "synthetic";
    o.probe.id = parent + ".original.d";
    o.probe.parent_id = parent;
    o.probe.kind = judge::ItemKind::original;
    o.original_id = o.probe.id;
    o.judged = true;
    o.is_correct = prob(rng) < 0.7;
    o.annotation = metrics::annotation_of(o.probe.id, {}, {}, {});
    s.records.push_back(o);
    s.raw.push_back({});
    double p_right = prob(rng);
    int attacks = n_att(rng);
    for (int a = 0; a < attacks; ++a) {
      metrics::EvalRecord r;
      r.engine = "synthetic";
      r.probe.id = parent + ".semantic.flip.v" + std::to_string(a) + ".d";
      r.probe.parent_id = parent;
      r.probe.kind = judge::ItemKind::attack;
      r.probe.method = attack::Method::semantic;
      r.original_id = o.probe.id;
      r.judged = true;
      r.is_correct = prob(rng) < p_right;
      SyntheticResponse raw;
      int cit = n_cit(rng);
      raw.statement_support = random_bits(rng, n_stmt(rng), prob(rng));
      raw.citation_support = random_bits(rng, cit, prob(rng));
      raw.citation_relevant = random_bits(rng, cit, prob(rng));
      r.annotation =
          metrics::annotation_of(r.probe.id, raw.statement_support, raw.citation_support, raw.citation_relevant);
      s.records.push_back(r);
      s.raw.push_back(raw);
    }
  }
  return s;
}

std::optional<double> brute_asr(const SyntheticStore& store) {
  std::map<std::string, bool> correct;
  std::map<std::string, std::pair<int, int>> counts;  // wrong, total
  for (const auto& r : store.records) {
    if (r.probe.kind == judge::ItemKind::original) {
      correct[r.probe.id] = r.is_correct;
    } else {
      auto& c = counts[r.original_id];
      c.first += !r.is_correct;
      ++c.second;
    }
  }
  double sum = 0;
  int n = 0;
  for (const auto& [id, c] : counts) {
    if (!correct.at(id) || c.second == 0) continue;
    sum += static_cast<double>(c.first) / c.second;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> brute_citation_recall(const SyntheticStore& store) {
  return mean_rate(store, [](const SyntheticResponse& r) -> std::optional<double> {
    if (r.statement_support.empty()) return std::nullopt;
    int yes = 0;
    for (bool b : r.statement_support) yes += b;
    return static_cast<double>(yes) / static_cast<double>(r.statement_support.size());
  });
}

std::optional<double> brute_citation_precision(const SyntheticStore& store, bool filtered) {
  return mean_rate(store, [filtered](const SyntheticResponse& r) -> std::optional<double> {
    int num = 0, den = 0;
    for (std::size_t k = 0; k < r.citation_support.size(); ++k) {
      if (filtered && !r.citation_relevant[k]) continue;
      ++den;
      num += r.citation_support[k];
    }
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / den;
  });
}

namespace {

struct End {
  bool finite = false;
  Rational at;
  bool closed = false;
};

struct Set {
  End lo, hi;
};

End finite(Rational v, bool closed = true) { return {true, v, closed}; }

Set of_parent(const corpus::FactStatement& parent, const attack::PerturbationRecord& rec) {
  auto idx = static_cast<std::size_t>(rec.expr_index);
  if (rec.layer == "temporal") {
    const auto& t = parent.temporal_exprs.at(idx);
    Set s;
    if (t.year_lo != kOpenYearLo) s.lo = finite(Rational(t.year_lo));
    if (t.year_hi != kOpenYearHi) s.hi = finite(Rational(t.year_hi));
    return s;
  }
  const auto& n = parent.numeric_exprs.at(idx);
  switch (n.comparator) {
    case NumericComparator::exact:
      return {finite(n.value), finite(n.value)};
    case NumericComparator::over:
      return {finite(n.value, false), {}};
    case NumericComparator::under:
      return {{}, finite(n.value, false)};
    case NumericComparator::about: {
      Rational d = n.value * Rational(1, 10);
      if (d < Rational(0)) d = Rational(0) - d;
      return {finite(n.value - d), finite(n.value + d)};
    }
  }
  return {};
}

Set of_claim(const NumericPredicate& p) {
  switch (p.kind) {
    case PredicateKind::over:
      return {finite(p.threshold, false), {}};
    case PredicateKind::under:
      return {{}, finite(p.threshold, false)};
    case PredicateKind::exact:
      return {finite(p.threshold), finite(p.threshold)};
    case PredicateKind::about: {
      Rational d = p.threshold * p.tolerance;
      if (d < Rational(0)) d = Rational(0) - d;
      return {finite(p.threshold - d), finite(p.threshold + d)};
    }
    case PredicateKind::in_interval:
      return {finite(p.lo), finite(p.hi)};
  }
  return {};
}

// a's lower end is at or above b's lower end.
bool lo_within(const End& a, const End& b) {
  if (!b.finite) return true;
  if (!a.finite) return false;
  return b.at < a.at || (a.at == b.at && (b.closed || !a.closed));
}

bool hi_within(const End& a, const End& b) {
  if (!b.finite) return true;
  if (!a.finite) return false;
  return a.at < b.at || (a.at == b.at && (b.closed || !a.closed));
}

// Everything in `left` lies strictly below everything in `right`.
bool below(const Set& left, const Set& right) {
  if (!left.hi.finite || !right.lo.finite) return false;
  return left.hi.at < right.lo.at || (left.hi.at == right.lo.at && !(left.hi.closed && right.lo.closed));
}

}  // namespace

std::optional<bool> oracle_flip(const corpus::FactStatement& parent, const attack::PerturbationRecord& rec) {
  if (!rec.predicate || rec.expr_index < 0) return std::nullopt;
  Set truth = of_parent(parent, rec);
  Set claim = of_claim(*rec.predicate);
  if (lo_within(truth.lo, claim.lo) && hi_within(truth.hi, claim.hi)) return false;
  if (below(truth, claim) || below(claim, truth)) return true;
  return std::nullopt;
}

}  // namespace advfact::testing
