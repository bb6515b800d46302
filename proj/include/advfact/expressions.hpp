#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/common.hpp"
#include "advfact/resources.hpp"

namespace advfact {

/// Byte offsets [begin, end) into a UTF-8 sentence.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  bool contains(const Span& o) const { return begin <= o.begin && o.end <= end; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

void to_json(json& j, const Span& s);
void from_json(const json& j, Span& s);

/// Open ends of year intervals ("after World War II" runs to kOpenYearHi).
inline constexpr int kOpenYearLo = -9999;
inline constexpr int kOpenYearHi = 9999;

enum class TemporalKind { direct, vague, relative };

struct TemporalExpr {
  Span span;
  std::string surface;
  TemporalKind kind = TemporalKind::direct;
  int year_lo = 0;
  int year_hi = 0;

  /// Sentinel years become unbounded ends.
  ValueInterval interval() const;
  friend bool operator==(const TemporalExpr&, const TemporalExpr&) = default;
};

enum class NumericComparator { exact, over, under, about };

struct NumericExpr {
  Span span;         // hedge + currency + number + scale word
  std::string surface;
  Span number_span;  // number + scale word only
  Rational value;
  std::string unit;
  NumericComparator comparator = NumericComparator::exact;

  /// Values the expression admits: a point for exact, a half-line for
  /// over/under, value +- tolerance for about.
  ValueInterval interval(const Rational& about_tolerance = Rational(1, 10)) const;
  friend bool operator==(const NumericExpr&, const NumericExpr&) = default;
};

std::string to_string(TemporalKind k);
std::string to_string(NumericComparator c);
TemporalKind temporal_kind_from_string(std::string_view s);
NumericComparator comparator_from_string(std::string_view s);

void to_json(json& j, const TemporalExpr& t);
void from_json(const json& j, TemporalExpr& t);
void to_json(json& j, const NumericExpr& n);
void from_json(const json& j, NumericExpr& n);

/// Temporal expressions in reading order; spans never overlap.
std::vector<TemporalExpr> find_temporal_exprs(std::string_view sentence,
                                              const AnchorTable& anchors = AnchorTable::builtin());

/// Numeric expressions in reading order. Bare years (1000-2099 with no hedge
/// or currency) belong to the temporal layer and are skipped.
std::vector<NumericExpr> find_numeric_exprs(std::string_view sentence);

/// Parses a spelled-out cardinal ("two" .. "ninety"). "one" is excluded
/// because it is mostly a pronoun.
std::optional<int> number_word_value(std::string_view lower_word);
/// Spelled-out form of 2..99, or empty when out of range.
std::string number_word(int value);

enum class PredicateKind { over, under, about, exact, in_interval };

/// Comparative claim about a quantity ("over 20", "the decade after 2000").
struct NumericPredicate {
  PredicateKind kind = PredicateKind::exact;
  Rational threshold;
  Rational tolerance{1, 10};  // relative, for about
  Rational lo;                // in_interval bounds, inclusive
  Rational hi;

  static NumericPredicate over(Rational t) { return {PredicateKind::over, t, {1, 10}, {}, {}}; }
  static NumericPredicate under(Rational t) { return {PredicateKind::under, t, {1, 10}, {}, {}}; }
  static NumericPredicate exact(Rational t) { return {PredicateKind::exact, t, {1, 10}, {}, {}}; }
  static NumericPredicate about(Rational t, Rational tol = Rational(1, 10)) {
    return {PredicateKind::about, t, tol, {}, {}};
  }
  static NumericPredicate in_interval(Rational a, Rational b) {
    return {PredicateKind::in_interval, {}, {1, 10}, a, b};
  }

  /// The set of values satisfying the predicate.
  ValueInterval satisfying_set() const;
  friend bool operator==(const NumericPredicate&, const NumericPredicate&) = default;
};

std::string to_string(PredicateKind k);
void to_json(json& j, const NumericPredicate& p);
void from_json(const json& j, NumericPredicate& p);

/// Strict at boundaries: over 30 is false for 30.
bool eval_numeric_predicate(const Rational& value, const NumericPredicate& predicate);

enum class FlipDecision { preserving, flipping, undecided };

/// Compares a claim's satisfying set with the set of values the original
/// statement admits: containment preserves truth, disjointness flips it.
FlipDecision decide_flip(const ValueInterval& original, const ValueInterval& claim);

}  // namespace advfact
