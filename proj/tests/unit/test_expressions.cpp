#include <gtest/gtest.h>

#include "advfact/expressions.hpp"

using namespace advfact;

TEST(Temporal, DirectYear) {
  std::string s = "In 2008 it was the world's busiest music arena.";
  auto t = find_temporal_exprs(s);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].kind, TemporalKind::direct);
  EXPECT_EQ(t[0].year_lo, 2008);
  EXPECT_EQ(t[0].year_hi, 2008);
  EXPECT_EQ(s.substr(t[0].span.begin, t[0].span.size()), t[0].surface);
}

TEST(Temporal, RelativeToAnchorIsOpenEnded) {
  auto t = find_temporal_exprs("It was written before World War II.");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].kind, TemporalKind::relative);
  EXPECT_EQ(t[0].year_lo, kOpenYearLo);
  auto iv = t[0].interval();
  EXPECT_FALSE(iv.lo.value.has_value());
  EXPECT_TRUE(iv.hi.value.has_value());
  EXPECT_TRUE(iv.contains(Rational(1930)));
  EXPECT_FALSE(iv.contains(Rational(1959)));
}

TEST(Temporal, SpansDoNotOverlap) {
  auto t = find_temporal_exprs("Founded in 1999, it moved in the 2000s and again after World War II.");
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(t[i - 1].span.end, t[i].span.begin);
}

TEST(Numeric, HedgedScaledQuantity) {
  std::string s = "It has worldwide sales of over 18 million copies.";
  auto n = find_numeric_exprs(s);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].comparator, NumericComparator::over);
  EXPECT_EQ(n[0].value, Rational(18000000));
  EXPECT_TRUE(n[0].span.contains(n[0].number_span));
  EXPECT_FALSE(n[0].interval().contains(Rational(18000000)));
}

TEST(Numeric, SpelledNumbersAndBareYears) {
  auto n = find_numeric_exprs("Taylor Swift has headlined six concert tours since 2009.");
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].value, Rational(6));
  EXPECT_EQ(number_word_value("ninety"), 90);
  EXPECT_FALSE(number_word_value("one").has_value());
  EXPECT_EQ(number_word(42), "forty-two");
}

TEST(Numeric, CurrencyAndThousands) {
  auto n = find_numeric_exprs("The tour grossed $63 million across 8,849 seats.");
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0].value, Rational(63000000));
  EXPECT_EQ(n[1].value, Rational(8849));
}

TEST(Predicate, StrictAtBoundaries) {
  EXPECT_FALSE(eval_numeric_predicate(Rational(30), NumericPredicate::over(Rational(30))));
  EXPECT_TRUE(eval_numeric_predicate(Rational(31), NumericPredicate::over(Rational(30))));
  EXPECT_FALSE(eval_numeric_predicate(Rational(30), NumericPredicate::under(Rational(30))));
  EXPECT_TRUE(eval_numeric_predicate(Rational(30), NumericPredicate::exact(Rational(30))));
  EXPECT_TRUE(eval_numeric_predicate(Rational(110), NumericPredicate::about(Rational(100))));
  EXPECT_FALSE(eval_numeric_predicate(Rational(111), NumericPredicate::about(Rational(100))));
  EXPECT_TRUE(eval_numeric_predicate(Rational(2005), NumericPredicate::in_interval(Rational(2000), Rational(2009))));
}

TEST(Predicate, DecideFlip) {
  auto year = ValueInterval::point(Rational(2008));
  EXPECT_EQ(decide_flip(year, NumericPredicate::under(Rational(2010)).satisfying_set()), FlipDecision::preserving);
  EXPECT_EQ(decide_flip(year, NumericPredicate::under(Rational(2008)).satisfying_set()), FlipDecision::flipping);
  auto decade = ValueInterval::closed(Rational(2000), Rational(2009));
  EXPECT_EQ(decide_flip(decade, NumericPredicate::over(Rational(2005)).satisfying_set()), FlipDecision::undecided);
}

TEST(Predicate, JsonRoundTrip) {
  auto p = NumericPredicate::in_interval(Rational(1990), Rational(1999));
  json j = p;
  EXPECT_EQ(j.get<NumericPredicate>(), p);
  TemporalExpr t{{3, 7}, "2008", TemporalKind::direct, 2008, 2008};
  json jt = t;
  EXPECT_EQ(jt.get<TemporalExpr>(), t);
}
