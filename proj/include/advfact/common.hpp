#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace advfact {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure the toolkit reports is one of these; the CLI
// maps them onto exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An attack method (or probe) cannot be applied to the given input. This is a
/// reportable outcome, not a failure.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

class UnreachableHops : public NotApplicable {
 public:
  UnreachableHops(int requested, int achieved)
      : NotApplicable("requested " + std::to_string(requested) + " hops, link depth reaches only " +
                      std::to_string(achieved)),
        achieved_(achieved) {}
  int achieved() const noexcept { return achieved_; }

 private:
  int achieved_;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

class ExternalError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Internal consistency broken (a generator emitted something its own
/// invariants forbid).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Exact rational numbers. Numeric labels are decided by exact comparison so a
// boundary such as "over 30" against 30 never depends on floating point.
// ---------------------------------------------------------------------------

class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t numerator, std::int64_t denominator = 1);

  /// Parses "30", "-2", "1.5", "8,849". Throws ParseError on anything else.
  static Rational parse(std::string_view decimal);

  std::int64_t numerator() const noexcept { return num_; }
  std::int64_t denominator() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_integer() const noexcept { return den_ == 1; }

  /// Shortest decimal rendering; non-terminating fractions are written "n/d".
  std::string to_string() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

void to_json(json& j, const Rational& r);
void from_json(const json& j, Rational& r);

/// One end of an interval over the rationals. An absent value is unbounded.
struct Bound {
  std::optional<Rational> value;
  bool closed = true;

  static Bound unbounded() { return Bound{std::nullopt, false}; }
  static Bound at(Rational v, bool closed = true) { return Bound{v, closed}; }
  friend bool operator==(const Bound&, const Bound&) = default;
};

/// Interval over the rationals with open/closed/infinite ends.
struct ValueInterval {
  Bound lo = Bound::unbounded();
  Bound hi = Bound::unbounded();

  static ValueInterval point(Rational v) { return {Bound::at(v), Bound::at(v)}; }
  static ValueInterval closed(Rational a, Rational b) { return {Bound::at(a), Bound::at(b)}; }

  bool empty() const;
  bool contains(const Rational& v) const;
  /// True when every point of `other` lies inside this interval.
  bool contains(const ValueInterval& other) const;
  bool disjoint(const ValueInterval& other) const;
  friend bool operator==(const ValueInterval&, const ValueInterval&) = default;
};

// ---------------------------------------------------------------------------
// Deterministic seeded selection. Portable across standard libraries (the
// distributions in <random> are not), so suites are byte-identical everywhere.
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) noexcept;
/// Index in [0, n). n must be > 0.
std::size_t seeded_index(std::uint64_t seed, std::string_view salt, std::size_t n);

template <typename T>
std::vector<T> seeded_shuffle(std::vector<T> items, std::uint64_t seed, std::string_view salt) {
  std::uint64_t state = derive_seed(seed, salt);
  for (std::size_t i = items.size(); i > 1; --i) {
    state = splitmix64(state);
    std::size_t j = static_cast<std::size_t>(state % i);
    std::swap(items[i - 1], items[j]);
  }
  return items;
}

std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// Line-delimited JSON files. Every file starts with a header record
// {"format": ..., "version": 1, ...}.
// ---------------------------------------------------------------------------

struct JsonlRecord {
  std::size_t line = 0;
  json value;
};

struct JsonlDocument {
  json header;
  std::vector<JsonlRecord> records;
};

inline constexpr int kFormatVersion = 1;

json make_header(std::string_view format);

/// Reads a JSONL file. Blank lines are skipped. When `expected_format` is
/// non-empty the header's format must match and its version must be supported.
JsonlDocument read_jsonl(const std::filesystem::path& path, std::string_view expected_format = {});
JsonlDocument parse_jsonl(std::string_view text, std::string_view expected_format = {});

std::string dump_jsonl(const json& header, const std::vector<json>& records);
void write_text_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace advfact
