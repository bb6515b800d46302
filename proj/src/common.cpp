#include "advfact/common.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace advfact {

namespace {

__extension__ using i128 = __int128;

std::int64_t narrow(i128 v) {
  if (v > static_cast<i128>(INT64_MAX) || v < static_cast<i128>(INT64_MIN)) {
    throw ValidationError("rational overflow");
  }
  return static_cast<std::int64_t>(v);
}

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational make_reduced(i128 num, i128 den) {
  if (den == 0) throw ValidationError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) throw ValidationError("rational with zero denominator");
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  std::int64_t g = std::gcd(numerator, denominator);
  if (g > 1) {
    numerator /= g;
    denominator /= g;
  }
  num_ = numerator;
  den_ = denominator;
}

Rational Rational::parse(std::string_view text) {
  std::string digits;
  bool negative = false;
  bool seen_point = false;
  bool seen_digit = false;
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (i == 0 && (c == '-' || c == '+')) {
      negative = c == '-';
      continue;
    }
    if (c == ',') {
      if (seen_point || !seen_digit) throw ParseError("malformed number '" + std::string(text) + "'", 0);
      continue;
    }
    if (c == '.') {
      if (seen_point) throw ParseError("malformed number '" + std::string(text) + "'", 0);
      seen_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ParseError("malformed number '" + std::string(text) + "'", 0);
    }
    seen_digit = true;
    digits.push_back(c);
    if (seen_point) {
      if (scale > INT64_MAX / 10) throw ParseError("number too precise", 0);
      scale *= 10;
    }
    if (digits.size() > 18) throw ParseError("number too large '" + std::string(text) + "'", 0);
  }
  if (!seen_digit) throw ParseError("malformed number '" + std::string(text) + "'", 0);
  std::int64_t value = std::stoll(digits);
  return Rational(negative ? -value : value, scale);
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  // Terminating decimal iff denominator has only factors 2 and 5.
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
  int places = std::max(twos, fives);
  i128 scaled = static_cast<i128>(num_);
  for (int i = 0; i < places; ++i) scaled *= 10;
  scaled /= den_;
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits;
  while (scaled > 0) {
    digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(scaled % 10)));
    scaled /= 10;
  }
  while (static_cast<int>(digits.size()) <= places) digits.insert(digits.begin(), '0');
  digits.insert(digits.end() - places, '.');
  while (!digits.empty() && digits.back() == '0') digits.pop_back();
  if (!digits.empty() && digits.back() == '.') digits.pop_back();
  return negative ? "-" + digits : digits;
}

Rational operator+(const Rational& a, const Rational& b) {
  return make_reduced(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
                      static_cast<i128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make_reduced(static_cast<i128>(a.num_) * b.den_ - static_cast<i128>(b.num_) * a.den_,
                      static_cast<i128>(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make_reduced(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw ValidationError("division by zero");
  return make_reduced(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
  i128 lhs = static_cast<i128>(a.num_) * b.den_;
  i128 rhs = static_cast<i128>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

void to_json(json& j, const Rational& r) {
  if (r.is_integer()) {
    j = r.numerator();
  } else {
    j = json{{"num", r.numerator()}, {"den", r.denominator()}};
  }
}

void from_json(const json& j, Rational& r) {
  if (j.is_number_integer()) {
    r = Rational(j.get<std::int64_t>());
  } else if (j.is_object()) {
    r = Rational(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
  } else if (j.is_string()) {
    r = Rational::parse(j.get<std::string>());
  } else {
    throw ParseError("expected rational", 0);
  }
}

// ---------------------------------------------------------------------------

namespace {

// Position of a lower bound: a value v that is open sits "just after" v.
// Returns <0 if lower bound a admits points below lower bound b.
int compare_lower(const Bound& a, const Bound& b) {
  if (!a.value && !b.value) return 0;
  if (!a.value) return -1;
  if (!b.value) return 1;
  auto c = *a.value <=> *b.value;
  if (c < 0) return -1;
  if (c > 0) return 1;
  if (a.closed == b.closed) return 0;
  return a.closed ? -1 : 1;
}

int compare_upper(const Bound& a, const Bound& b) {
  if (!a.value && !b.value) return 0;
  if (!a.value) return 1;
  if (!b.value) return -1;
  auto c = *a.value <=> *b.value;
  if (c < 0) return -1;
  if (c > 0) return 1;
  if (a.closed == b.closed) return 0;
  return a.closed ? 1 : -1;
}

}  // namespace

bool ValueInterval::empty() const {
  if (!lo.value || !hi.value) return false;
  auto c = *lo.value <=> *hi.value;
  if (c > 0) return true;
  if (c == 0) return !(lo.closed && hi.closed);
  return false;
}

bool ValueInterval::contains(const Rational& v) const {
  if (lo.value) {
    auto c = v <=> *lo.value;
    if (c < 0 || (c == 0 && !lo.closed)) return false;
  }
  if (hi.value) {
    auto c = v <=> *hi.value;
    if (c > 0 || (c == 0 && !hi.closed)) return false;
  }
  return true;
}

bool ValueInterval::contains(const ValueInterval& other) const {
  if (other.empty()) return true;
  return compare_lower(lo, other.lo) <= 0 && compare_upper(hi, other.hi) >= 0;
}

bool ValueInterval::disjoint(const ValueInterval& other) const {
  if (empty() || other.empty()) return true;
  ValueInterval meet{compare_lower(lo, other.lo) >= 0 ? lo : other.lo,
                     compare_upper(hi, other.hi) <= 0 ? hi : other.hi};
  return meet.empty();
}

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) noexcept {
  return splitmix64(seed ^ splitmix64(fnv1a64(salt)));
}

std::size_t seeded_index(std::uint64_t seed, std::string_view salt, std::size_t n) {
  if (n == 0) throw InvariantViolation("seeded_index over empty range");
  return static_cast<std::size_t>(derive_seed(seed, salt) % n);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

// ---------------------------------------------------------------------------

json make_header(std::string_view format) {
  return json{{"format", std::string(format)}, {"version", kFormatVersion}};
}

JsonlDocument parse_jsonl(std::string_view text, std::string_view expected_format) {
  JsonlDocument doc;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
    if (!blank) {
      json value;
      try {
        value = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON record: ") + e.what(), line_no);
      }
      if (!value.is_object()) throw ParseError("record is not a JSON object", line_no);
      if (!have_header) {
        if (!value.contains("format") || !value.contains("version")) {
          throw ParseError("missing header record {\"format\", \"version\"}", line_no);
        }
        if (!value["format"].is_string() || !value["version"].is_number_integer()) {
          throw ParseError("malformed header record", line_no);
        }
        if (!expected_format.empty() && value["format"].get<std::string>() != expected_format) {
          throw ParseError("expected format '" + std::string(expected_format) + "', found '" +
                               value["format"].get<std::string>() + "'",
                           line_no);
        }
        if (value["version"].get<int>() != kFormatVersion) {
          throw ParseError("unsupported format version " + std::to_string(value["version"].get<int>()),
                           line_no);
        }
        doc.header = std::move(value);
        have_header = true;
      } else {
        doc.records.push_back({line_no, std::move(value)});
      }
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError("empty file: no header record", line_no ? line_no : 1);
  return doc;
}

JsonlDocument read_jsonl(const std::filesystem::path& path, std::string_view expected_format) {
  return parse_jsonl(read_text(path), expected_format);
}

std::string dump_jsonl(const json& header, const std::vector<json>& records) {
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return buf.str();
}

void write_text_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("error writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace advfact
