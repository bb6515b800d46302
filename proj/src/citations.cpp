#include "advfact/citations.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "advfact/text.hpp"

namespace advfact::engines {

std::string to_string(MarkerStyle s) {
  switch (s) {
    case MarkerStyle::bracket_numeric:
      return "bracket_numeric";
    case MarkerStyle::superscript:
      return "superscript";
    case MarkerStyle::url_inline:
      return "url_inline";
  }
  return "bracket_numeric";
}

MarkerStyle marker_style_from_string(std::string_view s) {
  if (s == "bracket_numeric") return MarkerStyle::bracket_numeric;
  if (s == "superscript") return MarkerStyle::superscript;
  if (s == "url_inline") return MarkerStyle::url_inline;
  throw ConfigError("unknown marker style '" + std::string(s) + "'");
}

void to_json(json& j, const Statement& s) { j = json{{"text", s.text}, {"citation_refs", s.citation_refs}}; }

void from_json(const json& j, Statement& s) {
  j.at("text").get_to(s.text);
  j.at("citation_refs").get_to(s.citation_refs);
}

void to_json(json& j, const Citation& c) {
  j = json{{"id", c.id}, {"url_or_title", c.url_or_title}, {"snippet", c.snippet}};
  if (c.dangling) j["dangling"] = true;
}

void from_json(const json& j, Citation& c) {
  j.at("id").get_to(c.id);
  j.at("url_or_title").get_to(c.url_or_title);
  c.snippet = j.value("snippet", std::string());
  c.dangling = j.value("dangling", false);
}

namespace {

struct Marker {
  std::size_t pos;  // offset in the cleaned body
  std::string id;
};

struct Body {
  std::string clean;
  std::vector<Marker> markers;
  std::vector<Citation> listed;
  std::vector<std::string> url_order;
};

// Superscript digits: U+00B9, U+00B2, U+00B3, U+2070, U+2074..U+2079.
int superscript_digit(std::string_view s, std::size_t i, std::size_t* len) {
  auto u = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  if (i + 1 < s.size() && u(i) == 0xC2) {
    *len = 2;
    if (u(i + 1) == 0xB9) return 1;
    if (u(i + 1) == 0xB2) return 2;
    if (u(i + 1) == 0xB3) return 3;
  }
  if (i + 2 < s.size() && u(i) == 0xE2 && u(i + 1) == 0x81) {
    *len = 3;
    unsigned char c = u(i + 2);
    if (c == 0xB0) return 0;
    if (c >= 0xB4 && c <= 0xB9) return c - 0xB0;
  }
  return -1;
}

bool list_line(std::string_view line, MarkerStyle style, Citation* out) {
  static const std::regex bracket(R"re(^\s*\[(\d+)\]:?\s+(\S+)(?:\s+"(.*)")?\s*$)re");
  static const std::regex numbered(R"re(^\s*\^?(\d+)[.:]?\s+(\S+)(?:\s+"(.*)")?\s*$)re");
  std::string s(line);
  std::smatch m;
  bool ok = false;
  if (style == MarkerStyle::bracket_numeric) ok = std::regex_match(s, m, bracket);
  if (style == MarkerStyle::superscript) ok = std::regex_match(s, m, numbered);
  if (!ok) return false;
  std::string url = m[2].str();
  // A numbered prose line ("1. The tour ...") is not a citation entry.
  if (style == MarkerStyle::superscript && url.find("://") == std::string::npos) return false;
  out->id = m[1].str();
  out->url_or_title = url;
  out->snippet = m[3].matched ? m[3].str() : "";
  return true;
}

bool is_marker_follow_punct(char c) { return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?'; }

Body extract(std::string_view raw, MarkerStyle style) {
  Body b;
  std::string body;
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t nl = raw.find('\n', start);
    std::string_view line = raw.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    Citation c;
    if (style != MarkerStyle::url_inline && list_line(line, style, &c)) {
      b.listed.push_back(std::move(c));
    } else {
      if (!body.empty()) body.push_back('\n');
      body.append(line);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }

  std::string& out = b.clean;
  auto add_marker = [&](std::string id, std::size_t next) {
    if (next < body.size() && is_marker_follow_punct(body[next])) {
      while (!out.empty() && out.back() == ' ') out.pop_back();
    }
    b.markers.push_back({out.size(), std::move(id)});
  };
  std::size_t i = 0;
  while (i < body.size()) {
    char ch = body[i];
    if (style == MarkerStyle::bracket_numeric && ch == '[') {
      std::size_t j = i + 1;
      while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j]))) ++j;
      if (j > i + 1 && j < body.size() && body[j] == ']') {
        add_marker(body.substr(i + 1, j - i - 1), j + 1);
        i = j + 1;
        continue;
      }
    }
    if (style == MarkerStyle::superscript) {
      std::size_t len = 0;
      if (superscript_digit(body, i, &len) >= 0) {
        std::string id;
        std::size_t j = i;
        while (j < body.size()) {
          std::size_t l = 0;
          int d = superscript_digit(body, j, &l);
          if (d < 0) break;
          id.push_back(static_cast<char>('0' + d));
          j += l;
        }
        add_marker(id, j);
        if (j + 1 < body.size() && body[j] == ',' && superscript_digit(body, j + 1, &len) >= 0) ++j;
        i = j;
        continue;
      }
      if (ch == '^' && i + 1 < body.size() && std::isdigit(static_cast<unsigned char>(body[i + 1]))) {
        std::size_t j = i + 1;
        while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j]))) ++j;
        add_marker(body.substr(i + 1, j - i - 1), j);
        i = j;
        continue;
      }
    }
    if (style == MarkerStyle::url_inline && (ch == '(' || ch == '<')) {
      char close = ch == '(' ? ')' : '>';
      std::string_view rest = std::string_view(body).substr(i + 1);
      if (rest.rfind("http://", 0) == 0 || rest.rfind("https://", 0) == 0) {
        std::size_t j = i + 1;
        while (j < body.size() && body[j] != close && !std::isspace(static_cast<unsigned char>(body[j]))) ++j;
        if (j < body.size() && body[j] == close) {
          std::string url = body.substr(i + 1, j - i - 1);
          auto it = std::find(b.url_order.begin(), b.url_order.end(), url);
          std::size_t idx = static_cast<std::size_t>(it - b.url_order.begin());
          if (it == b.url_order.end()) b.url_order.push_back(url);
          // Drop the space that separated the URL from the statement.
          while (!out.empty() && out.back() == ' ') out.pop_back();
          add_marker(std::to_string(idx + 1), j + 1);
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(ch);
    ++i;
  }
  for (auto& m : b.markers) m.pos = std::min(m.pos, out.size());
  return b;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Word immediately before position `dot` (the period itself excluded).
std::string word_before(const std::string& s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(s[b - 1]) && s[b - 1] != '(' && s[b - 1] != '"') --b;
  return s.substr(b, dot - b);
}

// Company suffixes, which often close a sentence.
bool ends_clause_abbrev(const std::string& w) {
  std::string l = text::to_lower(w);
  return l == "inc" || l == "ltd" || l == "co" || l == "corp" || l == "etc";
}

bool starts_function_word(const std::string& s, std::size_t from) {
  std::size_t b = from;
  while (b < s.size() && is_space(s[b])) ++b;
  std::size_t e = b;
  while (e < s.size() && std::isalpha(static_cast<unsigned char>(s[e]))) ++e;
  if (e == b || !std::isupper(static_cast<unsigned char>(s[b]))) return false;
  std::string w = text::to_lower(s.substr(b, e - b));
  return text::is_determiner(w) || text::is_pronoun(w);
}

struct Segment {
  std::size_t begin;
  std::size_t end;
};

std::vector<Segment> segment(const std::string& s, const std::set<std::size_t>& marker_pos) {
  std::vector<Segment> segs;
  std::size_t start = 0;
  bool quoted = false;
  auto push = [&](std::size_t end) {
    if (end > start) segs.push_back({start, end});
    start = end;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == '"') {
      quoted = !quoted;
      continue;
    }
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80) {
      unsigned char k = static_cast<unsigned char>(s[i + 2]);
      if (k == 0x9C) quoted = true;
      if (k == 0x9D) quoted = false;
      i += 2;
      continue;
    }
    if (c == '\n') {
      push(i);
      quoted = false;
      continue;
    }
    if ((c == '.' || c == '!' || c == '?') && !quoted) {
      std::size_t end = i + 1;
      while (end < s.size() && (s[end] == '.' || s[end] == '!' || s[end] == '?' || s[end] == ')')) ++end;
      bool at_marker = marker_pos.count(end) > 0;
      if (end < s.size() && !is_space(s[end]) && !at_marker) continue;
      if (c == '.' && !at_marker) {
        std::string w = word_before(s, i);
        bool initial = w.size() == 1 && std::isupper(static_cast<unsigned char>(w[0]));
        if (initial) continue;
        // "Inc. The ..." ends a sentence; "Warner Bros. Pictures" does not.
        if (text::is_abbreviation(w) && !(ends_clause_abbrev(w) && starts_function_word(s, end))) continue;
      }
      push(end);
      i = end - 1;
    }
  }
  push(s.size());
  return segs;
}

}  // namespace

ParsedCitations parse_citations(std::string_view raw_text, MarkerStyle style) {
  Body b = extract(raw_text, style);
  std::set<std::size_t> marker_pos;
  for (const auto& m : b.markers) marker_pos.insert(m.pos);
  std::vector<Segment> segs = segment(b.clean, marker_pos);

  ParsedCitations out;
  std::vector<int> seg_statement(segs.size(), -1);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    std::string t = text::collapse_whitespace(b.clean.substr(segs[k].begin, segs[k].end - segs[k].begin));
    t = text::trim(t);
    if (t.empty()) continue;
    seg_statement[k] = static_cast<int>(out.statements.size());
    out.statements.push_back({t, {}});
  }
  for (const auto& m : b.markers) {
    // Owner: the statement holding the last non-space character before the
    // marker; a marker at the very start goes to the first statement.
    std::size_t q = m.pos;
    while (q > 0 && is_space(b.clean[q - 1])) --q;
    int owner = -1;
    if (q > 0) {
      for (std::size_t k = 0; k < segs.size() && segs[k].begin < q; ++k) {
        if (seg_statement[k] >= 0) owner = seg_statement[k];
      }
    }
    if (owner < 0) {
      for (std::size_t k = 0; k < segs.size(); ++k) {
        if (seg_statement[k] >= 0) {
          owner = seg_statement[k];
          break;
        }
      }
    }
    if (owner < 0) {
      out.warnings.push_back("citation marker " + m.id + " has no statement");
      continue;
    }
    out.statements[static_cast<std::size_t>(owner)].citation_refs.push_back(m.id);
  }

  std::map<std::string, std::size_t> by_id;
  if (style == MarkerStyle::url_inline) {
    for (std::size_t k = 0; k < b.url_order.size(); ++k) {
      out.citations.push_back({std::to_string(k + 1), b.url_order[k], "", false});
    }
  } else {
    for (auto& c : b.listed) {
      if (by_id.count(c.id)) {
        out.warnings.push_back("duplicate citation list entry " + c.id);
        continue;
      }
      by_id[c.id] = out.citations.size();
      out.citations.push_back(c);
    }
    for (const auto& st : out.statements) {
      for (const auto& ref : st.citation_refs) {
        if (by_id.count(ref)) continue;
        by_id[ref] = out.citations.size();
        out.citations.push_back({ref, "", "", true});
        out.warnings.push_back("dangling citation marker " + ref);
      }
    }
  }
  return out;
}

std::string strip_markers(std::string_view raw_text, MarkerStyle style) {
  std::string clean = extract(raw_text, style).clean;
  std::replace(clean.begin(), clean.end(), '\n', ' ');
  return text::trim(text::collapse_whitespace(clean));
}

std::size_t citation_occurrences(const std::vector<Statement>& statements) {
  std::size_t n = 0;
  for (const auto& s : statements) n += s.citation_refs.size();
  return n;
}

void check_referential_integrity(const std::vector<Statement>& statements, const std::vector<Citation>& citations) {
  std::set<std::string> ids;
  for (const auto& c : citations) ids.insert(c.id);
  for (std::size_t i = 0; i < statements.size(); ++i) {
    for (const auto& r : statements[i].citation_refs) {
      if (!ids.count(r)) {
        throw ValidationError("statement " + std::to_string(i) + " cites unknown citation '" + r + "'");
      }
    }
  }
}

}  // namespace advfact::engines
