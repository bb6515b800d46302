#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "advfact/common.hpp"

namespace advfact::engines {

enum class MarkerStyle { bracket_numeric, superscript, url_inline };

std::string to_string(MarkerStyle s);
MarkerStyle marker_style_from_string(std::string_view s);

struct Statement {
  std::string text;
  std::vector<std::string> citation_refs;
  friend bool operator==(const Statement&, const Statement&) = default;
};

struct Citation {
  std::string id;
  std::string url_or_title;
  std::string snippet;
  /// Referenced by a marker but missing from the citation list.
  bool dangling = false;
  friend bool operator==(const Citation&, const Citation&) = default;
};

void to_json(json& j, const Statement& s);
void from_json(const json& j, Statement& s);
void to_json(json& j, const Citation& c);
void from_json(const json& j, Citation& c);

struct ParsedCitations {
  std::vector<Statement> statements;
  std::vector<Citation> citations;
  std::vector<std::string> warnings;
};

/// Splits a raw engine answer into statements and citations.
///
/// bracket_numeric: markers "[n]"; list lines "[n]: <url> \"snippet\"".
/// superscript: markers "¹²" or "^n"; list lines "n. <url> \"snippet\"" or "^n <url>".
/// url_inline: "(https://...)" or "<https://...>" after a statement; ids are
/// assigned in order of first appearance.
///
/// List lines are recognized anywhere in the text and removed from the body.
ParsedCitations parse_citations(std::string_view raw_text, MarkerStyle style);

/// The answer body with markers and citation list removed, whitespace
/// collapsed. Equals the statement texts joined by single spaces.
std::string strip_markers(std::string_view raw_text, MarkerStyle style);

/// Marker occurrences over all statements (a citation attached to two
/// statements counts twice).
std::size_t citation_occurrences(const std::vector<Statement>& statements);

/// Throws ValidationError when a citation_ref has no matching citation id.
void check_referential_integrity(const std::vector<Statement>& statements, const std::vector<Citation>& citations);

}  // namespace advfact::engines
