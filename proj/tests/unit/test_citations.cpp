#include <gtest/gtest.h>

#include <random>

#include "advfact/citations.hpp"
#include "advfact/text.hpp"

using namespace advfact;
using namespace advfact::engines;

namespace {

std::string joined(const ParsedCitations& p) {
  std::string out;
  for (const auto& s : p.statements) {
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

}  // namespace

TEST(Citations, BracketNumeric) {
  std::string raw =
      "The arena opened in 2007 [1]. It sits on the Greenwich peninsula [1][2].\n"
      "[1]: https://example.org/arena \"Opened in June 2007.\"\n"
      "[2]: https://example.org/greenwich\n";
  auto p = parse_citations(raw, MarkerStyle::bracket_numeric);
  ASSERT_EQ(p.statements.size(), 2u);
  EXPECT_EQ(p.statements[0].text, "The arena opened in 2007.");
  EXPECT_EQ(p.statements[0].citation_refs, std::vector<std::string>{"1"});
  EXPECT_EQ(p.statements[1].citation_refs, (std::vector<std::string>{"1", "2"}));
  ASSERT_EQ(p.citations.size(), 2u);
  EXPECT_EQ(p.citations[0].url_or_title, "https://example.org/arena");
  EXPECT_EQ(p.citations[0].snippet, "Opened in June 2007.");
  EXPECT_EQ(citation_occurrences(p.statements), 3u);
  EXPECT_NO_THROW(check_referential_integrity(p.statements, p.citations));
}

TEST(Citations, Superscript) {
  std::string raw = "Everest is 8,849 metres tall¹. It lies in Nepal².\n1. https://a.example \"tall\"\n2. https://b.example\n";
  auto p = parse_citations(raw, MarkerStyle::superscript);
  ASSERT_EQ(p.statements.size(), 2u);
  EXPECT_EQ(p.statements[0].citation_refs, std::vector<std::string>{"1"});
  EXPECT_EQ(p.statements[1].citation_refs, std::vector<std::string>{"2"});
  EXPECT_EQ(p.citations.size(), 2u);
  EXPECT_EQ(p.statements[0].text.find("¹"), std::string::npos);
}

TEST(Citations, UrlInlineAssignsIdsByFirstAppearance) {
  std::string raw = "It opened in 2007 (https://x.example/a). It hosts concerts <https://x.example/b>. "
                    "Tickets sell fast (https://x.example/a).";
  auto p = parse_citations(raw, MarkerStyle::url_inline);
  ASSERT_EQ(p.statements.size(), 3u);
  ASSERT_EQ(p.citations.size(), 2u);
  EXPECT_EQ(p.citations[0].url_or_title, "https://x.example/a");
  EXPECT_EQ(p.statements[2].citation_refs, p.statements[0].citation_refs);
  EXPECT_EQ(citation_occurrences(p.statements), 3u);
}

TEST(Citations, DanglingMarkerIsKeptAndFlagged) {
  auto p = parse_citations("It opened in 2007 [3].", MarkerStyle::bracket_numeric);
  ASSERT_EQ(p.citations.size(), 1u);
  EXPECT_TRUE(p.citations[0].dangling);
  EXPECT_FALSE(p.warnings.empty());
}

TEST(Citations, ReferentialIntegrityViolation) {
  std::vector<Statement> st{{"A claim.", {"9"}}};
  EXPECT_THROW(check_referential_integrity(st, {}), ValidationError);
}

TEST(Citations, AbbreviationsDoNotSplit) {
  auto p = parse_citations("It is owned by Warner Bros. Discovery in the U.S. today [1].", MarkerStyle::bracket_numeric);
  EXPECT_EQ(p.statements.size(), 1u);
  auto q = parse_citations("It was founded by Acme Inc. The firm grew [1].", MarkerStyle::bracket_numeric);
  EXPECT_EQ(q.statements.size(), 2u);
}

TEST(Citations, StripEqualsJoinedStatements) {
  std::mt19937_64 rng(20240601);
  const std::vector<std::string> bodies{"The arena opened in 2007", "It was renamed in 2008", "Warner Bros. owns it",
                                        "Everest is 8,849 metres tall", "It is \"quite\" large", "Sales topped 18 million"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string raw;
    int n = 1 + static_cast<int>(rng() % 5);
    int cites = 0;
    for (int i = 0; i < n; ++i) {
      if (!raw.empty()) raw += rng() % 2 ? " " : "  \n";
      raw += bodies[rng() % bodies.size()];
      int m = static_cast<int>(rng() % 3);
      for (int k = 0; k < m; ++k) {
        int id = 1 + static_cast<int>(rng() % 3);
        cites = std::max(cites, id);
        raw += (k == 0 && rng() % 2 ? " [" : "[") + std::to_string(id) + "]";
      }
      raw += ".";
    }
    raw += "\n";
    for (int c = 1; c <= cites; ++c) raw += "[" + std::to_string(c) + "]: https://e.example/" + std::to_string(c) + "\n";
    auto p = parse_citations(raw, MarkerStyle::bracket_numeric);
    EXPECT_EQ(strip_markers(raw, MarkerStyle::bracket_numeric), joined(p)) << raw;
    EXPECT_NO_THROW(check_referential_integrity(p.statements, p.citations)) << raw;
  }
}

TEST(Citations, MarkerStyleNames) {
  for (auto s : {MarkerStyle::bracket_numeric, MarkerStyle::superscript, MarkerStyle::url_inline}) {
    EXPECT_EQ(marker_style_from_string(to_string(s)), s);
  }
  EXPECT_THROW(marker_style_from_string("footnote"), Error);
}
