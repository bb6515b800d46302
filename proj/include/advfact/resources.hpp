#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace advfact {

struct LexiconEntry {
  std::string word;  // lowercase
  std::string pos;   // adj, adv, verb, noun
  std::vector<std::string> synonyms;
  std::vector<std::string> antonyms;
};

/// Synonym/antonym table keyed by lowercase surface word.
class Lexicon {
 public:
  /// Parses the four-column TSV format (word, pos, synonyms, antonyms; list
  /// cells comma-separated, '#' starts a comment line).
  static Lexicon parse(std::string_view tsv);
  static const Lexicon& builtin();

  const LexiconEntry* find(std::string_view word) const;
  const std::vector<LexiconEntry>& entries() const { return entries_; }
  /// True when `a` and `b` are listed as synonyms of each other (or equal).
  bool synonymous(std::string_view a, std::string_view b) const;
  bool antonymous(std::string_view a, std::string_view b) const;

 private:
  std::vector<LexiconEntry> entries_;
};

struct TemporalAnchor {
  std::string event;  // as written in prose, e.g. "World War II"
  int first_year = 0;
  int last_year = 0;
};

/// Named events with known years, used to resolve and build relative
/// temporal expressions.
class AnchorTable {
 public:
  static AnchorTable parse(std::string_view tsv);
  static const AnchorTable& builtin();
  /// Built-in table extended by a user TSV file in the same format.
  static AnchorTable with_extension(const std::filesystem::path& path);

  const std::vector<TemporalAnchor>& anchors() const { return anchors_; }
  /// Longest anchor whose event text starts at `text` (case-insensitive on
  /// a leading "the").
  const TemporalAnchor* match_prefix(std::string_view text, std::size_t* matched_length) const;

 private:
  std::vector<TemporalAnchor> anchors_;
};

}  // namespace advfact
