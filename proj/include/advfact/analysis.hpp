#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/expressions.hpp"
#include "advfact/text.hpp"

namespace advfact {

enum class Pos { det, pron, prep, conj, aux, verb, adj, adv, noun, propn, num, punct, quoted };

std::string to_string(Pos p);

struct TaggedToken {
  text::Token token;
  std::string lower;
  Pos pos = Pos::noun;
};

/// Shallow grammatical structure of one declarative sentence: the subject
/// noun phrase with its appositive, the main verb group, the object phrase
/// with its appositive, and where the main clause ends.
struct SentenceAnalysis {
  std::string text;
  std::vector<TaggedToken> tokens;

  std::optional<Span> subject;
  std::optional<Span> subject_appositive;
  std::size_t verb_first = 0;  // token index of the first verb-group token
  std::size_t verb_last = 0;   // token index of the last verb-group token
  std::optional<Span> object;
  std::optional<Span> object_appositive;
  /// Byte offset where the first subordinate or coordinated clause starts
  /// (", and", ", which", "who", ...); text.size() when there is none.
  std::size_t main_clause_end = 0;

  const TaggedToken& main_verb() const { return tokens[verb_first]; }
  bool copular() const { return text::is_copula(tokens[verb_first].lower); }
  Span verb_span() const { return {tokens[verb_first].token.begin, tokens[verb_last].token.end}; }
  /// Index of the first token starting at or after byte offset `pos`.
  std::size_t token_at(std::size_t pos) const;
};

/// Part-of-speech tags from closed-class lists, the lexicon, suffix rules
/// and capitalization.
std::vector<TaggedToken> tag_tokens(std::string_view sentence);

/// Throws ValidationError when the input is not exactly one sentence ending
/// in a period, or when no finite verb is found.
SentenceAnalysis analyze_sentence(std::string_view sentence);

}  // namespace advfact
