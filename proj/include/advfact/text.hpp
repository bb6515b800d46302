#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace advfact::text {

enum class TokenShape { word, number, punct, quoted };

/// A token with byte offsets [begin, end) into the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  TokenShape shape = TokenShape::word;
};

/// Splits text into words, numbers ("8,849", "1.5", "$30" is "$" + "30"),
/// punctuation, and double-quoted spans (kept as one token). Abbreviations
/// and initials ("Bros.", "J.") keep their period.
std::vector<Token> tokenize(std::string_view text);

std::string to_lower(std::string_view s);
bool is_capitalized(std::string_view word);
std::string capitalize_first(std::string_view s);
std::string lowercase_first(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string trim(std::string_view s);
bool starts_with_word(std::string_view text, std::string_view word);
bool iequals(std::string_view a, std::string_view b);

/// Finds `needle` in `haystack` at word boundaries (case-insensitive when
/// `fold_case`). Returns npos if absent.
std::size_t find_word(std::string_view haystack, std::string_view needle, bool fold_case = false,
                      std::size_t from = 0);

bool is_abbreviation(std::string_view token);

/// Closed-class words: determiners, pronouns, prepositions, conjunctions,
/// auxiliaries, and a handful of discourse words.
bool is_function_word(std::string_view lower_word);
bool is_auxiliary(std::string_view lower_word);
bool is_copula(std::string_view lower_word);
bool is_determiner(std::string_view lower_word);
bool is_preposition(std::string_view lower_word);
bool is_pronoun(std::string_view lower_word);

/// Light suffix stemmer plus irregular-verb folding; equal stems are treated
/// as the same content word everywhere in the toolkit.
std::string stem(std::string_view word);

/// Stemmed content words of `text` in order of appearance.
std::vector<std::string> content_words(std::string_view text);

/// Answer normalization: lowercase, strip punctuation and leading articles,
/// collapse whitespace.
std::string normalize_answer(std::string_view text);

/// Irregular verb forms.
std::optional<std::string> irregular_base(std::string_view lower_form);
bool is_irregular_past(std::string_view lower_form);
bool is_irregular_participle(std::string_view lower_form);

/// Base form of a past-tense or third-person verb ("opened" -> "open",
/// "wrote" -> "write", "headlines" -> "headline").
std::string verb_base(std::string_view lower_form);

/// Past-tense counterpart of a present auxiliary ("is" -> "was"); other
/// words are returned unchanged.
std::string past_auxiliary(std::string_view lower_aux);
bool is_past_auxiliary(std::string_view lower_aux);

}  // namespace advfact::text
