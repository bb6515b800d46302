#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "advfact/attackgen.hpp"

namespace advfact::attack {

/// Folds a coordinated clause into a relative clause:
/// "X, and in 2008 it was Y" -> "X that was Y in 2008". Returns nullopt when
/// the pattern is absent. `merged_aux` receives the auxiliary of the folded
/// clause.
std::optional<std::string> merge_coordinated_clause(std::string_view predicate, std::string* merged_aux = nullptr);

/// Polar question for a declarative sentence: the auxiliary is fronted
/// ("Is/Was/Has ..."), lexical verbs take "Do/Does/Did", and anything else
/// falls back to "Is it true that ...?".
std::string question_text(std::string_view declarative);

/// True when `question` was produced by the "Is it true that" fallback.
bool is_fallback_question(std::string_view question);

/// Question twin of a declarative instance: same parent, method, label and
/// perturbations.
AttackInstance to_question(const AttackInstance& instance);

enum class BlankKind { year, quantity };

inline constexpr std::string_view kYearBlank = "<which year>";
inline constexpr std::string_view kQuantityBlank = "<how many>";

struct ClozeInstance {
  std::string id;
  std::string parent_id;
  std::string text;
  BlankKind blank_kind = BlankKind::year;
  std::string gold_answer;
  friend bool operator==(const ClozeInstance&, const ClozeInstance&) = default;
};

std::string to_string(BlankKind k);
void to_json(json& j, const ClozeInstance& c);
void from_json(const json& j, ClozeInstance& c);

/// Blanks the first direct year, or else the first quantity.
ClozeInstance cloze_generate(const corpus::FactStatement& stmt);

/// Puts the gold answer back into the blank.
std::string cloze_fill(const ClozeInstance& cloze, std::string_view answer);

}  // namespace advfact::attack
