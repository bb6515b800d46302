#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/common.hpp"
#include "advfact/corpus.hpp"
#include "advfact/expressions.hpp"

namespace advfact::attack {

enum class Method { multihop, temporal, semantic, distraction, exaggeration, reversal, numerical };
enum class Form { declarative, question };
enum class Label { truth_preserving, truth_flipping };
enum class HopMode { MHOE, OHOE };

inline constexpr Method kAllMethods[] = {Method::multihop,     Method::temporal, Method::semantic,
                                         Method::distraction,  Method::exaggeration, Method::reversal,
                                         Method::numerical};

std::string to_string(Method m);
std::string to_string(Form f);
std::string to_string(Label l);
std::string to_string(HopMode m);
Method method_from_string(std::string_view s);
Form form_from_string(std::string_view s);
Label label_from_string(std::string_view s);
HopMode hop_mode_from_string(std::string_view s);

/// One edit relative to the parent sentence. `site` is absent for appended
/// material. For inserted clauses that contradict the snapshot, `original`
/// holds the true value the clause contradicts.
struct PerturbationRecord {
  std::optional<Span> site;
  std::string original;
  std::string replacement;
  bool flips_truth = false;
  int hop_index = 0;
  /// Comparative claim that replaced a temporal or numeric expression.
  std::optional<NumericPredicate> predicate;
  /// Which parent expression the predicate replaced ("temporal"/"numeric").
  std::string layer;
  int expr_index = -1;
  std::optional<Rational> scale_factor;
  friend bool operator==(const PerturbationRecord&, const PerturbationRecord&) = default;
};

struct Target {
  corpus::Role role = corpus::Role::other;
  corpus::EntityKind kind = corpus::EntityKind::other;
  std::string surface;
  friend bool operator==(const Target&, const Target&) = default;
};

struct AttackInstance {
  std::string id;
  std::string parent_id;
  Method method = Method::semantic;
  Form form = Form::declarative;
  std::string text;
  std::vector<PerturbationRecord> perturbations;
  Label expected_label = Label::truth_preserving;
  int hop_count = 0;
  int error_count = 0;
  std::optional<Target> target;
  std::optional<std::string> gold_answer;
  std::optional<HopMode> hop_mode;
  /// Article titles visited by a hop chain, starting with the source entity.
  std::vector<std::string> chain;
  /// Short tag distinguishing sibling instances of the same method.
  std::string variant;
  friend bool operator==(const AttackInstance&, const AttackInstance&) = default;
};

/// "<parent>.<method>.<flip|keep>[.<variant>].<d|q>"
std::string instance_id(std::string_view parent_id, Method method, bool flip, std::string_view variant, Form form);

void to_json(json& j, const PerturbationRecord& p);
void from_json(const json& j, PerturbationRecord& p);
void to_json(json& j, const Target& t);
void from_json(const json& j, Target& t);
void to_json(json& j, const AttackInstance& a);
void from_json(const json& j, AttackInstance& a);

/// Checks the instance invariants (label/error count agreement, reversal
/// shape, hop counts). Throws InvariantViolation.
void validate_instance(const AttackInstance& a);

// ---------------------------------------------------------------------------
// The seven transforms. Each throws NotApplicable when its precondition
// fails; all choices are pure functions of the inputs and the seed.
// ---------------------------------------------------------------------------

AttackInstance multihop_extend(const corpus::FactStatement& stmt, const corpus::KnowledgeSnapshot& snapshot, int hops,
                               HopMode mode, bool flip, std::uint64_t seed);

AttackInstance temporal_modify(const corpus::FactStatement& stmt, TemporalKind target_kind, bool flip,
                               std::uint64_t seed, const AnchorTable& anchors = AnchorTable::builtin());

AttackInstance semantic_replace(const corpus::FactStatement& stmt, bool flip, std::uint64_t seed,
                                const Lexicon& lexicon = Lexicon::builtin());

AttackInstance distraction_inject(const corpus::FactStatement& stmt, const corpus::KnowledgeSnapshot& snapshot,
                                  const corpus::EntitySpan& target, bool fabricate, std::uint64_t seed);

AttackInstance facts_exaggerate(const corpus::FactStatement& stmt, std::uint64_t seed);

AttackInstance facts_reverse(const corpus::FactStatement& stmt);

AttackInstance numerical_manipulate(const corpus::FactStatement& stmt, bool flip, std::uint64_t seed);

/// Hyperbole phrases used by facts_exaggerate when nothing can be scaled.
const std::vector<std::string>& hyperbole_phrases();

/// Longest chain depth reachable from the statement's linked entities.
int max_hop_depth(const corpus::FactStatement& stmt, const corpus::KnowledgeSnapshot& snapshot);

}  // namespace advfact::attack
