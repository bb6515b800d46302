#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/attackgen.hpp"
#include "advfact/corpus.hpp"
#include "advfact/question.hpp"

namespace advfact::attack {

inline constexpr std::string_view kSuiteFormat = "advfact.suite";

struct SuiteConfig {
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  /// Flip settings applied to every method that has both polarities.
  std::vector<bool> flips{true};
  std::vector<int> hops{2};
  std::vector<HopMode> hop_modes{HopMode::MHOE};
  /// Tried in seeded order until one applies.
  std::vector<TemporalKind> temporal_kinds{TemporalKind::direct, TemporalKind::vague, TemporalKind::relative};
  /// One distraction target per statement, or every target with an article.
  bool distraction_all_targets = false;
  bool cloze = true;
  int min_methods = 5;
};

void to_json(json& j, const SuiteConfig& c);
void from_json(const json& j, SuiteConfig& c);
std::string config_digest(const SuiteConfig& c);

/// The unperturbed statement, asked in either form (Acc-before).
struct OriginalProbe {
  std::string id;
  std::string parent_id;
  Form form = Form::declarative;
  std::string text;
  friend bool operator==(const OriginalProbe&, const OriginalProbe&) = default;
};

void to_json(json& j, const OriginalProbe& p);
void from_json(const json& j, OriginalProbe& p);

struct AttackSuite {
  std::vector<OriginalProbe> originals;
  std::vector<AttackInstance> instances;
  std::vector<ClozeInstance> clozes;
  /// Excluded statements (stage "suite") and methods that did not apply
  /// (stage "method:<name>").
  std::vector<corpus::SkipRecord> skipped;
  std::uint64_t seed = 0;
  std::string config_digest;
};

/// Builds the suite. Statements with fewer than `min_methods` applicable
/// methods are excluded and recorded in `skipped`. Output order is canonical:
/// parent id, method, form, id.
AttackSuite generate_suite(const std::vector<corpus::FactStatement>& corpus, const corpus::KnowledgeSnapshot& snapshot,
                           const SuiteConfig& config, std::uint64_t seed);

/// Distinct methods applied per parent.
std::vector<std::pair<std::string, std::vector<Method>>> methods_by_parent(const AttackSuite& suite);

std::string serialize_suite(const AttackSuite& suite, const json& header_extra = json::object());
AttackSuite parse_suite(std::string_view jsonl);

}  // namespace advfact::attack
