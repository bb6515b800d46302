#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/attackgen.hpp"
#include "advfact/engines.hpp"
#include "advfact/suite.hpp"

namespace advfact::judge {

enum class Verdict { affirm, deny, correct_with_fix, abstain };

std::string to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

enum class ItemKind { original, attack, cloze };

std::string to_string(ItemKind k);

/// What scoring needs to know about a probe, whatever produced it.
struct ProbeInfo {
  std::string id;
  std::string parent_id;
  ItemKind kind = ItemKind::original;
  std::optional<attack::Method> method;
  attack::Form form = attack::Form::declarative;
  std::string text;
  attack::Label expected_label = attack::Label::truth_preserving;
  std::optional<std::string> gold_answer;
  /// Reversal and cloze items are scored against the gold answer.
  bool gold_required = false;
  std::vector<attack::PerturbationRecord> perturbations;
  std::optional<corpus::Role> target_role;
  int hop_count = 0;
  std::optional<attack::HopMode> hop_mode;
};

ProbeInfo probe_of(const attack::OriginalProbe& p);
ProbeInfo probe_of(const attack::AttackInstance& a);
ProbeInfo probe_of(const attack::ClozeInstance& c);
/// Every probe of a suite keyed by id.
std::map<std::string, ProbeInfo> probes_of(const attack::AttackSuite& suite);

struct Judgment {
  std::string instance_id;
  std::string engine;
  std::string mode;
  /// "auto:<judge name>" or "human:<annotator id>".
  std::string annotator;
  Verdict verdict = Verdict::abstain;
  bool is_correct = false;
  bool contradiction = false;
  /// Affirmation carried hedging words ("likely", "may").
  bool hedged = false;
  std::vector<bool> statement_support;
  std::vector<bool> citation_support;
  std::vector<bool> citation_relevant;
  std::optional<int> fluency;
  std::optional<int> utility;
  std::string timestamp;
  friend bool operator==(const Judgment&, const Judgment&) = default;
};

void to_json(json& j, const Judgment& x);
void from_json(const json& j, Judgment& x);

bool is_human(const Judgment& j);

/// Field ranges, annotator form, and contradiction => affirm.
void validate_judgment(const Judgment& j);
/// Vector lengths against the response the judgment is about.
void validate_against(const Judgment& j, const engines::EngineResponse& response);

struct ScoringPolicy {
  /// Abstentions score as incorrect; when false they score like a denial.
  bool abstain_incorrect = true;
};

/// Case-, article- and punctuation-insensitive; the gold answer must occur
/// in the answer at word boundaries.
bool gold_matches(std::string_view answer, std::string_view gold);

bool decide_correct(const ProbeInfo& probe, Verdict verdict, std::string_view answer_text,
                    const ScoringPolicy& policy = {});
bool decide_correct(const attack::AttackInstance& instance, Verdict verdict, std::string_view answer_text,
                    const ScoringPolicy& policy = {});

struct Stance {
  Verdict verdict = Verdict::abstain;
  bool hedged = false;
};

/// Rule cascade over lead-token stance cues, correction cues and evidence
/// denials. `probe` may be null; when given, a denial that restates a true
/// value counts as a correction.
Stance classify_stance(const engines::EngineResponse& response, const ProbeInfo* probe = nullptr);

/// True when `statement` states the value `original` (interval equality for
/// temporal/numeric values, word-bounded containment otherwise).
bool asserts_value(std::string_view statement, std::string_view original);

bool detect_contradiction(const ProbeInfo& probe, const engines::EngineResponse& response, Verdict verdict);
bool detect_contradiction(const attack::AttackInstance& instance, const engines::EngineResponse& response);

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string name() const = 0;
  /// Throws ExternalError when the backend cannot decide.
  virtual Stance stance(const ProbeInfo& probe, const engines::EngineResponse& response) = 0;
};

class RuleJudge : public JudgeBackend {
 public:
  std::string name() const override { return "rules"; }
  Stance stance(const ProbeInfo& probe, const engines::EngineResponse& response) override;
};

/// Posts {"prompt": <rendered template>} to an endpoint and expects
/// {"verdict": "affirm|deny|correct_with_fix|abstain"} back.
class HttpJudge : public JudgeBackend {
 public:
  HttpJudge(std::string endpoint, std::string prompt_template, std::string auth_env = "",
            engines::HttpTransport transport = {});
  std::string name() const override { return "http"; }
  Stance stance(const ProbeInfo& probe, const engines::EngineResponse& response) override;

 private:
  std::string endpoint_;
  std::string template_;
  std::string secret_;
  engines::HttpTransport transport_;
};

/// {"kind": "rules"} or {"kind": "http", "endpoint": ..., "prompt_template_file": ...}.
std::unique_ptr<JudgeBackend> make_judge(const json& config, const std::filesystem::path& base_dir = {});

struct SupportLabels {
  std::vector<bool> statement_support;
  std::vector<bool> citation_support;
  std::vector<bool> citation_relevant;
};

/// A statement is supported when a cited snippet contains all its content
/// words; snapshot:// citations without a snippet are resolved in the index.
SupportLabels auto_support(const engines::EngineResponse& response, const engines::SnapshotIndex& index);

/// Throws ExternalError when the backend fails; callers queue the pair for
/// human annotation.
Judgment auto_judge(const ProbeInfo& probe, const engines::EngineResponse& response, JudgeBackend& judge,
                    const engines::SnapshotIndex& index, const ScoringPolicy& policy = {});

inline constexpr std::string_view kJudgmentFormat = "advfact.judgments";

using ResponseLookup =
    std::function<const engines::EngineResponse*(const std::string& instance_id, const std::string& engine,
                                                 const std::string& mode)>;

/// Schema-validates records, rejects duplicates (same instance, engine,
/// mode and annotator) naming both lines, and checks vector lengths against
/// stored responses when `lookup` is given.
std::vector<Judgment> parse_judgments(std::string_view jsonl, const ResponseLookup& lookup = {});
std::vector<Judgment> import_judgments(const std::filesystem::path& path, const ResponseLookup& lookup = {});
std::string serialize_judgments(const std::vector<Judgment>& judgments, const json& header_extra = json::object());

/// Canonical order: instance, engine, mode, annotator, timestamp.
void sort_judgments(std::vector<Judgment>& judgments);

}  // namespace advfact::judge
