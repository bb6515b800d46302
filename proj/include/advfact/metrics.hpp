#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "advfact/adjudication.hpp"
#include "advfact/engines.hpp"
#include "advfact/suite.hpp"

namespace advfact::metrics {

// ---------------------------------------------------------------------------
// Attack success
// ---------------------------------------------------------------------------

struct OriginalOutcome {
  std::string original_id;
  /// I_i: the engine answered the unperturbed original correctly.
  bool answered_correctly = false;
  int n_total = 0;
  int n_wrong = 0;
};

/// Mean of per-original wrong rates over originals answered correctly:
/// (sum I_i * N_wrong/N_total) / (sum I_i). The printed sum is unnormalized;
/// dividing by sum I_i is what makes the result a rate. Correct originals
/// with no attacks are left out of both sums.
/// Throws UndefinedMetric when no original qualifies, ValidationError when
/// n_wrong > n_total or a count is negative.
double asr(const std::vector<OriginalOutcome>& outcomes);

/// Fraction of true values. Throws UndefinedMetric on an empty set.
double accuracy(const std::vector<bool>& correct);

// ---------------------------------------------------------------------------
// Citation quality
// ---------------------------------------------------------------------------

struct ResponseAnnotation {
  std::string response_ref;
  int s_total = 0;
  int s_support = 0;
  int c_total = 0;
  int c_support = 0;
  int c_relevant = 0;
  /// Supporting citations among the relevant ones.
  int c_support_relevant = 0;
};

void validate_annotation(const ResponseAnnotation& a);

/// Counts from a judgment's support vectors.
ResponseAnnotation annotation_of(const std::string& response_ref, const std::vector<bool>& statement_support,
                                 const std::vector<bool>& citation_support,
                                 const std::vector<bool>& citation_relevant);

enum class Averaging { macro, micro };

struct RateResult {
  double value = 0;
  std::size_t included = 0;
  /// Responses left out for an empty denominator.
  std::vector<std::string> skipped;
};

/// Macro: mean of S_support/S_total per response. Micro: pooled counts.
/// Responses with S_total = 0 are skipped. UndefinedMetric when none remain.
RateResult citation_recall(const std::vector<ResponseAnnotation>& annotations, Averaging avg = Averaging::macro);

/// C_support/C_total per response, or C_support_relevant/C_relevant when
/// `filtered`. Responses with an empty denominator are skipped.
RateResult citation_precision(const std::vector<ResponseAnnotation>& annotations, bool filtered,
                              Averaging avg = Averaging::macro);

// ---------------------------------------------------------------------------
// Factscore
// ---------------------------------------------------------------------------

struct AtomicFact {
  std::string text;
  bool supported = false;
};

struct AtomicFactSet {
  std::string response_ref;
  bool responds = true;
  std::vector<AtomicFact> facts;
};

/// Mean supported fraction over responding sets; refusals are excluded.
/// ValidationError when a responding set has no facts, UndefinedMetric when
/// every set refuses.
double factscore(const std::vector<AtomicFactSet>& sets);

using FactSplitter = std::function<std::vector<std::string>(const engines::EngineResponse&)>;
using SupportChecker = std::function<bool(const std::string& fact, const engines::EngineResponse&)>;

/// Refusals and empty answers.
bool is_refusal(const engines::EngineResponse& response);

/// Clause segmentation of every non-boilerplate statement. Stance leads
/// ("Yes, that is correct.") and engine boilerplate are dropped.
FactSplitter default_fact_splitter();

/// Content-word containment against the sentences of cited articles and of
/// the articles retrieved for the fact.
SupportChecker default_support_checker(const engines::SnapshotIndex& index);

AtomicFactSet atomic_facts(const engines::EngineResponse& response, const FactSplitter& splitter,
                           const SupportChecker& checker);

// ---------------------------------------------------------------------------
// Likert and agreement
// ---------------------------------------------------------------------------

/// ValidationError on a value outside 1-5, UndefinedMetric when empty.
double likert_mean(const std::vector<int>& values);

/// Fleiss' kappa over an items x categories count matrix. Every row must sum
/// to the same n >= 2 (ValidationError otherwise). UndefinedMetric when
/// expected agreement is 1.
double fleiss_kappa(const std::vector<std::vector<int>>& matrix);

/// Builds a count matrix from per-item labels. Items rated by fewer raters
/// than the most common count are dropped and reported in `dropped`.
std::vector<std::vector<int>> rating_matrix(const std::vector<std::vector<std::string>>& labels,
                                            std::vector<std::size_t>* dropped = nullptr);

// ---------------------------------------------------------------------------
// Evaluation records
// ---------------------------------------------------------------------------

/// One (probe, engine response) pair with its resolved judgment.
struct EvalRecord {
  std::string engine;
  std::string mode;
  judge::ProbeInfo probe;
  /// The original this item is scored against: the same parent and form for
  /// attacks, the declarative original for clozes, itself for originals.
  std::string original_id;
  bool judged = false;
  bool is_correct = false;
  bool contradiction = false;
  ResponseAnnotation annotation;
  std::vector<int> fluency;
  std::vector<int> utility;
  /// One label per human annotator, for agreement.
  std::vector<std::string> human_correct;
  std::vector<std::string> human_fluency;
  std::vector<std::string> human_utility;
  std::optional<AtomicFactSet> facts;

  std::string engine_key() const { return engines::engine_key(engine, mode); }
};

/// Original ids used for scoring.
std::string original_id_of(const judge::ProbeInfo& probe);

/// Joins probes, responses and judgments. Human judgments take precedence
/// over automatic ones: is_correct and the support vectors are decided by
/// majority vote over humans (ties go to false). Responses with no judgment
/// are kept with judged = false. Factscore sets are computed when `index` is
/// given.
std::vector<EvalRecord> assemble_records(const std::map<std::string, judge::ProbeInfo>& probes,
                                         const std::vector<engines::EngineResponse>& responses,
                                         const std::vector<judge::Judgment>& judgments,
                                         const engines::SnapshotIndex* index = nullptr);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// engine, mode, method, form, target, hops, hop_mode.
const std::vector<std::string>& group_keys();
void validate_group_by(const std::vector<std::string>& group_by);

struct ReportRow {
  std::vector<std::pair<std::string, std::string>> keys;
  std::optional<double> acc_before;
  std::optional<double> acc_after;
  std::optional<double> asr;
  std::optional<double> citation_recall;
  std::optional<double> citation_precision;
  std::optional<double> citation_precision_filtered;
  /// Over attack responses, and over attack plus referenced original responses.
  std::optional<double> factscore;
  std::optional<double> factscore_all;
  std::optional<double> fluency_mean;
  std::optional<double> utility_mean;
  std::optional<double> kappa_correct;
  std::optional<double> kappa_fluency;
  std::optional<double> kappa_utility;
  int n_originals = 0;
  int n_originals_correct = 0;
  int n_attacks = 0;
  int n_attacks_wrong = 0;
  int n_unjudged = 0;
  int n_contradictions = 0;
  std::vector<std::string> notes;
};

struct MetricsReport {
  std::vector<std::string> group_by;
  std::vector<ReportRow> rows;
  std::vector<std::string> notes;
};

void to_json(json& j, const ReportRow& r);
void to_json(json& j, const MetricsReport& r);

struct ReportOptions {
  Averaging averaging = Averaging::macro;
};

/// One row per combination of group values seen among attack and cloze
/// records, in sorted key order. Originals are judged per engine; a group's
/// Acc-before covers the originals its attacks reference.
MetricsReport build_report(const std::vector<EvalRecord>& records, const std::vector<std::string>& group_by,
                           const ReportOptions& options = {});

}  // namespace advfact::metrics
