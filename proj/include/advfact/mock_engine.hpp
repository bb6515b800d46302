#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/corpus.hpp"
#include "advfact/resources.hpp"
#include "advfact/response.hpp"

namespace advfact::engines {

enum class MockBehavior { grounded, gullible };

std::string to_string(MockBehavior b);
MockBehavior mock_behavior_from_string(std::string_view s);

struct MockEngineConfig {
  /// Path or digest of the snapshot the mock answers from.
  std::string snapshot_ref;
  int top_k = 3;
  MockBehavior behavior = MockBehavior::grounded;
  std::uint64_t seed = 0;
};

void to_json(json& j, const MockEngineConfig& c);
void from_json(const json& j, MockEngineConfig& c);

struct SentenceRef {
  std::string title;
  std::size_t index = 0;
  const std::string* text = nullptr;
};

/// "snapshot://<title with '_' for spaces>#<sentence index>"
std::string sentence_url(const std::string& title, std::size_t index);
/// Inverse of sentence_url; nullopt for other URLs.
std::optional<std::pair<std::string, std::size_t>> parse_sentence_url(std::string_view url);

/// Content-word view of a snapshot for lexical retrieval and containment
/// checks.
class SnapshotIndex {
 public:
  explicit SnapshotIndex(const corpus::KnowledgeSnapshot& snapshot, const Lexicon& lexicon = Lexicon::builtin());

  const corpus::KnowledgeSnapshot& snapshot() const { return *snapshot_; }
  const std::vector<SentenceRef>& sentences() const { return refs_; }

  /// Top-k sentences by distinct content-word overlap; ties broken by title
  /// and sentence index. Sentences with no overlap are never returned.
  std::vector<std::size_t> retrieve(std::string_view text, std::size_t k) const;

  /// True when every content word of `claim` occurs in `source` (equal stems
  /// or lexicon synonyms). A claim with no content words is not contained.
  bool contains_claim(std::string_view source, std::string_view claim) const;
  /// Some snapshot sentence contains the claim.
  bool supported(std::string_view claim) const;
  std::size_t overlap(std::string_view a, std::string_view b) const;

 private:
  const corpus::KnowledgeSnapshot* snapshot_;
  const Lexicon* lexicon_;
  std::vector<SentenceRef> refs_;
  std::vector<std::vector<std::string>> stems_;
};

/// Clauses of a sentence: comma-delimited relative clauses rewritten onto
/// their antecedent, the rest split at coordination and "that"/"who".
std::vector<std::string> split_atomic_clauses(std::string_view sentence);

/// Raw answer text (bracket_numeric markers plus a citation list).
std::string mock_raw_answer(const MockEngineConfig& config, const SnapshotIndex& index, std::string_view prompt);

/// Raw answer parsed into an EngineResponse; latency and timestamp are left
/// zero/empty for the caller to fill.
EngineResponse mock_answer(const MockEngineConfig& config, const SnapshotIndex& index, std::string_view prompt);

}  // namespace advfact::engines
