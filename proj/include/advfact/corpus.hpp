#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advfact/analysis.hpp"
#include "advfact/common.hpp"
#include "advfact/expressions.hpp"
#include "advfact/resources.hpp"

namespace advfact::corpus {

inline constexpr std::string_view kSnapshotFormat = "advfact.snapshot";
inline constexpr std::string_view kStatementsFormat = "advfact.statements";
inline constexpr std::string_view kAnnotatedFormat = "advfact.fact_statements";

struct Article {
  std::string title;
  std::string category;
  std::vector<std::string> sentences;
  std::vector<std::string> links;
  std::vector<std::string> aliases;
  friend bool operator==(const Article&, const Article&) = default;
};

class KnowledgeSnapshot {
 public:
  KnowledgeSnapshot() = default;
  /// Validates articles and records dangling links as warnings.
  explicit KnowledgeSnapshot(std::vector<Article> articles);

  const Article* find(std::string_view title) const;
  const Article& at(std::string_view title) const;
  bool contains(std::string_view title) const { return find(title) != nullptr; }
  const std::map<std::string, Article>& articles() const { return articles_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// Article whose title or alias equals `name` (case-sensitive), or whose
  /// title with a parenthetical qualifier stripped equals it.
  const Article* resolve_name(std::string_view name) const;
  /// Content digest over the canonical serialization.
  std::string digest() const;

 private:
  std::map<std::string, Article> articles_;
  std::vector<std::string> warnings_;
};

/// "O2 (company)" -> "O2"
std::string display_name(std::string_view title);

KnowledgeSnapshot parse_snapshot(std::string_view jsonl);
KnowledgeSnapshot ingest_snapshot(const std::filesystem::path& path);
std::string serialize_snapshot(const KnowledgeSnapshot& snapshot, const json& header_extra = json::object());

enum class EntityKind { person, place, time, proper, other };
enum class Role { subject, object, subject_appositive, object_appositive, other };

std::string to_string(EntityKind k);
std::string to_string(Role r);
EntityKind entity_kind_from_string(std::string_view s);
Role role_from_string(std::string_view s);

struct EntitySpan {
  Span span;
  std::string surface;
  EntityKind kind = EntityKind::other;
  Role role = Role::other;
  /// Snapshot article this mention resolves to, if any.
  std::string article;
  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct SubjectPredicate {
  Span subject_span;
  std::string subject;
  std::string copula;
  std::string predicate_text;
  friend bool operator==(const SubjectPredicate&, const SubjectPredicate&) = default;
};

struct FactStatement {
  std::string id;
  std::string text;
  std::string source_title;
  std::string category;
  std::vector<EntitySpan> entities;
  std::vector<TemporalExpr> temporal_exprs;
  std::vector<NumericExpr> numeric_exprs;
  std::optional<SubjectPredicate> predicate_frame;
  friend bool operator==(const FactStatement&, const FactStatement&) = default;
};

void to_json(json& j, const Article& a);
void from_json(const json& j, Article& a);
void to_json(json& j, const EntitySpan& e);
void from_json(const json& j, EntitySpan& e);
void to_json(json& j, const SubjectPredicate& p);
void from_json(const json& j, SubjectPredicate& p);
void to_json(json& j, const FactStatement& s);
void from_json(const json& j, FactStatement& s);

/// Entity kind implied by an article category.
EntityKind kind_for_category(std::string_view category);

/// Runs the annotator over one sentence. Throws ValidationError for
/// multi-sentence input, a missing finite verb, or an unknown source title.
FactStatement annotate_statement(std::string_view stmt_text, std::string_view source_title,
                                 const KnowledgeSnapshot& snapshot, std::string id = {},
                                 std::string category = {}, const AnchorTable& anchors = AnchorTable::builtin());

/// Entity layer alone; also used to re-analyse generated sentences.
std::vector<EntitySpan> find_entities(const SentenceAnalysis& analysis, const KnowledgeSnapshot& snapshot,
                                      const std::vector<TemporalExpr>& temporal);

struct StatementRecord {
  std::string id;
  std::string text;
  std::string source_title;
  std::string category;
};

std::vector<StatementRecord> parse_statements(std::string_view jsonl);
std::vector<StatementRecord> load_statements(const std::filesystem::path& path);

struct SkipRecord {
  std::string id;
  std::string stage;
  std::string reason;
  friend bool operator==(const SkipRecord&, const SkipRecord&) = default;
};

void to_json(json& j, const SkipRecord& s);
void from_json(const json& j, SkipRecord& s);

struct AnnotatedCorpus {
  std::vector<FactStatement> statements;
  std::vector<SkipRecord> skipped;
};

/// Annotates every record; failures are skipped with their reason.
AnnotatedCorpus annotate_corpus(const std::vector<StatementRecord>& records, const KnowledgeSnapshot& snapshot,
                                const AnchorTable& anchors = AnchorTable::builtin());

/// Up to `per_category` statements from each category, chosen by seed and
/// returned in id order.
std::vector<FactStatement> sample_by_category(const std::vector<FactStatement>& statements,
                                              std::size_t per_category, std::uint64_t seed);

std::string serialize_corpus(const AnnotatedCorpus& corpus, const json& header_extra = json::object());
AnnotatedCorpus parse_corpus(std::string_view jsonl);

}  // namespace advfact::corpus
