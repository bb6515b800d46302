#include "advfact/corpus.hpp"

#include <algorithm>
#include <set>

#include "advfact/text.hpp"

namespace advfact::corpus {

namespace {

template <typename T>
T field(const JsonlRecord& rec, const char* name) {
  if (!rec.value.contains(name)) throw ParseError(std::string("missing field '") + name + "'", rec.line);
  try {
    return rec.value.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + name + "': " + e.what(), rec.line);
  }
}

bool nationality_like(const std::string& w) {
  for (std::string_view suf : {"an", "ish", "ese", "ian", "ch"}) {
    if (w.size() > suf.size() + 2 && w.compare(w.size() - suf.size(), suf.size(), suf) == 0) return true;
  }
  return false;
}

}  // namespace

std::string display_name(std::string_view title) {
  std::string t(title);
  auto open = t.rfind(" (");
  if (open != std::string::npos && !t.empty() && t.back() == ')') t.erase(open);
  return t;
}

KnowledgeSnapshot::KnowledgeSnapshot(std::vector<Article> articles) {
  for (auto& a : articles) {
    if (a.title.empty()) throw ValidationError("article with empty title");
    if (a.sentences.empty()) throw ValidationError("article '" + a.title + "' has no sentences");
    std::string title = a.title;
    if (!articles_.emplace(title, std::move(a)).second) {
      throw ValidationError("duplicate article title '" + title + "'");
    }
  }
  for (const auto& [title, a] : articles_) {
    for (const auto& link : a.links) {
      if (!articles_.count(link)) warnings_.push_back("article '" + title + "' links to missing '" + link + "'");
    }
  }
}

const Article* KnowledgeSnapshot::find(std::string_view title) const {
  auto it = articles_.find(std::string(title));
  return it == articles_.end() ? nullptr : &it->second;
}

const Article& KnowledgeSnapshot::at(std::string_view title) const {
  const Article* a = find(title);
  if (!a) throw ValidationError("unknown article '" + std::string(title) + "'");
  return *a;
}

const Article* KnowledgeSnapshot::resolve_name(std::string_view name) const {
  if (const Article* a = find(name)) return a;
  for (const auto& [title, a] : articles_) {
    if (std::find(a.aliases.begin(), a.aliases.end(), name) != a.aliases.end()) return &a;
  }
  for (const auto& [title, a] : articles_) {
    if (display_name(title) == name) return &a;
  }
  return nullptr;
}

std::string KnowledgeSnapshot::digest() const { return sha256_hex(serialize_snapshot(*this)); }

void to_json(json& j, const Article& a) {
  j = json{{"title", a.title}, {"category", a.category}, {"sentences", a.sentences}, {"links", a.links}};
  if (!a.aliases.empty()) j["aliases"] = a.aliases;
}

void from_json(const json& j, Article& a) {
  a.title = j.at("title").get<std::string>();
  a.category = j.at("category").get<std::string>();
  a.sentences = j.at("sentences").get<std::vector<std::string>>();
  a.links = j.value("links", std::vector<std::string>{});
  a.aliases = j.value("aliases", std::vector<std::string>{});
}

KnowledgeSnapshot parse_snapshot(std::string_view jsonl) {
  JsonlDocument doc = parse_jsonl(jsonl, kSnapshotFormat);
  std::vector<Article> articles;
  std::set<std::string> seen;
  for (const auto& rec : doc.records) {
    Article a;
    a.title = field<std::string>(rec, "title");
    a.category = field<std::string>(rec, "category");
    a.sentences = field<std::vector<std::string>>(rec, "sentences");
    a.links = rec.value.contains("links") ? field<std::vector<std::string>>(rec, "links") : std::vector<std::string>{};
    if (rec.value.contains("aliases")) a.aliases = field<std::vector<std::string>>(rec, "aliases");
    if (a.title.empty()) throw ParseError("empty title", rec.line);
    if (a.sentences.empty()) throw ParseError("article '" + a.title + "' has no sentences", rec.line);
    if (!seen.insert(a.title).second) throw ParseError("duplicate article title '" + a.title + "'", rec.line);
    articles.push_back(std::move(a));
  }
  return KnowledgeSnapshot(std::move(articles));
}

KnowledgeSnapshot ingest_snapshot(const std::filesystem::path& path) { return parse_snapshot(read_text(path)); }

std::string serialize_snapshot(const KnowledgeSnapshot& snapshot, const json& header_extra) {
  std::vector<json> records;
  for (const auto& [title, a] : snapshot.articles()) records.push_back(a);
  json header = make_header(kSnapshotFormat);
  for (auto& [k, v] : header_extra.items()) header[k] = v;
  return dump_jsonl(header, records);
}

std::string to_string(EntityKind k) {
  switch (k) {
    case EntityKind::person: return "person";
    case EntityKind::place: return "place";
    case EntityKind::time: return "time";
    case EntityKind::proper: return "proper";
    case EntityKind::other: return "other";
  }
  return "other";
}

std::string to_string(Role r) {
  switch (r) {
    case Role::subject: return "subject";
    case Role::object: return "object";
    case Role::subject_appositive: return "subject_appositive";
    case Role::object_appositive: return "object_appositive";
    case Role::other: return "other";
  }
  return "other";
}

EntityKind entity_kind_from_string(std::string_view s) {
  for (auto k : {EntityKind::person, EntityKind::place, EntityKind::time, EntityKind::proper, EntityKind::other}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown entity kind '" + std::string(s) + "'");
}

Role role_from_string(std::string_view s) {
  for (auto r : {Role::subject, Role::object, Role::subject_appositive, Role::object_appositive, Role::other}) {
    if (to_string(r) == s) return r;
  }
  throw ValidationError("unknown role '" + std::string(s) + "'");
}

void to_json(json& j, const EntitySpan& e) {
  j = json{{"span", e.span}, {"surface", e.surface}, {"kind", to_string(e.kind)}, {"role", to_string(e.role)}};
  if (!e.article.empty()) j["article"] = e.article;
}

void from_json(const json& j, EntitySpan& e) {
  e.span = j.at("span").get<Span>();
  e.surface = j.at("surface").get<std::string>();
  e.kind = entity_kind_from_string(j.at("kind").get<std::string>());
  e.role = role_from_string(j.at("role").get<std::string>());
  e.article = j.value("article", std::string());
}

void to_json(json& j, const SubjectPredicate& p) {
  j = json{{"subject_span", p.subject_span},
           {"subject", p.subject},
           {"copula", p.copula},
           {"predicate_text", p.predicate_text}};
}

void from_json(const json& j, SubjectPredicate& p) {
  p.subject_span = j.at("subject_span").get<Span>();
  p.subject = j.at("subject").get<std::string>();
  p.copula = j.at("copula").get<std::string>();
  p.predicate_text = j.at("predicate_text").get<std::string>();
  if (p.predicate_text.empty()) throw ValidationError("predicate_text must be non-empty");
}

void to_json(json& j, const FactStatement& s) {
  j = json{{"id", s.id},
           {"text", s.text},
           {"source_title", s.source_title},
           {"category", s.category},
           {"entities", s.entities},
           {"temporal_exprs", s.temporal_exprs},
           {"numeric_exprs", s.numeric_exprs}};
  j["predicate_frame"] = s.predicate_frame ? json(*s.predicate_frame) : json(nullptr);
}

void from_json(const json& j, FactStatement& s) {
  s.id = j.at("id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.source_title = j.at("source_title").get<std::string>();
  s.category = j.value("category", std::string());
  s.entities = j.at("entities").get<std::vector<EntitySpan>>();
  s.temporal_exprs = j.at("temporal_exprs").get<std::vector<TemporalExpr>>();
  s.numeric_exprs = j.at("numeric_exprs").get<std::vector<NumericExpr>>();
  if (j.contains("predicate_frame") && !j.at("predicate_frame").is_null()) {
    s.predicate_frame = j.at("predicate_frame").get<SubjectPredicate>();
  } else {
    s.predicate_frame.reset();
  }
}

EntityKind kind_for_category(std::string_view category) {
  if (category == "person") return EntityKind::person;
  for (std::string_view place : {"place", "city", "country", "area", "county", "province", "venue", "landmark",
                                 "mountain"}) {
    if (category == place) return EntityKind::place;
  }
  return EntityKind::proper;
}

std::vector<EntitySpan> find_entities(const SentenceAnalysis& an, const KnowledgeSnapshot& snapshot,
                                      const std::vector<TemporalExpr>& temporal) {
  const std::string& s = an.text;
  std::vector<EntitySpan> found;
  auto free = [&](const Span& sp) {
    return std::none_of(found.begin(), found.end(), [&](const EntitySpan& e) { return e.span.overlaps(sp); });
  };
  auto add = [&](Span sp, EntityKind kind, std::string article) {
    if (sp.size() == 0 || !free(sp)) return;
    found.push_back({sp, s.substr(sp.begin, sp.size()), kind, Role::other, std::move(article)});
  };

  for (const auto& t : temporal) add(t.span, EntityKind::time, {});

  // Snapshot names, longest first.
  struct NameHit {
    Span span;
    const Article* article;
  };
  std::vector<NameHit> hits;
  for (const auto& [title, a] : snapshot.articles()) {
    std::vector<std::string> names = {title, display_name(title)};
    names.insert(names.end(), a.aliases.begin(), a.aliases.end());
    std::vector<std::string> extra;
    for (const auto& n : names) {
      if (n.rfind("The ", 0) == 0 && n.size() > 4) extra.push_back(n.substr(4));
    }
    names.insert(names.end(), extra.begin(), extra.end());
    for (const auto& n : names) {
      if (n.empty() || !text::is_capitalized(n)) continue;
      std::size_t pos = text::find_word(s, n);
      while (pos != std::string::npos) {
        hits.push_back({{pos, pos + n.size()}, &a});
        pos = text::find_word(s, n, false, pos + 1);
      }
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const NameHit& x, const NameHit& y) {
    if (x.span.size() != y.span.size()) return x.span.size() > y.span.size();
    return x.span.begin < y.span.begin;
  });
  for (const auto& h : hits) add(h.span, kind_for_category(h.article->category), h.article->title);

  // Remaining capitalized sequences and quoted titles.
  const auto& toks = an.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].pos == Pos::quoted) {
      add({toks[i].token.begin, toks[i].token.end}, EntityKind::proper, {});
      continue;
    }
    if (toks[i].pos != Pos::propn) continue;
    std::size_t j = i;
    while (j + 1 < toks.size()) {
      if (toks[j + 1].pos == Pos::propn) {
        ++j;
      } else if (toks[j + 1].lower == "of" && j + 2 < toks.size() && toks[j + 2].pos == Pos::propn) {
        j += 2;
      } else {
        break;
      }
    }
    bool single_modifier = j == i && j + 1 < toks.size() && toks[j + 1].pos != Pos::propn &&
                           toks[j + 1].pos != Pos::punct && !text::is_capitalized(toks[j + 1].token.text) &&
                           nationality_like(toks[i].lower);
    if (!single_modifier) add({toks[i].token.begin, toks[j].token.end}, EntityKind::proper, {});
    i = j;
  }

  // Subject and object phrases with no named entity inside become "other".
  auto add_phrase = [&](const std::optional<Span>& sp) {
    if (!sp) return;
    bool has_entity =
        std::any_of(found.begin(), found.end(), [&](const EntitySpan& e) { return sp->overlaps(e.span); });
    if (!has_entity) add(*sp, EntityKind::other, {});
  };
  add_phrase(an.subject);
  add_phrase(an.object);

  for (auto& e : found) {
    if (an.subject && an.subject->contains(e.span)) {
      e.role = Role::subject;
    } else if (an.subject_appositive && an.subject_appositive->contains(e.span)) {
      e.role = Role::subject_appositive;
    } else if (an.object && an.object->contains(e.span)) {
      e.role = Role::object;
    } else if (an.object_appositive && an.object_appositive->contains(e.span)) {
      e.role = Role::object_appositive;
    }
  }
  std::sort(found.begin(), found.end(), [](const EntitySpan& a, const EntitySpan& b) { return a.span < b.span; });
  return found;
}

FactStatement annotate_statement(std::string_view stmt_text, std::string_view source_title,
                                 const KnowledgeSnapshot& snapshot, std::string id, std::string category,
                                 const AnchorTable& anchors) {
  const Article* source = snapshot.find(source_title);
  if (!source) throw ValidationError("source title '" + std::string(source_title) + "' not in snapshot");
  SentenceAnalysis an = analyze_sentence(stmt_text);

  FactStatement st;
  st.id = std::move(id);
  st.text = std::string(stmt_text);
  st.source_title = std::string(source_title);
  st.category = category.empty() ? source->category : std::move(category);
  st.temporal_exprs = find_temporal_exprs(stmt_text, anchors);
  st.numeric_exprs = find_numeric_exprs(stmt_text);
  st.entities = find_entities(an, snapshot, st.temporal_exprs);

  if (an.subject && an.copular() && an.verb_first == an.verb_last) {
    const auto& cop = an.tokens[an.verb_first];
    std::size_t end = an.tokens.back().token.begin;
    std::string pred = text::trim(st.text.substr(cop.token.end, end - cop.token.end));
    if (!pred.empty()) {
      st.predicate_frame =
          SubjectPredicate{*an.subject, st.text.substr(an.subject->begin, an.subject->size()), cop.lower, pred};
    }
  }
  return st;
}

std::vector<StatementRecord> parse_statements(std::string_view jsonl) {
  JsonlDocument doc = parse_jsonl(jsonl, kStatementsFormat);
  std::vector<StatementRecord> out;
  std::set<std::string> ids;
  for (const auto& rec : doc.records) {
    StatementRecord r;
    r.id = field<std::string>(rec, "id");
    r.text = field<std::string>(rec, "text");
    r.source_title = field<std::string>(rec, "source_title");
    r.category = rec.value.contains("category") ? field<std::string>(rec, "category") : std::string();
    if (r.id.empty()) throw ParseError("empty id", rec.line);
    if (!ids.insert(r.id).second) throw ParseError("duplicate statement id '" + r.id + "'", rec.line);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StatementRecord> load_statements(const std::filesystem::path& path) {
  return parse_statements(read_text(path));
}

void to_json(json& j, const SkipRecord& s) { j = json{{"id", s.id}, {"stage", s.stage}, {"reason", s.reason}}; }

void from_json(const json& j, SkipRecord& s) {
  s.id = j.at("id").get<std::string>();
  s.stage = j.at("stage").get<std::string>();
  s.reason = j.at("reason").get<std::string>();
}

AnnotatedCorpus annotate_corpus(const std::vector<StatementRecord>& records, const KnowledgeSnapshot& snapshot,
                                const AnchorTable& anchors) {
  AnnotatedCorpus out;
  for (const auto& r : records) {
    try {
      out.statements.push_back(annotate_statement(r.text, r.source_title, snapshot, r.id, r.category, anchors));
    } catch (const ValidationError& e) {
      out.skipped.push_back({r.id, "annotate", e.what()});
    }
  }
  return out;
}

std::vector<FactStatement> sample_by_category(const std::vector<FactStatement>& statements,
                                              std::size_t per_category, std::uint64_t seed) {
  std::map<std::string, std::vector<FactStatement>> groups;
  for (const auto& s : statements) groups[s.category].push_back(s);
  std::vector<FactStatement> out;
  for (auto& [cat, group] : groups) {
    std::sort(group.begin(), group.end(), [](const FactStatement& a, const FactStatement& b) { return a.id < b.id; });
    auto shuffled = seeded_shuffle(std::move(group), seed, "sample:" + cat);
    if (shuffled.size() > per_category) shuffled.resize(per_category);
    out.insert(out.end(), shuffled.begin(), shuffled.end());
  }
  std::sort(out.begin(), out.end(), [](const FactStatement& a, const FactStatement& b) { return a.id < b.id; });
  return out;
}

std::string serialize_corpus(const AnnotatedCorpus& corpus, const json& header_extra) {
  json header = make_header(kAnnotatedFormat);
  for (auto it = header_extra.begin(); it != header_extra.end(); ++it) header[it.key()] = it.value();
  std::vector<json> records;
  for (const auto& s : corpus.statements) {
    json j = s;
    j["type"] = "statement";
    records.push_back(std::move(j));
  }
  for (const auto& s : corpus.skipped) {
    json j = s;
    j["type"] = "skip";
    records.push_back(std::move(j));
  }
  return dump_jsonl(header, records);
}

AnnotatedCorpus parse_corpus(std::string_view jsonl) {
  JsonlDocument doc = parse_jsonl(jsonl, kAnnotatedFormat);
  AnnotatedCorpus out;
  for (const auto& rec : doc.records) {
    try {
      std::string type = rec.value.at("type").get<std::string>();
      if (type == "statement") {
        out.statements.push_back(rec.value.get<FactStatement>());
      } else if (type == "skip") {
        out.skipped.push_back(rec.value.get<SkipRecord>());
      } else {
        throw ParseError("unknown record type '" + type + "'", rec.line);
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), rec.line);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), rec.line);
    }
  }
  return out;
}

}  // namespace advfact::corpus
