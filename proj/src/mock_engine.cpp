#include "advfact/mock_engine.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "advfact/analysis.hpp"
#include "advfact/expressions.hpp"
#include "advfact/question.hpp"
#include "advfact/text.hpp"

namespace advfact::engines {

std::string to_string(MockBehavior b) { return b == MockBehavior::grounded ? "grounded" : "gullible"; }

MockBehavior mock_behavior_from_string(std::string_view s) {
  if (s == "grounded") return MockBehavior::grounded;
  if (s == "gullible") return MockBehavior::gullible;
  throw ConfigError("unknown mock behavior '" + std::string(s) + "'");
}

void to_json(json& j, const MockEngineConfig& c) {
  j = json{{"snapshot_ref", c.snapshot_ref}, {"top_k", c.top_k}, {"behavior", to_string(c.behavior)}, {"seed", c.seed}};
}

void from_json(const json& j, MockEngineConfig& c) {
  c.snapshot_ref = j.value("snapshot_ref", std::string());
  c.top_k = j.value("top_k", 3);
  c.behavior = mock_behavior_from_string(j.value("behavior", std::string("grounded")));
  c.seed = j.value("seed", std::uint64_t{0});
  if (c.top_k < 1) throw ConfigError("mock top_k must be at least 1");
}

std::string sentence_url(const std::string& title, std::size_t index) {
  std::string t = title;
  std::replace(t.begin(), t.end(), ' ', '_');
  return "snapshot://" + t + "#" + std::to_string(index);
}

std::optional<std::pair<std::string, std::size_t>> parse_sentence_url(std::string_view url) {
  constexpr std::string_view prefix = "snapshot://";
  if (url.rfind(prefix, 0) != 0) return std::nullopt;
  std::string_view rest = url.substr(prefix.size());
  std::size_t hash = rest.rfind('#');
  if (hash == std::string_view::npos || hash + 1 >= rest.size()) return std::nullopt;
  std::string title(rest.substr(0, hash));
  std::replace(title.begin(), title.end(), '_', ' ');
  std::size_t idx = 0;
  for (char c : rest.substr(hash + 1)) {
    if (c < '0' || c > '9') return std::nullopt;
    idx = idx * 10 + static_cast<std::size_t>(c - '0');
  }
  return std::make_pair(title, idx);
}

namespace {

struct Word {
  std::string lower;
  std::string stem;
};

bool is_negation(const std::string& w) { return w == "not" || w == "never" || w == "n't" || w == "no"; }

std::vector<Word> words_of(std::string_view s, bool* negated = nullptr) {
  std::vector<Word> out;
  for (const auto& tok : text::tokenize(s)) {
    if (tok.shape == text::TokenShape::punct) continue;
    if (tok.shape == text::TokenShape::quoted) {
      auto inner = words_of(std::string_view(tok.text).substr(1, tok.text.size() >= 2 ? tok.text.size() - 2 : 0),
                            negated);
      out.insert(out.end(), inner.begin(), inner.end());
      continue;
    }
    std::string lower = text::to_lower(tok.text);
    if (!lower.empty() && lower.back() == '.') lower.pop_back();
    if (is_negation(lower)) {
      if (negated) *negated = true;
      continue;
    }
    if (text::is_function_word(lower)) continue;
    std::string st = text::stem(lower);
    if (st.empty() || text::is_function_word(st)) continue;
    out.push_back({lower, st});
  }
  return out;
}

std::vector<std::string> unique_stems(const std::vector<Word>& ws) {
  std::vector<std::string> out;
  for (const auto& w : ws) out.push_back(w.stem);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool word_matches(const Word& claim, const std::vector<Word>& source, const Lexicon& lex) {
  for (const auto& w : source) {
    if (w.stem == claim.stem || lex.synonymous(w.lower, claim.lower)) return true;
  }
  return false;
}

// Multi-word synonyms ("most crowded") are folded back onto their headword.
std::string fold_phrases(std::string s, const Lexicon& lex) {
  for (const auto& e : lex.entries()) {
    for (const auto& syn : e.synonyms) {
      if (syn.find(' ') == std::string::npos) continue;
      std::size_t pos;
      while ((pos = text::find_word(s, syn, true)) != std::string::npos) s.replace(pos, syn.size(), e.word);
    }
  }
  return s;
}

}  // namespace

SnapshotIndex::SnapshotIndex(const corpus::KnowledgeSnapshot& snapshot, const Lexicon& lexicon)
    : snapshot_(&snapshot), lexicon_(&lexicon) {
  for (const auto& [title, art] : snapshot.articles()) {
    for (std::size_t i = 0; i < art.sentences.size(); ++i) {
      refs_.push_back({title, i, &art.sentences[i]});
      stems_.push_back(unique_stems(words_of(art.sentences[i])));
    }
  }
}

std::vector<std::size_t> SnapshotIndex::retrieve(std::string_view text, std::size_t k) const {
  auto q = unique_stems(words_of(text));
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (overlap, idx)
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    std::size_t n = 0;
    for (const auto& s : q) n += std::binary_search(stems_[i].begin(), stems_[i].end(), s) ? 1 : 0;
    if (n > 0) scored.emplace_back(n, i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scored.size() && out.size() < k; ++i) out.push_back(scored[i].second);
  return out;
}

bool SnapshotIndex::contains_claim(std::string_view source, std::string_view claim) const {
  auto cw = words_of(fold_phrases(std::string(claim), *lexicon_));
  if (cw.empty()) return false;
  auto sw = words_of(source);
  return std::all_of(cw.begin(), cw.end(), [&](const Word& w) { return word_matches(w, sw, *lexicon_); });
}

bool SnapshotIndex::supported(std::string_view claim) const {
  for (const auto& r : refs_) {
    if (contains_claim(*r.text, claim)) return true;
  }
  return false;
}

std::size_t SnapshotIndex::overlap(std::string_view a, std::string_view b) const {
  auto sa = unique_stems(words_of(a));
  auto sb = unique_stems(words_of(b));
  std::vector<std::string> both;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both));
  return both.size();
}

namespace {

enum class PromptKind { claim, wh_question, cloze };

const std::set<std::string>& wh_words() {
  static const std::set<std::string> k = {"what", "who", "whom", "whose", "which", "where", "when", "how"};
  return k;
}

PromptKind classify(std::string_view p) {
  if (p.find(attack::kYearBlank) != std::string_view::npos ||
      p.find(attack::kQuantityBlank) != std::string_view::npos) {
    return PromptKind::cloze;
  }
  auto toks = text::tokenize(p);
  if (!toks.empty() && !p.empty() && p.back() == '?' && wh_words().count(text::to_lower(toks[0].text))) {
    return PromptKind::wh_question;
  }
  return PromptKind::claim;
}

std::string claim_body(std::string_view prompt) {
  std::string s = text::trim(prompt);
  constexpr std::string_view fallback = "Is it true that ";
  if (s.rfind(fallback, 0) == 0) s = s.substr(fallback.size());
  if (!s.empty() && (s.back() == '?' || s.back() == '.')) s.pop_back();
  return s;
}

struct Clause {
  std::string text;
  /// Name the clause is about; a supporting sentence must mention it whole.
  std::string anchor;
};

void append_clause(std::vector<Clause>& out, std::string c, std::string anchor = "") {
  c = text::trim(c);
  while (!c.empty() && (c.back() == ',' || c.back() == ';')) c.pop_back();
  if (!c.empty()) out.push_back({c, std::move(anchor)});
}

// The noun phrase a relative clause attaches to: the trailing run of
// capitalized tokens, optionally ending in one lowercase head noun.
std::string antecedent(const std::string& before) {
  auto toks = text::tokenize(before);
  std::size_t i = toks.size();
  if (i > 0 && toks[i - 1].shape != text::TokenShape::punct && !text::is_capitalized(toks[i - 1].text) &&
      toks[i - 1].shape != text::TokenShape::quoted) {
    --i;
  }
  while (i > 0 && (toks[i - 1].shape == text::TokenShape::quoted || text::is_capitalized(toks[i - 1].text))) --i;
  // A question's leading auxiliary is capitalized but not part of the name.
  if (i == 0 && i < toks.size() && text::is_auxiliary(text::to_lower(toks[0].text))) ++i;
  if (i == toks.size()) return "";
  std::string head = before.substr(toks[i].begin);
  std::erase(head, '"');
  return head;
}

// Relative clauses set off by commas come out first; the remainder is split
// at coordination and "that"/"who" boundaries.
std::vector<Clause> split_clauses(std::string body) {
  std::vector<Clause> out;
  // Left to right over the original text, so a relative clause that follows
  // another one attaches to the tail of that clause.
  std::string rest;
  std::size_t copied = 0, from = 0;
  for (;;) {
    std::size_t best = std::string::npos, len = 0;
    for (std::string_view rel : {", which ", ", who "}) {
      std::size_t p = body.find(rel, from);
      if (p < best) {
        best = p;
        len = rel.size();
      }
    }
    if (best == std::string::npos) break;
    std::size_t q = body.find(',', best + len);
    std::size_t rel_end = q == std::string::npos ? body.size() : q;
    std::string head = antecedent(body.substr(0, best));
    append_clause(out, head + " " + body.substr(best + len, rel_end - best - len), head);
    if (best > copied) rest += body.substr(copied, best - copied);
    copied = std::max(copied, rel_end);
    from = rel_end;
  }
  if (copied < body.size()) rest += body.substr(copied);
  body = rest;
  std::vector<std::string> parts{body};
  for (std::string_view sep : {", and ", "; ", " that ", " who "}) {
    std::vector<std::string> next;
    for (const auto& p : parts) {
      std::size_t start = 0, pos;
      while ((pos = p.find(sep, start)) != std::string::npos) {
        next.push_back(p.substr(start, pos - start));
        start = pos + sep.size();
      }
      next.push_back(p.substr(start));
    }
    parts = std::move(next);
  }
  for (auto& p : parts) append_clause(out, p);
  return out;
}

struct ExprSet {
  std::vector<std::pair<std::string, ValueInterval>> temporal;
  std::vector<std::pair<std::string, ValueInterval>> numeric;
};

ExprSet exprs_of(std::string_view s, std::string* masked) {
  ExprSet e;
  std::vector<Span> spans;
  for (const auto& t : find_temporal_exprs(s)) {
    e.temporal.emplace_back(t.surface, t.interval());
    spans.push_back(t.span);
  }
  for (const auto& n : find_numeric_exprs(s)) {
    e.numeric.emplace_back(n.surface, n.interval());
    spans.push_back(n.span);
  }
  if (masked) {
    *masked = std::string(s);
    for (const auto& sp : spans) {
      for (std::size_t i = sp.begin; i < sp.end && i < masked->size(); ++i) (*masked)[i] = ' ';
    }
  }
  return e;
}

// "Warner Bros." inside "Warner Bros. Discovery" is a different name.
bool mentions_whole(const std::string& sentence, const std::string& name) {
  if (name.empty()) return true;
  std::size_t pos = 0;
  while ((pos = text::find_word(sentence, name, false, pos)) != std::string::npos) {
    auto rest = text::tokenize(std::string_view(sentence).substr(pos + name.size()));
    if (rest.empty() || !text::is_capitalized(rest.front().text)) return true;
    pos += name.size();
  }
  return false;
}

struct ClauseCheck {
  enum Status { supported, contradicted, unsupported } status = unsupported;
  int sentence = -1;
  std::string wrong;
  std::string truth;
};

class Grounder {
 public:
  Grounder(const SnapshotIndex& index, const Lexicon& lex) : index_(index), lex_(lex) {
    for (const auto& r : index.sentences()) words_.push_back(words_of(*r.text, nullptr));
    negated_.resize(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
      bool neg = false;
      words_of(*index.sentences()[i].text, &neg);
      negated_[i] = neg;
    }
  }

  ClauseCheck check(const Clause& c) const {
    const std::string& clause = c.text;
    std::string masked;
    ExprSet claim = exprs_of(clause, &masked);
    bool neg = false;
    auto cw = words_of(fold_phrases(masked, lex_), &neg);
    ClauseCheck result;
    if (cw.empty()) {
      result.status = ClauseCheck::supported;
      return result;
    }
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::size_t matched = 0;
      for (const auto& w : cw) matched += word_matches(w, words_[i], lex_) ? 1 : 0;
      if (matched == cw.size() && !mentions_whole(*index_.sentences()[i].text, c.anchor)) --matched;
      if (matched < cw.size()) {
        if (result.status == ClauseCheck::unsupported && matched * 2 >= cw.size() && matched > best_overlap) {
          best_overlap = matched;
          result.sentence = static_cast<int>(i);
        }
        continue;
      }
      ClauseCheck v = verify(claim, neg, i);
      if (v.status == ClauseCheck::supported) return v;
      if (result.status != ClauseCheck::contradicted) result = v;
    }
    return result;
  }

  // Best sentence for a wh-question: overlap first, temporal consistency second.
  int answer_sentence(const std::string& body, std::size_t k) const {
    std::string masked;
    ExprSet claim = exprs_of(body, &masked);
    auto hits = index_.retrieve(masked, std::max<std::size_t>(k, 5));
    for (std::size_t idx : hits) {
      if (verify(claim, false, idx).status == ClauseCheck::supported) return static_cast<int>(idx);
    }
    return hits.empty() ? -1 : static_cast<int>(hits.front());
  }

 private:
  ClauseCheck verify(const ExprSet& claim, bool neg, std::size_t i) const {
    ClauseCheck c;
    c.sentence = static_cast<int>(i);
    if (neg != negated_[i]) {
      c.status = ClauseCheck::contradicted;
      return c;
    }
    ExprSet src = exprs_of(*index_.sentences()[i].text, nullptr);
    auto consistent = [&](const std::vector<std::pair<std::string, ValueInterval>>& claims,
                          const std::vector<std::pair<std::string, ValueInterval>>& truths) {
      for (const auto& [surface, iv] : claims) {
        bool ok = std::any_of(truths.begin(), truths.end(), [&](const auto& t) { return iv.contains(t.second); });
        if (!ok) {
          c.wrong = surface;
          c.truth = truths.empty() ? "" : truths.front().first;
          return false;
        }
      }
      return true;
    };
    if (!consistent(claim.temporal, src.temporal) || !consistent(claim.numeric, src.numeric)) {
      c.status = ClauseCheck::contradicted;
      return c;
    }
    c.status = ClauseCheck::supported;
    return c;
  }

  const SnapshotIndex& index_;
  const Lexicon& lex_;
  std::vector<std::vector<Word>> words_;
  std::vector<bool> negated_;
};

class Composer {
 public:
  explicit Composer(const SnapshotIndex& index) : index_(index) {}

  void say(const std::string& s) { body_.push_back(s); }
  void cite_sentence(std::size_t idx) { body_.push_back(*index_.sentences()[idx].text + marker(idx)); }
  void cite_text(const std::string& s, std::size_t idx) { body_.push_back(s + marker(idx)); }
  bool cited(std::size_t idx) const { return ids_.count(idx) > 0; }
  std::size_t citation_count() const { return order_.size(); }

  std::string render() const {
    std::string out;
    for (const auto& s : body_) {
      if (!out.empty()) out.push_back(' ');
      out += s;
    }
    if (!order_.empty()) out += "\n";
    for (std::size_t n = 0; n < order_.size(); ++n) {
      const auto& r = index_.sentences()[order_[n]];
      out += "\n[" + std::to_string(n + 1) + "]: " + sentence_url(r.title, r.index) + " \"" + *r.text + "\"";
    }
    return out;
  }

 private:
  std::string marker(std::size_t idx) {
    auto it = ids_.find(idx);
    if (it == ids_.end()) {
      order_.push_back(idx);
      it = ids_.emplace(idx, order_.size()).first;
    }
    return "[" + std::to_string(it->second) + "]";
  }

  const SnapshotIndex& index_;
  std::vector<std::string> body_;
  std::map<std::size_t, std::size_t> ids_;
  std::vector<std::size_t> order_;
};

const std::string& pick(const std::vector<std::string>& options, std::uint64_t seed, std::string_view prompt) {
  return options[seeded_index(seed, prompt, options.size())];
}

std::string subject_of(const SnapshotIndex& index, std::size_t idx) {
  const auto& ref = index.sentences()[idx];
  try {
    auto an = analyze_sentence(*ref.text);
    if (an.subject) return ref.text->substr(an.subject->begin, an.subject->size());
  } catch (const ValidationError&) {
  }
  return corpus::display_name(ref.title);
}

int fill_cloze(const SnapshotIndex& index, const Grounder& g, std::string_view prompt, std::size_t k) {
  std::string p(prompt);
  std::string_view marker = p.find(attack::kYearBlank) != std::string::npos ? attack::kYearBlank : attack::kQuantityBlank;
  std::size_t pos = p.find(marker);
  std::string prefix = p.substr(0, pos), suffix = p.substr(pos + marker.size());
  for (std::size_t i = 0; i < index.sentences().size(); ++i) {
    const std::string& s = *index.sentences()[i].text;
    if (s.size() > prefix.size() + suffix.size() && s.rfind(prefix, 0) == 0 &&
        s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return static_cast<int>(i);
    }
  }
  return g.answer_sentence(prefix + " " + suffix, k);
}

}  // namespace

std::vector<std::string> split_atomic_clauses(std::string_view sentence) {
  std::string body = text::trim(sentence);
  while (!body.empty() && (body.back() == '.' || body.back() == '!' || body.back() == '?')) body.pop_back();
  std::vector<std::string> out;
  for (auto& c : split_clauses(body)) out.push_back(std::move(c.text));
  return out;
}

std::string mock_raw_answer(const MockEngineConfig& config, const SnapshotIndex& index, std::string_view prompt) {
  const Lexicon& lex = Lexicon::builtin();
  Grounder g(index, lex);
  Composer out(index);
  std::string p = text::trim(prompt);
  std::size_t k = static_cast<std::size_t>(std::max(1, config.top_k));
  auto retrieved = index.retrieve(p, k);
  auto fill_retrieved = [&] {
    for (std::size_t idx : retrieved) {
      if (out.citation_count() >= k) break;
      if (!out.cited(idx)) out.cite_sentence(idx);
    }
  };

  switch (classify(p)) {
    case PromptKind::cloze: {
      int found = fill_cloze(index, g, p, k);
      if (found < 0) {
        out.say("I could not find this information.");
        return out.render();
      }
      out.cite_sentence(static_cast<std::size_t>(found));
      fill_retrieved();
      return out.render();
    }
    case PromptKind::wh_question: {
      std::string body = claim_body(p);
      auto toks = text::tokenize(body);
      std::size_t skip = 1;
      if (toks.size() > 1 && text::is_auxiliary(text::to_lower(toks[1].text))) skip = 2;
      body = skip < toks.size() ? body.substr(toks[skip].begin) : "";
      int best = g.answer_sentence(body, k);
      if (best < 0) {
        out.say("I could not find this information.");
        return out.render();
      }
      std::string subject = subject_of(index, static_cast<std::size_t>(best));
      out.say("It is " + subject + (subject.back() == '.' ? "" : "."));
      out.cite_sentence(static_cast<std::size_t>(best));
      fill_retrieved();
      return out.render();
    }
    case PromptKind::claim:
      break;
  }

  if (config.behavior == MockBehavior::gullible) {
    out.say(pick({"Yes, that is correct.", "That's correct!", "Yes, that's right."}, config.seed, p));
    fill_retrieved();
    return out.render();
  }

  std::vector<ClauseCheck> checks;
  for (const auto& clause : split_clauses(claim_body(p))) checks.push_back(g.check(clause));
  auto failing = std::find_if(checks.begin(), checks.end(),
                              [](const ClauseCheck& c) { return c.status != ClauseCheck::supported; });
  if (failing == checks.end()) {
    out.say(pick({"Yes, that is correct.", "Yes, this is accurate."}, config.seed, p));
    for (const auto& c : checks) {
      if (c.sentence >= 0 && !out.cited(static_cast<std::size_t>(c.sentence))) {
        out.cite_sentence(static_cast<std::size_t>(c.sentence));
      }
    }
    fill_retrieved();
    return out.render();
  }

  out.say(pick({"No, that is not correct.", "No, this is not accurate."}, config.seed, p));
  if (failing->status == ClauseCheck::contradicted && !failing->wrong.empty()) {
    std::string fix = "It is not " + failing->wrong;
    fix += failing->truth.empty() ? "." : "; the source gives " + failing->truth + ".";
    out.say(fix);
  } else if (failing->sentence < 0) {
    out.say("I could not find any information to support this claim.");
  } else {
    out.say("The sources say otherwise.");
  }
  if (failing->sentence >= 0) out.cite_sentence(static_cast<std::size_t>(failing->sentence));
  fill_retrieved();
  return out.render();
}

EngineResponse mock_answer(const MockEngineConfig& config, const SnapshotIndex& index, std::string_view prompt) {
  EngineResponse r;
  r.raw_text = mock_raw_answer(config, index, prompt);
  auto parsed = parse_citations(r.raw_text, MarkerStyle::bracket_numeric);
  r.statements = std::move(parsed.statements);
  r.citations = std::move(parsed.citations);
  return r;
}

}  // namespace advfact::engines
