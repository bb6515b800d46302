#include "advfact/analysis.hpp"

#include "advfact/resources.hpp"

namespace advfact {

namespace {

bool has_suffix(const std::string& w, std::string_view suf, std::size_t min_len = 0) {
  return w.size() >= suf.size() + min_len && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
}

bool is_relative(const std::string& w) { return w == "which" || w == "who" || w == "whom" || w == "whose" || w == "that"; }

bool is_conj(const std::string& w) { return w == "and" || w == "or" || w == "but" || w == "nor" || w == "yet"; }

Pos lexicon_pos(const std::string& pos) {
  if (pos == "adj") return Pos::adj;
  if (pos == "adv") return Pos::adv;
  if (pos == "verb") return Pos::verb;
  return Pos::noun;
}

Pos suffix_pos(const std::string& w) {
  if (text::is_irregular_past(w) || text::is_irregular_participle(w)) return Pos::verb;
  if (has_suffix(w, "ly", 2)) return Pos::adv;
  if (has_suffix(w, "ed", 2)) return Pos::verb;
  if (has_suffix(w, "ing", 3)) return Pos::verb;
  if (has_suffix(w, "est", 3)) return Pos::adj;
  for (std::string_view suf : {"ous", "ful", "ive", "ic", "able", "ible", "less", "ish", "ian", "ese"}) {
    if (has_suffix(w, suf, 2)) return Pos::adj;
  }
  if (w.find('-') != std::string::npos) return Pos::adj;
  return Pos::noun;
}

bool nominal(Pos p) {
  return p == Pos::det || p == Pos::adj || p == Pos::noun || p == Pos::propn || p == Pos::num || p == Pos::quoted;
}

bool finite_verb(const TaggedToken& t) {
  if (t.pos == Pos::aux) return true;
  if (t.pos != Pos::verb) return false;
  const std::string& w = t.lower;
  if (text::is_irregular_past(w)) return true;
  if (text::is_irregular_participle(w)) return false;
  if (has_suffix(w, "ing", 2)) return false;
  return true;
}

// A lowercase "-s" word directly after a noun phrase and before a phrase
// opener reads as a present-tense verb ("headlines six tours").
bool present_verb_here(const std::vector<TaggedToken>& toks, std::size_t i) {
  const TaggedToken& t = toks[i];
  if (t.pos != Pos::noun || !has_suffix(t.lower, "s", 2) || has_suffix(t.lower, "ss")) return false;
  if (i + 1 >= toks.size()) return false;
  Pos next = toks[i + 1].pos;
  return next == Pos::det || next == Pos::num || next == Pos::prep || next == Pos::quoted;
}

// Scans a noun phrase starting at token i; "of" chains are included when
// `allow_of`. Returns the index one past the phrase.
std::size_t scan_np(std::vector<TaggedToken>& toks, std::size_t i, bool allow_of, bool subject_position) {
  std::size_t j = i;
  while (j < toks.size()) {
    TaggedToken& t = toks[j];
    if (subject_position && j > i && present_verb_here(toks, j)) {
      t.pos = Pos::verb;
      break;
    }
    if (nominal(t.pos)) {
      if (t.pos == Pos::det && j > i && toks[j - 1].pos != Pos::prep) break;
      ++j;
      continue;
    }
    if (allow_of && t.lower == "of" && j > i && j + 1 < toks.size() && nominal(toks[j + 1].pos)) {
      ++j;
      continue;
    }
    break;
  }
  // Trailing determiners are not part of the phrase.
  while (j > i && toks[j - 1].pos == Pos::det) --j;
  return j;
}

Span span_of(const std::vector<TaggedToken>& toks, std::size_t first, std::size_t last_exclusive) {
  return {toks[first].token.begin, toks[last_exclusive - 1].token.end};
}

}  // namespace

std::string to_string(Pos p) {
  switch (p) {
    case Pos::det: return "DET";
    case Pos::pron: return "PRON";
    case Pos::prep: return "ADP";
    case Pos::conj: return "CCONJ";
    case Pos::aux: return "AUX";
    case Pos::verb: return "VERB";
    case Pos::adj: return "ADJ";
    case Pos::adv: return "ADV";
    case Pos::noun: return "NOUN";
    case Pos::propn: return "PROPN";
    case Pos::num: return "NUM";
    case Pos::punct: return "PUNCT";
    case Pos::quoted: return "QUOTE";
  }
  return "X";
}

std::size_t SentenceAnalysis::token_at(std::size_t pos) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].token.begin >= pos) return i;
  }
  return tokens.size();
}

std::vector<TaggedToken> tag_tokens(std::string_view sentence) {
  std::vector<TaggedToken> out;
  auto toks = text::tokenize(sentence);
  const Lexicon& lex = Lexicon::builtin();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    TaggedToken t{toks[i], text::to_lower(toks[i].text), Pos::noun};
    const std::string& w = t.lower;
    if (toks[i].shape == text::TokenShape::punct) {
      t.pos = Pos::punct;
    } else if (toks[i].shape == text::TokenShape::quoted) {
      t.pos = Pos::quoted;
    } else if (toks[i].shape == text::TokenShape::number || number_word_value(w)) {
      t.pos = Pos::num;
    } else if (text::is_auxiliary(w)) {
      t.pos = Pos::aux;
    } else if (is_relative(w)) {
      t.pos = Pos::pron;
    } else if (text::is_determiner(w)) {
      t.pos = Pos::det;
    } else if (text::is_pronoun(w)) {
      t.pos = Pos::pron;
    } else if (is_conj(w)) {
      t.pos = Pos::conj;
    } else if (text::is_preposition(w)) {
      t.pos = Pos::prep;
    } else if (w == "not" || w == "never" || w == "also" || w == "indeed") {
      t.pos = Pos::adv;
    } else if (text::is_capitalized(toks[i].text)) {
      t.pos = Pos::propn;
    } else if (const LexiconEntry* e = lex.find(w)) {
      t.pos = lexicon_pos(e->pos);
    } else {
      t.pos = suffix_pos(w);
    }
    out.push_back(std::move(t));
  }
  return out;
}

SentenceAnalysis analyze_sentence(std::string_view sentence) {
  SentenceAnalysis a;
  a.text = std::string(sentence);
  a.tokens = tag_tokens(sentence);
  auto& toks = a.tokens;
  if (toks.empty()) throw ValidationError("empty sentence");
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    const std::string& p = toks[i].token.text;
    if (toks[i].pos == Pos::punct && (p == "." || p == "!" || p == "?")) {
      throw ValidationError("more than one sentence: terminal '" + p + "' at offset " +
                            std::to_string(toks[i].token.begin));
    }
  }
  if (toks.back().token.text != ".") throw ValidationError("sentence must end with a period");

  // Fronted adjunct ("In 2008, ...") is skipped up to its comma.
  std::size_t i = 0;
  if (toks[0].pos == Pos::prep || toks[0].pos == Pos::adv || toks[0].pos == Pos::conj) {
    while (i < toks.size() && toks[i].token.text != ",") ++i;
    if (i < toks.size()) ++i;
    if (i >= toks.size()) i = 0;
  }

  std::size_t np_end = scan_np(toks, i, true, true);
  std::size_t after_subject = np_end;
  if (np_end > i) {
    a.subject = span_of(toks, i, np_end);
    if (np_end < toks.size() && toks[np_end].token.text == ",") {
      // Appositive: runs to the next comma that is followed by the verb.
      for (std::size_t j = np_end + 1; j + 1 < toks.size(); ++j) {
        if (toks[j].token.text == "," && (toks[j + 1].pos == Pos::aux || finite_verb(toks[j + 1]) ||
                                          present_verb_here(toks, j + 1))) {
          if (j > np_end + 1) {
            a.subject_appositive = span_of(toks, np_end + 1, j);
            after_subject = j + 1;
          }
          break;
        }
      }
    }
  }

  std::optional<std::size_t> verb;
  for (std::size_t j = after_subject; j < toks.size(); ++j) {
    if (finite_verb(toks[j])) {
      verb = j;
      break;
    }
    if (j == after_subject && present_verb_here(toks, j)) {
      toks[j].pos = Pos::verb;
      verb = j;
      break;
    }
  }
  if (!verb) {
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (finite_verb(toks[j])) {
        verb = j;
        break;
      }
    }
  }
  if (!verb) throw ValidationError("no finite verb found");
  a.verb_first = *verb;
  a.verb_last = *verb;
  for (std::size_t j = *verb + 1; j < toks.size(); ++j) {
    const TaggedToken& t = toks[j];
    bool adverb = t.pos == Pos::adv;
    if (t.pos == Pos::aux || t.pos == Pos::verb || adverb) {
      // Adverbs only join when a verb follows them inside the group.
      if (adverb) {
        std::size_t k = j;
        while (k < toks.size() && toks[k].pos == Pos::adv) ++k;
        if (k >= toks.size() || (toks[k].pos != Pos::verb && toks[k].pos != Pos::aux)) break;
        j = k;
      }
      a.verb_last = j;
      continue;
    }
    break;
  }

  std::size_t o = a.verb_last + 1;
  if (o < toks.size() && toks[o].pos == Pos::prep && o + 1 < toks.size() && nominal(toks[o + 1].pos)) ++o;
  std::size_t obj_end = o < toks.size() ? scan_np(toks, o, true, false) : o;
  if (obj_end > o) {
    a.object = span_of(toks, o, obj_end);
    if (obj_end + 1 < toks.size() && toks[obj_end].token.text == "," && toks[obj_end + 1].pos == Pos::det) {
      std::size_t app_end = scan_np(toks, obj_end + 1, true, false);
      // A trailing prepositional phrase stays inside the appositive.
      if (app_end < toks.size() && toks[app_end].pos == Pos::prep) {
        std::size_t pp_end = scan_np(toks, app_end + 1, true, false);
        if (pp_end > app_end + 1) app_end = pp_end;
      }
      if (app_end > obj_end + 1 && app_end < toks.size() &&
          (toks[app_end].token.text == "," || toks[app_end].token.text == ".")) {
        a.object_appositive = span_of(toks, obj_end + 1, app_end);
      }
    }
  }

  a.main_clause_end = a.text.size();
  for (std::size_t j = a.verb_last + 1; j < toks.size(); ++j) {
    const TaggedToken& t = toks[j];
    if (t.token.text == "," && j + 1 < toks.size() &&
        ((toks[j + 1].pos == Pos::conj) || (toks[j + 1].pos == Pos::pron && is_relative(toks[j + 1].lower)))) {
      a.main_clause_end = t.token.begin;
      break;
    }
    if (t.pos == Pos::pron && is_relative(t.lower)) {
      a.main_clause_end = t.token.begin;
      break;
    }
  }
  return a;
}

}  // namespace advfact
