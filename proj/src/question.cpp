#include "advfact/question.hpp"

#include <regex>

#include "advfact/analysis.hpp"
#include "advfact/text.hpp"

namespace advfact::attack {

std::optional<std::string> merge_coordinated_clause(std::string_view predicate, std::string* merged_aux) {
  static const std::regex re(
      "^([^,]*), and (?:((?:in|on|at|before|after|during|by|since|from|until|throughout) [^,]*?),? )?"
      "(?:it|they|he|she) (is|was|are|were|has|had|have) ([^,]+)(.*)$");
  std::string s(predicate);
  std::smatch m;
  if (!std::regex_match(s, m, re)) return std::nullopt;
  std::string out = m[1].str() + " that " + m[3].str() + " " + m[4].str();
  if (m[2].matched) out += " " + m[2].str();
  out += m[5].str();
  if (merged_aux) *merged_aux = m[3].str();
  return out;
}

namespace {

constexpr std::string_view kFallbackPrefix = "Is it true that ";

// "The wrought-iron tower" -> "the wrought-iron tower"; "The O2 Arena" stays.
std::string soften_initial(std::string_view s, const std::vector<TaggedToken>& toks) {
  if (toks.size() >= 2 && toks[0].pos == Pos::det && toks[1].pos != Pos::propn && toks[1].pos != Pos::quoted) {
    return text::lowercase_first(s);
  }
  return std::string(s);
}

std::string fallback(std::string_view declarative) {
  std::string body = text::trim(declarative);
  if (!body.empty() && (body.back() == '.' || body.back() == '?')) body.pop_back();
  return std::string(kFallbackPrefix) + soften_initial(body, tag_tokens(body)) + "?";
}

}  // namespace

bool is_fallback_question(std::string_view question) { return question.rfind(kFallbackPrefix, 0) == 0; }

std::string question_text(std::string_view declarative) {
  SentenceAnalysis an;
  try {
    an = analyze_sentence(declarative);
  } catch (const ValidationError&) {
    return fallback(declarative);
  }
  if (!an.subject || an.subject->begin != an.tokens.front().token.begin) return fallback(declarative);

  const std::string& s = an.text;
  const TaggedToken& verb = an.main_verb();
  std::string subject = text::trim(s.substr(0, verb.token.begin));
  std::size_t end = an.tokens.back().token.begin;  // the final period
  std::string rest = verb.token.end < end ? text::trim(s.substr(verb.token.end, end - verb.token.end)) : "";
  std::string front;
  if (verb.pos == Pos::aux) {
    front = verb.lower;
    if (an.copular()) {
      std::string aux;
      if (auto merged = merge_coordinated_clause(rest, &aux)) {
        rest = *merged;
        if (text::is_past_auxiliary(aux)) front = text::past_auxiliary(front);
      }
    }
  } else {
    const std::string& w = verb.lower;
    bool past = text::is_irregular_past(w) || (w.size() > 3 && w.compare(w.size() - 2, 2, "ed") == 0);
    bool third = !past && w.size() > 2 && w.back() == 's' && w[w.size() - 2] != 's';
    front = past ? "did" : (third ? "does" : "do");
    rest = text::verb_base(w) + (rest.empty() ? "" : " " + rest);
  }
  std::string q = text::capitalize_first(front) + " " + soften_initial(subject, an.tokens);
  if (!rest.empty()) q += " " + rest;
  return q + "?";
}

AttackInstance to_question(const AttackInstance& instance) {
  if (instance.form != Form::declarative) throw ValidationError(instance.id + " is already a question");
  AttackInstance q = instance;
  q.form = Form::question;
  q.text = question_text(instance.text);
  std::string id = instance.id;
  if (id.size() >= 2 && id.compare(id.size() - 2, 2, ".d") == 0) {
    id.replace(id.size() - 2, 2, ".q");
  } else {
    id += ".q";
  }
  q.id = id;
  return q;
}

// ---------------------------------------------------------------------------
// Cloze probes
// ---------------------------------------------------------------------------

std::string to_string(BlankKind k) { return k == BlankKind::year ? "year" : "quantity"; }

void to_json(json& j, const ClozeInstance& c) {
  j = json{{"id", c.id},
           {"parent_id", c.parent_id},
           {"text", c.text},
           {"blank_kind", to_string(c.blank_kind)},
           {"gold_answer", c.gold_answer}};
}

void from_json(const json& j, ClozeInstance& c) {
  j.at("id").get_to(c.id);
  j.at("parent_id").get_to(c.parent_id);
  j.at("text").get_to(c.text);
  std::string kind = j.at("blank_kind").get<std::string>();
  if (kind != "year" && kind != "quantity") throw ValidationError("unknown blank kind '" + kind + "'");
  c.blank_kind = kind == "year" ? BlankKind::year : BlankKind::quantity;
  j.at("gold_answer").get_to(c.gold_answer);
}

ClozeInstance cloze_generate(const corpus::FactStatement& stmt) {
  ClozeInstance c;
  c.id = stmt.id + ".cloze";
  c.parent_id = stmt.id;
  std::optional<Span> site;
  for (const auto& t : stmt.temporal_exprs) {
    if (t.kind == TemporalKind::direct) {
      site = t.span;
      c.blank_kind = BlankKind::year;
      break;
    }
  }
  if (!site && !stmt.numeric_exprs.empty()) {
    site = stmt.numeric_exprs.front().number_span;
    c.blank_kind = BlankKind::quantity;
  }
  if (!site) throw NotApplicable("nothing to blank");
  c.gold_answer = stmt.text.substr(site->begin, site->size());
  std::string_view marker = c.blank_kind == BlankKind::year ? kYearBlank : kQuantityBlank;
  c.text = stmt.text.substr(0, site->begin) + std::string(marker) + stmt.text.substr(site->end);
  return c;
}

std::string cloze_fill(const ClozeInstance& cloze, std::string_view answer) {
  std::string_view marker = cloze.blank_kind == BlankKind::year ? kYearBlank : kQuantityBlank;
  std::size_t pos = cloze.text.find(marker);
  if (pos == std::string::npos) throw ValidationError(cloze.id + " has no blank");
  return cloze.text.substr(0, pos) + std::string(answer) + cloze.text.substr(pos + marker.size());
}

}  // namespace advfact::attack
