#include "advfact/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace advfact::text {

namespace {

bool is_ascii_alnum(unsigned char c) { return std::isalnum(c) != 0; }

// Curly quotes and dashes are punctuation even though they are non-ASCII.
std::size_t special_utf8_length(std::string_view s, std::size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80) {
    unsigned char c = static_cast<unsigned char>(s[i + 2]);
    if (c == 0x9C || c == 0x9D || c == 0x98 || c == 0x99 || c == 0x94 || c == 0x93) return 3;
  }
  return 0;
}

bool is_word_byte(std::string_view s, std::size_t i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (is_ascii_alnum(c)) return true;
  if (c >= 0x80 && special_utf8_length(s, i) == 0) return true;
  return false;
}

bool is_open_quote(std::string_view s, std::size_t i, std::size_t& len) {
  if (s[i] == '"') {
    len = 1;
    return true;
  }
  if (special_utf8_length(s, i) == 3 && static_cast<unsigned char>(s[i + 2]) == 0x9C) {
    len = 3;
    return true;
  }
  return false;
}

bool is_apostrophe(std::string_view s, std::size_t i, std::size_t& len) {
  if (s[i] == '\'') {
    len = 1;
    return true;
  }
  if (special_utf8_length(s, i) == 3 && static_cast<unsigned char>(s[i + 2]) == 0x99) {
    len = 3;
    return true;
  }
  return false;
}

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> kSet = {
      "mr", "mrs", "ms", "dr", "st", "bros", "inc", "ltd", "co", "corp", "jr", "sr", "vs", "etc",
      "mt", "no", "prof", "gen", "col", "u.s", "e.g", "i.e", "approx"};
  return kSet;
}

const std::unordered_set<std::string>& determiners() {
  static const std::unordered_set<std::string> kSet = {
      "the", "a", "an", "this", "these", "those", "its", "his", "her", "their", "our", "my",
      "your", "some", "any", "each", "every", "no", "another", "such", "both", "either", "neither"};
  return kSet;
}

const std::unordered_set<std::string>& pronouns() {
  static const std::unordered_set<std::string> kSet = {
      "it", "he", "she", "they", "we", "i", "you", "him", "them", "us", "me", "who", "whom",
      "which", "what", "whose", "that", "there", "itself", "himself", "herself", "themselves"};
  return kSet;
}

const std::unordered_set<std::string>& prepositions() {
  static const std::unordered_set<std::string> kSet = {
      "in",      "on",     "at",      "of",      "for",    "by",      "with",   "from",
      "to",      "into",   "onto",    "after",   "before", "during",  "since",  "as",
      "about",   "over",   "under",   "near",    "between", "among",  "through", "across",
      "against", "without", "within", "behind",  "above",  "below",   "like",   "until",
      "upon",    "via",    "per",     "around",  "toward", "towards", "than",   "despite"};
  return kSet;
}

const std::unordered_set<std::string>& auxiliaries() {
  static const std::unordered_set<std::string> kSet = {
      "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had",
      "do", "does", "did", "will", "would", "can", "could", "shall", "should", "may",
      "might", "must"};
  return kSet;
}

const std::unordered_set<std::string>& other_function_words() {
  static const std::unordered_set<std::string> kSet = {
      "and", "or", "but", "nor", "so", "yet", "because", "although", "while", "when",
      "where", "if", "whereas", "though", "not", "never", "also", "very", "yes", "then",
      "indeed", "actually", "however", "just", "too", "here", "how", "why", "whether",
      "s", "n't", "up", "out", "only", "even", "still", "much", "more", "most", "well"};
  return kSet;
}

struct IrregularVerb {
  const char* base;
  const char* past;
  const char* participle;
};

constexpr std::array<IrregularVerb, 58> kIrregular = {{
    {"be", "was", "been"},         {"be", "were", "been"},        {"have", "had", "had"},
    {"do", "did", "done"},         {"write", "wrote", "written"}, {"build", "built", "built"},
    {"rebuild", "rebuilt", "rebuilt"}, {"hold", "held", "held"},  {"make", "made", "made"},
    {"win", "won", "won"},         {"sell", "sold", "sold"},      {"know", "knew", "known"},
    {"become", "became", "become"}, {"begin", "began", "begun"},  {"bear", "bore", "born"},
    {"give", "gave", "given"},     {"take", "took", "taken"},     {"lead", "led", "led"},
    {"find", "found", "found"},    {"come", "came", "come"},      {"go", "went", "gone"},
    {"see", "saw", "seen"},        {"run", "ran", "run"},         {"grow", "grew", "grown"},
    {"draw", "drew", "drawn"},     {"fall", "fell", "fallen"},    {"speak", "spoke", "spoken"},
    {"think", "thought", "thought"}, {"bring", "brought", "brought"}, {"buy", "bought", "bought"},
    {"teach", "taught", "taught"}, {"leave", "left", "left"},     {"keep", "kept", "kept"},
    {"lose", "lost", "lost"},      {"meet", "met", "met"},        {"pay", "paid", "paid"},
    {"say", "said", "said"},       {"tell", "told", "told"},      {"stand", "stood", "stood"},
    {"sing", "sang", "sung"},      {"drive", "drove", "driven"},  {"fly", "flew", "flown"},
    {"choose", "chose", "chosen"}, {"rise", "rose", "risen"},     {"throw", "threw", "thrown"},
    {"wear", "wore", "worn"},      {"shoot", "shot", "shot"},     {"feel", "felt", "felt"},
    {"send", "sent", "sent"},      {"spend", "spent", "spent"},   {"get", "got", "gotten"},
    {"ride", "rode", "ridden"},    {"break", "broke", "broken"},  {"steal", "stole", "stolen"},
    {"forget", "forgot", "forgotten"}, {"hide", "hid", "hidden"}, {"shine", "shone", "shone"},
    {"hang", "hung", "hung"},
}};

// Regular verbs whose base form ends in a silent 'e'.
const std::unordered_set<std::string>& e_final_verbs() {
  static const std::unordered_set<std::string> kSet = {
      "create",  "complete", "locate",   "name",     "headline", "base",     "produce",
      "move",    "serve",    "rename",   "release",  "use",      "close",    "die",
      "live",    "love",     "arrive",   "compose",  "introduce", "receive", "describe",
      "achieve", "continue", "promote",  "operate",  "organize", "manage",   "dedicate",
      "celebrate", "feature", "tie",     "score",    "retire",   "declare",  "rate",
      "place",   "stage",    "sponsor",  "issue",    "face",     "share",    "range",
      "acquire", "relocate", "debute",   "involve",  "estimate", "rule",     "translate",
      "combine", "generate", "require",  "decide",   "graduate", "rise",     "rebuke"};
  return kSet;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

}  // namespace

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t qlen = 0;
    if (is_open_quote(s, i, qlen)) {
      // Quoted span up to the matching close quote.
      std::size_t j = i + qlen;
      std::size_t close_len = 0;
      while (j < s.size()) {
        if (s[j] == '"') {
          close_len = 1;
          break;
        }
        if (special_utf8_length(s, j) == 3 && static_cast<unsigned char>(s[j + 2]) == 0x9D) {
          close_len = 3;
          break;
        }
        ++j;
      }
      if (close_len > 0) {
        tokens.push_back({std::string(s.substr(i, j + close_len - i)), i, j + close_len, TokenShape::quoted});
        i = j + close_len;
        continue;
      }
      tokens.push_back({std::string(s.substr(i, qlen)), i, i + qlen, TokenShape::punct});
      i += qlen;
      continue;
    }
    if (is_word_byte(s, i)) {
      std::size_t j = i;
      bool all_numeric = true;
      while (j < s.size()) {
        if (is_word_byte(s, j)) {
          if (!std::isdigit(static_cast<unsigned char>(s[j]))) all_numeric = false;
          ++j;
          continue;
        }
        // Internal joiners: hyphen, apostrophe, digit-group comma, decimal point.
        std::size_t alen = 0;
        if (s[j] == '-' && j + 1 < s.size() && is_word_byte(s, j + 1)) {
          all_numeric = false;
          ++j;
          continue;
        }
        if (is_apostrophe(s, j, alen) && j + alen < s.size() && is_word_byte(s, j + alen)) {
          all_numeric = false;
          j += alen;
          continue;
        }
        if ((s[j] == ',' || s[j] == '.') && all_numeric && j + 1 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
          ++j;
          continue;
        }
        break;
      }
      Token tok{std::string(s.substr(i, j - i)), i, j, all_numeric ? TokenShape::number : TokenShape::word};
      // Abbreviation or initial keeps its period.
      if (j < s.size() && s[j] == '.' && tok.shape == TokenShape::word) {
        bool initial = tok.text.size() == 1 && std::isupper(static_cast<unsigned char>(tok.text[0]));
        if (initial || is_abbreviation(tok.text)) {
          tok.text.push_back('.');
          tok.end = j + 1;
          j += 1;
        }
      }
      tokens.push_back(std::move(tok));
      i = j;
      continue;
    }
    std::size_t special = special_utf8_length(s, i);
    std::size_t len = special ? special : 1;
    tokens.push_back({std::string(s.substr(i, len)), i, i + len, TokenShape::punct});
    i += len;
  }
  return tokens;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool is_capitalized(std::string_view word) {
  std::size_t i = 0;
  while (i < word.size() && (word[i] == '"' || word[i] == '\'')) ++i;
  if (i + 2 < word.size() && special_utf8_length(word, i) == 3) i += 3;
  return i < word.size() && std::isupper(static_cast<unsigned char>(word[i]));
}

std::string capitalize_first(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      break;
    }
    if (!std::ispunct(static_cast<unsigned char>(ch))) break;
  }
  return out;
}

std::string lowercase_first(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(ch);
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

bool starts_with_word(std::string_view text, std::string_view word) {
  if (text.size() < word.size() || !iequals(text.substr(0, word.size()), word)) return false;
  return text.size() == word.size() || !is_word_byte(text, word.size());
}

std::size_t find_word(std::string_view haystack, std::string_view needle, bool fold_case, std::size_t from) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
  std::string h = fold_case ? to_lower(haystack) : std::string(haystack);
  std::string n = fold_case ? to_lower(needle) : std::string(needle);
  std::size_t pos = h.find(n, from);
  while (pos != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_byte(h, pos - 1) || !is_word_byte(n, 0);
    std::size_t after = pos + n.size();
    bool right_ok = after >= h.size() || !is_word_byte(h, after) || !is_word_byte(n, n.size() - 1);
    if (left_ok && right_ok) return pos;
    pos = h.find(n, pos + 1);
  }
  return std::string_view::npos;
}

bool is_abbreviation(std::string_view token) {
  std::string t = to_lower(token);
  if (!t.empty() && t.back() == '.') t.pop_back();
  return abbreviations().count(t) > 0;
}

bool is_determiner(std::string_view w) { return determiners().count(std::string(w)) > 0; }
bool is_pronoun(std::string_view w) { return pronouns().count(std::string(w)) > 0; }
bool is_preposition(std::string_view w) { return prepositions().count(std::string(w)) > 0; }
bool is_auxiliary(std::string_view w) { return auxiliaries().count(std::string(w)) > 0; }
bool is_copula(std::string_view w) { return w == "is" || w == "are" || w == "was" || w == "were"; }

bool is_function_word(std::string_view w) {
  std::string s(w);
  return determiners().count(s) || pronouns().count(s) || prepositions().count(s) ||
         auxiliaries().count(s) || other_function_words().count(s);
}

std::optional<std::string> irregular_base(std::string_view lower_form) {
  for (const auto& v : kIrregular) {
    if (lower_form == v.past || lower_form == v.participle) return std::string(v.base);
  }
  return std::nullopt;
}

bool is_irregular_past(std::string_view lower_form) {
  return std::any_of(kIrregular.begin(), kIrregular.end(),
                     [&](const IrregularVerb& v) { return lower_form == v.past; });
}

bool is_irregular_participle(std::string_view lower_form) {
  return std::any_of(kIrregular.begin(), kIrregular.end(),
                     [&](const IrregularVerb& v) { return lower_form == v.participle; });
}

std::string verb_base(std::string_view form) {
  std::string w = to_lower(form);
  if (auto base = irregular_base(w)) return *base;
  if (ends_with(w, "ied") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "ed") && w.size() > 3) {
    std::string stem = w.substr(0, w.size() - 2);
    if (e_final_verbs().count(stem + "e")) return stem + "e";
    if (stem.size() >= 3 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
        !is_vowel(stem.back()) && stem.back() != 'l' && stem.back() != 's') {
      return stem.substr(0, stem.size() - 1);
    }
    return stem;
  }
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "es") && w.size() > 3) {
    std::string stem = w.substr(0, w.size() - 2);
    if (ends_with(stem, "ch") || ends_with(stem, "sh") || ends_with(stem, "x") || ends_with(stem, "ss") ||
        ends_with(stem, "z")) {
      return stem;
    }
    return w.substr(0, w.size() - 1);
  }
  if (ends_with(w, "s") && !ends_with(w, "ss") && w.size() > 2) return w.substr(0, w.size() - 1);
  return w;
}

std::string past_auxiliary(std::string_view aux) {
  if (aux == "is" || aux == "am") return "was";
  if (aux == "are") return "were";
  if (aux == "has" || aux == "have") return "had";
  if (aux == "does" || aux == "do") return "did";
  if (aux == "will") return "would";
  if (aux == "can") return "could";
  return std::string(aux);
}

bool is_past_auxiliary(std::string_view aux) {
  return aux == "was" || aux == "were" || aux == "had" || aux == "did" || aux == "would" || aux == "could";
}

std::string stem(std::string_view word) {
  std::string w = to_lower(word);
  // Strip possessive markers (straight or curly apostrophe).
  if (ends_with(w, "'s")) w.resize(w.size() - 2);
  if (ends_with(w, "\xE2\x80\x99s")) w.resize(w.size() - 4);
  if (!w.empty() && w.back() == '\'') w.pop_back();
  if (auto base = irregular_base(w)) w = *base;
  if (w.size() > 4 && ends_with(w, "ies")) {
    w = w.substr(0, w.size() - 3) + "y";
  } else if (w.size() > 4 && ends_with(w, "ied")) {
    w = w.substr(0, w.size() - 3) + "y";
  } else if (w.size() > 4 && ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (w.size() > 5 && ends_with(w, "ing")) {
    w.resize(w.size() - 3);
  } else if (w.size() > 4 && ends_with(w, "ed")) {
    w.resize(w.size() - 2);
    if (w.size() >= 3 && w[w.size() - 1] == w[w.size() - 2] && !is_vowel(w.back()) && w.back() != 'l' &&
        w.back() != 's') {
      w.pop_back();
    }
  } else if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
             !ends_with(w, "is")) {
    w.pop_back();
  }
  if (w.size() > 3 && w.back() == 'e') w.pop_back();
  return w;
}

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& tok : tokenize(s)) {
    if (tok.shape == TokenShape::punct) continue;
    if (tok.shape == TokenShape::quoted) {
      // A quoted title contributes its words.
      std::string inner = tok.text;
      auto sub = content_words(std::string_view(inner).substr(1, inner.size() >= 2 ? inner.size() - 2 : 0));
      out.insert(out.end(), sub.begin(), sub.end());
      continue;
    }
    std::string lower = to_lower(tok.text);
    if (!lower.empty() && lower.back() == '.') lower.pop_back();
    if (is_function_word(lower)) continue;
    std::string st = stem(lower);
    if (st.empty() || is_function_word(st)) continue;
    out.push_back(std::move(st));
  }
  return out;
}

std::string normalize_answer(std::string_view s) {
  std::string cleaned;
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::size_t len = special_utf8_length(s, i)) {
      cleaned.push_back(' ');
      i += len - 1;
      continue;
    }
    if (std::isalnum(c) || c >= 0x80) {
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' || c == '-') {
      cleaned.push_back(static_cast<char>(c));
    } else {
      cleaned.push_back(' ');
    }
  }
  std::string collapsed = collapse_whitespace(cleaned);
  // Strip leading articles.
  for (;;) {
    bool stripped = false;
    for (std::string_view article : {"the ", "a ", "an "}) {
      if (collapsed.rfind(article, 0) == 0) {
        collapsed.erase(0, article.size());
        stripped = true;
      }
    }
    if (!stripped) break;
  }
  return collapsed;
}

}  // namespace advfact::text
