#include "advfact/resources.hpp"

#include <algorithm>

#include "advfact/common.hpp"
#include "advfact/text.hpp"

namespace advfact {

namespace embedded {
extern const std::string_view kLexiconTsv;
extern const std::string_view kTemporalAnchorsTsv;
}  // namespace embedded

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    out.push_back(std::string(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_list(std::string_view cell) {
  std::vector<std::string> out;
  for (auto& item : split(cell, ',')) {
    std::string t = text::trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <typename F>
void for_each_row(std::string_view tsv, F&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= tsv.size()) {
    std::size_t end = tsv.find('\n', start);
    if (end == std::string_view::npos) end = tsv.size();
    std::string line(tsv.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') {
      if (end == tsv.size()) break;
      continue;
    }
    fn(split(line, '\t'), line_no);
    if (end == tsv.size()) break;
  }
}

int parse_year(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    int v = std::stoi(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad year '" + cell + "'", line);
  }
}

}  // namespace

Lexicon Lexicon::parse(std::string_view tsv) {
  Lexicon lex;
  for_each_row(tsv, [&](const std::vector<std::string>& cols, std::size_t line) {
    if (cols.size() < 2 || cols.size() > 4) throw ParseError("lexicon row needs 2-4 columns", line);
    LexiconEntry e;
    e.word = text::to_lower(text::trim(cols[0]));
    e.pos = text::trim(cols[1]);
    if (cols.size() > 2) e.synonyms = split_list(cols[2]);
    if (cols.size() > 3) e.antonyms = split_list(cols[3]);
    lex.entries_.push_back(std::move(e));
  });
  return lex;
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon kLex = parse(embedded::kLexiconTsv);
  return kLex;
}

const LexiconEntry* Lexicon::find(std::string_view word) const {
  std::string w = text::to_lower(word);
  for (const auto& e : entries_) {
    if (e.word == w) return &e;
  }
  return nullptr;
}

bool Lexicon::synonymous(std::string_view a, std::string_view b) const {
  std::string la = text::to_lower(a), lb = text::to_lower(b);
  if (la == lb) return true;
  auto check = [&](const std::string& x, const std::string& y) {
    const LexiconEntry* e = find(x);
    return e && std::find(e->synonyms.begin(), e->synonyms.end(), y) != e->synonyms.end();
  };
  return check(la, lb) || check(lb, la);
}

bool Lexicon::antonymous(std::string_view a, std::string_view b) const {
  std::string la = text::to_lower(a), lb = text::to_lower(b);
  auto check = [&](const std::string& x, const std::string& y) {
    const LexiconEntry* e = find(x);
    return e && std::find(e->antonyms.begin(), e->antonyms.end(), y) != e->antonyms.end();
  };
  return check(la, lb) || check(lb, la);
}

AnchorTable AnchorTable::parse(std::string_view tsv) {
  AnchorTable table;
  for_each_row(tsv, [&](const std::vector<std::string>& cols, std::size_t line) {
    if (cols.size() != 3) throw ParseError("anchor row needs 3 columns", line);
    TemporalAnchor a{text::trim(cols[0]), parse_year(text::trim(cols[1]), line),
                     parse_year(text::trim(cols[2]), line)};
    if (a.first_year > a.last_year) throw ParseError("anchor first_year after last_year", line);
    table.anchors_.push_back(std::move(a));
  });
  return table;
}

const AnchorTable& AnchorTable::builtin() {
  static const AnchorTable kTable = parse(embedded::kTemporalAnchorsTsv);
  return kTable;
}

AnchorTable AnchorTable::with_extension(const std::filesystem::path& path) {
  AnchorTable table = builtin();
  AnchorTable extra = parse(read_text(path));
  for (auto& a : extra.anchors_) {
    auto same = std::find_if(table.anchors_.begin(), table.anchors_.end(),
                             [&](const TemporalAnchor& t) { return text::iequals(t.event, a.event); });
    if (same != table.anchors_.end()) {
      *same = a;
    } else {
      table.anchors_.push_back(a);
    }
  }
  return table;
}

const TemporalAnchor* AnchorTable::match_prefix(std::string_view s, std::size_t* matched_length) const {
  const TemporalAnchor* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& a : anchors_) {
    std::string_view ev = a.event;
    if (s.size() >= ev.size() && text::iequals(s.substr(0, ev.size()), ev) && ev.size() > best_len &&
        text::starts_with_word(s, ev)) {
      best = &a;
      best_len = ev.size();
    }
  }
  if (best && matched_length) *matched_length = best_len;
  return best;
}

}  // namespace advfact
