#include "advfact/report.hpp"

#include <cstdio>
#include <sstream>

namespace advfact::report {

const char* const kAsrNote =
    "ASR is the mean, over originals answered correctly, of each original's share of wrongly answered attacks "
    "(the sum over originals divided by their count)";

namespace {

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

struct Column {
  const char* name;
  std::optional<double> metrics::ReportRow::*field;
  bool percent;
};

const std::vector<Column>& columns() {
  using R = metrics::ReportRow;
  static const std::vector<Column> c = {
      {"acc_before", &R::acc_before, true},
      {"acc_after", &R::acc_after, true},
      {"asr", &R::asr, true},
      {"citation_recall", &R::citation_recall, true},
      {"citation_precision", &R::citation_precision, true},
      {"citation_precision_filtered", &R::citation_precision_filtered, true},
      {"factscore", &R::factscore, true},
      {"factscore_all", &R::factscore_all, true},
      {"fluency", &R::fluency_mean, false},
      {"utility", &R::utility_mean, false},
      {"kappa_correct", &R::kappa_correct, true},
      {"kappa_fluency", &R::kappa_fluency, true},
      {"kappa_utility", &R::kappa_utility, true},
  };
  return c;
}

std::vector<std::pair<std::string, int metrics::ReportRow::*>> count_columns() {
  using R = metrics::ReportRow;
  return {{"n_originals", &R::n_originals},   {"n_originals_correct", &R::n_originals_correct},
          {"n_attacks", &R::n_attacks},       {"n_attacks_wrong", &R::n_attacks_wrong},
          {"n_unjudged", &R::n_unjudged},     {"n_contradictions", &R::n_contradictions}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_notes(const std::vector<std::string>& notes) {
  std::string s;
  for (const auto& n : notes) s += (s.empty() ? "" : "; ") + n;
  return s;
}

std::string cell(const metrics::ReportRow& r, const Column& c) {
  return c.percent ? format_percent(r.*(c.field)) : format_plain(r.*(c.field));
}

}  // namespace

std::string format_percent(const std::optional<double>& v) { return v ? fixed1(*v * 100.0) : "-"; }
std::string format_plain(const std::optional<double>& v) { return v ? fixed1(*v) : "-"; }

std::string render_csv(const metrics::MetricsReport& report, const ReportMeta& meta) {
  std::ostringstream out;
  out << "# run_id: " << meta.run_id << "\n";
  out << "# config_digest: " << meta.config_digest << "\n";
  out << "# " << kAsrNote << "\n";
  for (const auto& n : report.notes) out << "# note: " << n << "\n";
  std::vector<std::string> head = report.group_by;
  for (const auto& c : columns()) head.push_back(c.name);
  for (const auto& [n, f] : count_columns()) head.push_back(n);
  head.push_back("notes");
  for (std::size_t i = 0; i < head.size(); ++i) out << (i ? "," : "") << head[i];
  out << "\n";
  for (const auto& r : report.rows) {
    std::vector<std::string> cells;
    for (const auto& [k, v] : r.keys) cells.push_back(csv_field(v));
    for (const auto& c : columns()) cells.push_back(cell(r, c));
    for (const auto& [n, f] : count_columns()) cells.push_back(std::to_string(r.*f));
    cells.push_back(csv_field(join_notes(r.notes)));
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  }
  return out.str();
}

std::string render_markdown(const metrics::MetricsReport& report, const ReportMeta& meta) {
  std::ostringstream out;
  out << "# Metrics report\n\n";
  out << "- run_id: `" << meta.run_id << "`\n";
  out << "- config_digest: `" << meta.config_digest << "`\n";
  out << "- " << kAsrNote << ".\n";
  out << "- Rates and kappa in percent; fluency and utility on the 1-5 scale.\n";
  for (const auto& n : report.notes) out << "- note: " << n << "\n";
  out << "\n|";
  for (const auto& g : report.group_by) out << " " << g << " |";
  for (const auto& c : columns()) out << " " << c.name << " |";
  out << " n_originals | n_attacks |\n|";
  for (std::size_t i = 0; i < report.group_by.size() + columns().size() + 2; ++i) out << "---|";
  out << "\n";
  for (const auto& r : report.rows) {
    out << "|";
    for (const auto& [k, v] : r.keys) out << " " << v << " |";
    for (const auto& c : columns()) out << " " << cell(r, c) << " |";
    out << " " << r.n_originals << " | " << r.n_attacks << " |\n";
  }
  bool any_notes = false;
  for (const auto& r : report.rows) any_notes = any_notes || !r.notes.empty();
  if (any_notes) {
    out << "\n## Row notes\n\n";
    for (const auto& r : report.rows) {
      if (r.notes.empty()) continue;
      std::string key;
      for (const auto& [k, v] : r.keys) key += (key.empty() ? "" : ", ") + k + "=" + v;
      out << "- " << (key.empty() ? "all" : key) << ": " << join_notes(r.notes) << "\n";
    }
  }
  return out.str();
}

std::string render_json(const metrics::MetricsReport& report, const ReportMeta& meta) {
  json j = report;
  json out = json{{"header", {{"run_id", meta.run_id}, {"config_digest", meta.config_digest}, {"asr_note", kAsrNote}}},
                  {"report", j}};
  return out.dump(2) + "\n";
}

namespace {

json header_of(const ReportMeta& meta, const char* kind) {
  return {{"kind", kind}, {"run_id", meta.run_id}, {"config_digest", meta.config_digest}, {"asr_note", kAsrNote}};
}

}  // namespace

json hop_curve_data(const std::vector<metrics::EvalRecord>& records, const ReportMeta& meta) {
  std::vector<metrics::EvalRecord> subset;
  for (const auto& r : records) {
    bool hop = r.probe.kind == judge::ItemKind::attack && r.probe.method == attack::Method::multihop;
    if (hop || r.probe.kind == judge::ItemKind::original) subset.push_back(r);
  }
  auto rep = metrics::build_report(subset, {"engine", "mode", "hop_mode", "hops"});
  std::map<std::string, json> series;
  for (const auto& row : rep.rows) {
    std::string engine = row.keys[0].second, mode = row.keys[1].second, hop_mode = row.keys[2].second;
    std::string id = engine + (mode == "-" ? "" : "/" + mode) + " " + hop_mode;
    auto& s = series[id];
    if (s.is_null()) s = {{"engine", engine}, {"mode", mode}, {"hop_mode", hop_mode}, {"points", json::array()}};
    s["points"].push_back({{"hops", std::stoi(row.keys[3].second)},
                           {"asr", row.asr ? json(*row.asr) : json(nullptr)},
                           {"acc_after", row.acc_after ? json(*row.acc_after) : json(nullptr)},
                           {"n_attacks", row.n_attacks}});
  }
  json out = {{"header", header_of(meta, "hop_curves")}, {"series", json::array()}};
  for (auto& [k, v] : series) out["series"].push_back(v);
  return out;
}

json component_bar_data(const std::vector<metrics::EvalRecord>& records, const ReportMeta& meta) {
  std::vector<metrics::EvalRecord> subset;
  for (const auto& r : records) {
    if (r.probe.kind == judge::ItemKind::original || r.probe.target_role) subset.push_back(r);
  }
  auto rep = metrics::build_report(subset, {"engine", "mode", "target"});
  json bars = json::array();
  for (const auto& row : rep.rows) {
    bars.push_back({{"engine", row.keys[0].second},
                    {"mode", row.keys[1].second},
                    {"target", row.keys[2].second},
                    {"asr", row.asr ? json(*row.asr) : json(nullptr)},
                    {"n_attacks", row.n_attacks}});
  }
  return {{"header", header_of(meta, "component_bars")}, {"bars", bars}};
}

}  // namespace advfact::report
