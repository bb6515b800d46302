#pragma once

#include <string>
#include <vector>

#include "advfact/metrics.hpp"

namespace advfact::report {

struct ReportMeta {
  std::string run_id;
  std::string config_digest;
};

/// How ASR is normalized; printed in every report header.
extern const char* const kAsrNote;

/// Rates and kappa as percentages, Likert means as-is; one decimal. Missing
/// values render as "-".
std::string format_percent(const std::optional<double>& v);
std::string format_plain(const std::optional<double>& v);

/// Header comment lines ("# key: value"), then one CSV row per group.
std::string render_csv(const metrics::MetricsReport& report, const ReportMeta& meta);
std::string render_markdown(const metrics::MetricsReport& report, const ReportMeta& meta);
/// Full-precision values.
std::string render_json(const metrics::MetricsReport& report, const ReportMeta& meta);

/// Series for hop-depth curves: ASR and Acc-after per engine, hop mode and
/// hop count over multihop records.
json hop_curve_data(const std::vector<metrics::EvalRecord>& records, const ReportMeta& meta);
/// Bars for targeted components: ASR per engine and target role.
json component_bar_data(const std::vector<metrics::EvalRecord>& records, const ReportMeta& meta);

}  // namespace advfact::report
