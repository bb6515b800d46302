#pragma once

#include <string>
#include <vector>

#include "advfact/citations.hpp"
#include "advfact/common.hpp"

namespace advfact::engines {

struct EngineResponse {
  std::string instance_id;
  std::string engine;
  std::string mode;
  std::string raw_text;
  std::vector<Statement> statements;
  std::vector<Citation> citations;
  double latency_ms = 0;
  std::string timestamp;
  friend bool operator==(const EngineResponse&, const EngineResponse&) = default;
};

void to_json(json& j, const EngineResponse& r);
/// Checks citation referential integrity on ingest.
void from_json(const json& j, EngineResponse& r);

/// "name" or "name/mode".
std::string engine_key(const std::string& engine, const std::string& mode);

}  // namespace advfact::engines
