// Copyright 2026 The cakekm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Scenario driver and report emitter for the bench CLI. A scenario
// builds a seeded world, runs one group operation with per-message
// accounting, checks the message-count law and state convergence, and
// returns a structured report with the analytical cost model's
// prediction alongside the measured bytes. Reports are deterministic:
// identical specs and seeds serialize to identical bytes.

#ifndef CAKE_BENCH_HPP
#define CAKE_BENCH_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace cake::bench {

using Json = nlohmann::ordered_json;

struct ScenarioSpec {
  std::string scheme;    // cake | lkh | gkmp
  std::string scenario;  // create join mass_join key_download leave merge
                         // split rekey tree_op table2
  size_t members = 0;
  size_t batch = 1;
  uint64_t seed = 42;
  std::string variant;   // scheme-specific: notice|wrapped, unicast|broadcast,
                         // unoptimized|optimized
  bool timing = false;
};

struct ScenarioReport {
  Json data;
  bool ok = true;
};

ScenarioReport run_scenario(const ScenarioSpec& spec);

// Fixed multi-scheme suite (used by the determinism check and
// `--scenario suite`).
std::vector<ScenarioReport> run_suite(uint64_t seed);

enum class Format { kJson, kCsv, kText };
Format parse_format(const std::string& name);

// Renders reports: a JSON array, a CSV with the shared scalar columns,
// or an aligned text table. CSV and JSON values agree field-for-field.
std::string emit_table(const std::vector<ScenarioReport>& reports, Format f);
// One JSON object per line, for --out streams.
std::string emit_jsonl(const std::vector<ScenarioReport>& reports);

}  // namespace cake::bench

#endif  // CAKE_BENCH_HPP
