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

// Benchmark driver for the group key management schemes. Runs one scenario
// (or the whole suite) and prints the size accounting as a table, CSV or
// JSON. Exit codes: 0 on success, 1 on usage errors, 2 when a scenario ran
// but failed its own consistency checks.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cake/bench.hpp"
#include "cake/errors.hpp"

namespace {

uint64_t default_seed() {
  if (const char* env = std::getenv("CAKE_BENCH_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw CLI::ValidationError("CAKE_BENCH_SEED must be an integer");
    }
  }
  return 42;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group key management size benchmark"};

  std::string scheme, scenario, format = "text", out_path, variant;
  size_t members = 0, batch = 1;
  uint64_t seed = 0;
  bool seed_given = false, timing = false;

  app.add_option("--scheme", scheme, "cake | lkh | gkmp")->required();
  app.add_option("--scenario", scenario,
                 "create | join | mass_join | key_download | leave | merge | "
                 "split | rekey | tree_op | table2 | suite")
      ->required();
  app.add_option("--members", members, "group size before the operation");
  app.add_option("--batch", batch, "joiners / leavers / parts, default 1");
  app.add_option("--seed", seed, "deterministic seed, default 42")
      ->trigger_on_parse()
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--format", format, "json | csv | text");
  app.add_option("--out", out_path, "write output to a file instead of stdout");
  app.add_option("--variant", variant, "scenario variant, scheme specific");
  app.add_flag("--timing", timing, "include wall-clock timing in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!seed_given) seed = default_seed();
    cake::bench::Format fmt = cake::bench::parse_format(format);

    std::vector<cake::bench::ScenarioReport> reports;
    if (scenario == "suite") {
      if (scheme != "cake") {
        throw cake::Error(cake::Err::kBadKind, "suite runs under --scheme cake");
      }
      reports = cake::bench::run_suite(seed);
    } else {
      cake::bench::ScenarioSpec spec;
      spec.scheme = scheme;
      spec.scenario = scenario;
      spec.members = members;
      spec.batch = batch;
      spec.seed = seed;
      spec.variant = variant;
      spec.timing = timing;
      reports.push_back(cake::bench::run_scenario(spec));
    }

    std::string text = cake::bench::emit_table(reports, fmt);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
      }
      f << text;
    }

    for (const auto& r : reports) {
      if (!r.ok) {
        std::cerr << "scenario failed: " << r.data.value("error", "unknown")
                  << "\n";
        return 2;
      }
    }
    return 0;
  } catch (const cake::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
