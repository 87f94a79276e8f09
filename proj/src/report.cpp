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

#include <algorithm>
#include <sstream>

#include "cake/bench.hpp"
#include "cake/errors.hpp"

namespace cake::bench {

namespace {

// Scalar columns shared by every output format, in emission order. CSV
// rows and JSON objects carry identical values for these.
const std::vector<std::string>& scalar_columns() {
  static const std::vector<std::string> cols = {
      "scheme",          "scenario",      "members",       "batch",
      "seed",            "variant",       "ok",            "messages",
      "unicasts",        "broadcasts",    "total_bytes",
      "max_message_bytes", "formula_bytes", "lock_count",  "lock_bytes_max",
  };
  return cols;
}

std::string cell(const Json& data, const std::string& key) {
  if (!data.contains(key)) return "";
  const Json& v = data.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "json") return Format::kJson;
  if (name == "csv") return Format::kCsv;
  if (name == "text") return Format::kText;
  fail(Err::kBadKind, "unknown format: " + name);
}

std::string emit_table(const std::vector<ScenarioReport>& reports, Format f) {
  if (f == Format::kJson) {
    Json arr = Json::array();
    for (const ScenarioReport& r : reports) arr.push_back(r.data);
    return arr.dump(2) + "\n";
  }

  const auto& cols = scalar_columns();
  if (f == Format::kCsv) {
    std::ostringstream out;
    for (size_t i = 0; i < cols.size(); ++i) {
      out << (i ? "," : "") << cols[i];
    }
    out << "\n";
    for (const ScenarioReport& r : reports) {
      for (size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << csv_escape(cell(r.data, cols[i]));
      }
      out << "\n";
    }
    return out.str();
  }

  // Aligned text table.
  std::vector<size_t> width(cols.size());
  for (size_t i = 0; i < cols.size(); ++i) width[i] = cols[i].size();
  std::vector<std::vector<std::string>> rows;
  for (const ScenarioReport& r : reports) {
    std::vector<std::string> row;
    for (size_t i = 0; i < cols.size(); ++i) {
      row.push_back(cell(r.data, cols[i]));
      width[i] = std::max(width[i], row.back().size());
    }
    rows.push_back(std::move(row));
  }
  std::ostringstream out;
  for (size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "  " : "") << cols[i]
        << std::string(width[i] - cols[i].size(), ' ');
  }
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < cols.size(); ++i) {
      out << (i ? "  " : "") << row[i]
          << std::string(width[i] - row[i].size(), ' ');
    }
    out << "\n";
  }
  return out.str();
}

std::string emit_jsonl(const std::vector<ScenarioReport>& reports) {
  std::string out;
  for (const ScenarioReport& r : reports) {
    out += r.data.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cake::bench
