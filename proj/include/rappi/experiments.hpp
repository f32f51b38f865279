// Copyright 2026 The rappi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rappi/config.hpp"

// Experiment orchestration behind the command-line tool.
namespace rappi::experiments {

using json = config::json;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Artifacts {
  json summary;
  std::vector<Table> tables;
  std::vector<std::pair<std::string, std::string>> files;  // extra files written verbatim
};

Artifacts run(const config::RunConfig& config);

// Resolved parameters, derived quantities and every guard outcome, without
// running the experiment. report["ok"] is false when any guard fails.
json validate_report(const config::RunConfig& config);

enum class Format { csv, json };
Format parse_format(const std::string& name);

// Writes summary.json, manifest.json, the tables and the extra files.
// Returns the written paths in order.
std::vector<std::filesystem::path> write(const Artifacts& artifacts, const config::RunConfig& config,
                                         const std::filesystem::path& out_dir, Format format);

// Bundled configurations and data files (file name, contents).
std::vector<std::pair<std::string, std::string>> bundled_fixtures();

}  // namespace rappi::experiments
