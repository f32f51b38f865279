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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rappi/config.hpp"
#include "rappi/error.hpp"
#include "rappi/experiments.hpp"
#include "rappi/io.hpp"

namespace {

using rappi::config::json;

int report_error(const std::string& module, const std::string& code, const std::string& message) {
  json e;
  e["error"] = {{"module", module}, {"code", code}, {"message", message}};
  std::cerr << e.dump(2) << "\n";
  return 1;
}

std::string default_out(const char* fallback) {
  const char* env = std::getenv("RAPPI_OUT_DIR");
  return env && *env ? env : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-imprint photon echo memory simulator"};
  app.set_version_flag("--version", rappi::config::tool_version);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string format = "csv";

  auto* run = app.add_subcommand("run", "Run the experiment described by a configuration file");
  run->add_option("--config", config_path, "Configuration JSON (or a run manifest)")->required();
  run->add_option("--out", out_dir, "Output directory (default: $RAPPI_OUT_DIR or ./out)");
  run->add_option("--seed", seed, "Seed for photon-number sampling");
  run->add_option("--threads", threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  run->add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}));

  auto* validate = app.add_subcommand("validate", "Check a configuration and report derived quantities");
  validate->add_option("--config", config_path, "Configuration JSON (or a run manifest)")->required();

  auto* fixtures = app.add_subcommand("fixtures", "Write the bundled configurations and data files");
  fixtures->add_option("--out", out_dir, "Output directory (default: $RAPPI_OUT_DIR or ./fixtures)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("cli", "usage", e.what());
  }

  try {
    if (*fixtures) {
      const std::filesystem::path dir = out_dir.empty() ? default_out("fixtures") : out_dir;
      std::filesystem::create_directories(dir);
      for (const auto& [name, text] : rappi::experiments::bundled_fixtures()) {
        rappi::io::write_file(dir / name, text);
        std::cout << (dir / name).string() << "\n";
      }
      return 0;
    }

    auto config = rappi::config::load(config_path);
    config.threads = threads;
    if (seed) config.seed = *seed;

    if (*validate) {
      const auto report = rappi::experiments::validate_report(config);
      std::cout << report.dump(2) << "\n";
      return report["ok"].get<bool>() ? 0 : 2;
    }

    const std::filesystem::path dir = out_dir.empty() ? default_out("out") : out_dir;
    const auto artifacts = rappi::experiments::run(config);
    const auto written =
        rappi::experiments::write(artifacts, config, dir, rappi::experiments::parse_format(format));
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
  } catch (const rappi::Error& e) {
    return report_error(e.module(), e.code(), e.what());
  } catch (const std::exception& e) {
    return report_error("cli", "internal", e.what());
  }
}
