/*
 * Copyright 2026 The wsloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end over the shared library.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wsloc/c_api.h"

namespace {

struct Options {
  std::string command;
  std::string config_path;
  std::string out_dir = "wsloc_out";
  std::string preset;
  std::vector<std::string> seed_overrides;
};

int ReportError(const std::string& command, wsloc_status status,
                const std::string& message) {
  nlohmann::json record = {{"error",
                            {{"code", wsloc_status_name(status)},
                             {"status", static_cast<int>(status)},
                             {"command", command},
                             {"message", message}}}};
  std::cerr << record.dump() << std::endl;
  return static_cast<int>(status);
}

int Run(const Options& opt) {
  std::string config_text;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) return ReportError(opt.command, WSLOC_IO, "cannot read " + opt.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    config_text = ss.str();
  }
  std::vector<const char*> overrides;
  for (const std::string& s : opt.seed_overrides) overrides.push_back(s.c_str());

  wsloc_config* config = nullptr;
  wsloc_status status = wsloc_config_resolve(
      opt.preset.c_str(), config_text.empty() ? nullptr : config_text.c_str(),
      overrides.data(), overrides.size(), &config);
  if (status != WSLOC_OK) return ReportError(opt.command, status, wsloc_last_error());

  auto log = [](const char* line, void*) { std::cout << line << std::endl; };
  char* manifest = nullptr;
  if (opt.command == "collect") {
    status = wsloc_cmd_collect(config, opt.out_dir.c_str(), log, nullptr, &manifest);
  } else if (opt.command == "train") {
    status = wsloc_cmd_train(config, opt.out_dir.c_str(), log, nullptr, &manifest);
  } else if (opt.command == "eval") {
    status = wsloc_cmd_eval(config, opt.out_dir.c_str(), log, nullptr, &manifest);
  } else {
    status = wsloc_cmd_sweep(config, opt.out_dir.c_str(), log, nullptr, &manifest);
  }
  wsloc_config_free(config);
  if (status != WSLOC_OK) return ReportError(opt.command, status, wsloc_last_error());
  std::cout << manifest << std::endl;
  wsloc_string_free(manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly-supervised positioning workbench"};
  app.require_subcommand(1);
  Options opt;
  const std::pair<const char*, const char*> commands[] = {
      {"collect", "Generate the environment and dataset"},
      {"train", "Fit the configured method"},
      {"eval", "Evaluate a fitted method"},
      {"sweep", "Run a noise or sample-count sweep"},
  };
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", opt.config_path, "JSON config merged over the preset");
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed-override", opt.seed_overrides, "Seed override name=value")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("--preset", opt.preset, "Built-in preset name");
    sub->callback([&opt, sub] { opt.command = sub->get_name(); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string command = opt.command;
    for (const auto& entry : commands) {
      if (command.empty() && argc > 1 && std::string(argv[1]) == entry.first) {
        command = entry.first;
      }
    }
    return ReportError(command, WSLOC_INVALID_ARGUMENT, e.what());
  }
  return Run(opt);
}
