// Copyright 2026 The harness-distill Authors.
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

// Command-line front end: gen-data, train, eval, compare.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 numeric
// failure during training, 1 anything else.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsd/hsd.h"

namespace {

int exit_code(hsd_status s) {
  switch (s) {
    case HSD_OK: return 0;
    case HSD_ERR_VALIDATION:
    case HSD_ERR_INVALID_ARGUMENT: return 2;
    case HSD_ERR_NUMERIC: return 3;
    default: return 1;
  }
}

int report(hsd_status s, const char* command) {
  if (s != HSD_OK) std::fprintf(stderr, "hsd %s: %s: %s\n", command, hsd_status_name(s), hsd_last_error());
  return exit_code(s);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-policy harness self-distillation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hsd_version()));

  std::string config, out, data, checkpoint, mode = "unassisted";
  int64_t seed = -1;
  int k = 1;
  bool resume = false;
  std::vector<std::string> runs;

  auto* gen = app.add_subcommand("gen-data", "Generate a dataset file from the task section of a config");
  gen->add_option("--config", config, "Experiment config (JSON)")->required();
  gen->add_option("--out", out, "Output dataset path (JSONL)")->required();
  gen->add_option("--seed", seed, "Override task.seed");

  auto* tr = app.add_subcommand("train", "Warm up, then train with the configured method");
  tr->add_option("--config", config, "Experiment config (JSON)")->required();
  tr->add_option("--out", out, "Run directory")->required();
  tr->add_option("--data", data, "Dataset file (default: generate from the config)");
  tr->add_option("--seed", seed, "Override train.seed");
  tr->add_flag("--resume", resume, "Continue from the latest checkpoint in the run directory");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  ev->add_option("--checkpoint", checkpoint, "Policy checkpoint")->required();
  ev->add_option("--out", out, "Output directory")->required();
  ev->add_option("--config", config, "Experiment config for harness settings and data");
  ev->add_option("--data", data, "Dataset file");
  ev->add_option("--mode", mode, "unassisted | harness");
  ev->add_option("--k", k, "Samples per question");
  ev->add_option("--seed", seed, "Sampling seed");

  auto* cmp = app.add_subcommand("compare", "Best evaluation score per run and mode");
  cmp->add_option("runs", runs, "Run directories")->required();
  cmp->add_option("--out", out, "Directory for compare.json, compare.tsv and series.csv");
  cmp->add_option("--config", config, "Unused; accepted for symmetry");
  cmp->add_option("--seed", seed, "Unused; accepted for symmetry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*gen) return report(hsd_cmd_gen_data(config.c_str(), out.c_str(), seed), "gen-data");
  if (*tr) return report(hsd_cmd_train(config.c_str(), opt(data), out.c_str(), seed, resume ? 1 : 0), "train");
  if (*ev) {
    return report(hsd_cmd_eval(opt(config), checkpoint.c_str(), opt(data), mode.c_str(), k, seed, out.c_str()), "eval");
  }
  std::vector<const char*> dirs;
  for (const auto& r : runs) dirs.push_back(r.c_str());
  return report(hsd_cmd_compare(dirs.data(), dirs.size(), opt(out)), "compare");
}
