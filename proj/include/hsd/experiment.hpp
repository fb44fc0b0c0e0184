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

// Training runs and the command-line operations built on them.
//
// A run directory holds:
//   config.json        effective configuration
//   metrics.jsonl      one record per training step
//   evals.jsonl        one record per (step, mode) evaluation
//   evals/*.csv        per-question scores of every evaluation
//   baseline.json      step-0 per-question scores used by the breakdowns
//   checkpoints/       step-NNNNNN.ckpt (student) and .state (teacher, optimiser)

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsd/config.hpp"

namespace hsd {

/// Random initialisation followed by the format warm-up.
PolicyParams base_policy(const ExperimentConfig& cfg, const Dataset& data);

struct TrainOptions {
  /// Empty: keep everything in memory.
  std::string out_dir;
  bool resume = false;
  /// Run the periodic evaluations.
  bool evaluate = true;
  /// Start from this policy instead of base_policy() (ignored on resume).
  std::optional<PolicyParams> initial;
  std::function<void(const LossReport&)> on_step;
  std::function<void(const EvalReport&)> on_eval;
};

struct TrainResult {
  PolicyParams initial;
  PolicyParams final_params;
  std::uint64_t teacher_checksum = 0;
  std::vector<LossReport> reports;
  std::vector<EvalReport> evals;
  EvalBaseline baseline;
};

nlohmann::ordered_json metrics_record(const LossReport& r);

/// Throws NumericFailure after writing a diagnostic checkpoint when a step
/// produces a non-finite loss.
TrainResult train(const ExperimentConfig& cfg, const Dataset& data, const TrainOptions& opts);

/// Operations behind the CLI. Each throws hsd::Error subclasses on failure.
void cmd_gen_data(const std::string& config_path, const std::string& out_path, std::optional<std::uint64_t> seed);
void cmd_train(const std::string& config_path, const std::string& data_path, const std::string& out_dir,
               std::optional<std::uint64_t> seed, bool resume);
/// config_path may be empty (defaults for the harness sections).
void cmd_eval(const std::string& config_path, const std::string& checkpoint_path, const std::string& data_path,
              const std::string& mode, int k, std::optional<std::uint64_t> seed, const std::string& out_dir);

struct CompareRow {
  std::string run;
  std::string method;
  std::string mode;
  double best = 0.0;
  std::int64_t best_step = 0;
  double final_score = 0.0;
  std::int64_t final_step = 0;
};

/// Best evaluation accuracy per (run, mode) across all recorded steps.
std::vector<CompareRow> compare_runs(const std::vector<std::string>& run_dirs);
/// Writes compare.json, compare.tsv and series.csv into out_dir (if not
/// empty) and prints the table to `table`.
void cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir, std::ostream& table);

}  // namespace hsd
