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

// Experiment configuration: one JSON document with the sections task, model,
// warmup, method, draft_verify, plan_solve, train and eval. Every section but
// task is optional; unknown keys are rejected.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsd/harnesses.hpp"
#include "hsd/metrics.hpp"
#include "hsd/objectives.hpp"
#include "hsd/tasks.hpp"
#include "hsd/warmup.hpp"

namespace hsd {

struct TaskConfig {
  TaskFamily family = TaskFamily::kClassify;
  std::uint64_t seed = 0;
  ClassifyParams classify;
  ChainArithParams arith;

  int vocab() const { return family == TaskFamily::kClassify ? classify.vocab : arith.vocab; }
};

struct ModelConfig {
  PolicyShape shape{64, 112, 16, 64};
  std::uint64_t init_seed = 0;
};

enum class HarnessKind { kDraftVerify, kPlanSolve, kIdentity };
std::string harness_name(HarnessKind h);

struct MethodConfig {
  Method method = Method::kOphsd;
  /// Defaults to draft_verify for CLASSIFY and plan_solve for CHAIN_ARITH.
  HarnessKind harness = HarnessKind::kDraftVerify;
  bool harness_set = false;
  /// CRISP teacher instruction and sync period.
  TokenSeq instruction{8, 9, 10};
  int sync_period = 50;
  /// GRPO.
  int group_size = 8;
  double kl_coef = 0.0;
};

struct TrainConfig {
  int steps = 300;
  int batch_size = 64;
  OptimizerConfig optimizer;
  int max_gen_len = 6;
  double rollout_temperature = 1.0;
  int eval_every = 15;
  int checkpoint_every = 50;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  int k = 1;
  std::vector<EvalMode> modes{EvalMode::kUnassisted, EvalMode::kHarnessPrivFree};
  double temperature = -1.0;
  int max_len = 0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  TaskConfig task;
  ModelConfig model;
  WarmupConfig warmup;
  MethodConfig method;
  DraftVerifyConfig draft_verify;
  PlanSolveConfig plan_solve;
  TrainConfig train;
  EvalConfig eval;

  /// Throws ConfigError naming the offending key.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Effective configuration with every default filled in.
  nlohmann::json to_json() const;
  /// Cross-section checks (family/method/harness compatibility, budgets).
  void validate() const;

  HarnessKind harness() const;
  EvalOptions eval_options(EvalMode mode) const;
};

ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

/// The dataset described by the task section.
Dataset generate_dataset(const TaskConfig& task);

}  // namespace hsd
