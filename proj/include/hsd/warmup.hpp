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

// Format warm-up for the base model. A randomly initialised policy cannot
// act as a teacher, so before any method runs it is trained by next-token
// likelihood on prompt/response pairs in every format the harnesses and
// teachers use. Classification examples come from freshly drawn prototype
// episodes that share no prototypes with the task data, so the warm-up
// teaches how to read precedents, not the task's answers.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hsd/harnesses.hpp"
#include "hsd/objectives.hpp"
#include "hsd/tasks.hpp"

namespace hsd {

struct WarmupConfig {
  int steps = 500;
  int batch_size = 32;
  double lr = 3e-3;
  /// Labelled precedents per classification episode.
  int episode_bank = 40;
  /// Probability that a verify example carries a wrong draft.
  double draft_corruption = 0.25;

  void validate() const;
};

enum class WarmupFormat { kBare, kPrivileged, kDraft, kVerify, kPlan, kPlanFree, kSolve };

struct WarmupExample {
  WarmupFormat format = WarmupFormat::kBare;
  TokenSeq prompt;
  TokenSeq response;
};

/// Label most frequent among the given entries (ties: best-ranked entry).
TokenSeq vote_label(const std::vector<const BankEntry*>& entries);

/// Expected verify response: CITE, first token of the best-ranked confirmer
/// (or challenger when there are none), SEP, answer, EOS.
TokenSeq verify_response(const MemoryBank& bank, std::span<const std::int64_t> confirmers,
                         std::span<const std::int64_t> challengers, Token answer);

/// One random example for the dataset's family.
WarmupExample warmup_example(const Dataset& shape, const DraftVerifyConfig& dv, const PlanSolveConfig& ps,
                             const WarmupConfig& cfg, std::uint64_t seed);

/// Mean over examples of the mean per-token negative log-likelihood of the
/// response given the prompt.
LossValue warmup_loss(const PolicyParams& params, std::span<const WarmupExample> batch);

using WarmupCallback = std::function<void(int step, double loss)>;

/// Runs cfg.steps Adam updates in place. Deterministic in `seed`.
void run_warmup(PolicyParams& params, const Dataset& shape, const DraftVerifyConfig& dv, const PlanSolveConfig& ps,
                const WarmupConfig& cfg, std::uint64_t seed, const WarmupCallback& on_step = {});

}  // namespace hsd
