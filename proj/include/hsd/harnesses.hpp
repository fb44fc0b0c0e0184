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

#pragma once

#include <optional>
#include <span>
#include <string>

#include "hsd/harness.hpp"
#include "hsd/memory_bank.hpp"

namespace hsd {

struct DraftVerifyConfig {
  int k_d = 5;
  int k_plus = 5;
  int k_minus = 5;
  double temperature = 0.1;
  int draft_max_len = 4;
  int verify_max_len = 6;
  int cold_start = MemoryBank::kDefaultColdStart;

  void validate() const;
};

struct PlanSolveConfig {
  double plan_temperature = 0.3;
  double solve_temperature = 0.6;
  int plan_max_len = 6;
  int solve_max_len = 8;
  bool privileged = true;

  void validate() const;
};

/// Entries rendered as x_i SEP y_i, joined by SEP, in the given order.
TokenSeq render_neighbors(const MemoryBank& bank, std::span<const std::int64_t> arrivals);

/// Streamed classification harness. Below the cold-start threshold it makes
/// a single direct call on the bare prompt. Otherwise:
///   call 1 (DRAFT):  [(SEP, x), (DRAFT, N_d)]
///   call 2 (VERIFY): [(SEP, x), (DRAFT, y_d), (VERIFY, N_+), (VERIFY, N_-)]
/// and the verify prompt is also the terminal context.
class DraftVerifyProgram : public HarnessProgram {
 public:
  DraftVerifyProgram(Vocab vocab, DraftVerifyConfig cfg);

  std::string name() const override { return "draft_verify"; }
  int max_calls() const override { return 2; }
  void check_input(const PrivilegedInput& z) const override;
  HarnessState init(TokenSpan x, const PrivilegedInput& z) const override;
  std::optional<CallRequest> next_call(const HarnessState& state) const override;
  HarnessState transition(const HarnessState& state, const CallRecord& call) const override;
  TokenSeq readout(const HarnessState& state) const override;
  ContextParts context_of(const HarnessState& state) const override;

  const DraftVerifyConfig& config() const { return cfg_; }

  /// Draft prompt for the given neighbours (exposed for the warm-up corpus).
  TokenSeq draft_prompt(TokenSpan x, const MemoryBank& bank, std::span<const std::int64_t> neighbours) const;

 private:
  static const MemoryBank& bank_of(const HarnessState& state);

  Vocab vocab_;
  DraftVerifyConfig cfg_;
};

/// Compositional reasoning harness:
///   call 1 (PLAN):  [(SEP, x), (SEP, y*), (PLAN, -)]   (y* part only when privileged)
///   call 2 (SOLVE): [(SEP, x), (PLAN, s)]              = terminal context
class PlanSolveProgram : public HarnessProgram {
 public:
  PlanSolveProgram(Vocab vocab, PlanSolveConfig cfg);

  std::string name() const override { return "plan_solve"; }
  int max_calls() const override { return 2; }
  void check_input(const PrivilegedInput& z) const override;
  HarnessState init(TokenSpan x, const PrivilegedInput& z) const override;
  std::optional<CallRequest> next_call(const HarnessState& state) const override;
  HarnessState transition(const HarnessState& state, const CallRecord& call) const override;
  TokenSeq readout(const HarnessState& state) const override;
  ContextParts context_of(const HarnessState& state) const override;

  const PlanSolveConfig& config() const { return cfg_; }

  static ContextParts plan_parts(TokenSpan x, std::optional<TokenSpan> y_star);

 private:
  Vocab vocab_;
  PlanSolveConfig cfg_;
};

HarnessResult draft_verify(const PolicyParams& driver, TokenSpan x, const MemoryBank& bank,
                           std::int64_t visible_before, const DraftVerifyConfig& cfg, std::uint64_t seed);

/// y_star must be present iff cfg.privileged (PreconditionError otherwise).
HarnessResult plan_solve(const PolicyParams& driver, TokenSpan x, std::optional<TokenSeq> y_star,
                         const PlanSolveConfig& cfg, std::uint64_t seed);

}  // namespace hsd
