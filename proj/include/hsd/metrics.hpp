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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsd/harnesses.hpp"
#include "hsd/policy.hpp"
#include "hsd/tasks.hpp"

namespace hsd {

/// Fraction of questions with at least one sample scoring 1. Every question
/// must have exactly k samples (InvalidArgument otherwise).
double pass_at_k(const std::vector<std::vector<double>>& samples, int k);

enum class Difficulty { kHard, kMedium, kEasy };

/// Hard [0, 0.34), Medium [0.34, 0.67), Easy [0.67, 1].
Difficulty difficulty_of(double score);
const char* difficulty_name(Difficulty d);

struct DifficultyBuckets {
  std::vector<std::size_t> hard;
  std::vector<std::size_t> medium;
  std::vector<std::size_t> easy;
};

DifficultyBuckets difficulty_buckets(std::span<const double> base_scores);

/// a: solvable by base and harness, b: harness only, c: base only, d: neither.
enum class GapGroup { kBoth = 0, kHarnessOnly = 1, kBaseOnly = 2, kNeither = 3 };
const char* gap_group_name(GapGroup g);

inline constexpr double kSolvableThreshold = 0.5;

struct GapGroups {
  std::array<std::vector<std::size_t>, 4> members;
  const std::vector<std::size_t>& operator[](GapGroup g) const { return members[static_cast<std::size_t>(g)]; }
};

GapGroups gap_groups(std::span<const double> base, std::span<const double> harness,
                     double tau = kSolvableThreshold);

/// CITE followed by at least one payload token before the next SEP.
bool has_citation(TokenSpan response);
double citation_rate(const std::vector<TokenSeq>& responses);

/// Mean over `classes` of 2TP / (2TP + FP + FN); a class with no support and
/// no predictions scores 1. Missing predictions (nullopt) count as misses.
double macro_f1(std::span<const Token> truth, std::span<const std::optional<Token>> predicted,
                std::span<const Token> classes);

enum class EvalMode { kUnassisted, kHarnessPrivFree };
std::string mode_name(EvalMode m);
/// "unassisted" | "harness"; ConfigError otherwise.
EvalMode parse_mode(const std::string& name);

struct EvalOptions {
  EvalMode mode = EvalMode::kUnassisted;
  int k = 1;
  /// Negative: 0.1 for CLASSIFY, 0.6 for CHAIN_ARITH.
  double temperature = -1.0;
  /// Non-positive: 6 for CLASSIFY, 8 for CHAIN_ARITH.
  int max_len = 0;
  DraftVerifyConfig draft_verify;
  PlanSolveConfig plan_solve;
  std::uint64_t seed = 0;
};

struct QuestionResult {
  std::string id;
  std::vector<double> scores;
  std::vector<TokenSeq> responses;
  /// Arrival indices retrieved by the harness (classification harness mode).
  std::vector<std::int64_t> retrieved;
  std::int64_t position = 0;

  double score() const;
};

struct EvalReport {
  EvalMode mode = EvalMode::kUnassisted;
  TaskFamily family = TaskFamily::kClassify;
  std::int64_t step = 0;
  int k = 1;
  double temperature = 0.0;
  std::vector<QuestionResult> questions;

  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double pass_at_k = 0.0;
  double mean_output_length = 0.0;
  double citation_rate = 0.0;

  std::vector<double> per_question_scores() const;
};

/// k samples per test question. In harness mode classification questions are
/// answered by draft-verify over a bank holding the test stream, each one
/// seeing only the entries that arrived before it; arithmetic questions use
/// plan-solve without the reference solution.
EvalReport evaluate(const PolicyParams& policy, const Dataset& data, const EvalOptions& opts);

/// Baselines for the breakdowns: per-question scores of the step-0 policy,
/// unassisted and with the harness.
struct EvalBaseline {
  std::vector<double> unassisted;
  std::vector<double> harness;
};

/// Summary record (one line of evals.jsonl). Bucket and gap-group
/// breakdowns are included when a baseline is given.
nlohmann::ordered_json report_json(const EvalReport& report, const EvalBaseline* baseline = nullptr);

/// question_id,position,k,correct,score,mean_length,cited
void write_question_csv(std::ostream& out, const EvalReport& report);

}  // namespace hsd
