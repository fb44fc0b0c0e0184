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

// Training objectives. Every distillation method shares one pipeline: the
// student samples y from the bare prompt, a frozen teacher is conditioned on
// some context, and the loss is the length-normalised sum of per-token
// KL(teacher || student) along y. The methods differ only in the teacher
// context: the bare prompt, a static privileged prefix, a static instruction,
// or the terminal context of a harness run driven by the current student.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hsd/harness.hpp"
#include "hsd/policy.hpp"
#include "hsd/tasks.hpp"

namespace hsd {

enum class Method { kOphsd, kOpsd, kCrisp, kGrpo };

std::string method_name(Method m);
/// "ophsd" | "opsd" | "crisp" | "grpo" (case-insensitive); ConfigError otherwise.
Method parse_method(const std::string& name);

/// sum_v p(v) ln(p(v) / q(v)). Both arguments must be distributions over the
/// same support (entries >= 0, sum 1 within 1e-9). Zero entries of p
/// contribute nothing.
double token_kl(std::span<const double> p, std::span<const double> q);

enum class TeacherSource { kBareX, kStaticPrivileged, kStaticPrompt, kHarness };

struct TeacherSpec {
  PolicyParams params;
  TeacherSource source = TeacherSource::kBareX;
  /// Instruction prefix for kStaticPrompt.
  TokenSeq instruction;
  /// Required for kHarness; not owned.
  const HarnessProgram* program = nullptr;
  /// Copy the student into the teacher after every step divisible by this
  /// (0 = never).
  int sync_period = 0;
};

/// serialize([(SEP, x)]).
TokenSeq student_prompt(TokenSpan x, const Vocab& vocab);

/// Teacher context for the static sources; z is the reference solution for
/// kStaticPrivileged and ignored otherwise.
TokenSeq static_teacher_context(const TeacherSpec& teacher, TokenSpan x, TokenSpan z, const Vocab& vocab);

/// Teacher next-token distributions at context + y_<n for every n.
std::vector<Distribution> teacher_targets(const PolicyParams& teacher, TokenSpan context, TokenSpan rollout);

/// One instance with its rollout and teacher targets frozen.
struct DistillItem {
  TokenSeq student_prompt;
  TokenSeq rollout;
  TokenSeq teacher_context;
  std::vector<Distribution> teacher_dists;
  int harness_calls = 0;
};

/// (1/|y|) sum_n KL(teacher_n || p_student(. | prompt + y_<n)). Gradients
/// flow into the student only. Throws InvalidArgument on an empty rollout.
LossValue distill_loss(const PolicyParams& student, const DistillItem& item);

/// Same, with the teacher targets computed from `teacher` on the fly.
LossValue distill_loss(const PolicyParams& student, const PolicyParams& teacher, TokenSpan teacher_context,
                       TokenSpan prompt, TokenSpan rollout);

struct InstanceRef {
  const TaskInstance* instance = nullptr;
  /// Privileged input for kHarness teachers (bank snapshot or reference).
  PrivilegedInput z;
};

struct RolloutConfig {
  int max_len = 6;
  double temperature = 1.0;
};

struct PreparedBatch {
  std::vector<DistillItem> items;
  /// Batch positions of `items`.
  std::vector<std::size_t> kept;
  int dropped = 0;
};

/// Seeds used for batch position i of a step.
std::uint64_t rollout_seed(std::uint64_t step_seed, std::size_t i);
std::uint64_t harness_seed(std::uint64_t step_seed, std::size_t i);

/// Samples every rollout from `student`, materialises the teacher context
/// (running the harness with the student as driver for kHarness) and
/// evaluates the teacher targets. Instances whose harness fails or whose
/// rollout is empty are dropped and counted.
PreparedBatch prepare_distill_batch(const PolicyParams& student, const TeacherSpec& teacher,
                                    std::span<const InstanceRef> batch, const RolloutConfig& rollout,
                                    std::uint64_t step_seed);

/// Mean of distill_loss over the kept items.
LossValue batch_distill_loss(const PolicyParams& student, const PreparedBatch& batch);

// --- GRPO ------------------------------------------------------------------

using Verifier = std::function<double(const TaskInstance&, TokenSpan)>;

/// (r_i - mean) / (std + 1e-6) with the population standard deviation.
std::vector<double> group_advantages(std::span<const double> rewards);

struct GrpoItem {
  TokenSeq prompt;
  std::vector<TokenSeq> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

GrpoItem prepare_grpo_item(const PolicyParams& student, const TaskInstance& inst, const Verifier& verifier,
                           int group_size, const RolloutConfig& rollout, std::uint64_t seed);

/// -(1/B) sum_items (1/G) sum_i A_i (1/|o_i|) sum_t log p(o_i,t | prompt + o_i,<t).
LossValue grpo_loss(const PolicyParams& student, std::span<const GrpoItem> items);

/// Same as gradient_of, parallel over terms and independent of HSD_THREADS.
Gradient batch_gradient(const PolicyParams& params, const LossValue& loss);

// --- optimisation ----------------------------------------------------------

struct OptimizerConfig {
  std::string kind = "sgd";
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Plain gradient descent or Adam. State is serialisable for exact resume.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::size_t n_params);

  void step(PolicyParams& params, std::span<const double> grad);
  const OptimizerConfig& config() const { return cfg_; }
  std::int64_t steps_taken() const { return t_; }

  void write(std::ostream& out) const;
  void read(std::istream& in);

 private:
  OptimizerConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct LossReport {
  std::int64_t step = 0;
  Method method = Method::kOphsd;
  /// Mean over kept instances of the per-instance token KL (distillation).
  double mean_kl = 0.0;
  /// Policy-gradient surrogate value (GRPO).
  double pg_loss = 0.0;
  double mean_reward = 0.0;
  std::vector<double> per_instance_kl;
  std::vector<int> rollout_lengths;
  std::vector<int> harness_calls;
  double grad_norm = 0.0;
  int dropped = 0;

  double mean_rollout_len() const;
};

/// One distillation update. `method` only labels the report; the teacher
/// source decides the objective. Teacher sync (CRISP) happens after the
/// update when step % sync_period == 0.
LossReport distill_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                        Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step,
                        Method method);

LossReport ophsd_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                      Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step);
LossReport opsd_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                     Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step);
LossReport crisp_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                      Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step);

LossReport grpo_step(PolicyParams& student, std::span<const TaskInstance* const> batch, const Verifier& verifier,
                     int group_size, Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed,
                     std::int64_t step);

}  // namespace hsd
