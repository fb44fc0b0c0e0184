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

#include "hsd/objectives.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "hsd/parallel.hpp"
#include "hsd/rng.hpp"

namespace hsd {

std::string method_name(Method m) {
  switch (m) {
    case Method::kOphsd: return "ophsd";
    case Method::kOpsd: return "opsd";
    case Method::kCrisp: return "crisp";
    case Method::kGrpo: return "grpo";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ophsd") return Method::kOphsd;
  if (s == "opsd") return Method::kOpsd;
  if (s == "crisp") return Method::kCrisp;
  if (s == "grpo") return Method::kGrpo;
  throw ConfigError("unknown method '" + name + "' (expected ophsd, opsd, crisp or grpo)");
}

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument(std::string(name) + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument(std::string(name) + " does not sum to 1");
}

}  // namespace

double token_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw InvalidArgument("token_kl: distributions differ in size");
  check_distribution(p, "p");
  check_distribution(q, "q");
  double kl = 0.0;
  for (std::size_t v = 0; v < p.size(); ++v) {
    if (p[v] == 0.0) continue;
    kl += p[v] * (std::log(p[v]) - std::log(q[v]));
  }
  if (!std::isfinite(kl)) throw NumericFailure("token_kl: non-finite divergence");
  return std::max(kl, 0.0);
}

TokenSeq student_prompt(TokenSpan x, const Vocab& vocab) { return serialize_context(bare_parts(x), vocab); }

TokenSeq static_teacher_context(const TeacherSpec& teacher, TokenSpan x, TokenSpan z, const Vocab& vocab) {
  switch (teacher.source) {
    case TeacherSource::kBareX:
      return student_prompt(x, vocab);
    case TeacherSource::kStaticPrivileged:
      return serialize_context(privileged_parts(x, z), vocab);
    case TeacherSource::kStaticPrompt: {
      ContextParts parts{ContextPart{tok::kSep, teacher.instruction}};
      parts.push_back(ContextPart{tok::kSep, TokenSeq(x.begin(), x.end())});
      return serialize_context(parts, vocab);
    }
    case TeacherSource::kHarness:
      break;
  }
  throw InvalidArgument("harness teacher context needs a harness run");
}

std::vector<Distribution> teacher_targets(const PolicyParams& teacher, TokenSpan context, TokenSpan rollout) {
  std::vector<Distribution> out;
  out.reserve(rollout.size());
  TokenSeq ctx(context.begin(), context.end());
  for (Token t : rollout) {
    out.push_back(next_token_distribution(teacher, ctx));
    ctx.push_back(t);
  }
  return out;
}

LossValue distill_loss(const PolicyParams& student, const DistillItem& item) {
  const std::size_t n = item.rollout.size();
  if (n == 0) throw InvalidArgument("distill_loss: empty rollout");
  if (item.teacher_dists.size() != n) throw InvalidArgument("distill_loss: one teacher target per rollout token required");
  LossValue out;
  TokenSeq ctx = item.student_prompt;
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.add(kl_to_target_term(student, ctx, item.teacher_dists[i], w, "kl@" + std::to_string(i)), 1.0);
    ctx.push_back(item.rollout[i]);
  }
  return out;
}

LossValue distill_loss(const PolicyParams& student, const PolicyParams& teacher, TokenSpan teacher_context,
                       TokenSpan prompt, TokenSpan rollout) {
  DistillItem item;
  item.student_prompt.assign(prompt.begin(), prompt.end());
  item.rollout.assign(rollout.begin(), rollout.end());
  item.teacher_context.assign(teacher_context.begin(), teacher_context.end());
  item.teacher_dists = teacher_targets(teacher, teacher_context, rollout);
  return distill_loss(student, item);
}

std::uint64_t rollout_seed(std::uint64_t step_seed, std::size_t i) {
  return derive_seed(step_seed, stream::kRollout, i);
}

std::uint64_t harness_seed(std::uint64_t step_seed, std::size_t i) {
  return derive_seed(step_seed, stream::kHarnessRun, i);
}

PreparedBatch prepare_distill_batch(const PolicyParams& student, const TeacherSpec& teacher,
                                    std::span<const InstanceRef> batch, const RolloutConfig& rollout,
                                    std::uint64_t step_seed) {
  if (teacher.source == TeacherSource::kHarness && !teacher.program) {
    throw InvalidArgument("harness teacher without a harness program");
  }
  const Vocab vocab = student.vocab();
  std::vector<std::optional<DistillItem>> slots(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    const TaskInstance& inst = *batch[i].instance;
    DistillItem item;
    item.student_prompt = student_prompt(inst.x, vocab);
    Rollout r = sample_sequence(student, item.student_prompt, rollout.max_len, rollout.temperature,
                                rollout_seed(step_seed, i));
    item.rollout = std::move(r.generated);
    if (item.rollout.empty()) return;
    if (teacher.source == TeacherSource::kHarness) {
      try {
        HarnessResult res = run_harness(*teacher.program, student, inst.x, batch[i].z, harness_seed(step_seed, i));
        item.teacher_context = serialize_context(res.trace.terminal_context, vocab);
        item.harness_calls = static_cast<int>(res.trace.calls.size());
      } catch (const BudgetExceeded&) {
        return;
      } catch (const ProgramError&) {
        return;
      } catch (const PreconditionError&) {
        return;
      } catch (const SerializationError&) {
        return;
      }
    } else {
      item.teacher_context = static_teacher_context(teacher, inst.x, inst.y_star, vocab);
    }
    item.teacher_dists = teacher_targets(teacher.params, item.teacher_context, item.rollout);
    slots[i] = std::move(item);
  });
  PreparedBatch out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      out.items.push_back(std::move(*slots[i]));
      out.kept.push_back(i);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

LossValue batch_distill_loss(const PolicyParams& student, const PreparedBatch& batch) {
  LossValue total;
  if (batch.items.empty()) return total;
  std::vector<LossValue> parts(batch.items.size());
  parallel_for(parts.size(), [&](std::size_t i) { parts[i] = distill_loss(student, batch.items[i]); });
  const double w = 1.0 / static_cast<double>(batch.items.size());
  for (const LossValue& p : parts) total.add(p, w);
  return total;
}

// --- GRPO ------------------------------------------------------------------

std::vector<double> group_advantages(std::span<const double> rewards) {
  const double n = static_cast<double>(rewards.size());
  if (rewards.empty()) return {};
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> a;
  a.reserve(rewards.size());
  for (double r : rewards) a.push_back((r - mean) / (sd + 1e-6));
  return a;
}

GrpoItem prepare_grpo_item(const PolicyParams& student, const TaskInstance& inst, const Verifier& verifier,
                           int group_size, const RolloutConfig& rollout, std::uint64_t seed) {
  if (group_size < 2) throw ConfigError("GRPO group size must be at least 2");
  GrpoItem item;
  item.prompt = student_prompt(inst.x, student.vocab());
  for (int g = 0; g < group_size; ++g) {
    Rollout r = sample_sequence(student, item.prompt, rollout.max_len, rollout.temperature,
                                derive_seed(seed, stream::kRollout, static_cast<std::uint64_t>(g)));
    item.rewards.push_back(verifier(inst, r.generated));
    item.rollouts.push_back(std::move(r.generated));
  }
  item.advantages = group_advantages(item.rewards);
  return item;
}

LossValue grpo_loss(const PolicyParams& student, std::span<const GrpoItem> items) {
  LossValue total;
  if (items.empty()) return total;
  std::vector<LossValue> parts(items.size());
  parallel_for(items.size(), [&](std::size_t b) {
    const GrpoItem& item = items[b];
    const double g = static_cast<double>(item.rollouts.size());
    for (std::size_t i = 0; i < item.rollouts.size(); ++i) {
      const TokenSeq& o = item.rollouts[i];
      if (o.empty() || item.advantages[i] == 0.0) continue;
      const double w = item.advantages[i] / (g * static_cast<double>(o.size()));
      TokenSeq ctx = item.prompt;
      for (std::size_t t = 0; t < o.size(); ++t) {
        parts[b].add(neg_log_prob_term(student, ctx, o[t], w, "pg@" + std::to_string(i) + "." + std::to_string(t)), 1.0);
        ctx.push_back(o[t]);
      }
    }
  });
  const double w = 1.0 / static_cast<double>(items.size());
  for (const LossValue& p : parts) total.add(p, w);
  return total;
}

// --- optimiser -------------------------------------------------------------

void OptimizerConfig::validate() const {
  if (kind != "sgd" && kind != "adam") throw ConfigError("train.optimizer must be \"sgd\" or \"adam\"");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be a finite non-negative number");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw ConfigError("invalid Adam hyper-parameters");
  }
}

Optimizer::Optimizer(OptimizerConfig cfg, std::size_t n_params) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.kind == "adam") {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

void Optimizer::step(PolicyParams& params, std::span<const double> grad) {
  auto w = params.mutable_weights();
  if (grad.size() != w.size()) throw InvalidArgument("gradient size does not match parameters");
  ++t_;
  if (cfg_.kind == "sgd") {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg_.lr * grad[i];
    return;
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

void Optimizer::write(std::ostream& out) const {
  const std::uint64_t n = m_.size();
  out.write(reinterpret_cast<const char*>(&t_), sizeof t_);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(m_.data()), static_cast<std::streamsize>(n * sizeof(double)));
  out.write(reinterpret_cast<const char*>(v_.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!out) throw IoError("failed to write optimizer state");
}

void Optimizer::read(std::istream& in) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&t_), sizeof t_);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n != m_.size()) throw IoError("optimizer state does not match the configuration");
  in.read(reinterpret_cast<char*>(m_.data()), static_cast<std::streamsize>(n * sizeof(double)));
  in.read(reinterpret_cast<char*>(v_.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("truncated optimizer state");
}

// --- steps -----------------------------------------------------------------

double LossReport::mean_rollout_len() const {
  if (rollout_lengths.empty()) return 0.0;
  return std::accumulate(rollout_lengths.begin(), rollout_lengths.end(), 0.0) /
         static_cast<double>(rollout_lengths.size());
}

namespace {

constexpr std::size_t kTermsPerBlock = 16;

}  // namespace

// Per-term gradients are summed in fixed blocks so the result does not depend
// on the worker count.
Gradient batch_gradient(const PolicyParams& params, const LossValue& loss) {
  check_finite(loss);
  const std::size_t blocks = (loss.terms.size() + kTermsPerBlock - 1) / kTermsPerBlock;
  std::vector<Gradient> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    partial[b].assign(params.size(), 0.0);
    const std::size_t end = std::min(loss.terms.size(), (b + 1) * kTermsPerBlock);
    for (std::size_t i = b * kTermsPerBlock; i < end; ++i) {
      accumulate_logit_gradient(params, loss.terms[i].context, loss.terms[i].dlogits, partial[b]);
    }
  });
  Gradient g(params.size(), 0.0);
  for (const Gradient& p : partial) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += p[i];
  }
  return g;
}

LossReport distill_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                        Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step,
                        Method method) {
  PreparedBatch prepared = prepare_distill_batch(student, teacher, batch, rollout, step_seed);
  LossReport report;
  report.step = step;
  report.method = method;
  report.dropped = prepared.dropped;
  for (const DistillItem& item : prepared.items) {
    report.rollout_lengths.push_back(static_cast<int>(item.rollout.size()));
    report.harness_calls.push_back(item.harness_calls);
  }
  const LossValue loss = batch_distill_loss(student, prepared);
  for (std::size_t i = 0; i < prepared.items.size(); ++i) {
    double v = 0.0;
    const std::size_t n = prepared.items[i].rollout.size();
    // Per-instance value: the terms of item i are consecutive and n long.
    std::size_t first = 0;
    for (std::size_t j = 0; j < i; ++j) first += prepared.items[j].rollout.size();
    for (std::size_t k = 0; k < n; ++k) v += loss.terms[first + k].value;
    report.per_instance_kl.push_back(v * static_cast<double>(prepared.items.size()));
  }
  report.mean_kl = std::max(0.0, loss.value);
  const Gradient g = batch_gradient(student, loss);
  report.grad_norm = l2_norm(g);
  opt.step(student, g);
  if (teacher.sync_period > 0 && step % teacher.sync_period == 0) teacher.params = student;
  return report;
}

LossReport ophsd_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                      Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step) {
  if (teacher.source != TeacherSource::kHarness) throw InvalidArgument("ophsd_step needs a harness teacher");
  return distill_step(student, teacher, batch, opt, rollout, step_seed, step, Method::kOphsd);
}

LossReport opsd_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                     Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step) {
  if (teacher.source != TeacherSource::kStaticPrivileged) {
    throw InvalidArgument("opsd_step needs a static privileged teacher");
  }
  return distill_step(student, teacher, batch, opt, rollout, step_seed, step, Method::kOpsd);
}

LossReport crisp_step(PolicyParams& student, TeacherSpec& teacher, std::span<const InstanceRef> batch,
                      Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed, std::int64_t step) {
  if (teacher.source != TeacherSource::kStaticPrompt) throw InvalidArgument("crisp_step needs a static prompt teacher");
  return distill_step(student, teacher, batch, opt, rollout, step_seed, step, Method::kCrisp);
}

LossReport grpo_step(PolicyParams& student, std::span<const TaskInstance* const> batch, const Verifier& verifier,
                     int group_size, Optimizer& opt, const RolloutConfig& rollout, std::uint64_t step_seed,
                     std::int64_t step) {
  std::vector<GrpoItem> items(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    items[i] = prepare_grpo_item(student, *batch[i], verifier, group_size, rollout,
                                 derive_seed(step_seed, stream::kGroup, i));
  });
  LossReport report;
  report.step = step;
  report.method = Method::kGrpo;
  double reward_sum = 0.0;
  std::size_t rollouts = 0;
  for (const GrpoItem& item : items) {
    for (std::size_t i = 0; i < item.rollouts.size(); ++i) {
      report.rollout_lengths.push_back(static_cast<int>(item.rollouts[i].size()));
      reward_sum += item.rewards[i];
      ++rollouts;
    }
  }
  report.mean_reward = rollouts ? reward_sum / static_cast<double>(rollouts) : 0.0;
  const LossValue loss = grpo_loss(student, items);
  report.pg_loss = loss.value;
  const Gradient g = batch_gradient(student, loss);
  report.grad_norm = l2_norm(g);
  opt.step(student, g);
  return report;
}

}  // namespace hsd
