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

#include "hsd/warmup.hpp"

#include <algorithm>
#include <map>

#include "hsd/parallel.hpp"
#include "hsd/rng.hpp"

namespace hsd {

void WarmupConfig::validate() const {
  if (steps < 0) throw ConfigError("warmup.steps must be non-negative");
  if (batch_size < 1) throw ConfigError("warmup.batch_size must be positive");
  if (!(lr >= 0.0)) throw ConfigError("warmup.lr must be non-negative");
  if (episode_bank < 1) throw ConfigError("warmup.episode_bank must be positive");
  if (!(draft_corruption >= 0.0 && draft_corruption <= 1.0)) {
    throw ConfigError("warmup.draft_corruption must lie in [0, 1]");
  }
}

TokenSeq vote_label(const std::vector<const BankEntry*>& entries) {
  std::map<TokenSeq, int> counts;
  for (const BankEntry* e : entries) ++counts[e->y];
  TokenSeq best;
  int best_count = 0;
  for (const BankEntry* e : entries) {
    const int c = counts[e->y];
    if (c > best_count) {
      best = e->y;
      best_count = c;
    }
  }
  return best;
}

TokenSeq verify_response(const MemoryBank& bank, std::span<const std::int64_t> confirmers,
                         std::span<const std::int64_t> challengers, Token answer) {
  TokenSeq out;
  const std::int64_t* cited = !confirmers.empty() ? &confirmers[0] : (!challengers.empty() ? &challengers[0] : nullptr);
  if (cited) {
    out.push_back(tok::kCite);
    out.push_back(bank.at(*cited).x.at(0));
    out.push_back(tok::kSep);
  }
  out.push_back(answer);
  out.push_back(tok::kEos);
  return out;
}

namespace {

std::vector<std::int64_t> arrivals(const std::vector<const BankEntry*>& entries) {
  std::vector<std::int64_t> out;
  for (const BankEntry* e : entries) out.push_back(e->arrival);
  return out;
}

TokenSeq with_eos(TokenSeq s) {
  s.push_back(tok::kEos);
  return s;
}

WarmupExample classify_example(const Dataset& shape, const DraftVerifyConfig& dv, const WarmupConfig& cfg,
                               std::uint64_t seed) {
  const ClassifyParams& task = shape.classify;
  const auto layout = ClassifyLayout::make(task.vocab, task.n_classes);
  const Vocab vocab(task.vocab);
  Rng rng(seed);
  const auto protos = make_prototypes(derive_seed(seed, stream::kWarmup, 1), task);
  auto draw = [&](int cls) {
    TokenSeq x = protos[static_cast<std::size_t>(cls)];
    for (Token& t : x) {
      if (rng.bernoulli(task.noise)) {
        t = layout.first_symbol + static_cast<Token>(rng.below(static_cast<std::size_t>(layout.n_symbols)));
      }
    }
    return x;
  };
  auto random_class = [&] { return static_cast<int>(rng.below(static_cast<std::size_t>(task.n_classes))); };

  const int cls = random_class();
  const TokenSeq x = draw(cls);
  const Token label = layout.label_token(cls);

  WarmupExample ex;
  const double u = rng.uniform();
  if (u < 0.15) {
    ex.format = WarmupFormat::kBare;
    ex.prompt = serialize_context(bare_parts(x), vocab);
    ex.response = {label, tok::kEos};
    return ex;
  }
  if (u < 0.30) {
    ex.format = WarmupFormat::kPrivileged;
    ex.prompt = serialize_context(privileged_parts(x, TokenSeq{label}), vocab);
    ex.response = {label, tok::kEos};
    return ex;
  }

  MemoryBank bank(dv.cold_start);
  const int n_bank = std::max(dv.cold_start, cfg.episode_bank);
  for (int i = 0; i < n_bank; ++i) {
    const int c = random_class();
    bank.insert(draw(c), TokenSeq{layout.label_token(c)});
  }
  const std::int64_t visible = static_cast<std::int64_t>(bank.size());
  const Embedding q = embed(x);
  const auto nd = bank.top_k(q, dv.k_d, visible);
  TokenSeq draft = vote_label(nd);
  const DraftVerifyProgram program(vocab, dv);

  if (u < 0.60) {
    ex.format = WarmupFormat::kDraft;
    ex.prompt = program.draft_prompt(x, bank, arrivals(nd));
    ex.response = with_eos(draft);
    return ex;
  }
  if (rng.bernoulli(cfg.draft_corruption)) draft = {layout.label_token(random_class())};
  const auto split = bank.confirmers_challengers(q, draft, dv.k_plus, dv.k_minus, visible);
  const auto np = arrivals(split.confirmers);
  const auto nm = arrivals(split.challengers);
  ContextParts parts = bare_parts(x);
  parts.push_back({tok::kDraft, draft});
  parts.push_back({tok::kVerify, render_neighbors(bank, np)});
  parts.push_back({tok::kVerify, render_neighbors(bank, nm)});
  ex.format = WarmupFormat::kVerify;
  ex.prompt = serialize_context(parts, vocab);
  ex.response = verify_response(bank, np, nm, label);
  return ex;
}

WarmupExample arith_example(const Dataset& shape, std::uint64_t seed) {
  ChainArithParams p = shape.arith;
  p.n_train = 1;
  p.n_test = 0;
  const Dataset one = gen_chain_arithmetic(seed, p);
  const TaskInstance& inst = one.train.at(0);
  const Vocab vocab(p.vocab);
  Rng rng(derive_seed(seed, stream::kWarmup, 2));
  const TokenSeq sketch = plan_sketch_oracle(inst);
  WarmupExample ex;
  const double u = rng.uniform();
  if (u < 0.2) {
    ex.format = WarmupFormat::kBare;
    ex.prompt = serialize_context(bare_parts(inst.x), vocab);
    ex.response = with_eos(inst.y_star);
  } else if (u < 0.4) {
    ex.format = WarmupFormat::kPrivileged;
    ex.prompt = serialize_context(privileged_parts(inst.x, inst.y_star), vocab);
    ex.response = with_eos(inst.y_star);
  } else if (u < 0.55) {
    ex.format = WarmupFormat::kPlan;
    ex.prompt = serialize_context(PlanSolveProgram::plan_parts(inst.x, TokenSpan(inst.y_star)), vocab);
    ex.response = with_eos(sketch);
  } else if (u < 0.7) {
    ex.format = WarmupFormat::kPlanFree;
    ex.prompt = serialize_context(PlanSolveProgram::plan_parts(inst.x, std::nullopt), vocab);
    ex.response = with_eos(sketch);
  } else {
    ex.format = WarmupFormat::kSolve;
    ContextParts parts = bare_parts(inst.x);
    parts.push_back({tok::kPlan, sketch});
    ex.prompt = serialize_context(parts, vocab);
    ex.response = with_eos(inst.y_star);
  }
  return ex;
}

}  // namespace

WarmupExample warmup_example(const Dataset& shape, const DraftVerifyConfig& dv, const PlanSolveConfig& ps,
                             const WarmupConfig& cfg, std::uint64_t seed) {
  (void)ps;
  if (shape.family == TaskFamily::kClassify) return classify_example(shape, dv, cfg, seed);
  return arith_example(shape, seed);
}

LossValue warmup_loss(const PolicyParams& params, std::span<const WarmupExample> batch) {
  LossValue total;
  if (batch.empty()) return total;
  std::vector<LossValue> parts(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    const WarmupExample& ex = batch[i];
    TokenSeq ctx = ex.prompt;
    const double w = 1.0 / static_cast<double>(ex.response.size());
    for (Token t : ex.response) {
      parts[i].add(neg_log_prob_term(params, ctx, t, w), 1.0);
      ctx.push_back(t);
    }
  });
  for (const LossValue& p : parts) total.add(p, 1.0 / static_cast<double>(batch.size()));
  return total;
}

void run_warmup(PolicyParams& params, const Dataset& shape, const DraftVerifyConfig& dv, const PlanSolveConfig& ps,
                const WarmupConfig& cfg, std::uint64_t seed, const WarmupCallback& on_step) {
  cfg.validate();
  OptimizerConfig oc;
  oc.kind = "adam";
  oc.lr = cfg.lr;
  Optimizer opt(oc, params.size());
  for (int step = 1; step <= cfg.steps; ++step) {
    const std::uint64_t step_seed = derive_seed(seed, stream::kWarmup, static_cast<std::uint64_t>(step) + 16);
    std::vector<WarmupExample> batch(static_cast<std::size_t>(cfg.batch_size));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i] = warmup_example(shape, dv, ps, cfg, derive_seed(step_seed, stream::kData, i));
    }
    const LossValue loss = warmup_loss(params, batch);
    opt.step(params, batch_gradient(params, loss));
    if (on_step) on_step(step, loss.value);
  }
}

}  // namespace hsd
