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

#include "hsd/harnesses.hpp"

#include <algorithm>
#include <cmath>


namespace hsd {

namespace {

void check_temperature(double t, const char* key) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError(std::string(key) + " must be a finite non-negative number");
}

std::vector<std::int64_t> arrivals_of(const std::vector<const BankEntry*>& entries) {
  std::vector<std::int64_t> out;
  out.reserve(entries.size());
  for (const BankEntry* e : entries) out.push_back(e->arrival);
  return out;
}

}  // namespace

void DraftVerifyConfig::validate() const {
  if (k_d < 1 || k_plus < 1 || k_minus < 1) throw ConfigError("draft_verify: k_d, k_plus and k_minus must be >= 1");
  if (draft_max_len < 1 || verify_max_len < 1) throw ConfigError("draft_verify: max lengths must be positive");
  if (cold_start < 0) throw ConfigError("draft_verify.cold_start must be non-negative");
  check_temperature(temperature, "draft_verify.temperature");
}

void PlanSolveConfig::validate() const {
  if (plan_max_len < 1 || solve_max_len < 1) throw ConfigError("plan_solve: max lengths must be positive");
  check_temperature(plan_temperature, "plan_solve.plan_temperature");
  check_temperature(solve_temperature, "plan_solve.solve_temperature");
}

TokenSeq render_neighbors(const MemoryBank& bank, std::span<const std::int64_t> arrivals) {
  TokenSeq out;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const BankEntry& e = bank.at(arrivals[i]);
    if (i > 0) out.push_back(tok::kSep);
    out.insert(out.end(), e.x.begin(), e.x.end());
    out.push_back(tok::kSep);
    out.insert(out.end(), e.y.begin(), e.y.end());
  }
  return out;
}

// --- draft-verify ----------------------------------------------------------

DraftVerifyProgram::DraftVerifyProgram(Vocab vocab, DraftVerifyConfig cfg) : vocab_(vocab), cfg_(cfg) {
  cfg_.validate();
}

void DraftVerifyProgram::check_input(const PrivilegedInput& z) const {
  const auto* view = std::get_if<BankView>(&z);
  if (!view || !view->bank) throw PreconditionError("draft_verify needs a memory-bank snapshot as privileged input");
}

const MemoryBank& DraftVerifyProgram::bank_of(const HarnessState& state) {
  const auto* view = std::get_if<BankView>(&state.z);
  if (!view || !view->bank) throw ProgramError("draft_verify state lost its memory bank");
  return *view->bank;
}

TokenSeq DraftVerifyProgram::draft_prompt(TokenSpan x, const MemoryBank& bank,
                                          std::span<const std::int64_t> neighbours) const {
  ContextParts parts = bare_parts(x);
  parts.push_back({tok::kDraft, render_neighbors(bank, neighbours)});
  return serialize_context(parts, vocab_);
}

HarnessState DraftVerifyProgram::init(TokenSpan x, const PrivilegedInput& z) const {
  check_input(z);
  const BankView view = std::get<BankView>(z);
  HarnessState s;
  s.z = z;
  s.set_tokens("x", x);
  const bool warm = view.bank->visible_count(view.visible_before) >= static_cast<std::size_t>(cfg_.cold_start);
  s.set("mode", {warm ? 1 : 0});
  if (warm) {
    const auto nd = view.bank->top_k(embed(x), cfg_.k_d, view.visible_before);
    s.set("nd", arrivals_of(nd));
  }
  return s;
}

std::optional<CallRequest> DraftVerifyProgram::next_call(const HarnessState& state) const {
  const bool warm = state.get("mode").at(0) == 1;
  const TokenSeq x = state.tokens("x");
  if (!warm) {
    if (state.calls > 0) return std::nullopt;
    return CallRequest{tok::kSep, serialize_context(bare_parts(x), vocab_), cfg_.verify_max_len, cfg_.temperature};
  }
  if (state.calls == 0) {
    const auto& nd = state.get("nd");
    return CallRequest{tok::kDraft, draft_prompt(x, bank_of(state), nd), cfg_.draft_max_len, cfg_.temperature};
  }
  if (state.calls == 1) {
    return CallRequest{tok::kVerify, serialize_context(context_of(state), vocab_), cfg_.verify_max_len,
                       cfg_.temperature};
  }
  return std::nullopt;
}

HarnessState DraftVerifyProgram::transition(const HarnessState& state, const CallRecord& call) const {
  HarnessState next = state;
  next.calls += 1;
  const bool warm = state.get("mode").at(0) == 1;
  if (!warm || state.calls == 1) {
    next.set_tokens("response", call.response);
    return next;
  }
  const MemoryBank& bank = bank_of(state);
  const std::int64_t visible = std::get<BankView>(state.z).visible_before;
  const TokenSeq draft_label = sanitize_payload(call.response);
  next.set_tokens("draft", draft_label);

  const Embedding q = embed(state.tokens("x"));
  const auto labels = bank.visible_labels(visible);
  const bool known = !draft_label.empty() && std::find(labels.begin(), labels.end(), draft_label) != labels.end();
  if (known) {
    const auto split = bank.confirmers_challengers(q, draft_label, cfg_.k_plus, cfg_.k_minus, visible);
    next.set("np", arrivals_of(split.confirmers));
    next.set("nm", arrivals_of(split.challengers));
  } else {
    next.set("np", {});
    next.set("nm", arrivals_of(bank.top_k(q, cfg_.k_minus, visible)));
  }
  return next;
}

TokenSeq DraftVerifyProgram::readout(const HarnessState& state) const {
  return strip_eos(state.tokens("response"));
}

ContextParts DraftVerifyProgram::context_of(const HarnessState& state) const {
  const TokenSeq x = state.tokens("x");
  if (state.get("mode").at(0) == 0) return bare_parts(x);
  if (!state.has("np")) {
    ContextParts parts = bare_parts(x);
    parts.push_back({tok::kDraft, render_neighbors(bank_of(state), state.get("nd"))});
    return parts;
  }
  const MemoryBank& bank = bank_of(state);
  ContextParts parts = bare_parts(x);
  parts.push_back({tok::kDraft, state.tokens("draft")});
  parts.push_back({tok::kVerify, render_neighbors(bank, state.get("np"))});
  parts.push_back({tok::kVerify, render_neighbors(bank, state.get("nm"))});
  return parts;
}

HarnessResult draft_verify(const PolicyParams& driver, TokenSpan x, const MemoryBank& bank,
                           std::int64_t visible_before, const DraftVerifyConfig& cfg, std::uint64_t seed) {
  DraftVerifyProgram program(driver.vocab(), cfg);
  return run_harness(program, driver, x, BankView{&bank, visible_before}, seed);
}

// --- plan-solve ------------------------------------------------------------

PlanSolveProgram::PlanSolveProgram(Vocab vocab, PlanSolveConfig cfg) : vocab_(vocab), cfg_(cfg) {
  cfg_.validate();
}

void PlanSolveProgram::check_input(const PrivilegedInput& z) const {
  if (std::holds_alternative<BankView>(z)) throw PreconditionError("plan_solve does not take a memory bank");
  const bool has_ref = std::holds_alternative<TokenSeq>(z);
  if (cfg_.privileged && !has_ref) {
    throw PreconditionError("privileged plan_solve needs the reference solution as privileged input");
  }
  if (!cfg_.privileged && has_ref) {
    throw PreconditionError("privilege-free plan_solve must not receive a reference solution");
  }
}

ContextParts PlanSolveProgram::plan_parts(TokenSpan x, std::optional<TokenSpan> y_star) {
  ContextParts parts = bare_parts(x);
  if (y_star && !y_star->empty()) parts.push_back({tok::kSep, TokenSeq(y_star->begin(), y_star->end())});
  parts.push_back({tok::kPlan, {}});
  return parts;
}

HarnessState PlanSolveProgram::init(TokenSpan x, const PrivilegedInput& z) const {
  check_input(z);
  HarnessState s;
  s.z = z;
  s.set_tokens("x", x);
  return s;
}

std::optional<CallRequest> PlanSolveProgram::next_call(const HarnessState& state) const {
  const TokenSeq x = state.tokens("x");
  if (state.calls == 0) {
    std::optional<TokenSpan> ref;
    if (const auto* z = std::get_if<TokenSeq>(&state.z)) ref = TokenSpan(*z);
    return CallRequest{tok::kPlan, serialize_context(plan_parts(x, ref), vocab_), cfg_.plan_max_len,
                       cfg_.plan_temperature};
  }
  if (state.calls == 1) {
    return CallRequest{tok::kSolve, serialize_context(context_of(state), vocab_), cfg_.solve_max_len,
                       cfg_.solve_temperature};
  }
  return std::nullopt;
}

HarnessState PlanSolveProgram::transition(const HarnessState& state, const CallRecord& call) const {
  HarnessState next = state;
  next.calls += 1;
  if (state.calls == 0) {
    next.set_tokens("plan", sanitize_payload(call.response));
  } else {
    next.set_tokens("response", call.response);
  }
  return next;
}

TokenSeq PlanSolveProgram::readout(const HarnessState& state) const {
  return strip_eos(state.tokens("response"));
}

ContextParts PlanSolveProgram::context_of(const HarnessState& state) const {
  ContextParts parts = bare_parts(state.tokens("x"));
  parts.push_back({tok::kPlan, state.has("plan") ? state.tokens("plan") : TokenSeq{}});
  return parts;
}

HarnessResult plan_solve(const PolicyParams& driver, TokenSpan x, std::optional<TokenSeq> y_star,
                         const PlanSolveConfig& cfg, std::uint64_t seed) {
  PlanSolveProgram program(driver.vocab(), cfg);
  PrivilegedInput z;
  if (y_star) z = std::move(*y_star);
  return run_harness(program, driver, x, z, seed);
}

}  // namespace hsd
