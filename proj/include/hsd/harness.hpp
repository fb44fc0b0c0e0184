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

// Harness runtime: a harness is a deterministic, stateful program around the
// policy. It starts from init(x, z), repeatedly asks for a model call,
// folds each response into its state with a deterministic transition, and
// halts within a fixed call budget. All randomness lives in the model calls,
// whose seeds are split from the run seed by call index.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hsd/errors.hpp"
#include "hsd/memory_bank.hpp"
#include "hsd/policy.hpp"
#include "hsd/vocab.hpp"

namespace hsd {

// --- Structured contexts ---------------------------------------------------

struct ContextPart {
  Token marker = tok::kSep;
  TokenSeq payload;

  bool operator==(const ContextPart&) const = default;
};

using ContextParts = std::vector<ContextPart>;

/// SEP, DRAFT, VERIFY, PLAN and SOLVE open a part.
bool is_part_marker(Token t);

/// Tokens that may never appear inside a payload. SEP is allowed inside a
/// payload as long as it is neither the last token nor doubled; CITE is
/// plain payload.
bool is_reserved_in_payload(Token t);

/// BOS, then marker + payload + SEP per part. Throws SerializationError on
/// an illegal marker or payload.
TokenSeq serialize_context(const ContextParts& parts, const Vocab& vocab);
ContextParts deserialize_context(TokenSpan tokens, const Vocab& vocab);

/// Response up to EOS, with reserved tokens dropped, SEP runs collapsed and
/// trailing SEPs removed, so the result is always a legal payload.
TokenSeq sanitize_payload(TokenSpan response);

/// Response up to (not including) the first EOS.
TokenSeq strip_eos(TokenSpan response);

/// [(SEP, x)]: the bare prompt every student rollout starts from.
ContextParts bare_parts(TokenSpan x);
/// [(SEP, x), (SEP, z)]; the z part is omitted when z is empty.
ContextParts privileged_parts(TokenSpan x, TokenSpan z);

// --- Program model ---------------------------------------------------------

/// z(x): nothing, a memory-bank snapshot, or a reference solution.
using PrivilegedInput = std::variant<std::monostate, BankView, TokenSeq>;

struct CallRequest {
  Token role = tok::kSep;
  TokenSeq prompt;
  int max_len = 1;
  double temperature = 1.0;
};

struct CallRecord {
  Token role = tok::kSep;
  TokenSeq prompt;
  TokenSeq response;
  std::vector<Distribution> step_distributions;
  std::uint64_t seed = 0;

  bool operator==(const CallRecord&) const = default;
};

/// Named integer slots plus a call counter. Slot order is canonical (by
/// name), so the digest is stable.
struct HarnessState {
  int calls = 0;
  std::map<std::string, std::vector<std::int64_t>> slots;
  PrivilegedInput z;

  void set(const std::string& name, std::vector<std::int64_t> values) { slots[name] = std::move(values); }
  void set_tokens(const std::string& name, TokenSpan tokens);
  bool has(const std::string& name) const { return slots.count(name) != 0; }
  const std::vector<std::int64_t>& get(const std::string& name) const;
  TokenSeq tokens(const std::string& name) const;

  std::uint64_t digest() const;
};

class HarnessProgram {
 public:
  virtual ~HarnessProgram() = default;

  virtual std::string name() const = 0;
  /// Call budget T.
  virtual int max_calls() const = 0;
  /// Throws PreconditionError if z has the wrong kind for this program.
  virtual void check_input(const PrivilegedInput& z) const = 0;

  virtual HarnessState init(TokenSpan x, const PrivilegedInput& z) const = 0;
  /// nullopt means HALT.
  virtual std::optional<CallRequest> next_call(const HarnessState& state) const = 0;
  virtual HarnessState transition(const HarnessState& state, const CallRecord& call) const = 0;
  virtual TokenSeq readout(const HarnessState& state) const = 0;
  virtual ContextParts context_of(const HarnessState& state) const = 0;
};

struct HarnessTrace {
  std::string program;
  std::uint64_t seed = 0;
  std::vector<CallRecord> calls;
  /// Digest after init, then after every transition.
  std::vector<std::uint64_t> state_digests;
  ContextParts terminal_context;
  TokenSeq final_answer;
  HarnessState terminal_state;

  std::uint64_t hash() const;
};

struct HarnessResult {
  TokenSeq answer;
  HarnessTrace trace;
};

class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, HarnessTrace partial)
      : Error(ErrorCode::kBudgetExceeded, what), partial_(std::move(partial)) {}
  const HarnessTrace& partial_trace() const { return partial_; }

 private:
  HarnessTrace partial_;
};

std::uint64_t call_seed(std::uint64_t run_seed, int call_index);

HarnessResult run_harness(const HarnessProgram& program, const PolicyParams& driver, TokenSpan x,
                          const PrivilegedInput& z, std::uint64_t seed);

/// Re-runs init and every transition with the recorded responses (no model
/// calls) and returns the state digests. Throws ProgramError if a recorded
/// prompt differs from what the program asks for on replay.
std::vector<std::uint64_t> replay_state_digests(const HarnessProgram& program, TokenSpan x,
                                                const PrivilegedInput& z, const HarnessTrace& trace);

/// The trivial static wrapper: one call on serialize([(SEP, x), (SEP, z)]),
/// answer = response, terminal context = the same two parts.
class IdentityProgram : public HarnessProgram {
 public:
  IdentityProgram(Vocab vocab, int max_len, double temperature)
      : vocab_(vocab), max_len_(max_len), temperature_(temperature) {}

  std::string name() const override { return "identity"; }
  int max_calls() const override { return 1; }
  void check_input(const PrivilegedInput& z) const override;
  HarnessState init(TokenSpan x, const PrivilegedInput& z) const override;
  std::optional<CallRequest> next_call(const HarnessState& state) const override;
  HarnessState transition(const HarnessState& state, const CallRecord& call) const override;
  TokenSeq readout(const HarnessState& state) const override;
  ContextParts context_of(const HarnessState& state) const override;

 private:
  Vocab vocab_;
  int max_len_;
  double temperature_;
};

// --- Trace log -------------------------------------------------------------

/// One line: instance_id, program, seed, call_count, state_digests (hex),
/// terminal_context, final_answer.
void write_trace_record(std::ostream& out, std::string_view instance_id, const HarnessTrace& trace,
                        const Vocab& vocab);

struct TraceRecord {
  std::string instance_id;
  std::string program;
  std::uint64_t seed = 0;
  int call_count = 0;
  std::vector<std::uint64_t> state_digests;
  TokenSeq terminal_context;
  TokenSeq final_answer;
};

std::vector<TraceRecord> read_trace_log(std::istream& in);

}  // namespace hsd
