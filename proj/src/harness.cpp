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

#include "hsd/harness.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "hsd/rng.hpp"

namespace hsd {

bool is_part_marker(Token t) {
  return t == tok::kSep || t == tok::kDraft || t == tok::kVerify || t == tok::kPlan ||
         t == tok::kSolve;
}

bool is_reserved_in_payload(Token t) {
  return t == tok::kBos || t == tok::kEos || t == tok::kDraft || t == tok::kVerify ||
         t == tok::kPlan || t == tok::kSolve;
}

namespace {

void check_payload(const ContextPart& part, std::size_t index, const Vocab& vocab) {
  const auto& p = part.payload;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::string where = "part " + std::to_string(index) + " position " + std::to_string(i);
    if (!vocab.contains(p[i])) throw SerializationError("token out of vocabulary at " + where);
    if (is_reserved_in_payload(p[i])) {
      throw SerializationError("reserved marker " + Vocab::token_name(p[i]) + " inside payload at " + where);
    }
    if (p[i] == tok::kSep && (i + 1 == p.size() || p[i + 1] == tok::kSep)) {
      throw SerializationError("trailing or doubled separator inside payload at " + where);
    }
  }
}

}  // namespace

TokenSeq serialize_context(const ContextParts& parts, const Vocab& vocab) {
  TokenSeq out{tok::kBos};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!is_part_marker(parts[i].marker)) {
      throw SerializationError("part " + std::to_string(i) + " has non-role marker " +
                               Vocab::token_name(parts[i].marker));
    }
    check_payload(parts[i], i, vocab);
    out.push_back(parts[i].marker);
    out.insert(out.end(), parts[i].payload.begin(), parts[i].payload.end());
    out.push_back(tok::kSep);
  }
  return out;
}

ContextParts deserialize_context(TokenSpan s, const Vocab& vocab) {
  vocab.check(s);
  if (s.empty() || s[0] != tok::kBos) throw SerializationError("context must start with BOS");
  ContextParts parts;
  std::size_t i = 1;
  while (i < s.size()) {
    if (!is_part_marker(s[i])) {
      throw SerializationError("expected a role marker at position " + std::to_string(i));
    }
    ContextPart part{s[i], {}};
    ++i;
    bool closed = false;
    while (i < s.size()) {
      const Token t = s[i];
      if (t == tok::kSep && (i + 1 == s.size() || is_part_marker(s[i + 1]))) {
        ++i;
        closed = true;
        break;
      }
      if (is_reserved_in_payload(t)) {
        throw SerializationError("reserved marker inside payload at position " + std::to_string(i));
      }
      part.payload.push_back(t);
      ++i;
    }
    if (!closed) throw SerializationError("unterminated part at end of context");
    parts.push_back(std::move(part));
  }
  return parts;
}

TokenSeq strip_eos(TokenSpan response) {
  TokenSeq out;
  for (Token t : response) {
    if (t == tok::kEos) break;
    out.push_back(t);
  }
  return out;
}

TokenSeq sanitize_payload(TokenSpan response) {
  TokenSeq out;
  for (Token t : response) {
    if (t == tok::kEos) break;
    if (is_reserved_in_payload(t)) continue;
    if (t == tok::kSep && (out.empty() ? false : out.back() == tok::kSep)) continue;
    out.push_back(t);
  }
  while (!out.empty() && out.back() == tok::kSep) out.pop_back();
  return out;
}

ContextParts bare_parts(TokenSpan x) { return {ContextPart{tok::kSep, TokenSeq(x.begin(), x.end())}}; }

ContextParts privileged_parts(TokenSpan x, TokenSpan z) {
  ContextParts parts = bare_parts(x);
  if (!z.empty()) parts.push_back(ContextPart{tok::kSep, TokenSeq(z.begin(), z.end())});
  return parts;
}

// --- state -----------------------------------------------------------------

void HarnessState::set_tokens(const std::string& name, TokenSpan tokens) {
  slots[name] = std::vector<std::int64_t>(tokens.begin(), tokens.end());
}

const std::vector<std::int64_t>& HarnessState::get(const std::string& name) const {
  auto it = slots.find(name);
  if (it == slots.end()) throw ProgramError("harness state has no slot '" + name + "'");
  return it->second;
}

TokenSeq HarnessState::tokens(const std::string& name) const {
  const auto& v = get(name);
  return TokenSeq(v.begin(), v.end());
}

std::uint64_t HarnessState::digest() const {
  Fnv1a h;
  h.add_i64(calls);
  h.add_u64(slots.size());
  for (const auto& [name, values] : slots) {
    h.add_string(name);
    h.add_u64(values.size());
    for (auto v : values) h.add_i64(v);
  }
  std::visit(
      [&](const auto& z) {
        using T = std::decay_t<decltype(z)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          h.add_u64(0);
        } else if constexpr (std::is_same_v<T, BankView>) {
          h.add_u64(1);
          h.add_i64(z.visible_before);
          h.add_u64(z.bank ? z.bank->visible_count(z.visible_before) : 0);
        } else {
          h.add_u64(2);
          h.add_u64(z.size());
          for (Token t : z) h.add_i64(t);
        }
      },
      z);
  return h.value();
}

std::uint64_t HarnessTrace::hash() const {
  Fnv1a h;
  h.add_string(program);
  h.add_u64(seed);
  h.add_u64(calls.size());
  for (const CallRecord& c : calls) {
    h.add_i64(c.role);
    h.add_u64(c.seed);
    h.add_u64(c.prompt.size());
    for (Token t : c.prompt) h.add_i64(t);
    h.add_u64(c.response.size());
    for (Token t : c.response) h.add_i64(t);
    for (const auto& d : c.step_distributions) {
      for (double p : d) h.add_double(p);
    }
  }
  for (auto d : state_digests) h.add_u64(d);
  for (const ContextPart& p : terminal_context) {
    h.add_i64(p.marker);
    h.add_u64(p.payload.size());
    for (Token t : p.payload) h.add_i64(t);
  }
  h.add_u64(final_answer.size());
  for (Token t : final_answer) h.add_i64(t);
  return h.value();
}

// --- execution -------------------------------------------------------------

std::uint64_t call_seed(std::uint64_t run_seed, int call_index) {
  return derive_seed(run_seed, stream::kHarnessCall, static_cast<std::uint64_t>(call_index));
}

namespace {

void validate_request(const CallRequest& req, const Vocab& vocab, const std::string& program) {
  if (req.prompt.empty()) throw ProgramError(program + ": call request with empty prompt");
  for (Token t : req.prompt) {
    if (!vocab.contains(t)) throw ProgramError(program + ": call prompt token " + std::to_string(t) + " out of vocabulary");
  }
  if (req.max_len < 1) throw ProgramError(program + ": call request max_len < 1");
  if (!(req.temperature >= 0.0) || !std::isfinite(req.temperature)) {
    throw ProgramError(program + ": call request has invalid temperature");
  }
}

}  // namespace

HarnessResult run_harness(const HarnessProgram& program, const PolicyParams& driver, TokenSpan x,
                          const PrivilegedInput& z, std::uint64_t seed) {
  const Vocab vocab = driver.vocab();
  vocab.check(x);
  program.check_input(z);

  HarnessTrace trace;
  trace.program = program.name();
  trace.seed = seed;
  HarnessState state = program.init(x, z);
  trace.state_digests.push_back(state.digest());

  int calls = 0;
  while (auto req = program.next_call(state)) {
    if (calls >= program.max_calls()) {
      trace.terminal_state = state;
      throw BudgetExceeded(program.name() + ": call budget of " + std::to_string(program.max_calls()) +
                               " exhausted before HALT",
                           std::move(trace));
    }
    validate_request(*req, vocab, program.name());
    const std::uint64_t s = call_seed(seed, calls);
    Rollout r = sample_sequence(driver, req->prompt, req->max_len, req->temperature, s);
    CallRecord rec{req->role, std::move(req->prompt), std::move(r.generated),
                   std::move(r.step_distributions), s};
    state = program.transition(state, rec);
    trace.state_digests.push_back(state.digest());
    trace.calls.push_back(std::move(rec));
    ++calls;
  }
  trace.terminal_context = program.context_of(state);
  trace.final_answer = program.readout(state);
  trace.terminal_state = state;
  HarnessResult out;
  out.answer = trace.final_answer;
  out.trace = std::move(trace);
  return out;
}

std::vector<std::uint64_t> replay_state_digests(const HarnessProgram& program, TokenSpan x,
                                                const PrivilegedInput& z, const HarnessTrace& trace) {
  std::vector<std::uint64_t> digests;
  HarnessState state = program.init(x, z);
  digests.push_back(state.digest());
  for (const CallRecord& rec : trace.calls) {
    auto req = program.next_call(state);
    if (!req) throw ProgramError("replay: program halted before recorded call");
    if (req->prompt != rec.prompt || req->role != rec.role) {
      throw ProgramError("replay: recorded call prompt differs from the program's request");
    }
    state = program.transition(state, rec);
    digests.push_back(state.digest());
  }
  if (program.next_call(state)) throw ProgramError("replay: program asks for more calls than recorded");
  return digests;
}

// --- identity wrapper ------------------------------------------------------

void IdentityProgram::check_input(const PrivilegedInput& z) const {
  if (std::holds_alternative<BankView>(z)) {
    throw PreconditionError("identity program takes a token sequence or no privileged input");
  }
}

HarnessState IdentityProgram::init(TokenSpan x, const PrivilegedInput& z) const {
  HarnessState s;
  s.z = z;
  s.set_tokens("x", x);
  if (const auto* ref = std::get_if<TokenSeq>(&z)) {
    s.set_tokens("z", *ref);
  } else {
    s.set("z", {});
  }
  return s;
}

std::optional<CallRequest> IdentityProgram::next_call(const HarnessState& state) const {
  if (state.calls > 0) return std::nullopt;
  return CallRequest{tok::kSep, serialize_context(context_of(state), vocab_), max_len_, temperature_};
}

HarnessState IdentityProgram::transition(const HarnessState& state, const CallRecord& call) const {
  HarnessState next = state;
  next.calls += 1;
  next.set_tokens("response", call.response);
  return next;
}

TokenSeq IdentityProgram::readout(const HarnessState& state) const {
  return strip_eos(state.tokens("response"));
}

ContextParts IdentityProgram::context_of(const HarnessState& state) const {
  return privileged_parts(state.tokens("x"), state.tokens("z"));
}

// --- trace log -------------------------------------------------------------

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void write_trace_record(std::ostream& out, std::string_view instance_id, const HarnessTrace& trace,
                        const Vocab& vocab) {
  nlohmann::json j;
  j["instance_id"] = std::string(instance_id);
  j["program"] = trace.program;
  j["seed"] = trace.seed;
  j["call_count"] = trace.calls.size();
  std::vector<std::string> digests;
  for (auto d : trace.state_digests) digests.push_back(hex64(d));
  j["state_digests"] = digests;
  j["terminal_context"] = serialize_context(trace.terminal_context, vocab);
  j["final_answer"] = trace.final_answer;
  out << j.dump() << '\n';
}

std::vector<TraceRecord> read_trace_log(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      TraceRecord r;
      r.instance_id = j.at("instance_id").get<std::string>();
      r.program = j.at("program").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.call_count = j.at("call_count").get<int>();
      for (const auto& d : j.at("state_digests")) {
        r.state_digests.push_back(std::stoull(d.get<std::string>(), nullptr, 16));
      }
      r.terminal_context = j.at("terminal_context").get<TokenSeq>();
      r.final_answer = j.at("final_answer").get<TokenSeq>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw SerializationError("trace log line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw SerializationError("trace log line " + std::to_string(lineno) + ": bad state digest");
    }
  }
  return out;
}

}  // namespace hsd
