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

#include <cstring>
#include <sstream>

#include "hsd/errors.hpp"
#include "hsd/rng.hpp"
#include "hsd/vocab.hpp"

namespace hsd {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kNumeric: return "numeric-failure";
    case ErrorCode::kInvalidToken: return "invalid-token";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kProgram: return "program";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kSerialization: return "serialization";
    case ErrorCode::kPrecondition: return "precondition";
  }
  return "unknown";
}

Vocab::Vocab(int size) : size_(size) {
  if (size < kMinSize || size > kMaxSize) {
    throw ConfigError("vocab size " + std::to_string(size) + " outside [16, 256]");
  }
}

void Vocab::check(TokenSpan seq) const {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!contains(seq[i])) {
      throw InvalidToken("token " + std::to_string(seq[i]) + " at position " + std::to_string(i) +
                         " outside vocabulary of size " + std::to_string(size_));
    }
  }
}

std::string Vocab::token_name(Token t) {
  switch (t) {
    case tok::kBos: return "<bos>";
    case tok::kEos: return "<eos>";
    case tok::kSep: return "<sep>";
    case tok::kDraft: return "<draft>";
    case tok::kVerify: return "<verify>";
    case tok::kPlan: return "<plan>";
    case tok::kSolve: return "<solve>";
    case tok::kCite: return "<cite>";
    default: return std::to_string(t);
  }
}

std::string to_string(TokenSpan seq) {
  std::ostringstream os;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) os << ' ';
    os << Vocab::token_name(seq[i]);
  }
  return os.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) + index);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) return 0;
  auto r = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return r < n ? r : n - 1;
}

void Fnv1a::add_bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::add_u64(std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  add_bytes(b, 8);
}

void Fnv1a::add_double(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  add_u64(bits);
}

void Fnv1a::add_string(std::string_view s) {
  add_u64(s.size());
  add_bytes(s.data(), s.size());
}

}  // namespace hsd
