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

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace hsd {

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based seed splitter: the child seed depends only on
/// (base, stream, index), never on how many draws happened elsewhere.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kHarnessCall = 2;
inline constexpr std::uint64_t kRollout = 3;
inline constexpr std::uint64_t kHarnessRun = 4;
inline constexpr std::uint64_t kStep = 5;
inline constexpr std::uint64_t kEval = 6;
inline constexpr std::uint64_t kData = 7;
inline constexpr std::uint64_t kWarmup = 8;
inline constexpr std::uint64_t kGroup = 9;
}  // namespace stream

/// Thin wrapper over mt19937_64 with platform-independent conversions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

/// Stable 64-bit FNV-1a.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n);
  void add_u64(std::uint64_t v);
  void add_i64(std::int64_t v) { add_u64(static_cast<std::uint64_t>(v)); }
  void add_double(double v);
  void add_string(std::string_view s);
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace hsd
