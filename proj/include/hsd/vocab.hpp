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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hsd {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;
using TokenSpan = std::span<const Token>;

// Reserved ids. Everything from kFirstPayload up to V-1 is payload.
namespace tok {
inline constexpr Token kBos = 0;
inline constexpr Token kEos = 1;
inline constexpr Token kSep = 2;
inline constexpr Token kDraft = 3;
inline constexpr Token kVerify = 4;
inline constexpr Token kPlan = 5;
inline constexpr Token kSolve = 6;
inline constexpr Token kCite = 7;
inline constexpr Token kFirstPayload = 8;
}  // namespace tok

class Vocab {
 public:
  static constexpr int kMinSize = 16;
  static constexpr int kMaxSize = 256;

  explicit Vocab(int size = 64);

  int size() const { return size_; }
  int payload_count() const { return size_ - tok::kFirstPayload; }

  bool contains(Token t) const { return t >= 0 && t < size_; }
  bool is_special(Token t) const { return t >= 0 && t < tok::kFirstPayload; }
  bool is_payload(Token t) const { return t >= tok::kFirstPayload && t < size_; }

  /// Throws InvalidToken naming the first offending position.
  void check(TokenSpan seq) const;

  static std::string token_name(Token t);

  bool operator==(const Vocab&) const = default;

 private:
  int size_;
};

std::string to_string(TokenSpan seq);

}  // namespace hsd
