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
#include <iosfwd>
#include <span>
#include <vector>

#include "hsd/vocab.hpp"

namespace hsd {

inline constexpr int kEmbeddingDim = 64;

/// Unit-norm hashed bag of token bigrams. A sentinel start symbol is
/// prepended so single-token sequences still have one bigram.
struct Embedding {
  std::vector<double> values;

  double dot(const Embedding& other) const;
};

/// Bucket that the bigram (prev, next) hashes to; prev = -1 is the sentinel.
std::size_t bigram_bucket(Token prev, Token next, int dim = kEmbeddingDim);

/// Throws InvalidArgument on an empty sequence.
Embedding embed(TokenSpan seq, int dim = kEmbeddingDim);

double cosine(const Embedding& a, const Embedding& b);

struct BankEntry {
  TokenSeq x;
  TokenSeq y;
  Embedding embedding;
  std::int64_t arrival = 0;
};

/// Append-only store of labelled precedents. Queries carry a visibility
/// bound and never see entries whose arrival index is at or beyond it.
class MemoryBank {
 public:
  static constexpr int kDefaultColdStart = 10;

  explicit MemoryBank(int cold_start_threshold = kDefaultColdStart)
      : cold_start_(cold_start_threshold) {}

  std::int64_t insert(TokenSeq x, TokenSeq y);

  std::size_t size() const { return entries_.size(); }
  const std::vector<BankEntry>& entries() const { return entries_; }
  const BankEntry& at(std::int64_t arrival) const { return entries_.at(static_cast<std::size_t>(arrival)); }
  int cold_start_threshold() const { return cold_start_; }

  std::size_t visible_count(std::int64_t visible_before) const;

  /// Descending cosine, ties to the lower arrival index; min(k, visible) items.
  std::vector<const BankEntry*> top_k(const Embedding& query, int k, std::int64_t visible_before) const;

  struct Split {
    std::vector<const BankEntry*> confirmers;
    std::vector<const BankEntry*> challengers;
  };

  /// Confirmers carry `draft_label`, challengers do not; each list is ranked
  /// like top_k.
  Split confirmers_challengers(const Embedding& query, TokenSpan draft_label, int k_plus,
                               int k_minus, std::int64_t visible_before) const;

  /// Distinct labels among visible entries, in first-arrival order.
  std::vector<TokenSeq> visible_labels(std::int64_t visible_before) const;

  /// One JSON object per line: {"arrival", "x", "y"}.
  void dump(std::ostream& out) const;
  /// Embeddings are recomputed. Arrival indices must be 0..n-1 in order.
  static MemoryBank load(std::istream& in, int cold_start_threshold = kDefaultColdStart);

 private:
  template <typename Pred>
  std::vector<const BankEntry*> ranked(const Embedding& query, int k, std::int64_t visible_before,
                                       Pred keep) const;

  std::vector<BankEntry> entries_;
  int cold_start_;
};

/// A read-only snapshot of a bank: the privileged input M_<x.
struct BankView {
  const MemoryBank* bank = nullptr;
  std::int64_t visible_before = 0;
};

}  // namespace hsd
