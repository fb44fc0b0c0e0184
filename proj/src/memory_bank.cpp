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

#include "hsd/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "hsd/errors.hpp"
#include "hsd/rng.hpp"

namespace hsd {

double Embedding::dot(const Embedding& other) const {
  double s = 0.0;
  const std::size_t n = std::min(values.size(), other.values.size());
  for (std::size_t i = 0; i < n; ++i) s += values[i] * other.values[i];
  return s;
}

std::size_t bigram_bucket(Token prev, Token next, int dim) {
  const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(prev)) << 32) |
                   static_cast<std::uint32_t>(next);
  return static_cast<std::size_t>(splitmix64(key) % static_cast<std::uint64_t>(dim));
}

Embedding embed(TokenSpan seq, int dim) {
  if (seq.empty()) throw InvalidArgument("cannot embed an empty sequence");
  if (dim < 1) throw InvalidArgument("embedding dimension must be positive");
  Embedding e;
  e.values.assign(static_cast<std::size_t>(dim), 0.0);
  Token prev = -1;
  for (Token t : seq) {
    e.values[bigram_bucket(prev, t, dim)] += 1.0;
    prev = t;
  }
  double n2 = 0.0;
  for (double v : e.values) n2 += v * v;
  const double inv = 1.0 / std::sqrt(n2);
  for (double& v : e.values) v *= inv;
  return e;
}

double cosine(const Embedding& a, const Embedding& b) { return a.dot(b); }

std::int64_t MemoryBank::insert(TokenSeq x, TokenSeq y) {
  BankEntry e;
  e.embedding = embed(x);
  e.x = std::move(x);
  e.y = std::move(y);
  e.arrival = static_cast<std::int64_t>(entries_.size());
  entries_.push_back(std::move(e));
  return entries_.back().arrival;
}

std::size_t MemoryBank::visible_count(std::int64_t visible_before) const {
  if (visible_before <= 0) return 0;
  return std::min(entries_.size(), static_cast<std::size_t>(visible_before));
}

template <typename Pred>
std::vector<const BankEntry*> MemoryBank::ranked(const Embedding& query, int k,
                                                 std::int64_t visible_before, Pred keep) const {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  struct Scored {
    double score;
    const BankEntry* entry;
  };
  std::vector<Scored> scored;
  const std::size_t n = visible_count(visible_before);
  scored.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Equal cosines of different count vectors can disagree in the last few
    // bits; snapping to a 1e-12 grid lets the arrival rule decide them.
    if (keep(entries_[i])) {
      scored.push_back({std::round(cosine(query, entries_[i].embedding) * 1e12), &entries_[i]});
    }
  }
  const std::size_t take = std::min(scored.size(), static_cast<std::size_t>(k));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.entry->arrival < b.entry->arrival;
                    });
  std::vector<const BankEntry*> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].entry);
  return out;
}

std::vector<const BankEntry*> MemoryBank::top_k(const Embedding& query, int k,
                                                std::int64_t visible_before) const {
  return ranked(query, k, visible_before, [](const BankEntry&) { return true; });
}

MemoryBank::Split MemoryBank::confirmers_challengers(const Embedding& query, TokenSpan draft_label,
                                                     int k_plus, int k_minus,
                                                     std::int64_t visible_before) const {
  auto same = [&](const BankEntry& e) {
    return std::equal(e.y.begin(), e.y.end(), draft_label.begin(), draft_label.end());
  };
  Split s;
  s.confirmers = ranked(query, k_plus, visible_before, same);
  s.challengers = ranked(query, k_minus, visible_before, [&](const BankEntry& e) { return !same(e); });
  return s;
}

std::vector<TokenSeq> MemoryBank::visible_labels(std::int64_t visible_before) const {
  std::vector<TokenSeq> labels;
  const std::size_t n = visible_count(visible_before);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(labels.begin(), labels.end(), entries_[i].y) == labels.end()) {
      labels.push_back(entries_[i].y);
    }
  }
  return labels;
}

void MemoryBank::dump(std::ostream& out) const {
  for (const BankEntry& e : entries_) {
    nlohmann::json j;
    j["arrival"] = e.arrival;
    j["x"] = e.x;
    j["y"] = e.y;
    out << j.dump() << '\n';
  }
}

MemoryBank MemoryBank::load(std::istream& in, int cold_start_threshold) {
  MemoryBank bank(cold_start_threshold);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bank line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto arrival = j.at("arrival").get<std::int64_t>();
    if (arrival != static_cast<std::int64_t>(bank.size())) {
      throw IoError("bank line " + std::to_string(lineno) + ": arrival index " +
                    std::to_string(arrival) + " out of order");
    }
    bank.insert(j.at("x").get<TokenSeq>(), j.at("y").get<TokenSeq>());
  }
  return bank;
}

}  // namespace hsd
