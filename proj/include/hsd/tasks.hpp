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

// Synthetic task families.
//
// CLASSIFY: each class owns a prototype string over the symbol alphabet;
// an instance is its prototype with every token independently resampled at
// the noise rate. The answer is the class token.
//
// CHAIN_ARITH: left-nested ((a1 op a2) op a3) ... mod p with op in {+, x}.
// The reference solution lists every intermediate result, then SEP, then the
// final answer.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsd/vocab.hpp"

namespace hsd {

enum class TaskFamily { kClassify, kChainArith };

std::string family_name(TaskFamily f);
/// "classify" | "chain_arith"; throws ConfigError otherwise.
TaskFamily parse_family(const std::string& name);

struct TaskInstance {
  std::string id;
  TaskFamily family = TaskFamily::kClassify;
  TokenSeq x;
  TokenSeq y_star;
  /// Class token; -1 for CHAIN_ARITH.
  Token label = -1;
  /// Position in its split's stream.
  std::int64_t arrival = 0;

  bool operator==(const TaskInstance&) const = default;
};

struct ClassifyParams {
  int n_classes = 8;
  double noise = 0.2;
  int length = 6;
  int n_train = 2000;
  int n_test = 500;
  int vocab = 64;

  bool operator==(const ClassifyParams&) const = default;
};

struct ChainArithParams {
  int depth = 4;
  int modulus = 11;
  int n_train = 2000;
  int n_test = 500;
  int vocab = 64;

  bool operator==(const ChainArithParams&) const = default;
};

/// Token ranges used by the classification family.
struct ClassifyLayout {
  Token first_label = tok::kFirstPayload;
  int n_classes = 0;
  Token first_symbol = tok::kFirstPayload;
  int n_symbols = 0;

  static ClassifyLayout make(int vocab, int n_classes);
  Token label_token(int cls) const { return first_label + cls; }
  bool is_label(Token t) const { return t >= first_label && t < first_label + n_classes; }
};

/// Token ranges used by the arithmetic family.
struct ArithLayout {
  Token first_number = tok::kFirstPayload;
  int modulus = 0;
  Token plus = 0;
  Token times = 0;

  static ArithLayout make(int vocab, int modulus);
  Token number(int v) const { return first_number + v; }
  int value(Token t) const { return t - first_number; }
  bool is_number(Token t) const { return t >= first_number && t < first_number + modulus; }
};

struct Dataset {
  TaskFamily family = TaskFamily::kClassify;
  std::uint64_t seed = 0;
  ClassifyParams classify;
  ChainArithParams arith;
  std::vector<TaskInstance> train;
  std::vector<TaskInstance> test;

  int vocab() const { return family == TaskFamily::kClassify ? classify.vocab : arith.vocab; }
  /// Distinct answer labels (classification only).
  std::vector<Token> label_tokens() const;

  bool operator==(const Dataset&) const = default;
};

/// Class prototypes for a given seed (exposed for tests and the warm-up
/// corpus, which draws fresh ones).
std::vector<TokenSeq> make_prototypes(std::uint64_t seed, const ClassifyParams& p);

/// Throws ConfigError when parameters exceed the token budget or a
/// contamination-free test split cannot be drawn.
Dataset gen_classification(std::uint64_t seed, const ClassifyParams& p);
Dataset gen_chain_arithmetic(std::uint64_t seed, const ChainArithParams& p);

/// Plain left-to-right evaluation of an encoded expression.
int evaluate_expression(TokenSpan x, const ArithLayout& layout);

/// Operator skeleton of an arithmetic instance (test oracle for plans).
TokenSeq plan_sketch_oracle(const TaskInstance& inst);

/// First payload token after an optional leading CITE span (CITE ... SEP).
std::optional<Token> classify_answer_token(TokenSpan response);
/// Last payload token before EOS.
std::optional<Token> final_answer_token(TokenSpan response);

/// 1 for a correct response, else 0.
double verify(const TaskInstance& inst, TokenSpan response);

/// Header line then one JSON record per instance.
void write_dataset(std::ostream& out, const Dataset& d);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

}  // namespace hsd
