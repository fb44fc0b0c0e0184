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

#include <doctest.h>

#include <set>
#include <sstream>

#include "hsd/errors.hpp"
#include "hsd/tasks.hpp"

using namespace hsd;

namespace {

// Independent evaluator over raw token ids: numbers are 8..8+p-1, then +, x.
int eval_raw(const TokenSeq& x, int p) {
  const Token plus = 8 + p, times = 9 + p;
  long acc = x[0] - 8;
  for (std::size_t i = 1; i + 1 < x.size(); i += 2) {
    const long a = x[i + 1] - 8;
    acc = x[i] == plus ? acc + a : acc * a;
    acc %= p;
    REQUIRE((x[i] == plus || x[i] == times));
  }
  return static_cast<int>(acc);
}

}  // namespace

TEST_CASE("classification data is deterministic and well formed") {
  ClassifyParams p;
  p.n_train = 300;
  p.n_test = 100;
  const auto a = gen_classification(5, p);
  const auto b = gen_classification(5, p);
  CHECK(a == b);
  CHECK(!(gen_classification(6, p) == a));
  REQUIRE(a.train.size() == 300);
  REQUIRE(a.test.size() == 100);
  CHECK(a.train[7].id == "train-000007");
  CHECK(a.test[0].id == "test-000000");

  const auto labels = a.label_tokens();
  CHECK(labels.size() == 8);
  std::set<TokenSeq> train_x;
  for (const auto& inst : a.train) {
    CHECK(inst.x.size() == 6);
    CHECK(inst.y_star == TokenSeq{inst.label});
    CHECK(inst.label >= 8);
    CHECK(inst.label < 16);
    for (Token t : inst.x) {
      CHECK(t >= 16);
      CHECK(t < 64);
    }
    train_x.insert(inst.x);
  }
  for (std::size_t i = 0; i < a.test.size(); ++i) {
    CHECK(a.test[i].arrival == static_cast<std::int64_t>(i));
    CHECK(train_x.count(a.test[i].x) == 0);
  }
}

TEST_CASE("noise-free instances are their class prototype") {
  ClassifyParams p;
  p.noise = 0.0;
  p.n_train = 200;
  p.n_test = 0;
  const auto d = gen_classification(3, p);
  const auto protos = make_prototypes(3, p);
  for (const auto& inst : d.train) CHECK(inst.x == protos[static_cast<std::size_t>(inst.label - 8)]);

  // Leave-one-out nearest-prototype labelling is perfect.
  for (const auto& inst : d.train) {
    int matches = 0;
    for (std::size_t c = 0; c < protos.size(); ++c) {
      if (protos[c] == inst.x) {
        ++matches;
        CHECK(static_cast<Token>(8 + c) == inst.label);
      }
    }
    CHECK(matches == 1);
  }
  p.n_test = 10;
  CHECK_THROWS_AS(gen_classification(3, p), ConfigError);
}

TEST_CASE("classification parameter checks") {
  ClassifyParams p;
  p.n_classes = 60;
  CHECK_THROWS_AS(gen_classification(0, p), ConfigError);
  p = {};
  p.noise = 1.5;
  CHECK_THROWS_AS(gen_classification(0, p), ConfigError);
  p = {};
  p.vocab = 8;
  CHECK_THROWS_AS(gen_classification(0, p), ConfigError);
  CHECK_THROWS_AS(parse_family("sorting"), ConfigError);
  CHECK(parse_family(family_name(TaskFamily::kChainArith)) == TaskFamily::kChainArith);
}

TEST_CASE("arithmetic references agree with an independent evaluator") {
  ChainArithParams p;
  p.n_train = 400;
  p.n_test = 100;
  const auto d = gen_chain_arithmetic(9, p);
  const auto layout = ArithLayout::make(p.vocab, p.modulus);
  for (const auto* split : {&d.train, &d.test}) {
    for (const auto& inst : *split) {
      CHECK(inst.x.size() == 7);
      const int want = eval_raw(inst.x, p.modulus);
      CHECK(evaluate_expression(inst.x, layout) == want);
      REQUIRE(inst.y_star.size() == 5);
      CHECK(inst.y_star[3] == tok::kSep);
      CHECK(inst.y_star.back() == 8 + want);
      // Every partial is the prefix value.
      for (std::size_t k = 0; k < 3; ++k) {
        TokenSeq prefix(inst.x.begin(), inst.x.begin() + static_cast<std::ptrdiff_t>(2 * k + 3));
        CHECK(inst.y_star[k] == 8 + eval_raw(prefix, p.modulus));
      }
      CHECK(plan_sketch_oracle(inst).size() == 3);
      CHECK(verify(inst, inst.y_star) == 1.0);
    }
  }
  CHECK(d == gen_chain_arithmetic(9, p));
  p.modulus = 60;
  CHECK_THROWS_AS(gen_chain_arithmetic(0, p), ConfigError);
}

TEST_CASE("answer extraction and verification") {
  TaskInstance c;
  c.family = TaskFamily::kClassify;
  c.label = 10;
  c.y_star = {10};
  CHECK(verify(c, TokenSeq{10, tok::kEos}) == 1.0);
  CHECK(verify(c, TokenSeq{11, tok::kEos}) == 0.0);
  CHECK(verify(c, TokenSeq{tok::kCite, 20, tok::kSep, 10, tok::kEos}) == 1.0);
  CHECK(verify(c, TokenSeq{tok::kCite, 20, 10}) == 0.0);
  CHECK(verify(c, TokenSeq{tok::kEos, 10}) == 0.0);
  CHECK(verify(c, TokenSeq{}) == 0.0);

  TaskInstance a;
  a.family = TaskFamily::kChainArith;
  a.y_star = {9, 12, tok::kSep, 12};
  CHECK(verify(a, TokenSeq{9, 12, tok::kSep, 12, tok::kEos}) == 1.0);
  CHECK(verify(a, TokenSeq{12, tok::kEos, 13}) == 1.0);
  CHECK(verify(a, TokenSeq{12, 13}) == 0.0);
}

TEST_CASE("dataset files round trip") {
  ClassifyParams p;
  p.n_train = 50;
  p.n_test = 20;
  const auto d = gen_classification(1, p);
  std::stringstream ss;
  write_dataset(ss, d);
  const std::string text = ss.str();
  CHECK(read_dataset(ss) == d);

  std::stringstream again;
  write_dataset(again, gen_classification(1, p));
  CHECK(again.str() == text);

  ChainArithParams q;
  q.n_train = 30;
  q.n_test = 10;
  const auto e = gen_chain_arithmetic(2, q);
  std::stringstream s2;
  write_dataset(s2, e);
  CHECK(read_dataset(s2) == e);

  std::stringstream junk("{\"format\":\"other\"}\n");
  CHECK_THROWS_AS(read_dataset(junk), IoError);
  std::stringstream empty;
  CHECK_THROWS_AS(read_dataset(empty), IoError);
}
