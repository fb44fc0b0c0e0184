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

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "hsd/errors.hpp"
#include "hsd/objectives.hpp"
#include "hsd/rng.hpp"
#include "oracles.hpp"

using namespace hsd;

namespace {

const PolicyShape kTiny{16, 4, 3, 5};

std::vector<double> random_dist(Rng& rng, std::size_t n, bool sparse) {
  std::vector<double> p(n);
  double s = 0;
  for (double& v : p) {
    v = sparse && rng.bernoulli(0.3) ? 0.0 : -std::log(1.0 - rng.uniform());
    s += v;
  }
  if (s == 0) {
    p[0] = 1;
    s = 1;
  }
  for (double& v : p) v /= s;
  return p;
}

std::vector<TaskInstance> toy_instances(Rng& rng, int n) {
  std::vector<TaskInstance> out;
  for (int i = 0; i < n; ++i) {
    TaskInstance t;
    t.id = "toy-" + std::to_string(i);
    t.x = {static_cast<Token>(8 + rng.below(8)), static_cast<Token>(8 + rng.below(8))};
    t.label = static_cast<Token>(8 + rng.below(4));
    t.y_star = {t.label};
    t.arrival = i;
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("token KL properties") {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 2 + rng.below(20);
    const auto p = random_dist(rng, n, t % 2 == 0);
    const auto q = random_dist(rng, n, false);
    CHECK(token_kl(p, q) >= 0.0);
    CHECK(token_kl(p, p) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(token_kl(p, q) == doctest::Approx(oracle::kl(p, q)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(token_kl(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}), InvalidArgument);
  CHECK_THROWS_AS(token_kl(std::vector<double>{0.5, 0.6}, std::vector<double>{0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(token_kl(std::vector<double>{-0.1, 1.1}, std::vector<double>{0.5, 0.5}), InvalidArgument);
}

TEST_CASE("distillation loss gradient matches finite differences") {
  Rng rng(2);
  for (int trial = 0; trial < 6; ++trial) {
    const auto student = PolicyParams::random(kTiny, 10 + static_cast<std::uint64_t>(trial), 0.5);
    const auto teacher = PolicyParams::random(kTiny, 50 + static_cast<std::uint64_t>(trial), 0.5);
    const TokenSeq prompt{0, 2, 9, 10, 2};
    const TokenSeq ctx{0, 2, 9, 10, 2, 2, 11, 2};
    TokenSeq rollout;
    for (std::size_t i = 0; i < 1 + rng.below(5); ++i) rollout.push_back(static_cast<Token>(rng.below(16)));
    auto fn = [&](const PolicyParams& s) { return distill_loss(s, teacher, ctx, prompt, rollout); };
    const auto g = loss_gradient(student, fn);
    const auto fd = oracle::finite_difference(student, [&](const PolicyParams& s) { return fn(s).value; });
    CHECK(oracle::relative_error(g, fd) < 1e-6);

    // Value: mean over positions of KL(teacher || student).
    double want = 0;
    TokenSeq sc = prompt, tc = ctx;
    for (Token y : rollout) {
      want += oracle::kl(oracle::softmax(oracle::naive_logits(teacher, tc)),
                         oracle::softmax(oracle::naive_logits(student, sc)));
      sc.push_back(y);
      tc.push_back(y);
    }
    CHECK(fn(student).value == doctest::Approx(want / static_cast<double>(rollout.size())));
  }
}

TEST_CASE("distilling from an identical teacher is stationary") {
  const auto student = PolicyParams::random(kTiny, 1, 0.5);
  const TokenSeq prompt{0, 2, 9, 2};
  const TokenSeq rollout{10, 11, 1};
  const auto item_loss = [&](const PolicyParams& s) { return distill_loss(s, student, prompt, prompt, rollout); };
  CHECK(item_loss(student).value == doctest::Approx(0.0).epsilon(1e-12));
  const auto g = loss_gradient(student, item_loss);
  CHECK(l2_norm(g) < 1e-12);
  CHECK_THROWS_AS(distill_loss(student, student, prompt, prompt, TokenSeq{}), InvalidArgument);
}

TEST_CASE("identity-wrapped harness teacher equals the static privileged teacher") {
  Rng rng(3);
  const auto insts = toy_instances(rng, 12);
  const auto student = PolicyParams::random(kTiny, 4, 0.5);
  const auto frozen = PolicyParams::random(kTiny, 5, 0.5);
  IdentityProgram identity(student.vocab(), 4, 1.0);
  TeacherSpec wrapped{frozen, TeacherSource::kHarness, {}, &identity, 0};
  TeacherSpec fixed{frozen, TeacherSource::kStaticPrivileged, {}, nullptr, 0};
  std::vector<InstanceRef> refs;
  for (const auto& i : insts) refs.push_back({&i, i.y_star});
  const RolloutConfig rc{5, 1.0};
  const auto a = prepare_distill_batch(student, wrapped, refs, rc, 77);
  const auto b = prepare_distill_batch(student, fixed, refs, rc, 77);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].teacher_context == b.items[i].teacher_context);
    CHECK(a.items[i].rollout == b.items[i].rollout);
  }
  const auto la = batch_distill_loss(student, a);
  const auto lb = batch_distill_loss(student, b);
  CHECK(std::abs(la.value - lb.value) <= 1e-9);
  const auto ga = batch_gradient(student, la);
  const auto gb = batch_gradient(student, lb);
  double d = 0;
  for (std::size_t i = 0; i < ga.size(); ++i) d = std::max(d, std::abs(ga[i] - gb[i]));
  CHECK(d <= 1e-9);
}

TEST_CASE("failing harness runs are dropped") {
  Rng rng(4);
  const auto insts = toy_instances(rng, 6);
  const auto student = PolicyParams::random(kTiny, 6, 0.5);
  IdentityProgram identity(student.vocab(), 4, 1.0);
  TeacherSpec spec{student, TeacherSource::kHarness, {}, &identity, 0};
  MemoryBank bank;
  std::vector<InstanceRef> refs;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    // The identity program refuses bank inputs.
    refs.push_back({&insts[i], i % 2 ? PrivilegedInput{BankView{&bank, 0}} : PrivilegedInput{insts[i].y_star}});
  }
  const auto batch = prepare_distill_batch(student, spec, refs, {4, 1.0}, 3);
  CHECK(batch.items.size() + static_cast<std::size_t>(batch.dropped) == insts.size());
  CHECK(batch.dropped >= 3);
  for (auto k : batch.kept) CHECK(k % 2 == 0);
}

TEST_CASE("group advantages") {
  const std::vector<double> r{1, 0, 0, 1};
  const auto a = group_advantages(r);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(r[i] == 1 ? 1.0 : -1.0).epsilon(1e-5));
  const auto flat = group_advantages(std::vector<double>{1, 1, 1});
  for (double v : flat) CHECK(v == 0.0);
}

TEST_CASE("GRPO surrogate gradient matches finite differences") {
  Rng rng(5);
  const auto student = PolicyParams::random(kTiny, 7, 0.5);
  const auto insts = toy_instances(rng, 3);
  std::vector<GrpoItem> items;
  const Verifier v = [](const TaskInstance& inst, TokenSpan o) { return verify(inst, o); };
  for (const auto& inst : insts) items.push_back(prepare_grpo_item(student, inst, v, 4, {3, 1.0}, rng.next()));
  // Force non-trivial advantages.
  for (auto& it : items) {
    it.rewards = {1, 0, 0, 0.5};
    it.advantages = group_advantages(it.rewards);
  }
  auto fn = [&](const PolicyParams& s) { return grpo_loss(s, items); };
  const auto g = loss_gradient(student, fn);
  const auto fd = oracle::finite_difference(student, [&](const PolicyParams& s) { return fn(s).value; });
  CHECK(oracle::relative_error(g, fd) < 1e-6);
  CHECK_THROWS_AS(prepare_grpo_item(student, insts[0], v, 1, {3, 1.0}, 1), ConfigError);
}

TEST_CASE("batch gradient does not depend on the worker count") {
  Rng rng(6);
  const auto insts = toy_instances(rng, 40);
  const auto student = PolicyParams::random(kTiny, 8, 0.5);
  TeacherSpec fixed{PolicyParams::random(kTiny, 9, 0.5), TeacherSource::kStaticPrivileged, {}, nullptr, 0};
  std::vector<InstanceRef> refs;
  for (const auto& i : insts) refs.push_back({&i, {}});
  auto run = [&](const char* threads) {
    setenv("HSD_THREADS", threads, 1);
    const auto batch = prepare_distill_batch(student, fixed, refs, {6, 1.0}, 11);
    return batch_gradient(student, batch_distill_loss(student, batch));
  };
  const auto g1 = run("1");
  const auto g4 = run("4");
  unsetenv("HSD_THREADS");
  CHECK(g1 == g4);
}

TEST_CASE("optimizers") {
  auto p = PolicyParams::zeros(kTiny);
  std::vector<double> g(p.size(), 0.0);
  g[3] = 2.0;
  g[7] = -0.5;
  Optimizer sgd({"sgd", 0.1}, p.size());
  sgd.step(p, g);
  CHECK(p.weights()[3] == doctest::Approx(-0.2));
  CHECK(p.weights()[7] == doctest::Approx(0.05));

  // Adam's first step moves every coordinate with a non-zero gradient by lr.
  auto q = PolicyParams::zeros(kTiny);
  Optimizer adam({"adam", 0.01}, q.size());
  adam.step(q, g);
  CHECK(q.weights()[3] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(q.weights()[7] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(q.weights()[0] == 0.0);

  // State round trip gives identical continuations.
  std::stringstream ss;
  adam.write(ss);
  Optimizer resumed({"adam", 0.01}, q.size());
  resumed.read(ss);
  auto q2 = q;
  adam.step(q, g);
  resumed.step(q2, g);
  CHECK(q == q2);
  CHECK(resumed.steps_taken() == 2);

  CHECK_THROWS_AS(Optimizer({"rmsprop", 0.1}, 3), ConfigError);
  CHECK_THROWS_AS(sgd.step(p, std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("distillation steps and teacher sync") {
  Rng rng(7);
  const auto insts = toy_instances(rng, 8);
  auto student = PolicyParams::random(kTiny, 10, 0.5);
  TeacherSpec crisp{student, TeacherSource::kStaticPrompt, {8, 9}, nullptr, 2};
  std::vector<InstanceRef> refs;
  for (const auto& i : insts) refs.push_back({&i, {}});
  Optimizer opt({"sgd", 0.5}, student.size());
  const auto before = crisp.params;
  const auto r1 = crisp_step(student, crisp, refs, opt, {4, 1.0}, 1, 1);
  CHECK(crisp.params == before);
  CHECK(!(student == before));
  CHECK(r1.per_instance_kl.size() + static_cast<std::size_t>(r1.dropped) == insts.size());
  double mean = 0;
  for (double v : r1.per_instance_kl) mean += v;
  if (!r1.per_instance_kl.empty()) CHECK(mean / static_cast<double>(r1.per_instance_kl.size()) == doctest::Approx(r1.mean_kl));
  crisp_step(student, crisp, refs, opt, {4, 1.0}, 2, 2);
  CHECK(crisp.params == student);
  CHECK_THROWS_AS(opsd_step(student, crisp, refs, opt, {4, 1.0}, 3, 3), InvalidArgument);
  CHECK_THROWS_AS(ophsd_step(student, crisp, refs, opt, {4, 1.0}, 3, 3), InvalidArgument);
  CHECK(parse_method("OPHSD") == Method::kOphsd);
  CHECK_THROWS_AS(parse_method("ppo"), ConfigError);
}

TEST_CASE("worked examples") {
  const double eps = 1e-12;
  const std::vector<double> spike{1 - 3 * eps, eps, eps, eps}, uniform(4, 0.25);
  CHECK(token_kl(spike, uniform) == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  CHECK(token_kl(uniform, uniform) == 0.0);
  CHECK(token_kl(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75}) ==
        doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-5));

  Rng rng(0);
  const auto insts = toy_instances(rng, 1);
  const std::vector<InstanceRef> one{{&insts[0], {}}};
  auto student = PolicyParams::random(kTiny, 0, 0.5);
  TeacherSpec teacher{PolicyParams::random(kTiny, 1, 0.5), TeacherSource::kStaticPrivileged, {}, nullptr, 0};

  // A zero learning rate still reports the loss.
  Optimizer frozen({"sgd", 0.0}, student.size());
  const auto before = student;
  const auto r0 = opsd_step(student, teacher, one, frozen, {4, 1.0}, 3, 1);
  CHECK(student == before);
  CHECK(r0.mean_kl > 0.0);

  // OPSD on a single instance, lr 1e-2.
  Optimizer sgd({"sgd", 1e-2}, student.size());
  std::vector<double> losses;
  for (int step = 1; step <= 20; ++step) {
    losses.push_back(opsd_step(student, teacher, one, sgd, {4, 1.0}, derive_seed(0, stream::kStep, step), step).mean_kl);
  }
  double head = 0, tail = 0;
  for (int i = 0; i < 5; ++i) {
    head += losses[static_cast<std::size_t>(i)];
    tail += losses[static_cast<std::size_t>(15 + i)];
  }
  CHECK(tail < head);

  // CRISP syncs every 50 steps.
  TeacherSpec crisp{before, TeacherSource::kStaticPrompt, {8, 9}, nullptr, 50};
  Optimizer opt({"sgd", 0.1}, student.size());
  crisp_step(student, crisp, one, opt, {4, 1.0}, 5, 49);
  CHECK_FALSE(crisp.params == student);
  crisp_step(student, crisp, one, opt, {4, 1.0}, 6, 50);
  CHECK(crisp.params == student);

  // A group where every rollout is correct contributes nothing.
  const Verifier always = [](const TaskInstance&, TokenSpan) { return 1.0; };
  const std::vector<GrpoItem> solved{prepare_grpo_item(student, insts[0], always, 8, {3, 1.0}, 4)};
  CHECK(l2_norm(loss_gradient(student, [&](const PolicyParams& s) { return grpo_loss(s, solved); })) == 0.0);
}
