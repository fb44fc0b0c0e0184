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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "hsd/errors.hpp"
#include "hsd/experiment.hpp"

using namespace hsd;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(Method m) {
  ExperimentConfig cfg;
  cfg.task.classify.n_train = 80;
  cfg.task.classify.n_test = 24;
  cfg.model.shape = {64, 16, 4, 8};
  cfg.warmup.steps = 4;
  cfg.warmup.batch_size = 4;
  cfg.method.method = m;
  cfg.method.group_size = 3;
  cfg.train.steps = 6;
  cfg.train.batch_size = 4;
  cfg.train.eval_every = 3;
  cfg.train.checkpoint_every = 3;
  cfg.train.optimizer.kind = "adam";
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hsd-exp-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("every method trains and reports") {
  for (Method m : {Method::kOphsd, Method::kOpsd, Method::kCrisp, Method::kGrpo}) {
    CAPTURE(method_name(m));
    auto cfg = tiny(m);
    const auto data = generate_dataset(cfg.task);
    TrainOptions opts;
    const auto r = train(cfg, data, opts);
    CHECK(r.reports.size() == 6);
    // Step 0, 3 and 6 in both modes.
    CHECK(r.evals.size() == 6);
    CHECK(r.baseline.unassisted.size() == 24);
    CHECK_FALSE(r.final_params == r.initial);
    const auto rec = metrics_record(r.reports.back());
    CHECK(rec["step"] == 6);
    CHECK(rec["method"] == method_name(m));
    CHECK(rec.contains(m == Method::kGrpo ? "pg_loss" : "mean_kl"));
  }
}

TEST_CASE("runs are deterministic and resume exactly") {
  const auto cfg = tiny(Method::kOphsd);
  const auto data = generate_dataset(cfg.task);
  const fs::path a = scratch("a"), b = scratch("b");
  TrainOptions oa;
  oa.out_dir = a.string();
  train(cfg, data, oa);
  TrainOptions ob;
  ob.out_dir = b.string();
  train(cfg, data, ob);
  CHECK(slurp(a / "metrics.jsonl") == slurp(b / "metrics.jsonl"));
  CHECK(slurp(a / "evals.jsonl") == slurp(b / "evals.jsonl"));

  // Lose the last checkpoint, then resume from step 3.
  fs::remove(b / "checkpoints" / "step-000006.ckpt");
  fs::remove(b / "checkpoints" / "step-000006.state");
  ob.resume = true;
  const auto resumed = train(cfg, data, ob);
  CHECK(resumed.reports.size() == 3);
  CHECK(resumed.reports.front().step == 4);
  CHECK(slurp(a / "metrics.jsonl") == slurp(b / "metrics.jsonl"));
  CHECK(slurp(a / "evals.jsonl") == slurp(b / "evals.jsonl"));
  CHECK(slurp(a / "checkpoints" / "step-000006.ckpt") == slurp(b / "checkpoints" / "step-000006.ckpt"));
  CHECK(fs::exists(a / "evals" / "step-000003-harness.csv"));
  CHECK(fs::exists(a / "baseline.json"));

  const auto rows = compare_runs({a.string(), b.string()});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].best == rows[2].best);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("a diverging run stops with a diagnostic checkpoint") {
  auto cfg = tiny(Method::kOpsd);
  cfg.train.optimizer.kind = "sgd";
  cfg.train.optimizer.lr = 1e300;
  const auto data = generate_dataset(cfg.task);
  const fs::path dir = scratch("diverge");
  TrainOptions opts;
  opts.out_dir = dir.string();
  opts.evaluate = false;
  CHECK_THROWS_AS(train(cfg, data, opts), NumericFailure);
  bool found = false;
  for (const auto& e : fs::directory_iterator(dir / "checkpoints")) {
    found = found || e.path().filename().string().rfind("diagnostic-", 0) == 0;
  }
  CHECK(found);
  fs::remove_all(dir);
}

TEST_CASE("mismatched datasets are rejected") {
  auto cfg = tiny(Method::kOpsd);
  ChainArithParams p;
  p.n_train = 10;
  p.n_test = 5;
  const auto other = gen_chain_arithmetic(0, p);
  CHECK_THROWS_AS(train(cfg, other, {}), ConfigError);
}
