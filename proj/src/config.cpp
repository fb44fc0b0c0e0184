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

#include "hsd/config.hpp"

#include <fstream>
#include <set>

namespace hsd {

using nlohmann::json;

std::string harness_name(HarnessKind h) {
  switch (h) {
    case HarnessKind::kDraftVerify: return "draft_verify";
    case HarnessKind::kPlanSolve: return "plan_solve";
    case HarnessKind::kIdentity: return "identity";
  }
  return "?";
}

namespace {

HarnessKind parse_harness(const std::string& s) {
  if (s == "draft_verify") return HarnessKind::kDraftVerify;
  if (s == "plan_solve") return HarnessKind::kPlanSolve;
  if (s == "identity") return HarnessKind::kIdentity;
  throw ConfigError("method.harness: unknown harness '" + s + "'");
}

// Reads keys of one section and remembers which were used, so leftovers can
// be reported as unknown.
class Section {
 public:
  Section(const json& root, std::string name, bool required) : name_(std::move(name)) {
    if (!root.contains(name_)) {
      if (required) throw ConfigError("missing required section '" + name_ + "'");
      return;
    }
    node_ = &root.at(name_);
    if (!node_->is_object()) throw ConfigError("section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + " has the wrong type");
    }
  }

  bool has(const char* key) const { return node_ && node_->contains(key); }

  template <typename T>
  void require(const char* key, T& out) {
    if (!has(key)) throw ConfigError("missing required key '" + name_ + "." + key + "'");
    get(key, out);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, v] : node_->items()) {
      if (!used_.count(k)) throw ConfigError("unknown key '" + name_ + "." + k + "'");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> used_;
};

const std::set<std::string> kSections{"task", "model", "warmup", "method", "draft_verify", "plan_solve", "train", "eval"};

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kSections.count(k)) throw ConfigError("unknown key '" + k + "'");
  }
  ExperimentConfig c;
  {
    Section s(j, "task", true);
    std::string family;
    s.require("family", family);
    c.task.family = parse_family(family);
    s.get("seed", c.task.seed);
    if (c.task.family == TaskFamily::kClassify) {
      auto& p = c.task.classify;
      s.get("n_classes", p.n_classes);
      s.get("noise", p.noise);
      s.get("length", p.length);
      s.get("n_train", p.n_train);
      s.get("n_test", p.n_test);
      s.get("vocab", p.vocab);
    } else {
      auto& p = c.task.arith;
      s.get("depth", p.depth);
      s.get("modulus", p.modulus);
      s.get("n_train", p.n_train);
      s.get("n_test", p.n_test);
      s.get("vocab", p.vocab);
    }
    s.finish();
  }
  c.model.shape.vocab = c.task.vocab();
  {
    Section s(j, "model", false);
    s.get("vocab", c.model.shape.vocab);
    s.get("window", c.model.shape.window);
    s.get("embed_dim", c.model.shape.embed_dim);
    s.get("hidden_dim", c.model.shape.hidden_dim);
    s.get("init_seed", c.model.init_seed);
    s.finish();
  }
  {
    Section s(j, "warmup", false);
    s.get("steps", c.warmup.steps);
    s.get("batch_size", c.warmup.batch_size);
    s.get("lr", c.warmup.lr);
    s.get("episode_bank", c.warmup.episode_bank);
    s.get("draft_corruption", c.warmup.draft_corruption);
    s.finish();
  }
  {
    Section s(j, "method", false);
    std::string name = method_name(c.method.method);
    s.get("name", name);
    c.method.method = parse_method(name);
    std::string harness;
    s.get("harness", harness);
    if (!harness.empty()) {
      c.method.harness = parse_harness(harness);
      c.method.harness_set = true;
    }
    s.get("instruction", c.method.instruction);
    s.get("sync_period", c.method.sync_period);
    s.get("group_size", c.method.group_size);
    s.get("kl_coef", c.method.kl_coef);
    s.finish();
  }
  if (!c.method.harness_set) {
    c.method.harness = c.task.family == TaskFamily::kClassify ? HarnessKind::kDraftVerify : HarnessKind::kPlanSolve;
  }
  {
    Section s(j, "draft_verify", false);
    auto& d = c.draft_verify;
    s.get("k_d", d.k_d);
    s.get("k_plus", d.k_plus);
    s.get("k_minus", d.k_minus);
    s.get("temperature", d.temperature);
    s.get("draft_max_len", d.draft_max_len);
    s.get("verify_max_len", d.verify_max_len);
    s.get("cold_start", d.cold_start);
    s.finish();
  }
  {
    Section s(j, "plan_solve", false);
    auto& p = c.plan_solve;
    s.get("plan_temperature", p.plan_temperature);
    s.get("solve_temperature", p.solve_temperature);
    s.get("plan_max_len", p.plan_max_len);
    s.get("solve_max_len", p.solve_max_len);
    s.get("privileged", p.privileged);
    s.finish();
  }
  {
    Section s(j, "train", false);
    auto& t = c.train;
    s.get("steps", t.steps);
    s.get("batch_size", t.batch_size);
    s.get("optimizer", t.optimizer.kind);
    s.get("lr", t.optimizer.lr);
    s.get("beta1", t.optimizer.beta1);
    s.get("beta2", t.optimizer.beta2);
    s.get("eps", t.optimizer.eps);
    s.get("max_gen_len", t.max_gen_len);
    s.get("rollout_temperature", t.rollout_temperature);
    s.get("eval_every", t.eval_every);
    s.get("checkpoint_every", t.checkpoint_every);
    s.get("seed", t.seed);
    s.finish();
  }
  {
    Section s(j, "eval", false);
    auto& e = c.eval;
    s.get("k", e.k);
    std::vector<std::string> modes;
    s.get("modes", modes);
    if (s.has("modes")) {
      e.modes.clear();
      for (const auto& m : modes) e.modes.push_back(parse_mode(m));
    }
    s.get("temperature", e.temperature);
    s.get("max_len", e.max_len);
    s.get("seed", e.seed);
    s.finish();
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["task"]["family"] = family_name(task.family);
  j["task"]["seed"] = task.seed;
  if (task.family == TaskFamily::kClassify) {
    const auto& p = task.classify;
    j["task"]["n_classes"] = p.n_classes;
    j["task"]["noise"] = p.noise;
    j["task"]["length"] = p.length;
    j["task"]["n_train"] = p.n_train;
    j["task"]["n_test"] = p.n_test;
    j["task"]["vocab"] = p.vocab;
  } else {
    const auto& p = task.arith;
    j["task"]["depth"] = p.depth;
    j["task"]["modulus"] = p.modulus;
    j["task"]["n_train"] = p.n_train;
    j["task"]["n_test"] = p.n_test;
    j["task"]["vocab"] = p.vocab;
  }
  j["model"] = {{"vocab", model.shape.vocab},
                {"window", model.shape.window},
                {"embed_dim", model.shape.embed_dim},
                {"hidden_dim", model.shape.hidden_dim},
                {"init_seed", model.init_seed}};
  j["warmup"] = {{"steps", warmup.steps},
                 {"batch_size", warmup.batch_size},
                 {"lr", warmup.lr},
                 {"episode_bank", warmup.episode_bank},
                 {"draft_corruption", warmup.draft_corruption}};
  j["method"] = {{"name", method_name(method.method)},
                 {"harness", harness_name(harness())},
                 {"instruction", method.instruction},
                 {"sync_period", method.sync_period},
                 {"group_size", method.group_size},
                 {"kl_coef", method.kl_coef}};
  j["draft_verify"] = {{"k_d", draft_verify.k_d},
                       {"k_plus", draft_verify.k_plus},
                       {"k_minus", draft_verify.k_minus},
                       {"temperature", draft_verify.temperature},
                       {"draft_max_len", draft_verify.draft_max_len},
                       {"verify_max_len", draft_verify.verify_max_len},
                       {"cold_start", draft_verify.cold_start}};
  j["plan_solve"] = {{"plan_temperature", plan_solve.plan_temperature},
                     {"solve_temperature", plan_solve.solve_temperature},
                     {"plan_max_len", plan_solve.plan_max_len},
                     {"solve_max_len", plan_solve.solve_max_len},
                     {"privileged", plan_solve.privileged}};
  j["train"] = {{"steps", train.steps},
                {"batch_size", train.batch_size},
                {"optimizer", train.optimizer.kind},
                {"lr", train.optimizer.lr},
                {"beta1", train.optimizer.beta1},
                {"beta2", train.optimizer.beta2},
                {"eps", train.optimizer.eps},
                {"max_gen_len", train.max_gen_len},
                {"rollout_temperature", train.rollout_temperature},
                {"eval_every", train.eval_every},
                {"checkpoint_every", train.checkpoint_every},
                {"seed", train.seed}};
  std::vector<std::string> modes;
  for (auto m : eval.modes) modes.push_back(mode_name(m));
  j["eval"] = {{"k", eval.k},
               {"modes", modes},
               {"temperature", eval.temperature},
               {"max_len", eval.max_len},
               {"seed", eval.seed}};
  return j;
}

HarnessKind ExperimentConfig::harness() const { return method.harness; }

void ExperimentConfig::validate() const {
  model.shape.validate();
  if (model.shape.vocab != task.vocab()) {
    throw ConfigError("model.vocab (" + std::to_string(model.shape.vocab) + ") differs from task.vocab (" +
                      std::to_string(task.vocab()) + ")");
  }
  if (task.family == TaskFamily::kClassify) {
    ClassifyLayout::make(task.classify.vocab, task.classify.n_classes);
  } else {
    ArithLayout::make(task.arith.vocab, task.arith.modulus);
  }
  warmup.validate();
  draft_verify.validate();
  plan_solve.validate();
  train.optimizer.validate();
  if (train.steps < 0) throw ConfigError("train.steps must be non-negative");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (train.max_gen_len < 1) throw ConfigError("train.max_gen_len must be at least 1");
  if (!(train.rollout_temperature >= 0.0)) throw ConfigError("train.rollout_temperature must be non-negative");
  if (train.eval_every < 0 || train.checkpoint_every < 0) {
    throw ConfigError("train.eval_every and train.checkpoint_every must be non-negative");
  }
  if (eval.k < 1) throw ConfigError("eval.k must be at least 1");
  if (method.method == Method::kGrpo && method.group_size < 2) throw ConfigError("method.group_size must be at least 2");
  if (method.kl_coef != 0.0) throw ConfigError("method.kl_coef: only 0 is supported");
  if (method.method == Method::kCrisp) {
    if (method.sync_period < 1) throw ConfigError("method.sync_period must be at least 1");
    Vocab v(model.shape.vocab);
    for (Token t : method.instruction) {
      if (!v.is_payload(t)) throw ConfigError("method.instruction must contain payload tokens only");
    }
  }
  if (method.method == Method::kOphsd) {
    const HarnessKind h = harness();
    if (task.family == TaskFamily::kClassify && h == HarnessKind::kPlanSolve) {
      throw ConfigError("method.harness: plan_solve does not apply to the classify task");
    }
    if (task.family == TaskFamily::kChainArith && h == HarnessKind::kDraftVerify) {
      throw ConfigError("method.harness: draft_verify does not apply to the chain_arith task");
    }
    if (h == HarnessKind::kPlanSolve && !plan_solve.privileged) {
      throw ConfigError("plan_solve.privileged must be true for OPHSD training");
    }
  }
}

EvalOptions ExperimentConfig::eval_options(EvalMode mode) const {
  EvalOptions o;
  o.mode = mode;
  o.k = eval.k;
  o.temperature = eval.temperature;
  o.max_len = eval.max_len;
  o.draft_verify = draft_verify;
  o.plan_solve = plan_solve;
  o.seed = eval.seed;
  return o;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << cfg.to_json().dump(2) << '\n';
}

Dataset generate_dataset(const TaskConfig& task) {
  if (task.family == TaskFamily::kClassify) return gen_classification(task.seed, task.classify);
  return gen_chain_arithmetic(task.seed, task.arith);
}

}  // namespace hsd
