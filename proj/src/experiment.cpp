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

#include "hsd/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "hsd/rng.hpp"

namespace hsd {

namespace fs = std::filesystem;
using nlohmann::json;

PolicyParams base_policy(const ExperimentConfig& cfg, const Dataset& data) {
  PolicyParams p = PolicyParams::random(cfg.model.shape, cfg.model.init_seed);
  run_warmup(p, data, cfg.draft_verify, cfg.plan_solve, cfg.warmup,
             derive_seed(cfg.model.init_seed, stream::kWarmup, 0));
  return p;
}

nlohmann::ordered_json metrics_record(const LossReport& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["method"] = method_name(r.method);
  if (r.method == Method::kGrpo) {
    j["pg_loss"] = r.pg_loss;
    j["mean_reward"] = r.mean_reward;
  } else {
    j["mean_kl"] = r.mean_kl;
  }
  j["grad_norm"] = r.grad_norm;
  j["mean_rollout_len"] = r.mean_rollout_len();
  j["dropped_instances"] = r.dropped;
  if (r.method == Method::kOphsd && !r.harness_calls.empty()) {
    double calls = 0.0;
    for (int c : r.harness_calls) calls += c;
    j["mean_harness_calls"] = calls / static_cast<double>(r.harness_calls.size());
  }
  return j;
}

namespace {

std::string step_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step-%06lld", static_cast<long long>(step));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void append_line(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
}

// Keeps only records with step <= last.
void truncate_jsonl(const fs::path& path, std::int64_t last) {
  if (!fs::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (json::parse(line).at("step").get<std::int64_t>() <= last) kept += line + "\n";
  }
  in.close();
  write_text(path, kept);
}

void save_state(const fs::path& path, const PolicyParams& teacher, const Optimizer& opt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, teacher);
  opt.write(out);
}

void load_state(const fs::path& path, PolicyParams& teacher, Optimizer& opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  teacher = read_checkpoint(in);
  opt.read(in);
}

std::optional<std::int64_t> latest_resumable(const fs::path& dir) {
  std::optional<std::int64_t> best;
  if (!fs::exists(dir)) return best;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    long long s = 0;
    char tail[16] = {0};
    if (std::sscanf(name.c_str(), "step-%lld.%15s", &s, tail) == 2 && std::string(tail) == "state" &&
        fs::exists(dir / (step_name(s) + ".ckpt"))) {
      if (!best || s > *best) best = s;
    }
  }
  return best;
}

json baseline_json(const EvalBaseline& b) { return {{"unassisted", b.unassisted}, {"harness", b.harness}}; }

EvalBaseline baseline_from(const json& j) {
  EvalBaseline b;
  b.unassisted = j.at("unassisted").get<std::vector<double>>();
  b.harness = j.at("harness").get<std::vector<double>>();
  return b;
}

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, const Dataset& data, const TrainOptions& opts)
      : cfg_(cfg), data_(data), opts_(opts), vocab_(cfg.model.shape.vocab), bank_(cfg.draft_verify.cold_start) {
    if (data.family != cfg.task.family) throw ConfigError("dataset family does not match task.family");
    if (data.vocab() != cfg.model.shape.vocab) throw ConfigError("dataset vocabulary does not match model.vocab");
    if (data.train.empty() && cfg.train.steps > 0) throw ConfigError("dataset has no training instances");
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      if (data.train[i].arrival != static_cast<std::int64_t>(i)) {
        throw ConfigError("training instances must be stored in arrival order");
      }
      bank_.insert(data.train[i].x, data.train[i].y_star);
    }
    switch (cfg.harness()) {
      case HarnessKind::kDraftVerify: program_ = std::make_unique<DraftVerifyProgram>(vocab_, cfg.draft_verify); break;
      case HarnessKind::kPlanSolve: program_ = std::make_unique<PlanSolveProgram>(vocab_, cfg.plan_solve); break;
      case HarnessKind::kIdentity:
        program_ = std::make_unique<IdentityProgram>(vocab_, cfg.train.max_gen_len, cfg.train.rollout_temperature);
        break;
    }
  }

  TrainResult run() {
    const bool files = !opts_.out_dir.empty();
    const fs::path out(opts_.out_dir);
    if (files) {
      fs::create_directories(out / "checkpoints");
      fs::create_directories(out / "evals");
      save_config((out / "config.json").string(), cfg_);
    }

    std::int64_t start = 0;
    std::optional<std::int64_t> resume_at;
    if (opts_.resume && files) resume_at = latest_resumable(out / "checkpoints");

    TrainResult res{PolicyParams::zeros(cfg_.model.shape), PolicyParams::zeros(cfg_.model.shape), 0, {}, {}, {}};
    Optimizer opt(cfg_.train.optimizer, cfg_.model.shape.param_count());
    PolicyParams student = PolicyParams::zeros(cfg_.model.shape);
    TeacherSpec teacher{PolicyParams::zeros(cfg_.model.shape), TeacherSource::kBareX, {}, nullptr, 0};

    if (resume_at) {
      start = *resume_at;
      student = load_checkpoint((out / "checkpoints" / (step_name(start) + ".ckpt")).string());
      load_state(out / "checkpoints" / (step_name(start) + ".state"), teacher.params, opt);
      res.initial = load_checkpoint((out / "checkpoints" / (step_name(0) + ".ckpt")).string());
      std::ifstream bin(out / "baseline.json");
      if (bin) res.baseline = baseline_from(json::parse(bin));
      truncate_jsonl(out / "metrics.jsonl", start);
      truncate_jsonl(out / "evals.jsonl", start);
    } else {
      student = opts_.initial ? *opts_.initial : base_policy(cfg_, data_);
      teacher.params = student;
      res.initial = student;
      if (files) {
        fs::remove(out / "metrics.jsonl");
        fs::remove(out / "evals.jsonl");
        save_checkpoint((out / "checkpoints" / (step_name(0) + ".ckpt")).string(), student);
        save_state(out / "checkpoints" / (step_name(0) + ".state"), teacher.params, opt);
      }
      if (opts_.evaluate) {
        evaluate_all(student, 0, res);
        if (files) write_text(out / "baseline.json", baseline_json(res.baseline).dump() + "\n");
      }
    }
    configure_teacher(teacher);

    for (std::int64_t step = start + 1; step <= cfg_.train.steps; ++step) {
      LossReport rep;
      try {
        rep = do_step(student, teacher, opt, step);
      } catch (const NumericFailure&) {
        if (files) {
          save_checkpoint((out / "checkpoints" / ("diagnostic-" + step_name(step) + ".ckpt")).string(), student);
        }
        throw;
      }
      if (files) append_line(out / "metrics.jsonl", metrics_record(rep));
      if (opts_.on_step) opts_.on_step(rep);
      res.reports.push_back(std::move(rep));

      const bool last = step == cfg_.train.steps;
      const bool eval_now = cfg_.train.eval_every > 0 ? step % cfg_.train.eval_every == 0 : false;
      if (opts_.evaluate && (eval_now || last)) evaluate_all(student, step, res);
      const bool ckpt_now = cfg_.train.checkpoint_every > 0 && step % cfg_.train.checkpoint_every == 0;
      if (files && (ckpt_now || last)) {
        save_checkpoint((out / "checkpoints" / (step_name(step) + ".ckpt")).string(), student);
        save_state(out / "checkpoints" / (step_name(step) + ".state"), teacher.params, opt);
      }
    }
    res.final_params = student;
    res.teacher_checksum = teacher.params.checksum();
    return res;
  }

 private:
  void configure_teacher(TeacherSpec& t) const {
    switch (cfg_.method.method) {
      case Method::kOphsd:
        t.source = TeacherSource::kHarness;
        t.program = program_.get();
        break;
      case Method::kOpsd: t.source = TeacherSource::kStaticPrivileged; break;
      case Method::kCrisp:
        t.source = TeacherSource::kStaticPrompt;
        t.instruction = cfg_.method.instruction;
        t.sync_period = cfg_.method.sync_period;
        break;
      case Method::kGrpo: t.source = TeacherSource::kBareX; break;
    }
  }

  LossReport do_step(PolicyParams& student, TeacherSpec& teacher, Optimizer& opt, std::int64_t step) {
    const std::uint64_t step_seed = derive_seed(cfg_.train.seed, stream::kStep, static_cast<std::uint64_t>(step));
    const std::size_t n = data_.train.size();
    const std::size_t b = static_cast<std::size_t>(cfg_.train.batch_size);
    const std::size_t first = (static_cast<std::size_t>(step - 1) * b) % n;
    RolloutConfig rc{cfg_.train.max_gen_len, cfg_.train.rollout_temperature};

    if (cfg_.method.method == Method::kGrpo) {
      std::vector<const TaskInstance*> batch;
      for (std::size_t i = 0; i < b; ++i) batch.push_back(&data_.train[(first + i) % n]);
      return grpo_step(student, batch, verify, cfg_.method.group_size, opt, rc, step_seed, step);
    }
    std::vector<InstanceRef> batch;
    for (std::size_t i = 0; i < b; ++i) {
      const TaskInstance& inst = data_.train[(first + i) % n];
      InstanceRef ref{&inst, std::monostate{}};
      if (cfg_.method.method == Method::kOphsd) {
        if (cfg_.harness() == HarnessKind::kDraftVerify) {
          ref.z = BankView{&bank_, inst.arrival};
        } else {
          ref.z = inst.y_star;
        }
      }
      batch.push_back(std::move(ref));
    }
    return distill_step(student, teacher, batch, opt, rc, step_seed, step, cfg_.method.method);
  }

  void evaluate_all(const PolicyParams& policy, std::int64_t step, TrainResult& res) {
    const bool files = !opts_.out_dir.empty();
    const fs::path out(opts_.out_dir);
    for (EvalMode mode : cfg_.eval.modes) {
      EvalReport rep = evaluate(policy, data_, cfg_.eval_options(mode));
      rep.step = step;
      if (step == 0) {
        (mode == EvalMode::kUnassisted ? res.baseline.unassisted : res.baseline.harness) = rep.per_question_scores();
      }
      if (files) {
        append_line(out / "evals.jsonl", report_json(rep, &res.baseline));
        std::ofstream csv(out / "evals" / (step_name(step) + "-" + mode_name(mode) + ".csv"), std::ios::binary);
        write_question_csv(csv, rep);
      }
      if (opts_.on_eval) opts_.on_eval(rep);
      res.evals.push_back(std::move(rep));
    }
  }

  const ExperimentConfig& cfg_;
  const Dataset& data_;
  const TrainOptions& opts_;
  Vocab vocab_;
  MemoryBank bank_;
  std::unique_ptr<HarnessProgram> program_;
};

}  // namespace

TrainResult train(const ExperimentConfig& cfg, const Dataset& data, const TrainOptions& opts) {
  cfg.validate();
  Runner runner(cfg, data, opts);
  return runner.run();
}

// --- commands --------------------------------------------------------------

void cmd_gen_data(const std::string& config_path, const std::string& out_path, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.task.seed = *seed;
  if (out_path.empty()) throw ConfigError("--out is required");
  const fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  save_dataset(out_path, generate_dataset(cfg.task));
}

namespace {

Dataset dataset_for(const ExperimentConfig& cfg, const std::string& data_path) {
  Dataset d = data_path.empty() ? generate_dataset(cfg.task) : load_dataset(data_path);
  return d;
}

}  // namespace

void cmd_train(const std::string& config_path, const std::string& data_path, const std::string& out_dir,
               std::optional<std::uint64_t> seed, bool resume) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.train.seed = *seed;
  if (out_dir.empty()) throw ConfigError("--out is required");
  const Dataset data = dataset_for(cfg, data_path);
  TrainOptions opts;
  opts.out_dir = out_dir;
  opts.resume = resume;
  train(cfg, data, opts);
}

void cmd_eval(const std::string& config_path, const std::string& checkpoint_path, const std::string& data_path,
              const std::string& mode, int k, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  const EvalMode m = parse_mode(mode);
  if (k < 1) throw ConfigError("--k must be at least 1");
  if (checkpoint_path.empty()) throw ConfigError("--checkpoint is required");
  if (out_dir.empty()) throw ConfigError("--out is required");
  std::optional<ExperimentConfig> cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  if (data_path.empty() && !cfg) throw ConfigError("either --data or --config is required");
  const Dataset data = cfg ? dataset_for(*cfg, data_path) : load_dataset(data_path);
  const PolicyParams policy = load_checkpoint(checkpoint_path);
  if (policy.shape().vocab != data.vocab()) throw ConfigError("checkpoint vocabulary does not match the dataset");

  EvalOptions opts;
  if (cfg) opts = cfg->eval_options(m);
  opts.mode = m;
  opts.k = k;
  if (seed) opts.seed = *seed;
  EvalReport rep = evaluate(policy, data, opts);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_text(out / ("eval-" + mode_name(m) + ".json"), report_json(rep).dump(2) + "\n");
  std::ofstream csv(out / ("eval-" + mode_name(m) + ".csv"), std::ios::binary);
  if (!csv) throw IoError("cannot write evaluation table");
  write_question_csv(csv, rep);
}

std::vector<CompareRow> compare_runs(const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) throw ConfigError("compare needs at least one run directory");
  std::vector<CompareRow> rows;
  for (const std::string& dir : run_dirs) {
    const fs::path evals = fs::path(dir) / "evals.jsonl";
    std::ifstream in(evals);
    if (!in) throw IoError(dir + " has no evals.jsonl");
    std::string method = "?";
    if (std::ifstream c{fs::path(dir) / "config.json"}) method = json::parse(c).at("method").at("name").get<std::string>();
    std::map<std::string, CompareRow> per_mode;
    std::vector<std::string> order;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string mode = j.at("mode").get<std::string>();
      const double acc = j.at("accuracy").get<double>();
      const std::int64_t step = j.at("step").get<std::int64_t>();
      auto it = per_mode.find(mode);
      if (it == per_mode.end()) {
        order.push_back(mode);
        per_mode[mode] = CompareRow{dir, method, mode, acc, step, acc, step};
        continue;
      }
      CompareRow& r = it->second;
      if (acc > r.best) {
        r.best = acc;
        r.best_step = step;
      }
      if (step >= r.final_step) {
        r.final_score = acc;
        r.final_step = step;
      }
    }
    if (order.empty()) throw IoError(dir + ": evals.jsonl holds no records");
    for (const auto& m : order) rows.push_back(per_mode[m]);
  }
  return rows;
}

void cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir, std::ostream& table) {
  const auto rows = compare_runs(run_dirs);
  std::ostringstream tsv;
  tsv << "run\tmethod\tmode\tbest_accuracy\tbest_step\tfinal_accuracy\tfinal_step\n";
  json j = json::array();
  for (const auto& r : rows) {
    tsv << r.run << '\t' << r.method << '\t' << r.mode << '\t' << r.best << '\t' << r.best_step << '\t'
        << r.final_score << '\t' << r.final_step << '\n';
    j.push_back({{"run", r.run},
                 {"method", r.method},
                 {"mode", r.mode},
                 {"selection", "best evaluation across checkpoints"},
                 {"best_accuracy", r.best},
                 {"best_step", r.best_step},
                 {"final_accuracy", r.final_score},
                 {"final_step", r.final_step}});
  }
  table << tsv.str();
  if (out_dir.empty()) return;
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_text(out / "compare.json", j.dump(2) + "\n");
  write_text(out / "compare.tsv", tsv.str());
  std::ostringstream series;
  series << "run,method,step,mode,accuracy,pass_at_k,mean_output_length,citation_rate\n";
  for (const std::string& dir : run_dirs) {
    std::string method = "?";
    if (std::ifstream c{fs::path(dir) / "config.json"}) method = json::parse(c).at("method").at("name").get<std::string>();
    std::ifstream in(fs::path(dir) / "evals.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json e = json::parse(line);
      series << dir << ',' << method << ',' << e.at("step").get<std::int64_t>() << ',' << e.at("mode").get<std::string>()
             << ',' << e.at("accuracy").get<double>() << ',' << e.at("pass_at_k").get<double>() << ','
             << e.at("mean_output_length").get<double>() << ',' << e.value("citation_rate", 0.0) << '\n';
    }
  }
  write_text(out / "series.csv", series.str());
}

}  // namespace hsd
