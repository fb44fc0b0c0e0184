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

#include "hsd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "hsd/objectives.hpp"
#include "hsd/parallel.hpp"
#include "hsd/rng.hpp"

namespace hsd {

double pass_at_k(const std::vector<std::vector<double>>& samples, int k) {
  if (k < 1) throw InvalidArgument("pass@k needs k >= 1");
  if (samples.empty()) return 0.0;
  std::size_t solved = 0;
  for (const auto& q : samples) {
    if (q.size() != static_cast<std::size_t>(k)) {
      throw InvalidArgument("pass@k: question has " + std::to_string(q.size()) + " samples, expected " +
                            std::to_string(k));
    }
    if (std::any_of(q.begin(), q.end(), [](double s) { return s >= 1.0; })) ++solved;
  }
  return static_cast<double>(solved) / static_cast<double>(samples.size());
}

Difficulty difficulty_of(double score) {
  if (score < 0.34) return Difficulty::kHard;
  if (score < 0.67) return Difficulty::kMedium;
  return Difficulty::kEasy;
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kHard: return "hard";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kEasy: return "easy";
  }
  return "?";
}

DifficultyBuckets difficulty_buckets(std::span<const double> base_scores) {
  DifficultyBuckets b;
  for (std::size_t i = 0; i < base_scores.size(); ++i) {
    switch (difficulty_of(base_scores[i])) {
      case Difficulty::kHard: b.hard.push_back(i); break;
      case Difficulty::kMedium: b.medium.push_back(i); break;
      case Difficulty::kEasy: b.easy.push_back(i); break;
    }
  }
  return b;
}

const char* gap_group_name(GapGroup g) {
  switch (g) {
    case GapGroup::kBoth: return "a_both";
    case GapGroup::kHarnessOnly: return "b_harness_only";
    case GapGroup::kBaseOnly: return "c_base_only";
    case GapGroup::kNeither: return "d_neither";
  }
  return "?";
}

GapGroups gap_groups(std::span<const double> base, std::span<const double> harness, double tau) {
  if (base.size() != harness.size()) throw InvalidArgument("gap_groups: score lists differ in length");
  GapGroups g;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const bool b = base[i] >= tau;
    const bool h = harness[i] >= tau;
    const GapGroup grp = b && h ? GapGroup::kBoth : h ? GapGroup::kHarnessOnly : b ? GapGroup::kBaseOnly : GapGroup::kNeither;
    g.members[static_cast<std::size_t>(grp)].push_back(i);
  }
  return g;
}

bool has_citation(TokenSpan r) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] == tok::kEos) return false;
    if (r[i] != tok::kCite) continue;
    std::size_t payload = 0;
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      if (r[j] == tok::kSep) {
        if (payload > 0) return true;
        break;
      }
      if (r[j] < tok::kFirstPayload) break;
      ++payload;
    }
  }
  return false;
}

double citation_rate(const std::vector<TokenSeq>& responses) {
  if (responses.empty()) return 0.0;
  const auto n = std::count_if(responses.begin(), responses.end(), [](const TokenSeq& r) { return has_citation(r); });
  return static_cast<double>(n) / static_cast<double>(responses.size());
}

double macro_f1(std::span<const Token> truth, std::span<const std::optional<Token>> predicted,
                std::span<const Token> classes) {
  if (truth.size() != predicted.size()) throw InvalidArgument("macro_f1: length mismatch");
  if (classes.empty()) return 0.0;
  double sum = 0.0;
  for (Token c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool pred_c = predicted[i] && *predicted[i] == c;
      if (truth[i] == c && pred_c) tp += 1;
      if (truth[i] != c && pred_c) fp += 1;
      if (truth[i] == c && !pred_c) fn += 1;
    }
    const double denom = 2 * tp + fp + fn;
    sum += denom == 0 ? 1.0 : 2 * tp / denom;
  }
  return sum / static_cast<double>(classes.size());
}

std::string mode_name(EvalMode m) { return m == EvalMode::kUnassisted ? "unassisted" : "harness"; }

EvalMode parse_mode(const std::string& name) {
  if (name == "unassisted") return EvalMode::kUnassisted;
  if (name == "harness" || name == "harness_privfree") return EvalMode::kHarnessPrivFree;
  throw ConfigError("unknown evaluation mode '" + name + "' (expected unassisted or harness)");
}

double QuestionResult::score() const {
  if (scores.empty()) return 0.0;
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

std::vector<double> EvalReport::per_question_scores() const {
  std::vector<double> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.push_back(q.score());
  return out;
}

namespace {

void collect_retrieved(const HarnessState& state, std::vector<std::int64_t>& out) {
  for (const char* slot : {"nd", "np", "nm"}) {
    if (!state.has(slot)) continue;
    for (auto a : state.get(slot)) out.push_back(a);
  }
}

}  // namespace

EvalReport evaluate(const PolicyParams& policy, const Dataset& data, const EvalOptions& opts) {
  if (opts.k < 1) throw ConfigError("eval.k must be at least 1");
  const bool classify = data.family == TaskFamily::kClassify;
  EvalReport rep;
  rep.mode = opts.mode;
  rep.family = data.family;
  rep.k = opts.k;
  rep.temperature = opts.temperature >= 0.0 ? opts.temperature : (classify ? 0.1 : 0.6);
  const int max_len = opts.max_len > 0 ? opts.max_len : (classify ? 6 : 8);
  const Vocab vocab(policy.shape().vocab);

  MemoryBank bank(opts.draft_verify.cold_start);
  DraftVerifyConfig dv = opts.draft_verify;
  dv.temperature = rep.temperature;
  dv.verify_max_len = max_len;
  PlanSolveConfig ps = opts.plan_solve;
  ps.privileged = false;
  ps.solve_max_len = max_len;
  std::optional<DraftVerifyProgram> dv_program;
  std::optional<PlanSolveProgram> ps_program;
  if (opts.mode == EvalMode::kHarnessPrivFree) {
    if (classify) {
      for (const auto& inst : data.test) bank.insert(inst.x, inst.y_star);
      dv_program.emplace(vocab, dv);
    } else {
      ps_program.emplace(vocab, ps);
    }
  }

  const std::size_t n = data.test.size();
  rep.questions.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const TaskInstance& inst = data.test[i];
    QuestionResult& q = rep.questions[i];
    q.id = inst.id;
    q.position = static_cast<std::int64_t>(i);
    const TokenSeq prompt = student_prompt(inst.x, vocab);
    for (int j = 0; j < opts.k; ++j) {
      const std::uint64_t seed = derive_seed(opts.seed, stream::kEval, i * static_cast<std::uint64_t>(opts.k) + j);
      TokenSeq response;
      if (opts.mode == EvalMode::kUnassisted) {
        response = sample_sequence(policy, prompt, max_len, rep.temperature, seed).generated;
      } else if (classify) {
        HarnessResult r = run_harness(*dv_program, policy, inst.x, BankView{&bank, static_cast<std::int64_t>(i)}, seed);
        collect_retrieved(r.trace.terminal_state, q.retrieved);
        response = r.answer;
      } else {
        response = run_harness(*ps_program, policy, inst.x, std::monostate{}, seed).answer;
      }
      q.scores.push_back(verify(inst, response));
      q.responses.push_back(std::move(response));
    }
  });

  std::vector<std::vector<double>> samples;
  std::vector<TokenSeq> all_responses;
  std::vector<Token> truth;
  std::vector<std::optional<Token>> predicted;
  double length_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const QuestionResult& q = rep.questions[i];
    samples.push_back(q.scores);
    for (const TokenSeq& r : q.responses) {
      all_responses.push_back(r);
      length_sum += static_cast<double>(strip_eos(r).size());
      if (classify) {
        truth.push_back(data.test[i].label);
        predicted.push_back(classify_answer_token(r));
      }
    }
  }
  const auto per_q = rep.per_question_scores();
  rep.accuracy = n ? std::accumulate(per_q.begin(), per_q.end(), 0.0) / static_cast<double>(n) : 0.0;
  rep.pass_at_k = pass_at_k(samples, opts.k);
  rep.mean_output_length = all_responses.empty() ? 0.0 : length_sum / static_cast<double>(all_responses.size());
  rep.citation_rate = classify ? citation_rate(all_responses) : 0.0;
  if (classify) {
    const auto classes = data.label_tokens();
    rep.macro_f1 = macro_f1(truth, predicted, classes);
  }
  return rep;
}

namespace {

nlohmann::ordered_json group_summary(const std::vector<std::size_t>& members, std::span<const double> now,
                             std::span<const double> before) {
  double a = 0.0, b = 0.0;
  for (auto i : members) {
    a += now[i];
    b += before[i];
  }
  const double n = static_cast<double>(members.size());
  nlohmann::ordered_json j;
  j["count"] = members.size();
  j["score"] = members.empty() ? 0.0 : a / n;
  j["base_score"] = members.empty() ? 0.0 : b / n;
  j["change"] = members.empty() ? 0.0 : (a - b) / n;
  return j;
}

}  // namespace

nlohmann::ordered_json report_json(const EvalReport& r, const EvalBaseline* baseline) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["mode"] = mode_name(r.mode);
  j["family"] = family_name(r.family);
  j["k"] = r.k;
  j["temperature"] = r.temperature;
  j["questions"] = r.questions.size();
  j["accuracy"] = r.accuracy;
  if (r.family == TaskFamily::kClassify) j["macro_f1"] = r.macro_f1;
  j["pass_at_k"] = r.pass_at_k;
  j["mean_output_length"] = r.mean_output_length;
  if (r.family == TaskFamily::kClassify) j["citation_rate"] = r.citation_rate;
  if (baseline && baseline->unassisted.size() == r.questions.size()) {
    const auto now = r.per_question_scores();
    const auto buckets = difficulty_buckets(baseline->unassisted);
    nlohmann::ordered_json d;
    d["hard"] = group_summary(buckets.hard, now, baseline->unassisted);
    d["medium"] = group_summary(buckets.medium, now, baseline->unassisted);
    d["easy"] = group_summary(buckets.easy, now, baseline->unassisted);
    j["difficulty"] = d;
    if (baseline->harness.size() == now.size()) {
      const auto groups = gap_groups(baseline->unassisted, baseline->harness);
      nlohmann::ordered_json g;
      for (int k = 0; k < 4; ++k) {
        g[gap_group_name(static_cast<GapGroup>(k))] =
            group_summary(groups.members[static_cast<std::size_t>(k)], now, baseline->unassisted);
      }
      j["gap_groups"] = g;
    }
  }
  return j;
}

void write_question_csv(std::ostream& out, const EvalReport& r) {
  out << "step,mode,question_id,position,k,correct,score,mean_length,cited\n";
  for (const QuestionResult& q : r.questions) {
    double correct = 0.0, len = 0.0;
    int cited = 0;
    for (std::size_t j = 0; j < q.scores.size(); ++j) {
      correct += q.scores[j];
      len += static_cast<double>(strip_eos(q.responses[j]).size());
      cited += has_citation(q.responses[j]) ? 1 : 0;
    }
    const double k = q.scores.empty() ? 1.0 : static_cast<double>(q.scores.size());
    out << r.step << ',' << mode_name(r.mode) << ',' << q.id << ',' << q.position << ',' << q.scores.size() << ','
        << correct << ',' << q.score() << ',' << len / k << ',' << cited << '\n';
  }
}

}  // namespace hsd
