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

#include "hsd/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "hsd/errors.hpp"
#include "hsd/rng.hpp"

namespace hsd {

using nlohmann::json;

std::string family_name(TaskFamily f) {
  return f == TaskFamily::kClassify ? "classify" : "chain_arith";
}

TaskFamily parse_family(const std::string& name) {
  if (name == "classify") return TaskFamily::kClassify;
  if (name == "chain_arith") return TaskFamily::kChainArith;
  throw ConfigError("unknown task family '" + name + "' (expected classify or chain_arith)");
}

ClassifyLayout ClassifyLayout::make(int vocab, int n_classes) {
  const Vocab v(vocab);
  if (n_classes < 2) throw ConfigError("task.n_classes must be at least 2");
  ClassifyLayout l;
  l.first_label = tok::kFirstPayload;
  l.n_classes = n_classes;
  l.first_symbol = tok::kFirstPayload + n_classes;
  l.n_symbols = v.payload_count() - n_classes;
  if (l.n_symbols < 2) {
    throw ConfigError("task.n_classes = " + std::to_string(n_classes) + " leaves fewer than 2 symbol tokens in a vocabulary of " +
                      std::to_string(vocab));
  }
  return l;
}

ArithLayout ArithLayout::make(int vocab, int modulus) {
  const Vocab v(vocab);
  if (modulus < 2) throw ConfigError("task.modulus must be at least 2");
  if (modulus + 2 > v.payload_count()) {
    throw ConfigError("task.modulus = " + std::to_string(modulus) + " exceeds the payload token budget");
  }
  ArithLayout l;
  l.first_number = tok::kFirstPayload;
  l.modulus = modulus;
  l.plus = tok::kFirstPayload + modulus;
  l.times = l.plus + 1;
  return l;
}

std::vector<Token> Dataset::label_tokens() const {
  std::vector<Token> out;
  if (family != TaskFamily::kClassify) return out;
  const auto layout = ClassifyLayout::make(classify.vocab, classify.n_classes);
  for (int c = 0; c < classify.n_classes; ++c) out.push_back(layout.label_token(c));
  return out;
}

namespace {

void check_sizes(int n_train, int n_test) {
  if (n_train < 0 || n_test < 0) throw ConfigError("task.n_train and task.n_test must be non-negative");
}

std::string make_id(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06zu", split, i);
  return buf;
}

TokenSeq noisy_copy(const TokenSeq& proto, double noise, const ClassifyLayout& l, Rng& rng) {
  TokenSeq x = proto;
  for (Token& t : x) {
    if (rng.bernoulli(noise)) t = l.first_symbol + static_cast<Token>(rng.below(static_cast<std::size_t>(l.n_symbols)));
  }
  return x;
}

constexpr int kMaxContaminationRetries = 1000;

}  // namespace

std::vector<TokenSeq> make_prototypes(std::uint64_t seed, const ClassifyParams& p) {
  const auto l = ClassifyLayout::make(p.vocab, p.n_classes);
  if (p.length < 1) throw ConfigError("task.length must be positive");
  Rng rng(derive_seed(seed, stream::kData, 0));
  std::vector<TokenSeq> protos;
  std::set<TokenSeq> seen;
  for (int attempts = 0; static_cast<int>(protos.size()) < p.n_classes; ++attempts) {
    if (attempts > 100 * p.n_classes) throw ConfigError("cannot draw distinct class prototypes");
    TokenSeq proto(static_cast<std::size_t>(p.length));
    for (Token& t : proto) t = l.first_symbol + static_cast<Token>(rng.below(static_cast<std::size_t>(l.n_symbols)));
    if (seen.insert(proto).second) protos.push_back(std::move(proto));
  }
  return protos;
}

Dataset gen_classification(std::uint64_t seed, const ClassifyParams& p) {
  check_sizes(p.n_train, p.n_test);
  if (!(p.noise >= 0.0 && p.noise <= 1.0)) throw ConfigError("task.noise must lie in [0, 1]");
  const auto l = ClassifyLayout::make(p.vocab, p.n_classes);
  const auto protos = make_prototypes(seed, p);

  Dataset d;
  d.family = TaskFamily::kClassify;
  d.seed = seed;
  d.classify = p;

  Rng rng(derive_seed(seed, stream::kData, 1));
  std::set<TokenSeq> train_x;
  for (int i = 0; i < p.n_train; ++i) {
    const int cls = static_cast<int>(rng.below(static_cast<std::size_t>(p.n_classes)));
    TaskInstance inst;
    inst.id = make_id("train", static_cast<std::size_t>(i));
    inst.family = TaskFamily::kClassify;
    inst.x = noisy_copy(protos[static_cast<std::size_t>(cls)], p.noise, l, rng);
    inst.label = l.label_token(cls);
    inst.y_star = {inst.label};
    inst.arrival = i;
    train_x.insert(inst.x);
    d.train.push_back(std::move(inst));
  }
  for (int i = 0; i < p.n_test; ++i) {
    const int cls = static_cast<int>(rng.below(static_cast<std::size_t>(p.n_classes)));
    TaskInstance inst;
    inst.id = make_id("test", static_cast<std::size_t>(i));
    inst.family = TaskFamily::kClassify;
    int tries = 0;
    do {
      if (++tries > kMaxContaminationRetries) {
        throw ConfigError("cannot draw a test instance disjoint from the training inputs (noise too low?)");
      }
      inst.x = noisy_copy(protos[static_cast<std::size_t>(cls)], p.noise, l, rng);
    } while (train_x.count(inst.x));
    inst.label = l.label_token(cls);
    inst.y_star = {inst.label};
    inst.arrival = i;
    d.test.push_back(std::move(inst));
  }
  return d;
}

namespace {

TaskInstance make_expression(Rng& rng, const ChainArithParams& p, const ArithLayout& l) {
  TaskInstance inst;
  inst.family = TaskFamily::kChainArith;
  const auto draw = [&] { return static_cast<int>(rng.below(static_cast<std::size_t>(p.modulus))); };
  int acc = draw();
  inst.x.push_back(l.number(acc));
  TokenSeq partials;
  for (int k = 1; k < p.depth; ++k) {
    const bool times = rng.bernoulli(0.5);
    const int a = draw();
    inst.x.push_back(times ? l.times : l.plus);
    inst.x.push_back(l.number(a));
    acc = times ? (acc * a) % p.modulus : (acc + a) % p.modulus;
    partials.push_back(l.number(acc));
  }
  inst.y_star = partials;
  inst.y_star.push_back(tok::kSep);
  inst.y_star.push_back(partials.back());
  return inst;
}

}  // namespace

Dataset gen_chain_arithmetic(std::uint64_t seed, const ChainArithParams& p) {
  check_sizes(p.n_train, p.n_test);
  if (p.depth < 2) throw ConfigError("task.depth must be at least 2");
  const auto l = ArithLayout::make(p.vocab, p.modulus);
  Dataset d;
  d.family = TaskFamily::kChainArith;
  d.seed = seed;
  d.arith = p;
  Rng rng(derive_seed(seed, stream::kData, 2));
  std::set<TokenSeq> train_x;
  for (int i = 0; i < p.n_train; ++i) {
    TaskInstance inst = make_expression(rng, p, l);
    inst.id = make_id("train", static_cast<std::size_t>(i));
    inst.arrival = i;
    train_x.insert(inst.x);
    d.train.push_back(std::move(inst));
  }
  for (int i = 0; i < p.n_test; ++i) {
    TaskInstance inst;
    int tries = 0;
    do {
      if (++tries > kMaxContaminationRetries) {
        throw ConfigError("cannot draw a test expression disjoint from the training inputs");
      }
      inst = make_expression(rng, p, l);
    } while (train_x.count(inst.x));
    inst.id = make_id("test", static_cast<std::size_t>(i));
    inst.arrival = i;
    d.test.push_back(std::move(inst));
  }
  return d;
}

int evaluate_expression(TokenSpan x, const ArithLayout& l) {
  if (x.empty() || x.size() % 2 == 0) throw InvalidArgument("malformed expression");
  int acc = l.value(x[0]);
  for (std::size_t i = 1; i + 1 < x.size(); i += 2) {
    const int a = l.value(x[i + 1]);
    if (x[i] == l.plus) {
      acc = (acc + a) % l.modulus;
    } else if (x[i] == l.times) {
      acc = (acc * a) % l.modulus;
    } else {
      throw InvalidArgument("unknown operator token " + std::to_string(x[i]));
    }
  }
  return acc;
}

TokenSeq plan_sketch_oracle(const TaskInstance& inst) {
  TokenSeq ops;
  for (std::size_t i = 1; i < inst.x.size(); i += 2) ops.push_back(inst.x[i]);
  return ops;
}

std::optional<Token> classify_answer_token(TokenSpan r) {
  std::size_t i = 0;
  if (!r.empty() && r[0] == tok::kCite) {
    while (i < r.size() && r[i] != tok::kSep && r[i] != tok::kEos) ++i;
    if (i >= r.size() || r[i] != tok::kSep) return std::nullopt;
    ++i;
  }
  if (i < r.size() && r[i] >= tok::kFirstPayload) return r[i];
  return std::nullopt;
}

std::optional<Token> final_answer_token(TokenSpan r) {
  std::optional<Token> last;
  for (Token t : r) {
    if (t == tok::kEos) break;
    if (t >= tok::kFirstPayload) last = t;
  }
  return last;
}

double verify(const TaskInstance& inst, TokenSpan response) {
  if (inst.family == TaskFamily::kClassify) {
    const auto a = classify_answer_token(response);
    return a && *a == inst.label ? 1.0 : 0.0;
  }
  const auto a = final_answer_token(response);
  return a && !inst.y_star.empty() && *a == inst.y_star.back() ? 1.0 : 0.0;
}

// --- files -----------------------------------------------------------------

namespace {

json params_json(const Dataset& d) {
  if (d.family == TaskFamily::kClassify) {
    const auto& p = d.classify;
    return {{"n_classes", p.n_classes}, {"noise", p.noise}, {"length", p.length},
            {"n_train", p.n_train},     {"n_test", p.n_test}, {"vocab", p.vocab}};
  }
  const auto& p = d.arith;
  return {{"depth", p.depth}, {"modulus", p.modulus}, {"n_train", p.n_train},
          {"n_test", p.n_test}, {"vocab", p.vocab}};
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& d) {
  json header;
  header["format"] = "hsd-dataset";
  header["version"] = 1;
  header["family"] = family_name(d.family);
  header["seed"] = d.seed;
  header["params"] = params_json(d);
  header["regenerate"] =
      "deterministic: gen-data with this family, seed and params reproduces the file byte for byte";
  out << header.dump() << '\n';
  auto emit = [&](const TaskInstance& inst, const char* split) {
    json j;
    j["id"] = inst.id;
    j["split"] = split;
    j["family"] = family_name(inst.family);
    j["x"] = inst.x;
    j["y_star"] = inst.y_star;
    j["label"] = inst.label;
    j["arrival"] = inst.arrival;
    out << j.dump() << '\n';
  };
  for (const auto& inst : d.train) emit(inst, "train");
  for (const auto& inst : d.test) emit(inst, "test");
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset file");
  Dataset d;
  try {
    const json header = json::parse(line);
    if (header.value("format", "") != "hsd-dataset") throw IoError("not a dataset file");
    d.family = parse_family(header.at("family").get<std::string>());
    d.seed = header.at("seed").get<std::uint64_t>();
    const json& p = header.at("params");
    if (d.family == TaskFamily::kClassify) {
      d.classify = {p.at("n_classes").get<int>(), p.at("noise").get<double>(), p.at("length").get<int>(),
                    p.at("n_train").get<int>(),   p.at("n_test").get<int>(),   p.at("vocab").get<int>()};
    } else {
      d.arith = {p.at("depth").get<int>(), p.at("modulus").get<int>(), p.at("n_train").get<int>(),
                 p.at("n_test").get<int>(), p.at("vocab").get<int>()};
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      TaskInstance inst;
      inst.id = j.at("id").get<std::string>();
      inst.family = parse_family(j.at("family").get<std::string>());
      inst.x = j.at("x").get<TokenSeq>();
      inst.y_star = j.at("y_star").get<TokenSeq>();
      inst.label = j.at("label").get<Token>();
      inst.arrival = j.at("arrival").get<std::int64_t>();
      const auto split = j.at("split").get<std::string>();
      if (split == "train") {
        d.train.push_back(std::move(inst));
      } else if (split == "test") {
        d.test.push_back(std::move(inst));
      } else {
        throw IoError("unknown split '" + split + "'");
      }
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed dataset file: ") + e.what());
  }
  return d;
}

void save_dataset(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_dataset(out, d);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_dataset(in);
}

}  // namespace hsd
