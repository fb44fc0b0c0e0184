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

#include "hsd/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "hsd/errors.hpp"
#include "hsd/rng.hpp"

namespace hsd {

std::size_t PolicyShape::param_count() const {
  const std::size_t v = vocab, de = embed_dim, dh = hidden_dim;
  return v * de + dh * input_dim() + dh + v * dh + v;
}

void PolicyShape::validate() const {
  Vocab check(vocab);
  (void)check;
  if (window < 1 || embed_dim < 1 || hidden_dim < 1) {
    throw ConfigError("model window, embed_dim and hidden_dim must be positive");
  }
  if (param_count() > kMaxParams) {
    throw ConfigError("model has " + std::to_string(param_count()) +
                      " parameters; the limit is " + std::to_string(kMaxParams));
  }
}

PolicyParams::PolicyParams(PolicyShape shape, std::vector<double> weights)
    : shape_(shape), w_(std::move(weights)) {
  shape_.validate();
  if (w_.size() != shape_.param_count()) {
    throw InvalidArgument("weight vector has " + std::to_string(w_.size()) + " entries, shape needs " +
                          std::to_string(shape_.param_count()));
  }
}

PolicyParams PolicyParams::zeros(PolicyShape shape) {
  shape.validate();
  return PolicyParams(shape, std::vector<double>(shape.param_count(), 0.0));
}

PolicyParams PolicyParams::random(PolicyShape shape, std::uint64_t seed, double scale) {
  shape.validate();
  Rng rng(derive_seed(seed, stream::kInit, 0));
  std::vector<double> w(shape.param_count());
  for (double& x : w) x = (2.0 * rng.uniform() - 1.0) * scale;
  return PolicyParams(shape, std::move(w));
}

std::uint64_t PolicyParams::checksum() const {
  Fnv1a h;
  h.add_u64(static_cast<std::uint64_t>(shape_.vocab));
  h.add_u64(static_cast<std::uint64_t>(shape_.window));
  h.add_u64(static_cast<std::uint64_t>(shape_.embed_dim));
  h.add_u64(static_cast<std::uint64_t>(shape_.hidden_dim));
  for (double x : w_) h.add_double(x);
  return h.value();
}

namespace {

void fill_window(const PolicyShape& s, TokenSpan context, std::vector<Token>& window) {
  if (context.empty()) throw InvalidArgument("context must contain at least BOS");
  Vocab(s.vocab).check(context);
  window.assign(static_cast<std::size_t>(s.window), tok::kBos);
  const std::size_t n = std::min(context.size(), static_cast<std::size_t>(s.window));
  std::copy(context.end() - static_cast<std::ptrdiff_t>(n), context.end(),
            window.end() - static_cast<std::ptrdiff_t>(n));
}

}  // namespace

std::vector<double> next_token_logits(const PolicyParams& params, TokenSpan context,
                                      ForwardCache* cache) {
  const PolicyShape& s = params.shape();
  const auto w = params.weights();
  const std::size_t de = s.embed_dim, dh = s.hidden_dim, din = s.input_dim();
  const std::size_t V = s.vocab;

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  fill_window(s, context, c.window);

  const double* emb = w.data() + s.embedding_offset();
  const double* w1 = w.data() + s.w1_offset();
  const double* b1 = w.data() + s.b1_offset();
  const double* w2 = w.data() + s.w2_offset();
  const double* b2 = w.data() + s.b2_offset();

  c.hidden.assign(dh, 0.0);
  for (std::size_t h = 0; h < dh; ++h) {
    const double* row = w1 + h * din;
    double acc = b1[h];
    for (std::size_t i = 0; i < c.window.size(); ++i) {
      const double* e = emb + static_cast<std::size_t>(c.window[i]) * de;
      const double* r = row + i * de;
      for (std::size_t k = 0; k < de; ++k) acc += r[k] * e[k];
    }
    c.hidden[h] = std::tanh(acc);
  }

  c.logits.assign(V, 0.0);
  for (std::size_t v = 0; v < V; ++v) {
    const double* row = w2 + v * dh;
    double acc = b2[v];
    for (std::size_t h = 0; h < dh; ++h) acc += row[h] * c.hidden[h];
    c.logits[v] = acc;
  }
  return c.logits;
}

Distribution tempered_softmax(std::span<const double> logits, double temperature) {
  Distribution p(logits.size(), 0.0);
  if (logits.empty()) return p;
  if (temperature < 0.0 || !std::isfinite(temperature)) {
    throw InvalidArgument("temperature must be a finite non-negative number");
  }
  if (temperature == 0.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
      if (logits[i] > logits[best]) best = i;
    }
    p[best] = 1.0;
    return p;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - mx) / temperature);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

Distribution next_token_distribution(const PolicyParams& params, TokenSpan context) {
  return tempered_softmax(next_token_logits(params, context), 1.0);
}

Token draw_token(std::span<const double> dist, double u) {
  double cum = 0.0;
  Token last_positive = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    last_positive = static_cast<Token>(i);
    cum += dist[i];
    if (u < cum) return static_cast<Token>(i);
  }
  return last_positive;
}

Rollout sample_sequence(const PolicyParams& params, TokenSpan prompt, int max_len,
                        double temperature, std::uint64_t seed) {
  if (max_len < 1) throw InvalidArgument("max_len must be at least 1");
  if (temperature < 0.0) throw InvalidArgument("temperature must be non-negative");
  Rollout r;
  r.prompt.assign(prompt.begin(), prompt.end());
  r.seed = seed;
  r.temperature = temperature;
  Rng rng(seed);
  TokenSeq context = r.prompt;
  for (int step = 0; step < max_len; ++step) {
    auto logits = next_token_logits(params, context);
    Distribution dist = tempered_softmax(logits, temperature);
    const Token t = draw_token(dist, rng.uniform());
    r.generated.push_back(t);
    r.step_distributions.push_back(std::move(dist));
    context.push_back(t);
    if (t == tok::kEos) {
      r.stop = StopReason::kEos;
      return r;
    }
  }
  r.stop = StopReason::kMaxLength;
  return r;
}

// --- losses ----------------------------------------------------------------

void LossValue::add(const LossValue& other, double weight) {
  value += weight * other.value;
  for (const LogitTerm& t : other.terms) {
    LogitTerm scaled = t;
    scaled.value *= weight;
    for (double& d : scaled.dlogits) d *= weight;
    terms.push_back(std::move(scaled));
  }
}

void LossValue::scale(double factor) {
  value *= factor;
  for (LogitTerm& t : terms) {
    t.value *= factor;
    for (double& d : t.dlogits) d *= factor;
  }
}

namespace {

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

}  // namespace

LossValue kl_to_target_term(const PolicyParams& params, TokenSpan context,
                            std::span<const double> target, double weight, std::string label) {
  auto logits = next_token_logits(params, context);
  if (target.size() != logits.size()) throw InvalidArgument("target distribution has wrong size");
  auto logp = log_softmax(logits);
  double kl = 0.0;
  LogitTerm term{TokenSeq(context.begin(), context.end()), std::vector<double>(logits.size()),
                 std::move(label)};
  for (std::size_t v = 0; v < logits.size(); ++v) {
    if (target[v] > 0.0) kl += target[v] * (std::log(target[v]) - logp[v]);
    term.dlogits[v] = weight * (std::exp(logp[v]) - target[v]);
  }
  term.value = weight * kl;
  LossValue out;
  out.value = term.value;
  out.terms.push_back(std::move(term));
  return out;
}

LossValue neg_log_prob_term(const PolicyParams& params, TokenSpan context, Token token,
                            double weight, std::string label) {
  auto logits = next_token_logits(params, context);
  if (token < 0 || static_cast<std::size_t>(token) >= logits.size()) {
    throw InvalidToken("target token " + std::to_string(token) + " outside vocabulary");
  }
  auto logp = log_softmax(logits);
  LogitTerm term{TokenSeq(context.begin(), context.end()), std::vector<double>(logits.size()),
                 std::move(label)};
  for (std::size_t v = 0; v < logits.size(); ++v) {
    term.dlogits[v] = weight * (std::exp(logp[v]) - (static_cast<Token>(v) == token ? 1.0 : 0.0));
  }
  term.value = -weight * logp[static_cast<std::size_t>(token)];
  LossValue out;
  out.value = term.value;
  out.terms.push_back(std::move(term));
  return out;
}

void accumulate_logit_gradient(const PolicyParams& params, TokenSpan context,
                               std::span<const double> dlogits, std::span<double> grad) {
  const PolicyShape& s = params.shape();
  const auto w = params.weights();
  const std::size_t de = s.embed_dim, dh = s.hidden_dim, din = s.input_dim();
  const std::size_t V = s.vocab;
  if (grad.size() != w.size()) throw InvalidArgument("gradient buffer has wrong size");

  ForwardCache c;
  next_token_logits(params, context, &c);

  const double* emb = w.data() + s.embedding_offset();
  const double* w1 = w.data() + s.w1_offset();
  const double* w2 = w.data() + s.w2_offset();
  double* g_emb = grad.data() + s.embedding_offset();
  double* g_w1 = grad.data() + s.w1_offset();
  double* g_b1 = grad.data() + s.b1_offset();
  double* g_w2 = grad.data() + s.w2_offset();
  double* g_b2 = grad.data() + s.b2_offset();

  std::vector<double> dh_vec(dh, 0.0);
  for (std::size_t v = 0; v < V; ++v) {
    const double dz = dlogits[v];
    if (dz == 0.0) continue;
    g_b2[v] += dz;
    double* grow = g_w2 + v * dh;
    const double* row = w2 + v * dh;
    for (std::size_t h = 0; h < dh; ++h) {
      grow[h] += dz * c.hidden[h];
      dh_vec[h] += row[h] * dz;
    }
  }
  for (std::size_t h = 0; h < dh; ++h) {
    const double da = dh_vec[h] * (1.0 - c.hidden[h] * c.hidden[h]);
    if (da == 0.0) continue;
    g_b1[h] += da;
    const double* row = w1 + h * din;
    double* grow = g_w1 + h * din;
    for (std::size_t i = 0; i < c.window.size(); ++i) {
      const std::size_t t = static_cast<std::size_t>(c.window[i]);
      const double* e = emb + t * de;
      double* ge = g_emb + t * de;
      for (std::size_t k = 0; k < de; ++k) {
        grow[i * de + k] += da * e[k];
        ge[k] += da * row[i * de + k];
      }
    }
  }
}

void check_finite(const LossValue& loss) {
  auto describe = [&](std::size_t i) {
    const LogitTerm& t = loss.terms[i];
    return "term " + std::to_string(i) + (t.label.empty() ? "" : " (" + t.label + ")");
  };
  for (std::size_t i = 0; i < loss.terms.size(); ++i) {
    if (!std::isfinite(loss.terms[i].value)) {
      throw NumericFailure("non-finite loss at " + describe(i));
    }
    for (double d : loss.terms[i].dlogits) {
      if (!std::isfinite(d)) throw NumericFailure("non-finite logit gradient at " + describe(i));
    }
  }
  if (!std::isfinite(loss.value)) throw NumericFailure("non-finite loss value");
}

Gradient gradient_of(const PolicyParams& params, const LossValue& loss) {
  check_finite(loss);
  Gradient g(params.size(), 0.0);
  for (const LogitTerm& t : loss.terms) accumulate_logit_gradient(params, t.context, t.dlogits, g);
  return g;
}

Gradient loss_gradient(const PolicyParams& params, const LossFn& loss) {
  return gradient_of(params, loss(params));
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// --- checkpoints -----------------------------------------------------------

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char b[sizeof(T)];
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw IoError("truncated checkpoint");
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(b[i]) << (8 * i);
  return static_cast<T>(u);
}

}  // namespace

void write_checkpoint(std::ostream& out, const PolicyParams& params) {
  const PolicyShape& s = params.shape();
  out.put(static_cast<char>(kCheckpointVersion));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.vocab));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.window));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.embed_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden_dim));
  put_le<std::uint64_t>(out, params.size());
  for (double x : params.weights()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  if (!out) throw IoError("failed writing checkpoint");
}

PolicyParams read_checkpoint(std::istream& in) {
  const int version = in.get();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  PolicyShape s;
  s.vocab = static_cast<int>(get_le<std::uint32_t>(in));
  s.window = static_cast<int>(get_le<std::uint32_t>(in));
  s.embed_dim = static_cast<int>(get_le<std::uint32_t>(in));
  s.hidden_dim = static_cast<int>(get_le<std::uint32_t>(in));
  const auto n = get_le<std::uint64_t>(in);
  s.validate();
  if (n != s.param_count()) throw IoError("checkpoint parameter count does not match its shape");
  std::vector<double> w(n);
  for (double& x : w) x = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return PolicyParams(s, std::move(w));
}

void save_checkpoint(const std::string& path, const PolicyParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_checkpoint(out, params);
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace hsd
