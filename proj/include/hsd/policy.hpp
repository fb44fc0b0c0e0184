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

// Fixed-window autoregressive policy: the last `window` token embeddings are
// concatenated, passed through one tanh layer and projected to logits.
// Contexts shorter than the window are left-padded with BOS.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hsd/vocab.hpp"

namespace hsd {

struct PolicyShape {
  int vocab = 64;
  int window = 16;
  int embed_dim = 16;
  int hidden_dim = 64;

  static constexpr std::size_t kMaxParams = 200000;

  std::size_t input_dim() const { return static_cast<std::size_t>(window) * embed_dim; }
  std::size_t param_count() const;
  /// Throws ConfigError.
  void validate() const;

  // Offsets into the flat parameter vector.
  std::size_t embedding_offset() const { return 0; }
  std::size_t w1_offset() const { return static_cast<std::size_t>(vocab) * embed_dim; }
  std::size_t b1_offset() const { return w1_offset() + hidden_dim * input_dim(); }
  std::size_t w2_offset() const { return b1_offset() + hidden_dim; }
  std::size_t b2_offset() const { return w2_offset() + static_cast<std::size_t>(vocab) * hidden_dim; }

  bool operator==(const PolicyShape&) const = default;
};

/// Flat weights: [embedding V x d_e | W1 d_h x (L*d_e) | b1 d_h | W2 V x d_h | b2 V].
class PolicyParams {
 public:
  PolicyParams(PolicyShape shape, std::vector<double> weights);

  static PolicyParams zeros(PolicyShape shape);
  /// Entries uniform in (-scale, scale).
  static PolicyParams random(PolicyShape shape, std::uint64_t seed, double scale = 0.05);

  const PolicyShape& shape() const { return shape_; }
  Vocab vocab() const { return Vocab(shape_.vocab); }
  std::size_t size() const { return w_.size(); }

  std::span<const double> weights() const { return w_; }
  std::span<double> mutable_weights() { return w_; }

  std::uint64_t checksum() const;

  bool operator==(const PolicyParams&) const = default;

 private:
  PolicyShape shape_;
  std::vector<double> w_;
};

using Distribution = std::vector<double>;
using Gradient = std::vector<double>;

/// Intermediate activations kept for backpropagation.
struct ForwardCache {
  std::vector<Token> window;
  std::vector<double> hidden;
  std::vector<double> logits;
};

std::vector<double> next_token_logits(const PolicyParams& params, TokenSpan context,
                                      ForwardCache* cache = nullptr);

/// p_theta(. | context). Throws InvalidToken / InvalidArgument (empty context).
Distribution next_token_distribution(const PolicyParams& params, TokenSpan context);

/// softmax(logits / temperature); temperature 0 yields a one-hot on the
/// argmax with lowest-id tie-break.
Distribution tempered_softmax(std::span<const double> logits, double temperature);

enum class StopReason { kEos, kMaxLength };

struct Rollout {
  TokenSeq prompt;
  TokenSeq generated;
  /// Sampling distributions (after temperature), one per generated token.
  std::vector<Distribution> step_distributions;
  StopReason stop = StopReason::kMaxLength;
  std::uint64_t seed = 0;
  double temperature = 1.0;

  bool operator==(const Rollout&) const = default;
};

/// Inverse-CDF draw; shared by sampling and the replay check.
Token draw_token(std::span<const double> dist, double u);

Rollout sample_sequence(const PolicyParams& params, TokenSpan prompt, int max_len,
                        double temperature, std::uint64_t seed);

// --- Losses and gradients -------------------------------------------------
//
// Every differentiable quantity in the library is a sum of functions of the
// policy's logits at fixed contexts. A loss therefore reports its value plus,
// for each context it touched, d(loss)/d(logits). Sampled tokens and teacher
// contexts enter only as constants.

struct LogitTerm {
  TokenSeq context;
  std::vector<double> dlogits;
  std::string label;
  /// This term's contribution to LossValue::value.
  double value = 0.0;
};

struct LossValue {
  double value = 0.0;
  std::vector<LogitTerm> terms;

  /// Appends `other` scaled by `weight`.
  void add(const LossValue& other, double weight);
  void scale(double factor);
};

using LossFn = std::function<LossValue(const PolicyParams&)>;

/// KL(target || p_theta(.|context)) * weight. d/dlogits = weight * (p - target).
LossValue kl_to_target_term(const PolicyParams& params, TokenSpan context,
                            std::span<const double> target, double weight, std::string label = {});

/// -weight * log p_theta(token | context).
LossValue neg_log_prob_term(const PolicyParams& params, TokenSpan context, Token token,
                            double weight, std::string label = {});

/// Adds d(sum_v dlogits[v] * logits[v]) / dw into `grad`.
void accumulate_logit_gradient(const PolicyParams& params, TokenSpan context,
                               std::span<const double> dlogits, std::span<double> grad);

/// Backpropagates every term of an already evaluated loss.
Gradient gradient_of(const PolicyParams& params, const LossValue& loss);

/// d loss / dw. Throws NumericFailure naming the offending term if the value
/// or any logit gradient is non-finite.
Gradient loss_gradient(const PolicyParams& params, const LossFn& loss);

/// Checks a loss for non-finite entries (throws NumericFailure).
void check_finite(const LossValue& loss);

double l2_norm(std::span<const double> v);

// --- Checkpoints -----------------------------------------------------------
//
// Byte 0: format version. Then little-endian u32 vocab, window, embed_dim,
// hidden_dim, u64 parameter count and that many f64 values.

inline constexpr std::uint8_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const PolicyParams& params);
PolicyParams read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace hsd
