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

#include "hsd/hsd.h"

#include <algorithm>
#include <cstring>
#include <iostream>
#include <new>
#include <string>

#include "hsd/experiment.hpp"
#include "hsd/harnesses.hpp"
#include "hsd/memory_bank.hpp"
#include "hsd/metrics.hpp"
#include "hsd/objectives.hpp"
#include "hsd/policy.hpp"

struct hsd_policy {
  hsd::PolicyParams params;
};

struct hsd_bank {
  hsd::MemoryBank bank;
};

namespace {

thread_local std::string g_last_error;

hsd_status status_of(hsd::ErrorCode code) {
  switch (code) {
    case hsd::ErrorCode::kInvalidArgument: return HSD_ERR_INVALID_ARGUMENT;
    case hsd::ErrorCode::kConfig: return HSD_ERR_VALIDATION;
    case hsd::ErrorCode::kPrecondition: return HSD_ERR_VALIDATION;
    case hsd::ErrorCode::kNumeric: return HSD_ERR_NUMERIC;
    case hsd::ErrorCode::kInvalidToken: return HSD_ERR_INVALID_TOKEN;
    case hsd::ErrorCode::kBudgetExceeded: return HSD_ERR_BUDGET_EXCEEDED;
    case hsd::ErrorCode::kProgram: return HSD_ERR_PROGRAM;
    case hsd::ErrorCode::kIo: return HSD_ERR_IO;
    case hsd::ErrorCode::kSerialization: return HSD_ERR_SERIALIZATION;
  }
  return HSD_ERR_INTERNAL;
}

template <typename F>
hsd_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return HSD_OK;
  } catch (const hsd::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HSD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HSD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return HSD_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw hsd::InvalidArgument(std::string(what) + " must not be null");
}

hsd::TokenSeq tokens(const int32_t* data, size_t n, const char* what) {
  if (n > 0) require(data, what);
  return hsd::TokenSeq(data, data + n);
}

void copy_out(const hsd::TokenSeq& src, int32_t* out, size_t capacity, size_t* out_len) {
  require(out_len, "out_len");
  if (capacity > 0) require(out, "out");
  std::copy_n(src.begin(), std::min(capacity, src.size()), out);
  *out_len = src.size();
}

std::optional<std::uint64_t> seed_arg(int64_t seed) {
  if (seed < 0) return std::nullopt;
  return static_cast<std::uint64_t>(seed);
}

std::string str_arg(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* hsd_version(void) { return "0.1.0"; }

const char* hsd_last_error(void) { return g_last_error.c_str(); }

const char* hsd_status_name(hsd_status status) {
  switch (status) {
    case HSD_OK: return "ok";
    case HSD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HSD_ERR_VALIDATION: return "validation error";
    case HSD_ERR_NUMERIC: return "numeric failure";
    case HSD_ERR_INVALID_TOKEN: return "invalid token";
    case HSD_ERR_BUDGET_EXCEEDED: return "budget exceeded";
    case HSD_ERR_PROGRAM: return "program error";
    case HSD_ERR_IO: return "i/o error";
    case HSD_ERR_SERIALIZATION: return "serialization error";
    case HSD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

hsd_status hsd_policy_create(int vocab, int window, int embed_dim, int hidden_dim, uint64_t seed, hsd_policy** out) {
  return guarded([&] {
    require(out, "out");
    hsd::PolicyShape shape{vocab, window, embed_dim, hidden_dim};
    *out = new hsd_policy{hsd::PolicyParams::random(shape, seed)};
  });
}

hsd_status hsd_policy_load(const char* path, hsd_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new hsd_policy{hsd::load_checkpoint(path)};
  });
}

hsd_status hsd_policy_save(const hsd_policy* policy, const char* path) {
  return guarded([&] {
    require(policy, "policy");
    require(path, "path");
    hsd::save_checkpoint(path, policy->params);
  });
}

void hsd_policy_free(hsd_policy* policy) { delete policy; }

hsd_status hsd_policy_param_count(const hsd_policy* policy, size_t* out) {
  return guarded([&] {
    require(policy, "policy");
    require(out, "out");
    *out = policy->params.size();
  });
}

hsd_status hsd_policy_vocab(const hsd_policy* policy, int* out) {
  return guarded([&] {
    require(policy, "policy");
    require(out, "out");
    *out = policy->params.shape().vocab;
  });
}

hsd_status hsd_policy_checksum(const hsd_policy* policy, uint64_t* out) {
  return guarded([&] {
    require(policy, "policy");
    require(out, "out");
    *out = policy->params.checksum();
  });
}

hsd_status hsd_policy_next_token_distribution(const hsd_policy* policy, const int32_t* context, size_t context_len,
                                              double* probs, size_t probs_len) {
  return guarded([&] {
    require(policy, "policy");
    require(probs, "probs");
    const auto dist = hsd::next_token_distribution(policy->params, tokens(context, context_len, "context"));
    if (probs_len < dist.size()) throw hsd::InvalidArgument("probs buffer smaller than the vocabulary");
    std::copy(dist.begin(), dist.end(), probs);
  });
}

hsd_status hsd_policy_sample(const hsd_policy* policy, const int32_t* prompt, size_t prompt_len, int max_len,
                             double temperature, uint64_t seed, int32_t* out, size_t out_capacity, size_t* out_len) {
  return guarded([&] {
    require(policy, "policy");
    const auto r = hsd::sample_sequence(policy->params, tokens(prompt, prompt_len, "prompt"), max_len, temperature, seed);
    copy_out(r.generated, out, out_capacity, out_len);
  });
}

hsd_status hsd_bank_create(int cold_start_threshold, hsd_bank** out) {
  return guarded([&] {
    require(out, "out");
    if (cold_start_threshold < 0) throw hsd::InvalidArgument("cold-start threshold must be non-negative");
    *out = new hsd_bank{hsd::MemoryBank(cold_start_threshold)};
  });
}

void hsd_bank_free(hsd_bank* bank) { delete bank; }

hsd_status hsd_bank_insert(hsd_bank* bank, const int32_t* x, size_t x_len, const int32_t* y, size_t y_len,
                           int64_t* arrival) {
  return guarded([&] {
    require(bank, "bank");
    const auto a = bank->bank.insert(tokens(x, x_len, "x"), tokens(y, y_len, "y"));
    if (arrival) *arrival = a;
  });
}

hsd_status hsd_bank_size(const hsd_bank* bank, size_t* out) {
  return guarded([&] {
    require(bank, "bank");
    require(out, "out");
    *out = bank->bank.size();
  });
}

hsd_status hsd_bank_top_k(const hsd_bank* bank, const int32_t* query, size_t query_len, int k,
                          int64_t visible_before, int64_t* out, size_t out_capacity, size_t* out_len) {
  return guarded([&] {
    require(bank, "bank");
    require(out_len, "out_len");
    const auto hits = bank->bank.top_k(hsd::embed(tokens(query, query_len, "query")), k, visible_before);
    if (out_capacity > 0) require(out, "out");
    for (size_t i = 0; i < std::min(out_capacity, hits.size()); ++i) out[i] = hits[i]->arrival;
    *out_len = hits.size();
  });
}

hsd_status hsd_draft_verify(const hsd_policy* driver, const hsd_bank* bank, const int32_t* x, size_t x_len,
                            int64_t visible_before, uint64_t seed, int32_t* out, size_t out_capacity, size_t* out_len,
                            int* calls) {
  return guarded([&] {
    require(driver, "driver");
    require(bank, "bank");
    hsd::DraftVerifyConfig cfg;
    cfg.cold_start = bank->bank.cold_start_threshold();
    const auto r = hsd::draft_verify(driver->params, tokens(x, x_len, "x"), bank->bank, visible_before, cfg, seed);
    copy_out(r.answer, out, out_capacity, out_len);
    if (calls) *calls = static_cast<int>(r.trace.calls.size());
  });
}

hsd_status hsd_token_kl(const double* p, const double* q, size_t n, double* out) {
  return guarded([&] {
    require(p, "p");
    require(q, "q");
    require(out, "out");
    *out = hsd::token_kl({p, n}, {q, n});
  });
}

hsd_status hsd_pass_at_k(const double* scores, size_t n_questions, int k, double* out) {
  return guarded([&] {
    require(out, "out");
    if (k < 1) throw hsd::InvalidArgument("k must be at least 1");
    if (n_questions > 0) require(scores, "scores");
    std::vector<std::vector<double>> samples(n_questions);
    for (size_t i = 0; i < n_questions; ++i) {
      samples[i].assign(scores + i * static_cast<size_t>(k), scores + (i + 1) * static_cast<size_t>(k));
    }
    *out = hsd::pass_at_k(samples, k);
  });
}

hsd_status hsd_cmd_gen_data(const char* config_path, const char* out_path, int64_t seed) {
  return guarded([&] { hsd::cmd_gen_data(str_arg(config_path), str_arg(out_path), seed_arg(seed)); });
}

hsd_status hsd_cmd_train(const char* config_path, const char* data_path, const char* out_dir, int64_t seed,
                         int resume) {
  return guarded([&] {
    hsd::cmd_train(str_arg(config_path), str_arg(data_path), str_arg(out_dir), seed_arg(seed), resume != 0);
  });
}

hsd_status hsd_cmd_eval(const char* config_path, const char* checkpoint_path, const char* data_path, const char* mode,
                        int k, int64_t seed, const char* out_dir) {
  return guarded([&] {
    hsd::cmd_eval(str_arg(config_path), str_arg(checkpoint_path), str_arg(data_path), str_arg(mode), k,
                  seed_arg(seed), str_arg(out_dir));
  });
}

hsd_status hsd_cmd_compare(const char* const* run_dirs, size_t n_runs, const char* out_dir) {
  return guarded([&] {
    if (n_runs > 0) require(run_dirs, "run_dirs");
    std::vector<std::string> dirs;
    for (size_t i = 0; i < n_runs; ++i) dirs.push_back(str_arg(run_dirs[i]));
    hsd::cmd_compare(dirs, str_arg(out_dir), std::cout);
  });
}

}  // extern "C"
