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

/* C interface to the harness-distill library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call returns an hsd_status; on failure hsd_last_error() describes
 * the problem (thread-local, valid until the next call on the same thread).
 */

#ifndef HSD_HSD_H_
#define HSD_HSD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HSD_API __declspec(dllexport)
#else
#define HSD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hsd_status {
  HSD_OK = 0,
  HSD_ERR_INVALID_ARGUMENT = 1,
  HSD_ERR_VALIDATION = 2,
  HSD_ERR_NUMERIC = 3,
  HSD_ERR_INVALID_TOKEN = 4,
  HSD_ERR_BUDGET_EXCEEDED = 5,
  HSD_ERR_PROGRAM = 6,
  HSD_ERR_IO = 7,
  HSD_ERR_SERIALIZATION = 8,
  HSD_ERR_INTERNAL = 9
} hsd_status;

typedef struct hsd_policy hsd_policy;
typedef struct hsd_bank hsd_bank;

HSD_API const char* hsd_version(void);
HSD_API const char* hsd_last_error(void);
HSD_API const char* hsd_status_name(hsd_status status);

/* Policy ------------------------------------------------------------------ */

HSD_API hsd_status hsd_policy_create(int vocab, int window, int embed_dim, int hidden_dim, uint64_t seed,
                                     hsd_policy** out);
HSD_API hsd_status hsd_policy_load(const char* path, hsd_policy** out);
HSD_API hsd_status hsd_policy_save(const hsd_policy* policy, const char* path);
HSD_API void hsd_policy_free(hsd_policy* policy);

HSD_API hsd_status hsd_policy_param_count(const hsd_policy* policy, size_t* out);
HSD_API hsd_status hsd_policy_vocab(const hsd_policy* policy, int* out);
HSD_API hsd_status hsd_policy_checksum(const hsd_policy* policy, uint64_t* out);

/* Writes vocab probabilities into `probs` (capacity `probs_len`). */
HSD_API hsd_status hsd_policy_next_token_distribution(const hsd_policy* policy, const int32_t* context,
                                                      size_t context_len, double* probs, size_t probs_len);

/* Samples up to max_len tokens after `prompt`. On return *out_len holds the
 * number of generated tokens (at most out_capacity are written). */
HSD_API hsd_status hsd_policy_sample(const hsd_policy* policy, const int32_t* prompt, size_t prompt_len, int max_len,
                                     double temperature, uint64_t seed, int32_t* out, size_t out_capacity,
                                     size_t* out_len);

/* Memory bank ------------------------------------------------------------- */

HSD_API hsd_status hsd_bank_create(int cold_start_threshold, hsd_bank** out);
HSD_API void hsd_bank_free(hsd_bank* bank);
HSD_API hsd_status hsd_bank_insert(hsd_bank* bank, const int32_t* x, size_t x_len, const int32_t* y, size_t y_len,
                                   int64_t* arrival);
HSD_API hsd_status hsd_bank_size(const hsd_bank* bank, size_t* out);
/* Arrival indices of the top-k visible entries, best first. */
HSD_API hsd_status hsd_bank_top_k(const hsd_bank* bank, const int32_t* query, size_t query_len, int k,
                                  int64_t visible_before, int64_t* out, size_t out_capacity, size_t* out_len);

/* Harnesses ---------------------------------------------------------------- */

/* Runs draft-verify with default settings; writes the answer tokens. */
HSD_API hsd_status hsd_draft_verify(const hsd_policy* driver, const hsd_bank* bank, const int32_t* x, size_t x_len,
                                    int64_t visible_before, uint64_t seed, int32_t* out, size_t out_capacity,
                                    size_t* out_len, int* calls);

/* Math --------------------------------------------------------------------- */

HSD_API hsd_status hsd_token_kl(const double* p, const double* q, size_t n, double* out);
/* scores: n_questions * k row-major values in {0, 1}. */
HSD_API hsd_status hsd_pass_at_k(const double* scores, size_t n_questions, int k, double* out);

/* Commands (the operations behind the command-line tool) ------------------- */

/* seed < 0 keeps the value from the config. */
HSD_API hsd_status hsd_cmd_gen_data(const char* config_path, const char* out_path, int64_t seed);
HSD_API hsd_status hsd_cmd_train(const char* config_path, const char* data_path, const char* out_dir, int64_t seed,
                                 int resume);
HSD_API hsd_status hsd_cmd_eval(const char* config_path, const char* checkpoint_path, const char* data_path,
                                const char* mode, int k, int64_t seed, const char* out_dir);
/* Prints the summary table to stdout. */
HSD_API hsd_status hsd_cmd_compare(const char* const* run_dirs, size_t n_runs, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* HSD_HSD_H_ */
