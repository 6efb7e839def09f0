#ifndef CALIGN_H
#define CALIGN_H

#include <stddef.h>

#if defined(CALIGN_BUILDING)
#define CALIGN_API __attribute__((visibility("default")))
#else
#define CALIGN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    CALIGN_OK = 0,
    CALIGN_E_INPUT = 1,
    CALIGN_E_DIMENSION = 2,
    CALIGN_E_PARAMETER = 3,
    CALIGN_E_DEGENERATE_KERNEL = 4,
    CALIGN_E_NO_SIGNAL = 5,
    CALIGN_E_SINGULAR = 6,
    CALIGN_E_NONCONVERGED = 7,
    CALIGN_E_NUMERIC = 8,
    CALIGN_E_INTERNAL = 9
} calign_status;

/* Opaque handles. */
typedef struct calign_result calign_result;
typedef struct calign_sample calign_sample;
typedef struct calign_bank calign_bank;

/* Message of the last failure on this thread ("" if none). */
CALIGN_API const char* calign_last_error(void);
CALIGN_API const char* calign_status_name(calign_status status);
CALIGN_API const char* calign_schema_version(void);

/* Reports. JSON is always present, CSV may be "". Strings live as long as the result. */
CALIGN_API const char* calign_result_json(const calign_result* result);
CALIGN_API const char* calign_result_csv(const calign_result* result);
CALIGN_API void calign_result_free(calign_result* result);

/* Config-driven runs. `config_json` is the config text; relative dataset
   paths resolve against `base_dir` (may be NULL). threads <= 0 reads
   MKL_THREADS, else 1. */
CALIGN_API calign_status calign_run_cv(const char* config_json, const char* base_dir, int threads, int timing,
                                       calign_result** out);
CALIGN_API calign_status calign_run_correlation(const char* config_json, const char* base_dir, int threads,
                                                calign_result** out);
CALIGN_API calign_status calign_learn_weights(const char* config_json, const char* base_dir, calign_result** out);
/* kind: concentration, perturbation, predictor, stability, genbound, curve. */
CALIGN_API calign_status calign_run_theory(const char* kind, const char* config_json, const char* base_dir,
                                           calign_result** out);
/* One-sided paired t-test of a > b at the given level. */
CALIGN_API calign_status calign_paired_ttest(const double* a, const double* b, size_t n, double level,
                                             calign_result** out);

/* Raw-array helpers. Matrices are row-major m x m. */
CALIGN_API calign_status calign_centered_alignment(const double* K, const double* K_other, size_t m, double* out);
/* min v'Mv - 2v'a over v >= 0; v_out has p entries. residual_out may be NULL. */
CALIGN_API calign_status calign_nnqp(const double* M, const double* a, size_t p, double* v_out,
                                     double* residual_out);
/* kernels: p consecutive m x m matrices. norm_l1 != 0 scales to L1 radius, else L2. */
CALIGN_API calign_status calign_alignf(const double* kernels, size_t p, size_t m, const double* y, int norm_l1,
                                       double radius, double* mu_out);

/* Sample and bank handles. `dataset_json` is a dataset object. */
CALIGN_API calign_status calign_sample_load(const char* dataset_json, const char* base_dir, calign_sample** out);
CALIGN_API size_t calign_sample_size(const calign_sample* sample);
CALIGN_API size_t calign_sample_dim(const calign_sample* sample);
CALIGN_API calign_status calign_sample_labels(const calign_sample* sample, double* out);
CALIGN_API void calign_sample_free(calign_sample* sample);

CALIGN_API calign_status calign_bank_build(const calign_sample* sample, const char* bank_json, calign_bank** out);
CALIGN_API size_t calign_bank_size(const calign_bank* bank);
/* Copies kernel k (m x m, row-major). */
CALIGN_API calign_status calign_bank_kernel(const calign_bank* bank, size_t k, double* out);
/* Weights learned on the whole sample. method: unif, align, alignf, lq (q used only by lq). */
CALIGN_API calign_status calign_bank_weights(const calign_bank* bank, const calign_sample* sample,
                                             const char* method, double q, double radius, double* mu_out);
CALIGN_API void calign_bank_free(calign_bank* bank);

#ifdef __cplusplus
}
#endif

#endif
