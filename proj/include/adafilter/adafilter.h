/*
 * C interface to the adafilter library.
 *
 * Objects are opaque handles created by *_create / *_read functions and
 * released with the matching *_free. Every fallible call returns an
 * adafilter_status; on failure adafilter_last_error() describes the problem
 * for the calling thread until its next failing call.
 */
#ifndef ADAFILTER_ADAFILTER_H
#define ADAFILTER_ADAFILTER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define ADAFILTER_API __declspec(dllexport)
#else
#  define ADAFILTER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum adafilter_status {
    ADAFILTER_OK = 0,
    ADAFILTER_E_OUT_OF_RANGE_ENTRY = 1,
    ADAFILTER_E_EMPTY_COLUMN = 2,
    ADAFILTER_E_DIMENSION_MISMATCH = 3,
    ADAFILTER_E_INDEX_OUT_OF_RANGE = 4,
    ADAFILTER_E_REPLICABILITY_LEVEL = 5,
    ADAFILTER_E_INVALID_DF = 6,
    ADAFILTER_E_INVALID_ARGUMENT = 7,
    ADAFILTER_E_NO_TESTABLE = 8,
    ADAFILTER_E_ORACLE_SIZE = 9,
    ADAFILTER_E_NO_CONVERGENCE = 10,
    ADAFILTER_E_PARSE = 11,
    ADAFILTER_E_DUPLICATE_ID = 12,
    ADAFILTER_E_INVALID_SCENARIO = 13,
    ADAFILTER_E_IO = 14,
    ADAFILTER_E_INTERNAL = 99
} adafilter_status;

typedef enum adafilter_method {
    ADAFILTER_METHOD_BONFERRONI = 0,         /* AdaFilter Bonferroni */
    ADAFILTER_METHOD_BH = 1,                 /* AdaFilter BH */
    ADAFILTER_METHOD_BONFERRONI_TWOSTEP = 2, /* sorted-F form of AdaFilter Bonferroni */
    ADAFILTER_METHOD_BH_ORACLE = 3,          /* grid enumeration, at most 200 testable */
    ADAFILTER_METHOD_DIRECT_BONFERRONI = 4,
    ADAFILTER_METHOD_DIRECT_BH = 5
} adafilter_method;

typedef enum adafilter_combiner {
    ADAFILTER_COMBINER_SIMES = 0,
    ADAFILTER_COMBINER_FISHER = 1,
    ADAFILTER_COMBINER_BONFERRONI = 2
} adafilter_combiner;

typedef struct adafilter_matrix adafilter_matrix;
typedef struct adafilter_result adafilter_result;
typedef struct adafilter_curve adafilter_curve;

typedef struct adafilter_options {
    adafilter_method method;
    adafilter_combiner combiner; /* direct methods only */
    int r;
    double alpha;
    int compute_adjusted; /* nonzero: fill derived adjusted values */
} adafilter_options;

ADAFILTER_API const char* adafilter_last_error(void);
ADAFILTER_API const char* adafilter_status_name(adafilter_status status);

/* Matrices. Missing entries are NaN. `values` is study-major (n rows of M). */
ADAFILTER_API adafilter_status adafilter_matrix_create(size_t studies, size_t hypotheses, const double* values,
                                                       adafilter_matrix** out);
ADAFILTER_API adafilter_status adafilter_matrix_read_csv(const char* path, adafilter_matrix** out);
ADAFILTER_API adafilter_status adafilter_matrix_write_csv(const adafilter_matrix* matrix, const char* path);
ADAFILTER_API void adafilter_matrix_free(adafilter_matrix* matrix);
ADAFILTER_API size_t adafilter_matrix_studies(const adafilter_matrix* matrix);
ADAFILTER_API size_t adafilter_matrix_hypotheses(const adafilter_matrix* matrix);
ADAFILTER_API double adafilter_matrix_value(const adafilter_matrix* matrix, size_t study, size_t hypothesis);
ADAFILTER_API const char* adafilter_matrix_id(const adafilter_matrix* matrix, size_t hypothesis);

/* Procedures. */
ADAFILTER_API void adafilter_options_init(adafilter_options* options);
ADAFILTER_API adafilter_status adafilter_run(const adafilter_matrix* matrix, const adafilter_options* options,
                                             adafilter_result** out);
ADAFILTER_API void adafilter_result_free(adafilter_result* result);
ADAFILTER_API size_t adafilter_result_size(const adafilter_result* result);
ADAFILTER_API double adafilter_result_gamma0(const adafilter_result* result);
/* gamma0 = alpha * numerator / denominator exactly. */
ADAFILTER_API void adafilter_result_gamma0_fraction(const adafilter_result* result, uint64_t* numerator,
                                                    uint64_t* denominator);
ADAFILTER_API size_t adafilter_result_filtered_count(const adafilter_result* result);
ADAFILTER_API size_t adafilter_result_rejection_count(const adafilter_result* result);
ADAFILTER_API int adafilter_result_rejected(const adafilter_result* result, size_t hypothesis);
ADAFILTER_API int adafilter_result_untestable(const adafilter_result* result, size_t hypothesis);
/* NaN when not applicable (untestable hypothesis, or value not computed). */
ADAFILTER_API double adafilter_result_filter_value(const adafilter_result* result, size_t hypothesis);
ADAFILTER_API double adafilter_result_select_value(const adafilter_result* result, size_t hypothesis);
ADAFILTER_API double adafilter_result_pc_value(const adafilter_result* result, size_t hypothesis);
ADAFILTER_API double adafilter_result_adjusted(const adafilter_result* result, size_t hypothesis);
/* TSV: id, F, S, pc_pvalue, rejected, untestable [, adjusted]. */
ADAFILTER_API adafilter_status adafilter_result_write_tsv(const adafilter_result* result,
                                                          const adafilter_matrix* matrix, const char* path,
                                                          int with_adjusted);

/* Estimated V and FDP curves over the default breakpoint grid. */
ADAFILTER_API adafilter_status adafilter_curve_compute(const adafilter_matrix* matrix, int r, double alpha,
                                                       adafilter_curve** out);
ADAFILTER_API void adafilter_curve_free(adafilter_curve* curve);
ADAFILTER_API size_t adafilter_curve_size(const adafilter_curve* curve);
ADAFILTER_API void adafilter_curve_point(const adafilter_curve* curve, size_t index, double* gamma, double* v_hat,
                                         double* fdp_hat);
ADAFILTER_API adafilter_status adafilter_curve_write_tsv(const adafilter_curve* curve, const char* path);

/* Single-hypothesis helpers. */
ADAFILTER_API adafilter_status adafilter_pc_pvalue(const double* pvalues, size_t count, int r,
                                                   adafilter_combiner combiner, double* out);
ADAFILTER_API adafilter_status adafilter_chi_square_sf(double x, int df, double* out);

/* Simulation panels. `seed_override` may be NULL to use the file's
 * master_seed; the seed actually used is stored in *seed_used. */
ADAFILTER_API adafilter_status adafilter_simulate(const char* scenario_path, const uint64_t* seed_override,
                                                  unsigned threads, const char* output_path, uint64_t* seed_used,
                                                  size_t* rows_written);

#ifdef __cplusplus
}
#endif

#endif /* ADAFILTER_ADAFILTER_H */
