#ifndef FELAB_H
#define FELAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define FELAB_ELEMENT_TET 0

#define FELAB_ELEMENT_PRISM 1

#define FELAB_PROBLEM_POISSON 0

#define FELAB_PROBLEM_CONVDIFF 1

#define FELAB_VARIANT_QSS 0

#define FELAB_VARIANT_SQS 1

#define FELAB_VARIANT_SSQ 2

#define FELAB_GEO_LINEAR 0

#define FELAB_GEO_GENERIC 1

#define FELAB_LAYOUT_MAJOR 0

#define FELAB_LAYOUT_INTERLEAVED 1

typedef enum FelabStatus {
  FELAB_STATUS_OK = 0,
  FELAB_STATUS_NULL_POINTER = 1,
  FELAB_STATUS_INVALID_ARGUMENT = 2,
  FELAB_STATUS_DEGENERATE_ELEMENT = 3,
  FELAB_STATUS_INVERTED_ELEMENT = 4,
  FELAB_STATUS_SHAPE_MISMATCH = 5,
  FELAB_STATUS_OUT_OF_RANGE = 6,
  FELAB_STATUS_PANIC = 7,
} FelabStatus;

typedef struct FelabBatch FelabBatch;

typedef struct FelabResult FelabResult;

/**
 * Processor rates: TFlops and GB/s.
 */
typedef struct FelabProfile {
  double peak_dp_tflops;
  double peak_bandwidth_gbs;
  double bench_dp_tflops;
  double bench_bandwidth_gbs;
} FelabProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *felab_last_error(void);

/**
 * Values written by [`felab_integrate_element`]: `n*n + n` for `n` shape
 * functions, or 0 for an unknown element type.
 */
uintptr_t felab_output_len(uint32_t elem);

/**
 * Integrate one element. `coords` holds the vertices as xyz triples,
 * `coeffs` the flat coefficient set; `out` receives `A` row-major then `b`.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum FelabStatus felab_integrate_element(uint32_t variant,
                                         uint32_t geo,
                                         uint32_t prob,
                                         uint32_t elem,
                                         const double *coords,
                                         uintptr_t coords_len,
                                         const double *coeffs,
                                         uintptr_t coeffs_len,
                                         double *out,
                                         uintptr_t out_len);

/**
 * Build a batch from element-major arrays, stored in the given layout.
 *
 * # Safety
 * Input pointers must be valid for their lengths; `out` must be writable.
 */
enum FelabStatus felab_batch_new(uint32_t elem,
                                 uint32_t prob,
                                 uint32_t layout_scheme,
                                 uintptr_t lane_width,
                                 const double *geometry,
                                 uintptr_t geometry_len,
                                 const double *coeffs,
                                 uintptr_t coeffs_len,
                                 struct FelabBatch **out);

/**
 * # Safety
 * `batch` must come from [`felab_batch_new`] and not be freed twice.
 */
void felab_batch_free(struct FelabBatch *batch);

/**
 * # Safety
 * `batch` must be NULL or a live handle.
 */
uintptr_t felab_batch_len(const struct FelabBatch *batch);

/**
 * Integrate every element of `batch`. On a geometry failure the index of
 * the first bad element is stored in `failed_element` when non-NULL.
 *
 * # Safety
 * `batch` must be a live handle; `out` must be writable.
 */
enum FelabStatus felab_batch_integrate(const struct FelabBatch *batch,
                                       uint32_t variant,
                                       uint32_t geo,
                                       uint32_t out_layout,
                                       uintptr_t out_lane_width,
                                       uintptr_t workers,
                                       struct FelabResult **out,
                                       uintptr_t *failed_element);

/**
 * Copy element `e` of a result (`A` row-major then `b`) into `out`.
 *
 * # Safety
 * `result` must be a live handle; `out` valid for `out_len` values.
 */
enum FelabStatus felab_result_element(const struct FelabResult *result,
                                      uintptr_t e,
                                      double *out,
                                      uintptr_t out_len);

/**
 * Measured global accesses per element, or a negative value for NULL.
 *
 * # Safety
 * `result` must be NULL or a live handle.
 */
double felab_result_accesses_per_element(const struct FelabResult *result);

/**
 * # Safety
 * `result` must come from [`felab_batch_integrate`] and not be freed twice.
 */
void felab_result_free(struct FelabResult *result);

/**
 * Rates of a built-in profile by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum FelabStatus felab_builtin_profile(const char *name, struct FelabProfile *out);

/**
 * Operations per value moved at which memory and arithmetic balance,
 * using benchmark rates when `use_benchmark` is non-zero.
 *
 * # Safety
 * `p` and `out` must be valid.
 */
enum FelabStatus felab_limiting_intensity(const struct FelabProfile *p,
                                          int32_t use_benchmark,
                                          double *out);

/**
 * Model operation count and global accesses per element.
 *
 * # Safety
 * `ops` and `accesses` must be writable.
 */
enum FelabStatus felab_op_count(uint32_t variant,
                                uint32_t geo,
                                uint32_t prob,
                                uint32_t elem,
                                uint64_t *ops,
                                uint64_t *accesses);

/**
 * Memory and compute time bounds per element in nanoseconds.
 *
 * # Safety
 * `p`, `memory_ns` and `compute_ns` must be valid.
 */
enum FelabStatus felab_time_bound(uint32_t variant,
                                  uint32_t geo,
                                  uint32_t prob,
                                  uint32_t elem,
                                  const struct FelabProfile *p,
                                  double *memory_ns,
                                  double *compute_ns);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FELAB_H */
