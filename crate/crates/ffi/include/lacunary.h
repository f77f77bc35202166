#ifndef LACUNARY_H
#define LACUNARY_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LacunaryStatus {
  LACUNARY_STATUS_OK = 0,
  LACUNARY_STATUS_NULL_POINTER = 1,
  LACUNARY_STATUS_INVALID_INPUT = 2,
  LACUNARY_STATUS_UNSUPPORTED = 3,
  LACUNARY_STATUS_DEGENERATE_FIT = 4,
  LACUNARY_STATUS_INVALID_UTF8 = 5,
  LACUNARY_STATUS_INVALID_JSON = 6,
  LACUNARY_STATUS_BUFFER_SIZE = 7,
  LACUNARY_STATUS_PANIC = 8,
} LacunaryStatus;

// Opaque gap distribution.
typedef struct LacunaryGaps LacunaryGaps;

// Opaque periodic function.
typedef struct LacunaryShape LacunaryShape;

typedef struct LacunaryDecayFit {
  // Envelope constant: gap_n <= c * w^n at every fitted step.
  double c;
  double c_fit;
  double w;
  double r_squared;
} LacunaryDecayFit;

typedef struct LacunaryTestSummary {
  double statistic;
  // NaN when the test has no p-value.
  double p_value;
  bool passed;
} LacunaryTestSummary;

typedef struct LacunaryKefpResult {
  double partial_integral;
  double exponent;
  bool converges;
} LacunaryKefpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *lacunary_last_error(void);

// Library version as a static NUL-terminated string.
const char *lacunary_version(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from a `lacunary_*` function that returns an owned string
// and must not be used afterwards.
void lacunary_string_free(char *s);

// Build a shape from JSON, e.g. `{"type":"trig","cos":[1],"sin":[]}` or
// `{"type":"sampled","values":[...]}`.
//
// # Safety
// `json` must be a valid NUL-terminated string; `out` must be writable.
enum LacunaryStatus lacunary_shape_from_json(const char *json, struct LacunaryShape **out);

// # Safety
// `shape` must be NULL or a handle from this library not yet freed.
void lacunary_shape_free(struct LacunaryShape *shape);

// # Safety
// `shape` must be a live handle; `out` must be writable.
enum LacunaryStatus lacunary_shape_evaluate(const struct LacunaryShape *shape,
                                            double t,
                                            double *out);

// # Safety
// `shape` must be a live handle; `out` must be writable.
enum LacunaryStatus lacunary_shape_l2_norm_sq(const struct LacunaryShape *shape, double *out);

// `∫_0^1 f(u) f(u + t) du`.
//
// # Safety
// `shape` must be a live handle; `out` must be writable.
enum LacunaryStatus lacunary_shape_autocorrelation(const struct LacunaryShape *shape,
                                                   double t,
                                                   double *out);

// Build a gap law from JSON, e.g. `{"kind":"uniform","a":0,"b":1}`.
//
// # Safety
// `json` must be a valid NUL-terminated string; `out` must be writable.
enum LacunaryStatus lacunary_gaps_from_json(const char *json, struct LacunaryGaps **out);

// # Safety
// `gaps` must be NULL or a handle from this library not yet freed.
void lacunary_gaps_free(struct LacunaryGaps *gaps);

// Closed-form `A_x`; trigonometric polynomials only.
//
// # Safety
// Handles must be live; `out` must be writable.
enum LacunaryStatus lacunary_ax_closed_form(const struct LacunaryShape *shape,
                                            const struct LacunaryGaps *gaps,
                                            double x,
                                            double *out);

// Truncated series estimate. `out_tail_bound` receives NaN when no bound
// is available; it may be NULL.
//
// # Safety
// Handles must be live; `out_value` must be writable.
enum LacunaryStatus lacunary_ax_series(const struct LacunaryShape *shape,
                                       const struct LacunaryGaps *gaps,
                                       double x,
                                       uint32_t truncation,
                                       size_t grid_size,
                                       double *out_value,
                                       double *out_tail_bound);

// Monte Carlo estimate and its standard error. Deterministic in `seed`.
//
// # Safety
// Handles must be live; both out pointers must be writable.
enum LacunaryStatus lacunary_ax_monte_carlo(const struct LacunaryShape *shape,
                                            const struct LacunaryGaps *gaps,
                                            double x,
                                            uint32_t truncation,
                                            uint64_t reps,
                                            uint64_t seed,
                                            double *out_estimate,
                                            double *out_std_err);

// All three estimates as a JSON document; free it with
// [`lacunary_string_free`].
//
// # Safety
// Handles must be live; `out_json` must be writable.
enum LacunaryStatus lacunary_variance_report_json(const struct LacunaryShape *shape,
                                                  const struct LacunaryGaps *gaps,
                                                  double x,
                                                  uint32_t truncation,
                                                  size_t grid_size,
                                                  uint64_t reps,
                                                  uint64_t seed,
                                                  char **out_json);

// Density of `S_step x mod 1` on `grid_size` points, written into `buf`,
// which must hold exactly `grid_size` doubles.
//
// # Safety
// `gaps` must be live; `buf` must point to `len` writable doubles.
enum LacunaryStatus lacunary_mod1_density(const struct LacunaryGaps *gaps,
                                          double x,
                                          uint32_t step,
                                          size_t grid_size,
                                          double *buf,
                                          size_t len);

// Geometric decay fit of the uniformity gap over steps `2..=n_max`.
//
// # Safety
// `gaps` must be live; `out` must be writable.
enum LacunaryStatus lacunary_decay_fit(const struct LacunaryGaps *gaps,
                                       double x,
                                       uint32_t n_max,
                                       size_t grid_size,
                                       struct LacunaryDecayFit *out);

// KS test of the normalized partial sums against N(0, 1).
//
// # Safety
// Handles must be live; `out` must be writable.
enum LacunaryStatus lacunary_clt_test(const struct LacunaryShape *shape,
                                      const struct LacunaryGaps *gaps,
                                      double x,
                                      uint64_t n,
                                      uint64_t reps,
                                      uint64_t seed,
                                      struct LacunaryTestSummary *out);

// # Safety
// `out` must be writable.
enum LacunaryStatus lacunary_kefp_classify(double a, double t_max, struct LacunaryKefpResult *out);

// `Σ_{j≤k} ⌊√j⌋`
uint64_t lacunary_m_tilde(uint64_t k);

// `Σ_{j≤k} ⌊j^{1/4}⌋`
uint64_t lacunary_m_hat(uint64_t k);

uint64_t lacunary_m(uint64_t k);

// The block count `p` with `m_p <= n < m_{p+1}`; 0 when `n < 2`.
uint64_t lacunary_p_of_n(uint64_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LACUNARY_H */
