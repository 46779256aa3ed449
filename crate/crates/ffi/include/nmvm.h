#ifndef NMVM_H
#define NMVM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NmvmStatus {
  NMVM_STATUS_OK = 0,
  NMVM_STATUS_NULL_POINTER = 1,
  NMVM_STATUS_INVALID_ARGUMENT = 2,
  NMVM_STATUS_INFEASIBLE = 3,
  NMVM_STATUS_BUFFER_TOO_SMALL = 4,
  NMVM_STATUS_INTERNAL = 5,
  NMVM_STATUS_PANIC = 6,
} NmvmStatus;

typedef enum NmvmUtility {
  NMVM_UTILITY_EXPONENTIAL = 0,
  NMVM_UTILITY_POWER = 1,
  NMVM_UTILITY_LOG = 2,
  NMVM_UTILITY_QUADRATIC = 3,
} NmvmUtility;

typedef struct NmvmLargeMarket NmvmLargeMarket;

typedef struct NmvmMixing NmvmMixing;

typedef struct NmvmModel NmvmModel;

typedef struct NmvmExpOptSummary {
  double q_min;
  double expected_utility;
  double ln_neg_expected_utility;
  /*
   Infinite for mixing laws whose Laplace transform is entire.
   */
  double theta0;
  double scalar_a;
  double scalar_b;
  double scalar_c;
} NmvmExpOptSummary;

typedef struct NmvmGeneralOptSummary {
  double phi;
  double psi;
  double rho;
  double m_value;
  /*
   NaN when unavailable.
   */
  double truncation_gap;
  bool at_rho_upper_bound;
} NmvmGeneralOptSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Description of the last failure on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *nmvm_last_error(void);

/*
 Builds a market model from `n`-vectors `mu`, `gamma` and the row-major
 `n × n` structure matrix `a`.

 # Safety
 `mu` and `gamma` must point to `n` values, `a` to `n * n` values, and
 `out` to writable storage for one pointer.
 */
enum NmvmStatus nmvm_model_new(size_t n,
                               double r_f,
                               const double *mu,
                               const double *gamma,
                               const double *a,
                               struct NmvmModel **out);

/*
 # Safety
 `model` must be null or a handle from [`nmvm_model_new`] not yet freed.
 */
void nmvm_model_free(struct NmvmModel *model);

/*
 Number of assets, or 0 for a null handle.

 # Safety
 `model` must be null or a live handle.
 */
size_t nmvm_model_size(const struct NmvmModel *model);

/*
 Degenerate mixing `Z ≡ value`.

 # Safety
 `out` must point to writable storage for one pointer.
 */
enum NmvmStatus nmvm_mixing_constant(double value, struct NmvmMixing **out);

/*
 # Safety
 `out` must point to writable storage for one pointer.
 */
enum NmvmStatus nmvm_mixing_exponential(double rate, struct NmvmMixing **out);

/*
 # Safety
 `out` must point to writable storage for one pointer.
 */
enum NmvmStatus nmvm_mixing_gig(double lambda, double chi, double psi, struct NmvmMixing **out);

/*
 # Safety
 `out` must point to writable storage for one pointer.
 */
enum NmvmStatus nmvm_mixing_bounded_uniform(double lower, double upper, struct NmvmMixing **out);

/*
 # Safety
 `mix` must be null or a live handle.
 */
void nmvm_mixing_free(struct NmvmMixing *mix);

/*
 `E[e^{−sZ}]`.

 # Safety
 `mix` must be a live handle and `out` writable.
 */
enum NmvmStatus nmvm_mixing_laplace(const struct NmvmMixing *mix, double s, double *out);

/*
 `E[Z^r]`.

 # Safety
 `mix` must be a live handle and `out` writable.
 */
enum NmvmStatus nmvm_mixing_moment(const struct NmvmMixing *mix, double r, double *out);

/*
 Exponential-utility optimum for risk aversion `a` and wealth `w0`. The
 weights go to `x_out` (capacity `x_cap`, at least the model size).

 # Safety
 Handles must be live; `x_out` must hold `x_cap` values; `summary` may be
 null.
 */
enum NmvmStatus nmvm_exp_opt(const struct NmvmModel *model,
                             const struct NmvmMixing *mix,
                             double a,
                             double w0,
                             double *x_out,
                             size_t x_cap,
                             struct NmvmExpOptSummary *summary);

/*
 Moment-expansion optimum of order `order` for the given utility family;
 `param` is `a` (exponential), `eta` (power) or `b` (quadratic) and is
 ignored for log utility.

 # Safety
 Handles must be live; `x_out` must hold `x_cap` values; `summary` may be
 null.
 */
enum NmvmStatus nmvm_general_opt(const struct NmvmModel *model,
                                 const struct NmvmMixing *mix,
                                 enum NmvmUtility utility,
                                 double param,
                                 size_t order,
                                 double w0,
                                 double *x_out,
                                 size_t x_cap,
                                 struct NmvmGeneralOptSummary *summary);

/*
 A countable market whose coefficient sequences are `scale / i^exponent`,
 mixed by a uniform law on `[lower, upper]`, usable up to `max_n` assets.

 # Safety
 `out` must point to writable storage for one pointer.
 */
enum NmvmStatus nmvm_large_market_new(double gamma_scale,
                                      double gamma_exponent,
                                      double mu_scale,
                                      double mu_exponent,
                                      double beta_scale,
                                      double beta_exponent,
                                      double beta_bar_scale,
                                      double beta_bar_exponent,
                                      double lower,
                                      double upper,
                                      size_t max_n,
                                      struct NmvmLargeMarket **out);

/*
 # Safety
 `lm` must be null or a live handle.
 */
void nmvm_large_market_free(struct NmvmLargeMarket *lm);

/*
 Optimal expected disutility `U_n` of the first `n` assets.

 # Safety
 `lm` must be a live handle and `out` writable.
 */
enum NmvmStatus nmvm_large_market_u(const struct NmvmLargeMarket *lm, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NMVM_H */
