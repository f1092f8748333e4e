#ifndef MANIFOLD_LQG_H
#define MANIFOLD_LQG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes returned by every fallible function.
typedef enum MlqStatus {
  MLQ_STATUS_OK = 0,
  MLQ_STATUS_NULL_POINTER = 1,
  MLQ_STATUS_INVALID_ARGUMENT = 2,
  MLQ_STATUS_DIMENSION_MISMATCH = 3,
  MLQ_STATUS_NOT_STABLE = 4,
  MLQ_STATUS_SINGULAR = 5,
  MLQ_STATUS_NO_CONVERGENCE = 6,
  MLQ_STATUS_INFEASIBLE = 7,
  MLQ_STATUS_PANIC = 8,
  MLQ_STATUS_INTERNAL = 9,
} MlqStatus;

typedef enum MlqAlgorithm {
  MLQ_ALGORITHM_ONM = 0,
  MLQ_ALGORITHM_EUCLIDEAN_NEWTON = 1,
  MLQ_ALGORITHM_PROJECTED_GRADIENT = 2,
} MlqAlgorithm;

typedef enum MlqDirectionStatus {
  MLQ_DIRECTION_STATUS_NEWTON = 0,
  MLQ_DIRECTION_STATUS_GRADIENT_FALLBACK = 1,
  MLQ_DIRECTION_STATUS_GRADIENT = 2,
} MlqDirectionStatus;

typedef enum MlqStrategy {
  MLQ_STRATEGY_CERTIFICATE = 0,
  MLQ_STRATEGY_BACKTRACKING = 1,
} MlqStrategy;

// Opaque constraint handle.
typedef struct MlqConstraint MlqConstraint;

// Opaque cost-pair handle.
typedef struct MlqCost MlqCost;

// Opaque plant handle.
typedef struct MlqPlant MlqPlant;

// Scalars reported by one online step. The next gain is written to the
// caller's buffer.
typedef struct MlqStepReport {
  double eta;
  double certificate;
  double grad_norm_g;
  double direction_norm_g;
  double closed_loop_radius;
  double cost;
  enum MlqDirectionStatus status;
} MlqStepReport;

// Summary of an offline Newton solve.
typedef struct MlqSolveReport {
  uintptr_t iterations;
  double final_grad_norm_g;
  bool converged;
} MlqSolveReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of the calling thread into `buf`
// (NUL-terminated, truncated to `len`). Returns the full message length.
uintptr_t mlq_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *mlq_version(void);

// Plant from row-major `A` (n x n), `B` (n x m), `W` (n x n) and the noise
// floor `sigma_sq` with `W ⪰ sigma_sq·I`.
enum MlqStatus mlq_plant_new(uintptr_t n,
                             uintptr_t m,
                             const double *a,
                             const double *b,
                             const double *w,
                             double sigma_sq,
                             struct MlqPlant **out);

// Random open-loop-stable plant with `ρ(A) = target_rho` and `W = I`.
enum MlqStatus mlq_plant_generate(uint64_t seed,
                                  uintptr_t n,
                                  uintptr_t m,
                                  double target_rho,
                                  struct MlqPlant **out);

enum MlqStatus mlq_plant_dims(const struct MlqPlant *plant, uintptr_t *n, uintptr_t *m);

// Spectral radius of `A + BK` for a row-major `m x n` gain.
enum MlqStatus mlq_closed_loop_radius(const struct MlqPlant *plant, const double *k, double *out);

void mlq_plant_free(struct MlqPlant *plant);

// Cost pair from row-major `Q` (n x n) and `R` (m x m).
enum MlqStatus mlq_cost_new(uintptr_t n,
                            uintptr_t m,
                            const double *q,
                            const double *r,
                            struct MlqCost **out);

void mlq_cost_free(struct MlqCost *cost);

// Unconstrained gains (`m x n`).
enum MlqStatus mlq_constraint_none(uintptr_t m, uintptr_t n, struct MlqConstraint **out);

// Entrywise sparsity: nonzero bytes of the row-major `m x n` `mask` pin
// the corresponding gain entries to zero.
enum MlqStatus mlq_constraint_mask(uintptr_t m,
                                   uintptr_t n,
                                   const uint8_t *mask,
                                   struct MlqConstraint **out);

// Row-affine constraint `C K = D` with row-major `C` (p x m), `D` (p x n).
enum MlqStatus mlq_constraint_row_affine(uintptr_t m,
                                         uintptr_t n,
                                         uintptr_t p,
                                         const double *c,
                                         const double *d,
                                         struct MlqConstraint **out);

enum MlqStatus mlq_constraint_tangent_dim(const struct MlqConstraint *constraint, uintptr_t *out);

void mlq_constraint_free(struct MlqConstraint *constraint);

// Infinite-horizon average cost `f(K) = Tr(P_K W)`.
enum MlqStatus mlq_cost_value(const struct MlqPlant *plant,
                              const struct MlqCost *cost,
                              const double *k,
                              double *out);

// Step-size bound `s_K` for direction `g` (both `m x n`); `+inf` when `BG = 0`.
enum MlqStatus mlq_stability_certificate(const struct MlqPlant *plant,
                                         const struct MlqCost *cost,
                                         const double *k,
                                         const double *g,
                                         double *out);

// One certificate-limited update of `algorithm` from gain `k`; the next
// gain is written to `k_next` and the scalars to `report`.
enum MlqStatus mlq_step(const struct MlqPlant *plant,
                        const struct MlqCost *cost,
                        const struct MlqConstraint *constraint,
                        enum MlqAlgorithm algorithm,
                        const double *k,
                        double *k_next,
                        struct MlqStepReport *report);

// Offline Riemannian Newton from `k_init` until `‖grad h‖_g ≤ tol` or
// `max_iter` iterations. Running out of iterations is not an error: the
// report says `converged = false` and `k_out` holds the last iterate.
enum MlqStatus mlq_offline_minimizer(const struct MlqPlant *plant,
                                     const struct MlqCost *cost,
                                     const struct MlqConstraint *constraint,
                                     const double *k_init,
                                     double tol,
                                     uintptr_t max_iter,
                                     enum MlqStrategy strategy,
                                     double *k_out,
                                     struct MlqSolveReport *report);

// Stabilizing DARE solution for row-major `A` (n x n), `B` (n x m),
// `Q` (n x n), `R` (m x m); writes `P` (n x n) and `K` (m x n) with
// `u = Kx`.
enum MlqStatus mlq_solve_dare(uintptr_t n,
                              uintptr_t m,
                              const double *a,
                              const double *b,
                              const double *q,
                              const double *r,
                              double *p_out,
                              double *k_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANIFOLD_LQG_H */
