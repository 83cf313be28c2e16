/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MEMS_H
#define MEMS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum MemsStatus {
  MEMS_OK = 0,
  // A required pointer was null.
  MEMS_ERR_NULL = 1,
  // Bad parameter, length or configuration.
  MEMS_ERR_INVALID = 2,
  // The deflection reaches the ground plate.
  MEMS_ERR_TOUCHDOWN = 3,
  // An iterative solver stopped short of its tolerance.
  MEMS_ERR_NO_CONVERGENCE = 4,
  // A linear system was singular.
  MEMS_ERR_SINGULAR = 5,
  // A Rust panic was caught at the boundary.
  MEMS_ERR_INTERNAL = 6,
} MemsStatus;

// Opaque model handle.
typedef struct MemsModel MemsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Create a model. `n` is the odd number of plate nodes (at least 5);
// `neta` the odd number of nodes across the gap, or 0 for the default
// `(n+1)/2`.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_model_new(double beta,
                               double tau,
                               double a,
                               double epsilon,
                               size_t n,
                               size_t neta,
                               struct MemsModel **out);

// Release a model. Null is ignored.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
void mems_model_free(struct MemsModel *model);

// Number of plate nodes, or 0 for a null handle.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
size_t mems_model_nodes(const struct MemsModel *model);

// Node coordinates into `x[len]`.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_model_nodes_x(const struct MemsModel *model, double *x, size_t len);

// First clamped eigenpair. `phi` (optional) receives the eigenfunction
// normalized to minimum −1.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_eigenpair(const struct MemsModel *model, double *mu1, double *phi, size_t len);

// Electrostatic energy of `u` and, optionally, the traction `g[len]`.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_electrostatics(const struct MemsModel *model,
                                    const double *u,
                                    size_t len,
                                    double *energy,
                                    double *g);

// One-dimensional lower and upper bounds on the electrostatic energy.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_energy_bounds(const struct MemsModel *model,
                                   const double *u,
                                   size_t len,
                                   double *lower,
                                   double *upper);

// Mechanical energy of `u`.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_mechanical_energy(const struct MemsModel *model,
                                       const double *u,
                                       size_t len,
                                       double *energy);

// Minimize the mechanical energy at electrostatic energy `rho > 2`.
// Writes the minimizer into `u[len]`. `kkt_tol <= 0` selects the default.
// Returns `MEMS_ERR_NO_CONVERGENCE` if the tolerance is not met; the
// outputs are written in that case too.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_minimize(const struct MemsModel *model,
                              double rho,
                              double kkt_tol,
                              double *u,
                              size_t len,
                              double *lambda,
                              double *mechanical,
                              double *kkt_residual);

// Follow the small-voltage branch from `λ = 0` to `lambda_max` in
// `steps` steps. Writes the last solution reached into `u[len]` and its
// voltage into `reached`; fails with `MEMS_ERR_NO_CONVERGENCE` if that
// falls short of `lambda_max`.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
enum MemsStatus mems_branch(const struct MemsModel *model,
                            double lambda_max,
                            size_t steps,
                            double *u,
                            size_t len,
                            double *reached,
                            double *electrostatic);

// Copy the calling thread's last error message into `buf[cap]`,
// truncated and NUL-terminated. Returns the full message length in bytes,
// excluding the terminator; empty after a successful call.
//
// # Safety
// Pointers must satisfy the conventions in the crate documentation.
size_t mems_last_error(char *buf, size_t cap);

// Static description of a status code.
const char *mems_status_str(enum MemsStatus status);

// Library version as a static NUL-terminated string.
const char *mems_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMS_H */
