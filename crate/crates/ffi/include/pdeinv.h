#ifndef PDEINV_H
#define PDEINV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PdeinvCommand {
  PDEINV_COMMAND_SYNTHESIZE = 0,
  PDEINV_COMMAND_LANDSCAPE = 1,
  PDEINV_COMMAND_INVERT = 2,
  PDEINV_COMMAND_DIRECT = 3,
  PDEINV_COMMAND_GRAMCHECK = 4,
} PdeinvCommand;

typedef enum PdeinvStatus {
  PDEINV_STATUS_OK = 0,
  PDEINV_STATUS_NULL_POINTER = 1,
  PDEINV_STATUS_INVALID_UTF8 = 2,
  // Invalid configuration or arguments, including wrong array lengths.
  PDEINV_STATUS_CONFIG = 3,
  PDEINV_STATUS_NUMERIC = 4,
  PDEINV_STATUS_INVARIANT = 5,
  PDEINV_STATUS_IO = 6,
  PDEINV_STATUS_BUFFER_TOO_SMALL = 7,
  PDEINV_STATUS_OUT_OF_RANGE = 8,
  PDEINV_STATUS_PANIC = 9,
} PdeinvStatus;

// An experiment: parsed configuration, model, truth and synthesized data.
typedef struct PdeinvExperiment PdeinvExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pdeinv_version(void);

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t pdeinv_last_error(char *buf, size_t len);

// Parse a TOML configuration and synthesize its data.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum PdeinvStatus pdeinv_experiment_new(const char *toml, struct PdeinvExperiment **out);

// Release an experiment. Null is ignored.
//
// # Safety
// `exp` must come from [`pdeinv_experiment_new`] and not be used afterwards.
void pdeinv_experiment_free(struct PdeinvExperiment *exp);

// Number of model parameters, sources and configured objectives.
//
// # Safety
// `exp` must be a live experiment; output pointers may be null.
enum PdeinvStatus pdeinv_experiment_dims(const struct PdeinvExperiment *exp,
                                         size_t *n_params,
                                         size_t *n_sources,
                                         size_t *n_objectives);

// Copy the true parameters into `out` (`len` must equal the parameter count).
//
// # Safety
// `out` must point to `len` writable doubles.
enum PdeinvStatus pdeinv_experiment_truth(const struct PdeinvExperiment *exp,
                                          double *out,
                                          size_t len);

// Copy the measured data (row-major, `n_sources^2` entries each).
//
// # Safety
// `re` and `im` must each point to `len` writable doubles.
enum PdeinvStatus pdeinv_experiment_data(const struct PdeinvExperiment *exp,
                                         double *re,
                                         double *im,
                                         size_t len);

// Objective `objective` at `theta` and its gradient (`grad` may be null).
//
// # Safety
// `theta` must hold `n` doubles and `grad`, if not null, `n` writable doubles.
enum PdeinvStatus pdeinv_experiment_objective(const struct PdeinvExperiment *exp,
                                              size_t objective,
                                              const double *theta,
                                              size_t n,
                                              double *value,
                                              double *grad);

// Run L-BFGS for objective `objective` from `theta0`; writes the final
// parameters to `theta_out` and the relative data misfit to `data_fit`.
//
// # Safety
// `theta0` and `theta_out` must hold `n` doubles; `data_fit` may be null.
enum PdeinvStatus pdeinv_experiment_invert(const struct PdeinvExperiment *exp,
                                           size_t objective,
                                           const double *theta0,
                                           size_t n,
                                           double *theta_out,
                                           double *data_fit);

// Run a command-line command for this experiment, writing into `out_dir`.
//
// # Safety
// `out_dir` must be a NUL-terminated path.
enum PdeinvStatus pdeinv_experiment_run(const struct PdeinvExperiment *exp,
                                        enum PdeinvCommand command,
                                        const char *out_dir);

// Penalty objective `1/2 tr(E* (I + G/rho)^{-1} E)` for `n x n` matrices.
// `rho = +inf` gives `1/2 |E|^2` and `rho = 0` the limit
// `1/2 tr(E* G^{-1} E)`. Null imaginary parts are read as zero.
//
// # Safety
// Non-null arrays must hold `n * n` doubles; `out` must be valid.
enum PdeinvStatus pdeinv_objective(size_t n,
                                   const double *e_re,
                                   const double *e_im,
                                   const double *g_re,
                                   const double *g_im,
                                   double rho,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDEINV_H */
