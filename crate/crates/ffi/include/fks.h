#ifndef FKS_H
#define FKS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Values 1 and 3 match the command-line exit codes.
typedef enum FksStatus {
  FKS_STATUS_OK = 0,
  FKS_STATUS_INVALID_INPUT = 1,
  FKS_STATUS_IO = 3,
  FKS_STATUS_NULL_POINTER = 4,
  // The simulation has not been run yet.
  FKS_STATUS_NOT_RUN = 5,
  FKS_STATUS_BUFFER_TOO_SMALL = 6,
  FKS_STATUS_PANIC = 7,
} FksStatus;

// How a run ended.
typedef enum FksTermination {
  FKS_TERMINATION_REACHED_T_END = 0,
  FKS_TERMINATION_BLOWUP_EVENT = 1,
  FKS_TERMINATION_MAX_STEPS = 2,
} FksTermination;

typedef enum FksClassification {
  FKS_CLASSIFICATION_SINGULAR = 0,
  FKS_CLASSIFICATION_BOUNDED = 1,
  FKS_CLASSIFICATION_INCONCLUSIVE = 2,
} FksClassification;

// Opaque simulation handle.
typedef struct FksSimulation FksSimulation;

// Blow-up ansatz `y = a1 (a2 - t)^(-a3)` fitted to a series. The
// parameters are NaN when no fit was possible.
typedef struct FksFit {
  double a1;
  double a2;
  double a3;
  double rms_residual;
  double growth;
  enum FksClassification classification;
} FksFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *fks_last_error(void);

// Library version, a static NUL-terminated string.
const char *fks_version(void);

// Create a simulation from `key = value` configuration text (the same
// keys as the command-line config file).
//
// # Safety
// `config` must be a NUL-terminated string or NULL; `out` must be valid.
enum FksStatus fks_simulation_new(const char *config, struct FksSimulation **out);

// Release a simulation. NULL is ignored.
//
// # Safety
// `sim` must come from [`fks_simulation_new`] and not be used afterwards.
void fks_simulation_free(struct FksSimulation *sim);

// Integrate to `t_end` in memory (no files are written). Running again
// replaces the previous result.
//
// # Safety
// `sim` must be a live handle.
enum FksStatus fks_simulation_run(struct FksSimulation *sim);

// Grid size `n`.
//
// # Safety
// `sim` must be a live handle and `n` valid.
enum FksStatus fks_simulation_grid_size(const struct FksSimulation *sim, size_t *n);

// Final time and termination reason of the last run.
//
// # Safety
// `sim` must be a live handle; out-pointers must be valid.
enum FksStatus fks_simulation_result(const struct FksSimulation *sim,
                                     double *t_final,
                                     enum FksTermination *termination);

// Copy the final `u` and `v` grid values into buffers of `len >= n`
// doubles. Either buffer may be NULL to skip it.
//
// # Safety
// Non-NULL buffers must hold `len` doubles.
enum FksStatus fks_simulation_fields(const struct FksSimulation *sim,
                                     double *u,
                                     double *v,
                                     size_t len);

// Number of diagnostic columns per record (see [`fks_diagnostics_column`]).
size_t fks_diagnostics_columns(void);

// Name of diagnostic column `i` as a static string, or NULL.
const char *fks_diagnostics_column(size_t i);

// Copy the diagnostics of the last run, row-major with
// [`fks_diagnostics_columns`] values per accepted step. With `out` NULL
// only `rows` is set.
//
// # Safety
// `rows` must be valid; a non-NULL `out` must hold `capacity` doubles.
enum FksStatus fks_simulation_diagnostics(const struct FksSimulation *sim,
                                          double *out,
                                          size_t capacity,
                                          size_t *rows);

// Fit and classify a `(t, y)` series. `bounded_run` says the run reached
// its end time without a blow-up event.
//
// # Safety
// `t` and `y` must hold `len` doubles; `out` must be valid.
enum FksStatus fks_fit_blowup(const double *t,
                              const double *y,
                              size_t len,
                              bool bounded_run,
                              struct FksFit *out);

// Constants report as JSON for `key = value` parameter text.
//
// # Safety
// `params` must be a NUL-terminated string; `out` must be valid. Free the
// result with [`fks_string_free`].
enum FksStatus fks_constants_json(const char *params, char **out);

// Run verification suites (comma-separated names or `all`) and return the
// JSON report. `passed` is set to whether no suite failed.
//
// # Safety
// `suites` must be a NUL-terminated string; out-pointers must be valid.
enum FksStatus fks_verify_json(const char *suites, bool *passed, char **out);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void fks_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FKS_H */
