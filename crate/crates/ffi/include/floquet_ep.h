#ifndef FLOQUET_EP_H
#define FLOQUET_EP_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FepDissipator {
  FEP_DISSIPATOR_MINUS = 0,
  FEP_DISSIPATOR_Z = 1,
} FepDissipator;

typedef enum FepFamily {
  FEP_FAMILY_STATIC = 0,
  FEP_FAMILY_DRIVE_COS = 1,
  FEP_FAMILY_DRIVE_SQUARE = 2,
  FEP_FAMILY_DISS_COS = 3,
  FEP_FAMILY_DISS_SQUARE = 4,
} FepFamily;

typedef enum FepStatus {
  FEP_STATUS_OK = 0,
  FEP_STATUS_NULL_POINTER = 1,
  FEP_STATUS_INVALID_ARGUMENT = 2,
  FEP_STATUS_INVALID_MODEL = 3,
  FEP_STATUS_NUMERICAL = 4,
  FEP_STATUS_IO = 5,
  FEP_STATUS_BUFFER_TOO_SMALL = 6,
  FEP_STATUS_PANIC = 7,
} FepStatus;

/**
 * A qubit model from one of the built-in families.
 */
typedef struct FepModel FepModel;

/**
 * Result of a (γ, Ω) sweep.
 */
typedef struct FepPhaseDiagram FepPhaseDiagram;

/**
 * Spectral data of the one-period propagator.
 */
typedef struct FepSpectrum FepSpectrum;

/**
 * Per-point EP observables.
 */
typedef struct FepObservables {
  double ip;
  /**
   * 1 when every transient eigenvalue is real.
   */
  int32_t overdamped;
  uint32_t n_real_transients;
  /**
   * 1 when the point sits on an exact coherent degeneracy.
   */
  int32_t degenerate;
} FepObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fep_version(void);

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `cap > 0`). Returns the full message length without
 * the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes or NULL.
 */
size_t fep_last_error_message(char *buf, size_t cap);

/**
 * Creates a family model. `delta` is the drive modulation depth and only
 * affects `DriveCos`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum FepStatus fep_model_new(enum FepFamily fam,
                             enum FepDissipator dis,
                             double gamma,
                             double omega,
                             double delta,
                             struct FepModel **out);

/**
 * # Safety
 * `model` must come from [`fep_model_new`] and not be freed twice.
 */
void fep_model_free(struct FepModel *model);

/**
 * Diagonalises the one-period propagator of `model`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum FepStatus fep_spectrum_compute(const struct FepModel *model, struct FepSpectrum **out);

/**
 * # Safety
 * `spectrum` must come from [`fep_spectrum_compute`] and not be freed twice.
 */
void fep_spectrum_free(struct FepSpectrum *spectrum);

/**
 * Eigenvalues of `G(T)` sorted by descending real part. `*len` receives the
 * count (4 for a qubit) even when the buffers are too small.
 *
 * # Safety
 * `re` and `im` must be valid for `cap` doubles; `len` may be NULL.
 */
enum FepStatus fep_spectrum_eigenvalues(const struct FepSpectrum *spectrum,
                                        double *re,
                                        double *im,
                                        size_t cap,
                                        size_t *len);

/**
 * # Safety
 * `spectrum` must be a live handle; `out` must be writable.
 */
enum FepStatus fep_spectrum_observables(const struct FepSpectrum *spectrum,
                                        struct FepObservables *out);

/**
 * Runs a sweep over inclusive uniform grids of `n_gamma` × `n_omega` points.
 *
 * # Safety
 * `out` must be writable.
 */
enum FepStatus fep_sweep_run(enum FepFamily fam,
                             enum FepDissipator dis,
                             double delta,
                             double gamma_lo,
                             double gamma_hi,
                             size_t n_gamma,
                             double omega_lo,
                             double omega_hi,
                             size_t n_omega,
                             struct FepPhaseDiagram **out);

/**
 * # Safety
 * `pd` must come from [`fep_sweep_run`] and not be freed twice.
 */
void fep_sweep_free(struct FepPhaseDiagram *pd);

/**
 * Metric of every cell, row-major `i_gamma * n_omega + j_omega`; failed
 * cells are NaN.
 *
 * # Safety
 * `buf` must be valid for `cap` doubles; `len` may be NULL.
 */
enum FepStatus fep_sweep_ip(const struct FepPhaseDiagram *pd, double *buf, size_t cap, size_t *len);

/**
 * Writes the sweep CSV to `path` (UTF-8).
 *
 * # Safety
 * `pd` must be a live handle; `path` a NUL-terminated string.
 */
enum FepStatus fep_sweep_write_csv(const struct FepPhaseDiagram *pd, const char *path);

/**
 * Closed-form EP strengths of the square-wave drive with a σ₋ dissipator
 * at frequency `omega`, ascending.
 *
 * # Safety
 * `roots` must be valid for `cap` doubles; `len` may be NULL.
 */
enum FepStatus fep_ep_contour_square_drive(double omega, double *roots, size_t cap, size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOQUET_EP_H */
