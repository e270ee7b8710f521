#ifndef CRITSENSE_H
#define CRITSENSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum CsStatus {
  CS_OK = 0,
  CS_NULL_POINTER = 1,
  CS_INVALID_INPUT = 2,
  CS_DEGENERATE = 3,
  CS_NO_CONVERGENCE = 4,
  CS_SINGULAR = 5,
  CS_DIVERGING = 6,
  CS_TOO_LARGE = 7,
  CS_NUMERICAL = 8,
  CS_PANIC = 9,
} CsStatus;

/**
 * Opaque probe: chain length, coupling and control field.
 */
typedef struct CsProbe CsProbe;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cs_version(void);

/**
 * Message of the last failed call on this thread, or NULL.
 * The pointer stays valid until the next call into the library.
 */
const char *cs_last_error(void);

/**
 * Create a probe. `*out` receives the handle.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum CsStatus cs_probe_new(size_t length,
                           double coupling,
                           double bx,
                           double bz,
                           struct CsProbe **out);

/**
 * Release a probe. NULL is ignored.
 *
 * # Safety
 * `probe` must come from [`cs_probe_new`] and not be used afterwards.
 */
void cs_probe_free(struct CsProbe *probe);

/**
 * Change the control field of a probe.
 *
 * # Safety
 * `probe` must be a live handle.
 */
enum CsStatus cs_probe_set_control(struct CsProbe *probe, double bx, double bz);

/**
 * Ground energy and gap at unknown field `(hx, hz)`.
 *
 * # Safety
 * `probe` must be a live handle; `energy` and `gap` valid for writes.
 */
enum CsStatus cs_ground_energy(const struct CsProbe *probe,
                               double hx,
                               double hz,
                               double *energy,
                               double *gap);

/**
 * 2×2 QFI matrix, row-major into `out[4]`, ordered `(h_x, h_z)`.
 *
 * # Safety
 * `probe` must be a live handle; `out` valid for 4 writes.
 */
enum CsStatus cs_qfi_matrix(const struct CsProbe *probe, double hx, double hz, double *out);

/**
 * 2×2 CFI matrix of the magnetization measurement, row-major into `out[4]`.
 * `excluded_mass` may be NULL.
 *
 * # Safety
 * `probe` must be a live handle; `out` valid for 4 writes.
 */
enum CsStatus cs_cfi_matrix(const struct CsProbe *probe,
                            double hx,
                            double hz,
                            double step,
                            double *out,
                            double *excluded_mass);

/**
 * Two-parameter `g` of the probe over a rectangle with identity weights.
 * `initial_nodes = 0` picks the default rule.
 *
 * # Safety
 * `probe` must be a live handle; `g` valid for writes.
 */
enum CsStatus cs_g_multi(const struct CsProbe *probe,
                         double center_x,
                         double center_z,
                         double width_x,
                         double width_z,
                         size_t initial_nodes,
                         double *g);

/**
 * Transverse-field QFI from the free-fermion solution (Richardson-extrapolated).
 *
 * # Safety
 * `qfi` must be valid for writes.
 */
enum CsStatus cs_ff_qfi(size_t length, double coupling, double field, double step, double *qfi);

/**
 * Single-parameter `g` with the free-fermion engine at control `bz`.
 *
 * # Safety
 * `g` must be valid for writes.
 */
enum CsStatus cs_ff_g_single(size_t length,
                             double coupling,
                             double bz,
                             double center,
                             double width,
                             size_t initial_nodes,
                             double *g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRITSENSE_H */
