#ifndef GPVORTEX_H
#define GPVORTEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GpvStatus {
  GPV_STATUS_OK = 0,
  GPV_STATUS_NULL_POINTER = 1,
  GPV_STATUS_INVALID_ARGUMENT = 2,
  GPV_STATUS_NUMERICAL = 3,
  GPV_STATUS_BUFFER_TOO_SMALL = 4,
  GPV_STATUS_PANIC = 5,
} GpvStatus;

/*
 Radial Galerkin discretization (opaque).
 */
typedef struct GpvDiscretization GpvDiscretization;

/*
 Primary vortex branch point (opaque).
 */
typedef struct GpvPrimary GpvPrimary;

typedef struct GpvCounts {
  uint32_t m0;
  uint64_t n;
  uint64_t z;
  uint64_t b;
} GpvCounts;

typedef struct GpvCrossing {
  int32_t m;
  uint32_t n;
  double omega;
  double eigenvalue;
  /*
   ‖V‖² − ‖W‖² of the null vector.
   */
  double krein;
  int32_t resonant;
} GpvCrossing;

typedef struct GpvLastBifurcation {
  double omega_tilde;
  double c_plus;
  double c_minus;
} GpvLastBifurcation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Toolkit version as a static NUL-terminated string.
 */
const char *gpv_version(void);

/*
 Copies the last error of this thread into `buf` (truncating, always NUL-terminated).
 Returns the full message length excluding the NUL; 0 if there is no error.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t gpv_last_error(char *buf, size_t len);

/*
 # Safety
 `out` must be null or a valid pointer.
 */
enum GpvStatus gpv_counts(uint32_t m0, struct GpvCounts *out);

/*
 # Safety
 `out` must be null or a valid pointer; on success it receives a handle for `gpv_discretization_free`.
 */
enum GpvStatus gpv_discretization_new(size_t n_r,
                                      uint32_t max_m,
                                      struct GpvDiscretization **out);

/*
 # Safety
 `disc` must be null or a handle from `gpv_discretization_new` not yet freed.
 */
void gpv_discretization_free(struct GpvDiscretization *disc);

/*
 # Safety
 `disc` must be a live handle; `out` must be valid.
 */
enum GpvStatus gpv_primary_solve(uint32_t m0,
                                 double a,
                                 const struct GpvDiscretization *disc,
                                 struct GpvPrimary **out);

/*
 # Safety
 `p` must be null or a handle from `gpv_primary_solve` not yet freed.
 */
void gpv_primary_free(struct GpvPrimary *p);

/*
 Detuned frequency ω of the branch point.

 # Safety
 `p` must be a live handle; `out` must be valid.
 */
enum GpvStatus gpv_primary_omega(const struct GpvPrimary *p, double *out);

/*
 Profile ψ(r).

 # Safety
 `p` must be a live handle; `out` must be valid.
 */
enum GpvStatus gpv_primary_psi(const struct GpvPrimary *p, double r, double *out);

/*
 Radial coefficients of ψ. `*count` receives the required length even when the buffer is too small.

 # Safety
 `p` must be a live handle; `buf` valid for `len` doubles; `count` valid.
 */
enum GpvStatus gpv_primary_coefficients(const struct GpvPrimary *p,
                                        double *buf,
                                        size_t len,
                                        size_t *count);

/*
 Ascending eigenvalues of the Hessian block H_m at rotation `omega_rot`.

 # Safety
 Handles must be live; `buf` valid for `len` doubles; `count` valid.
 */
enum GpvStatus gpv_block_eigenvalues(const struct GpvPrimary *p,
                                     const struct GpvDiscretization *disc,
                                     int32_t m,
                                     double omega_rot,
                                     double *buf,
                                     size_t len,
                                     size_t *count);

/*
 Negative eigenvalues of the full Hessian, with the certified block cutoff.

 # Safety
 Handles must be live; `out` valid.
 */
enum GpvStatus gpv_full_morse_count(const struct GpvPrimary *p,
                                    const struct GpvDiscretization *disc,
                                    double omega_rot,
                                    size_t *out);

/*
 Zero crossing of track n of block m inside [lo, hi].

 # Safety
 Handles must be live; `out` valid.
 */
enum GpvStatus gpv_find_crossing(const struct GpvPrimary *p,
                                 const struct GpvDiscretization *disc,
                                 int32_t m,
                                 uint32_t n,
                                 double lo,
                                 double hi,
                                 struct GpvCrossing *out);

/*
 Curvature of the last crossing Ω ≈ 2 + Ω̃ a² and its mode (c₊, c₋).

 # Safety
 `out` must be valid.
 */
enum GpvStatus gpv_last_bifurcation(uint32_t m0, struct GpvLastBifurcation *out);

/*
 First positive zero r0 of the two-mode radial profile.

 # Safety
 `out` must be valid.
 */
enum GpvStatus gpv_polygon_radius(uint32_t m0,
                                  int32_t m,
                                  uint32_t n,
                                  double a,
                                  double b,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPVORTEX_H */
