#ifndef CBLAB_H
#define CBLAB_H

/* Generated by cbindgen from cblab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CBLAB_OK 0

#define CBLAB_INVALID_ARGUMENT 1

#define CBLAB_PRECONDITION_FAILED 2

#define CBLAB_NUMERICAL_FAILURE 3

#define CBLAB_CONFIG_ERROR 4

// Study selector for `cblab_run_study`.
typedef enum CblabStudy {
  CblabStudy_Simulate = 0,
  CblabStudy_Residual = 1,
  CblabStudy_Converge = 2,
  CblabStudy_StabilityMap = 3,
  CblabStudy_Garding = 4,
} CblabStudy;

// A lattice domain handle (sites, index sets, spacing).
typedef struct CblabDomain CblabDomain;

// A site-potential handle.
typedef struct CblabPotential CblabPotential;

// An interaction range handle.
typedef struct CblabStencil CblabStencil;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the most recent error message of this thread into `buf`
// (truncated to `cap - 1` bytes, always NUL-terminated when `cap > 0`).
// Returns the full message length in bytes.
//
// # Safety
// `buf` must point to at least `cap` writable bytes, or be NULL.
size_t cblab_last_error(char *buf, size_t cap);

// Nearest-neighbor interaction range in `dim` dimensions (1..=3).
// Returns NULL on invalid input.
struct CblabStencil *cblab_stencil_nearest(size_t dim);

// Nearest plus next-nearest interaction range.
struct CblabStencil *cblab_stencil_next_nearest(size_t dim);

// # Safety
// `s` must be a pointer previously returned by a stencil constructor,
// or NULL.
void cblab_stencil_free(struct CblabStencil *s);

// Build an axis-aligned box domain at lattice spacing `eps`.
// `lo` and `hi` are `dim` entries each.
//
// # Safety
// `lo`/`hi` must point to `dim` doubles, `stencil` must be a live
// stencil handle, `out` must be a valid destination pointer.
int32_t cblab_domain_box(size_t dim,
                         const double *lo,
                         const double *hi,
                         double eps,
                         const struct CblabStencil *stencil,
                         struct CblabDomain **out);

// Build a ball domain at lattice spacing `eps`.
//
// # Safety
// `center` must point to `dim` doubles; `stencil` and `out` as in
// `cblab_domain_box`.
int32_t cblab_domain_ball(size_t dim,
                          const double *center,
                          double radius,
                          double eps,
                          const struct CblabStencil *stencil,
                          struct CblabDomain **out);

// # Safety
// `d` must be a domain handle or NULL.
void cblab_domain_free(struct CblabDomain *d);

// # Safety
// `d` must be a live domain handle.
size_t cblab_domain_site_count(const struct CblabDomain *d);

// # Safety
// `d` must be a live domain handle.
size_t cblab_domain_interior_count(const struct CblabDomain *d);

// # Safety
// `d` must be a live domain handle.
size_t cblab_domain_semi_interior_count(const struct CblabDomain *d);

// # Safety
// `d` must be a live domain handle.
size_t cblab_domain_boundary_count(const struct CblabDomain *d);

// Harmonic site potential W(A) = 1/2 sum |A_rho|^2.
//
// # Safety
// `stencil` must be a live stencil handle.
struct CblabPotential *cblab_potential_harmonic(const struct CblabStencil *stencil);

// Lennard-Jones pair potential with bond-length floor `r_min`.
//
// # Safety
// `stencil` must be a live stencil handle.
struct CblabPotential *cblab_potential_lennard_jones(const struct CblabStencil *stencil,
                                                     double well_depth,
                                                     double sigma,
                                                     double r_min);

// Morse pair potential with bond-length floor `r_min`.
//
// # Safety
// `stencil` must be a live stencil handle.
struct CblabPotential *cblab_potential_morse(const struct CblabStencil *stencil,
                                             double depth,
                                             double stiffness,
                                             double r_eq,
                                             double r_min);

// # Safety
// `p` must be a potential handle or NULL.
void cblab_potential_free(struct CblabPotential *p);

// Cauchy-Born energy density at a row-major `dim x dim` deformation
// gradient; optionally its gradient (`dim * dim` buffer) when
// `out_gradient` is non-NULL.
//
// # Safety
// `potential` must be live; `f` must point to `dim*dim` doubles;
// `out_value` must be valid; `out_gradient` must be NULL or point to
// `dim*dim` writable doubles.
int32_t cblab_cauchy_born(const struct CblabPotential *potential,
                          const double *f,
                          double *out_value,
                          double *out_gradient);

// Rank-one (acoustic) stability constant of the Cauchy-Born density at
// a deformation gradient.
//
// # Safety
// `potential` live; `f` points to `dim*dim` doubles; `out` valid.
int32_t cblab_lambda_lh(const struct CblabPotential *potential, const double *f, double *out);

// Wave-vector stability constant of the site-potential Hessian along a
// homogeneous deformation; optionally the minimizing wave vector
// (3 doubles) when `out_k` is non-NULL.
//
// # Safety
// `potential` live; `f` points to `dim*dim` doubles; `out` valid;
// `out_k` NULL or 3 writable doubles.
int32_t cblab_lambda_atom(const struct CblabPotential *potential,
                          const double *f,
                          double *out,
                          double *out_k);

// Finite-lattice stability constant of the site-potential Hessian along
// a homogeneous deformation, on a concrete domain.
//
// # Safety
// `potential` and `domain` live; `f` points to `dim*dim` doubles;
// `out` valid.
int32_t cblab_lambda_eps(const struct CblabPotential *potential,
                         const double *f,
                         const struct CblabDomain *domain,
                         uint64_t seed,
                         double *out);

// Run one experiment from a scenario configuration (JSON text, as
// documented by schema/scenario.schema.json). CSV files are written to
// `out_dir` when non-NULL, else to the config's `output_dir`.
// `threads` = 0 uses all cores.
//
// # Safety
// `config_json` must be a NUL-terminated UTF-8 string; `out_dir` NULL
// or likewise.
int32_t cblab_run_study(enum CblabStudy study,
                        const char *config_json,
                        const char *out_dir,
                        uint64_t seed,
                        size_t threads);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CBLAB_H */
