#ifndef KWDUAL_H
#define KWDUAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Lattice families accepted by [`kw_lattice_generate`].
 */
typedef enum KwLatticeKind {
  /**
   * `m × n` square torus.
   */
  KW_LATTICE_KIND_TORUS = 0,
  /**
   * Cube surface.
   */
  KW_LATTICE_KIND_SPHERE_CUBE = 1,
  /**
   * Tetrahedron surface.
   */
  KW_LATTICE_KIND_SPHERE_TETRA = 2,
  /**
   * Closed surface of the given genus (at least 1).
   */
  KW_LATTICE_KIND_GENUS = 3,
} KwLatticeKind;

/**
 * Result code of every fallible call.
 */
typedef enum KwStatus {
  KW_STATUS_OK = 0,
  KW_STATUS_NULL_POINTER = 1,
  KW_STATUS_INVALID_UTF8 = 2,
  KW_STATUS_INVALID_INPUT = 3,
  KW_STATUS_CAP_EXCEEDED = 4,
  KW_STATUS_NOT_ABELIAN = 5,
  KW_STATUS_NOT_A_BOUNDARY = 6,
  KW_STATUS_INVALID_LATTICE = 7,
  KW_STATUS_INTERNAL = 8,
} KwStatus;

/**
 * Opaque finite group.
 */
typedef struct KwGroup KwGroup;

/**
 * Opaque latticed surface.
 */
typedef struct KwLattice KwLattice;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes, excluding
 * the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t kw_last_error_message(char *buf, size_t len);

/**
 * Parse a group descriptor such as `Z4`, `Z2xZ2` or `S3`.
 *
 * # Safety
 * `desc` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KwStatus kw_group_parse(const char *desc, struct KwGroup **out);

/**
 * Order of a group.
 *
 * # Safety
 * `group` must come from [`kw_group_parse`]; `out` must be valid.
 */
enum KwStatus kw_group_order(const struct KwGroup *group, size_t *out);

/**
 * Release a group. Null is ignored.
 *
 * # Safety
 * `group` must come from [`kw_group_parse`] and not be used afterwards.
 */
void kw_group_free(struct KwGroup *group);

/**
 * Generate a lattice. `m`, `n` apply to tori and `genus` to higher genus.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KwStatus kw_lattice_generate(enum KwLatticeKind kind,
                                  size_t m,
                                  size_t n,
                                  size_t genus,
                                  struct KwLattice **out);

/**
 * Read a lattice from JSON text and validate it.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KwStatus kw_lattice_from_json(const char *json, struct KwLattice **out);

/**
 * Vertex, edge and face counts.
 *
 * # Safety
 * `lattice` must be a live handle; the outputs must be valid pointers.
 */
enum KwStatus kw_lattice_counts(const struct KwLattice *lattice,
                                size_t *vertices,
                                size_t *edges,
                                size_t *faces);

/**
 * Release a lattice. Null is ignored.
 *
 * # Safety
 * `lattice` must be a live handle and not be used afterwards.
 */
void kw_lattice_free(struct KwLattice *lattice);

/**
 * Unitary Fourier transform of a complex function on an abelian group.
 * All four arrays hold `len` entries, which must equal the group order.
 *
 * # Safety
 * Arrays must be valid for `len` elements.
 */
enum KwStatus kw_fourier_abelian(const struct KwGroup *group,
                                 const double *re,
                                 const double *im,
                                 size_t len,
                                 double *out_re,
                                 double *out_im);

/**
 * Whether a real weight is admissible (even, positive and with positive
 * transform).
 *
 * # Safety
 * `theta` must hold `len` values; `out` must be valid.
 */
enum KwStatus kw_is_admissible(const struct KwGroup *group,
                               const double *theta,
                               size_t len,
                               bool *out);

/**
 * Kramers-Wannier comparison on a lattice for an abelian group, without
 * insertions. Writes the largest relative error and the predicted factor.
 *
 * # Safety
 * Handles must be live, `theta` must hold `len` values and the outputs must
 * be valid pointers.
 */
enum KwStatus kw_kw_check(const struct KwLattice *lattice,
                          const struct KwGroup *group,
                          const double *theta,
                          size_t len,
                          double *max_relative_error,
                          double *factor);

/**
 * Orders of the cohomology groups in degrees 0, 1 and 2 with coefficients
 * in an abelian group.
 *
 * # Safety
 * Handles must be live and `orders` must hold three entries.
 */
enum KwStatus kw_cohomology_orders(const struct KwLattice *lattice,
                                   const struct KwGroup *group,
                                   uint64_t *orders);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KWDUAL_H */
