#ifndef HOROFLOW_H
#define HOROFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_ARGUMENT = 2,
  HF_STATUS_NOT_IN_HALF_PLANE = 3,
  HF_STATUS_DETERMINANT = 4,
  HF_STATUS_NOT_HYPERBOLIC = 5,
  HF_STATUS_NO_CONVERGENCE = 6,
  HF_STATUS_BUDGET_EXCEEDED = 7,
  HF_STATUS_INVALID_BAND = 8,
  HF_STATUS_BASE_OFF_CIRCLE = 9,
  HF_STATUS_NOT_A_PATH = 10,
  HF_STATUS_NO_CLUSTER = 11,
  HF_STATUS_ESCAPE_FAIL = 12,
  HF_STATUS_PARSE = 13,
  HF_STATUS_NUMERIC = 14,
  HF_STATUS_PANIC = 15,
} HfStatus;

typedef enum HfLeafKind {
  HF_LEAF_KIND_GENUS_ONE_CANTOR_ENDS = 0,
  HF_LEAF_KIND_CANTOR_TREE = 1,
} HfLeafKind;

/**
 * Opaque group handle.
 */
typedef struct HfGroup HfGroup;

/**
 * Opaque pants-tree handle.
 */
typedef struct HfPantsTree HfPantsTree;

/**
 * Row-major 2×2 matrix `[[a, b], [c, d]]`.
 */
typedef struct HfMatrix {
  double a;
  double b;
  double c;
  double d;
} HfMatrix;

typedef struct HfComplex {
  double re;
  double im;
} HfComplex;

/**
 * Outcome of a Key Lemma run.
 */
typedef struct HfKeyLemmaSummary {
  size_t crossings;
  uint32_t k;
  double band_a;
  double band_b;
  double t0;
  size_t cluster_size;
  size_t witnesses;
  /**
   * Negative when there are no witnesses.
   */
  double final_frame_error;
  bool all_bounds_ok;
  bool converged;
} HfKeyLemmaSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated description of a status code.
 */
const char *hf_status_message(enum HfStatus status);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hf_version(void);

/**
 * `out = lhs · rhs`, renormalized to determinant 1.
 *
 * # Safety
 * Pointers must be null or valid for the access they are used for.
 */
enum HfStatus hf_moebius_compose(const struct HfMatrix *lhs,
                                 const struct HfMatrix *rhs,
                                 struct HfMatrix *out);

/**
 * Applies the Möbius map to a point of the upper half-plane.
 *
 * # Safety
 * Pointers must be null or valid for the access they are used for.
 */
enum HfStatus hf_moebius_apply(const struct HfMatrix *m, struct HfComplex z, struct HfComplex *out);

/**
 * Hyperbolic distance between two points of the upper half-plane.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum HfStatus hf_hyp_distance(struct HfComplex p, struct HfComplex q, double *out);

/**
 * Busemann function `B_ξ(x, y)`; `xi_at_infinity` selects `ξ = ∞`,
 * otherwise `ξ = xi`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum HfStatus hf_busemann(bool xi_at_infinity,
                          double xi,
                          struct HfComplex x,
                          struct HfComplex y,
                          double *out);

/**
 * Frame `u·a_t` (geodesic flow).
 *
 * # Safety
 * Pointers must be null or valid for the access they are used for.
 */
enum HfStatus hf_geodesic_flow(const struct HfMatrix *u, double t, struct HfMatrix *out);

/**
 * Frame `u·u_s` (horocycle flow).
 *
 * # Safety
 * Pointers must be null or valid for the access they are used for.
 */
enum HfStatus hf_horocycle_flow(const struct HfMatrix *u, double s, struct HfMatrix *out);

/**
 * Frame `u·[[α, β], [0, 1/α]]` (affine action), `α > 0`.
 *
 * # Safety
 * Pointers must be null or valid for the access they are used for.
 */
enum HfStatus hf_affine_act(const struct HfMatrix *u,
                            double alpha,
                            double beta,
                            struct HfMatrix *out);

/**
 * Built-in group by name: `genus2`, `genus2-kernel`, `sanov`, `cyclic`,
 * `cyclic:<length>`. Release with [`hf_group_free`].
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum HfStatus hf_group_builtin(const char *name, struct HfGroup **out);

/**
 * Group from a TOML group spec.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum HfStatus hf_group_from_toml(const char *toml, bool normalize_det, struct HfGroup **out);

/**
 * Releases a group handle; null is ignored.
 *
 * # Safety
 * `g` must be null or a handle from this library not yet freed.
 */
void hf_group_free(struct HfGroup *g);

/**
 * Number of generators, 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t hf_group_rank(const struct HfGroup *g);

/**
 * Generator `index` (0-based).
 *
 * # Safety
 * `g` must be null or a live handle; `out` must be valid for writes.
 */
enum HfStatus hf_group_generator(const struct HfGroup *g, size_t index, struct HfMatrix *out);

/**
 * Number of distinct elements of word length `1..=max_word_length`.
 *
 * # Safety
 * `g` must be null or a live handle; `out` must be valid for writes.
 */
enum HfStatus hf_group_count_elements(const struct HfGroup *g, size_t max_word_length, size_t *out);

/**
 * Dirichlet-reduces a frame towards `i`; writes the reduced frame and,
 * when `word_len` is non-null, the length of the applied word.
 *
 * # Safety
 * `g` and `u` must be null or valid; `out` must be valid for writes;
 * `word_len` may be null.
 */
enum HfStatus hf_group_reduce(const struct HfGroup *g,
                              const struct HfMatrix *u,
                              struct HfMatrix *out,
                              size_t *word_len);

/**
 * Runs the Key Lemma pipeline. A null `frame` uses the frame on the axis
 * of the first generator; `band_a <= 0` selects the band `[a0, 4·a0]`.
 *
 * # Safety
 * `g` must be a live handle; `frame` may be null; `out` must be valid for writes.
 */
enum HfStatus hf_keylemma_run(const struct HfGroup *g,
                              const struct HfMatrix *frame,
                              size_t max_word_length,
                              size_t core_len,
                              double horizon,
                              double band_a,
                              double band_b,
                              struct HfKeyLemmaSummary *out);

/**
 * Leaf type of the Hirsch leaf through `p/q`; `period` is 0 when absent.
 *
 * # Safety
 * Out-pointers must be valid for writes.
 */
enum HfStatus hf_leaf_type(uint64_t p,
                           uint64_t q,
                           enum HfLeafKind *kind,
                           size_t *preperiod,
                           size_t *period);

/**
 * The gluing map `(Z, z) ↦ (Z·z/4 + 1/2, z²)`; `z` must lie on the unit circle.
 *
 * # Safety
 * Out-pointers must be valid for writes.
 */
enum HfStatus hf_hirsch_glue(struct HfComplex big_z,
                             struct HfComplex z,
                             struct HfComplex *out_big_z,
                             struct HfComplex *out_z);

/**
 * Pants tree of the leaf through `p/q`. Release with [`hf_pants_tree_free`].
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HfStatus hf_pants_tree_new(uint64_t p,
                                uint64_t q,
                                size_t depth,
                                double cuff_length,
                                struct HfPantsTree **out);

/**
 * Releases a pants tree; null is ignored.
 *
 * # Safety
 * `t` must be null or a handle from this library not yet freed.
 */
void hf_pants_tree_free(struct HfPantsTree *t);

/**
 * Node count, 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t hf_pants_tree_node_count(const struct HfPantsTree *t);

/**
 * Whether node `id` closes a handle.
 *
 * # Safety
 * `t` must be null or a live handle; `out` must be valid for writes.
 */
enum HfStatus hf_pants_tree_is_handle(const struct HfPantsTree *t, size_t id, bool *out);

/**
 * Cuffs crossed along the path `ids[0..len]` from the root.
 *
 * # Safety
 * `t` must be a live handle; `ids` must point to `len` values (may be
 * null when `len` is 0); `out` must be valid for writes.
 */
enum HfStatus hf_pants_tree_check_path(const struct HfPantsTree *t,
                                       const size_t *ids,
                                       size_t len,
                                       size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOROFLOW_H */
