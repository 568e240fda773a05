#ifndef IMPULSE_MORSE_H
#define IMPULSE_MORSE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ImStatus {
  IM_STATUS_OK = 0,
  IM_STATUS_NULL_POINTER = 1,
  IM_STATUS_INVALID_ARGUMENT = 2,
  IM_STATUS_IO = 3,
  IM_STATUS_PARSE = 4,
  IM_STATUS_SCHEMA = 5,
  IM_STATUS_NO_CONVERGENCE = 6,
  IM_STATUS_VERIFICATION_FAILED = 7,
  IM_STATUS_PANIC = 8,
} ImStatus;

/**
 * Interior impulse points.
 */
typedef struct ImMesh ImMesh;

/**
 * A validated problem file.
 */
typedef struct ImProblem ImProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *im_last_error_message(void);

/**
 * # Safety
 * `points` must hold `len` doubles and `out_mesh` must be writable.
 */
enum ImStatus im_mesh_new(const double *points, size_t len, struct ImMesh **out_mesh);

/**
 * # Safety
 * `mesh` must come from [`im_mesh_new`] and not be used afterwards. Null is ignored.
 */
void im_mesh_free(struct ImMesh *mesh);

/**
 * Number of interior points, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t im_mesh_node_count(const struct ImMesh *mesh);

/**
 * Value of the representer `w_j` at `x`.
 *
 * # Safety
 * `mesh` must be a live handle and `out_value` writable.
 */
enum ImStatus im_mesh_representer(const struct ImMesh *mesh, size_t j, double x, double *out_value);

/**
 * Writes the `m × m` Gram matrix row-major into `out_gram`, which must have
 * room for `capacity` doubles.
 *
 * # Safety
 * `mesh` must be a live handle and `out_gram` writable for `capacity` doubles.
 */
enum ImStatus im_mesh_gram(const struct ImMesh *mesh, double *out_gram, size_t capacity);

/**
 * Dirichlet eigenvalue `k²π²/ℓ_j²` of subinterval `j`, `k ≥ 1`.
 *
 * # Safety
 * `mesh` must be a live handle and `out_value` writable.
 */
enum ImStatus im_subinterval_eigenvalue(const struct ImMesh *mesh,
                                        size_t j,
                                        size_t k,
                                        double *out_value);

/**
 * `det(diag(b) G - I)` and whether `b` lies in the resonance set.
 *
 * # Safety
 * `b` must hold `len` doubles; `out_det` and `out_in_b` must be writable.
 */
enum ImStatus im_resonance_det(const struct ImMesh *mesh,
                               const double *b,
                               size_t len,
                               double *out_det,
                               bool *out_in_b);

/**
 * Morse index `m₀` of zero. When `out_eigenvalues` is not null it receives the
 * `m` eigenvalues of the Hessian on `M` in ascending order.
 *
 * # Safety
 * `b` must hold `len` doubles, `out_m0` must be writable and
 * `out_eigenvalues`, if not null, writable for `m` doubles.
 */
enum ImStatus im_morse_index(const struct ImMesh *mesh,
                             const double *b,
                             size_t len,
                             size_t *out_m0,
                             double *out_eigenvalues);

/**
 * `u(1)` of the piecewise-linear solution with `u(0) = 0`, `u'(0) = 1`.
 *
 * # Safety
 * `b` must hold `len` doubles and `out_value` must be writable.
 */
enum ImStatus im_linear_transfer(const struct ImMesh *mesh,
                                 const double *b,
                                 size_t len,
                                 double *out_value);

/**
 * Parses a problem file given as NUL-terminated TOML text.
 *
 * # Safety
 * `toml` must be a valid C string and `out_problem` writable.
 */
enum ImStatus im_problem_from_toml(const char *toml, struct ImProblem **out_problem);

/**
 * # Safety
 * `problem` must come from [`im_problem_from_toml`] and not be used
 * afterwards. Null is ignored.
 */
void im_problem_free(struct ImProblem *problem);

/**
 * Analysis report as JSON. Release the string with [`im_string_free`].
 *
 * # Safety
 * `problem` must be a live handle and `out_json` writable.
 */
enum ImStatus im_analyze_json(const struct ImProblem *problem, char **out_json);

/**
 * Analysis plus the critical-point search as JSON, with the multistart seed
 * `seed`. Points are checked against `threshold` (raised to ten times the
 * gradient tolerance when smaller). Release the string with
 * [`im_string_free`].
 *
 * # Safety
 * `problem` must be a live handle and `out_json` writable.
 */
enum ImStatus im_solve_json(const struct ImProblem *problem,
                            uint64_t seed,
                            double threshold,
                            char **out_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void im_string_free(char *s);

/**
 * Largest residual of the sampled function `u(xs[i]) = us[i]`. The samples
 * must include every mesh point.
 *
 * # Safety
 * `xs` and `us` must hold `len` doubles; `out_max` must be writable.
 */
enum ImStatus im_verify_samples(const struct ImProblem *problem,
                                const double *xs,
                                const double *us,
                                size_t len,
                                double *out_max);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPULSE_MORSE_H */
