#ifndef LQRL_H
#define LQRL_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum LqrlStatus {
  LQRL_STATUS_OK = 0,
  LQRL_STATUS_NULL_POINTER = 1,
  LQRL_STATUS_DIMENSION = 2,
  LQRL_STATUS_DOMAIN = 3,
  LQRL_STATUS_SINGULAR = 4,
  LQRL_STATUS_CONVERGENCE = 5,
  LQRL_STATUS_NUMERIC = 6,
  LQRL_STATUS_CONFIG = 7,
  LQRL_STATUS_IO = 8,
  LQRL_STATUS_PANIC = 9,
} LqrlStatus;

typedef enum LqrlActivation {
  LQRL_ACTIVATION_RELU = 0,
  LQRL_ACTIVATION_SOFTMAX = 1,
  LQRL_ACTIVATION_LINEAR = 2,
} LqrlActivation;

typedef enum LqrlLoss {
  LQRL_LOSS_WEIGHTED_CROSS_ENTROPY = 0,
  LQRL_LOSS_MEAN_SQUARED_ERROR = 1,
} LqrlLoss;

// Linear-quadratic system `s' = A s + B a + w`, `w ~ N(0, W)`, cost
// `sᵀQs + aᵀRa`.
typedef struct LqrlLqEnv LqrlLqEnv;

// Fully connected network with its optimizer state.
typedef struct LqrlMlp LqrlMlp;

// Recursive least squares estimate.
typedef struct LqrlRls LqrlRls;

// Settings for LSTD policy iteration.
typedef struct LqrlQlConfig {
  size_t iterations;
  size_t horizon;
  double explore_mag;
} LqrlQlConfig;

// Settings for linear-Gaussian policy gradient with Adam.
typedef struct LqrlPgConfig {
  size_t iterations;
  size_t batch_size;
  size_t horizon;
  double explore_mag;
  double step_size;
  double beta1;
  double beta2;
  double epsilon;
  double safeguard;
} LqrlPgConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, or NULL if none.
//
// The pointer stays valid until the next failing call on the same thread.
const char *lqrl_last_error_message(void);

// Forgets the stored error message.
void lqrl_clear_last_error(void);

// Static name of a status code, e.g. `"singular"`.
const char *lqrl_status_name(enum LqrlStatus status);

// Library version as a NUL-terminated string.
const char *lqrl_version(void);

// Length `n (n + 1) / 2` of the symmetric vectorizations.
size_t lqrl_sym_dim(size_t n);

// Upper-triangular vectorization of the symmetric n×n matrix `g`; off-diagonal
// entries appear once. `out` receives `lqrl_sym_dim(n)` doubles.
//
// # Safety
// `g` must hold n·n doubles and `out` must have room for the result.
enum LqrlStatus lqrl_vecs(const double *g, size_t n, double *out);

// Quadratic monomials of `z` so that `vecs(G)·vecv(z) = zᵀGz`. `out`
// receives `lqrl_sym_dim(n)` doubles.
//
// # Safety
// `z` must hold `n` doubles and `out` must have room for the result.
enum LqrlStatus lqrl_vecv(const double *z, size_t n, double *out);

// Cartpole solvability: some 100 consecutive returns average at least 195.
// `solved_at` receives the index of the last episode of the first such
// window, or -1.
//
// # Safety
// `returns` must hold `len` doubles; the outputs must be writable.
enum LqrlStatus lqrl_check_solved(const double *returns,
                                  size_t len,
                                  bool *solved,
                                  ptrdiff_t *solved_at);

struct LqrlQlConfig lqrl_ql_config_default(void);

struct LqrlPgConfig lqrl_pg_config_default(void);

// Creates a system with `n` states and `m` inputs. `a`, `w`, `q` are n×n,
// `b` is n×m and `r` is m×m.
//
// # Safety
// Each matrix pointer must reference the stated number of doubles and `out`
// must be writable.
enum LqrlStatus lqrl_lq_env_new(size_t n,
                                size_t m,
                                const double *a,
                                const double *b,
                                const double *w,
                                const double *q,
                                const double *r,
                                struct LqrlLqEnv **out);

// Scalar benchmark `A = 0.9, B = 0.5, Q = R = 1, W = 0.01`.
struct LqrlLqEnv *lqrl_lq_env_scalar_benchmark(void);

// Two-state benchmark `A = 0.99·[[1, 0.1], [0, 1]], B = [0, 0.1]ᵀ`.
struct LqrlLqEnv *lqrl_lq_env_two_state_benchmark(void);

// # Safety
// `env` must come from this library and not be used afterwards. NULL is
// ignored.
void lqrl_lq_env_free(struct LqrlLqEnv *env);

// State dimension, or 0 for NULL.
//
// # Safety
// `env` must be NULL or a live handle.
size_t lqrl_lq_env_n(const struct LqrlLqEnv *env);

// Input dimension, or 0 for NULL.
//
// # Safety
// `env` must be NULL or a live handle.
size_t lqrl_lq_env_m(const struct LqrlLqEnv *env);

// Writes whether `u = K s` stabilizes the system; `k` is m×n.
//
// # Safety
// `env` must be a live handle, `k` must hold m·n doubles and `stable` must be
// writable.
enum LqrlStatus lqrl_lq_env_is_stable(const struct LqrlLqEnv *env, const double *k, bool *stable);

// Stabilizing DARE solution: writes the n×n kernel to `p_out` and the m×n
// gain to `k_out`. Either output may be NULL.
//
// # Safety
// Inputs must hold the stated number of doubles; non-NULL outputs must have
// room for them.
enum LqrlStatus lqrl_solve_dare(size_t n,
                                size_t m,
                                const double *a,
                                const double *b,
                                const double *q,
                                const double *r,
                                double *p_out,
                                double *k_out);

// LSTD policy iteration from the m×n gain `k0`. A NULL `config` uses the
// defaults. Writes the final kernel (n×n) and gain (m×n); both are zero if
// an iterate stopped stabilizing the system.
//
// # Safety
// `env` must be a live handle, `k0` must hold m·n doubles and the outputs
// must have room for n·n and m·n doubles.
enum LqrlStatus lqrl_q_learning_lq(const struct LqrlLqEnv *env,
                                   const double *k0,
                                   const struct LqrlQlConfig *config,
                                   uint64_t seed,
                                   double *p_out,
                                   double *k_out);

// Policy gradient from the m×n gain `k0`. A NULL `config` uses the
// defaults. Writes the final m×n gain.
//
// # Safety
// `env` must be a live handle, `k0` must hold m·n doubles and `k_out` must
// have room for m·n doubles.
enum LqrlStatus lqrl_pg_train_lq(const struct LqrlLqEnv *env,
                                 const double *k0,
                                 const struct LqrlPgConfig *config,
                                 uint64_t seed,
                                 double *k_out);

// Builds a network from `n_sizes` layer widths (input first) and
// `n_sizes - 1` activations, with seeded He-normal weights.
//
// # Safety
// `sizes` and `activations` must hold the stated counts and `out` must be
// writable.
enum LqrlStatus lqrl_mlp_new(const size_t *sizes,
                             size_t n_sizes,
                             const enum LqrlActivation *activations,
                             enum LqrlLoss loss,
                             uint64_t seed,
                             struct LqrlMlp **out);

// Restores a network from checkpoint text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` must be writable.
enum LqrlStatus lqrl_mlp_from_checkpoint(const char *text, struct LqrlMlp **out);

// # Safety
// `mlp` must be NULL or a live handle.
size_t lqrl_mlp_input_width(const struct LqrlMlp *mlp);

// # Safety
// `mlp` must be NULL or a live handle.
size_t lqrl_mlp_output_width(const struct LqrlMlp *mlp);

// Evaluates the network on one input.
//
// # Safety
// `input_data` must hold `input_len` doubles and `output_data` must have room
// for `output_len` doubles.
enum LqrlStatus lqrl_mlp_forward(const struct LqrlMlp *mlp,
                                 const double *input_data,
                                 size_t input_len,
                                 double *output_data,
                                 size_t output_len);

// One optimizer step on a batch of `batch` rows. `weights` may be NULL for
// unit sample weights. Writes the loss before the update to `loss` if it is
// not NULL.
//
// # Safety
// `inputs` must hold batch·input_width doubles, `targets` batch·output_width,
// and `weights` (if not NULL) `batch`.
enum LqrlStatus lqrl_mlp_train_on_batch(struct LqrlMlp *mlp,
                                        const double *inputs,
                                        const double *targets,
                                        const double *weights,
                                        size_t batch,
                                        double *loss);

// Writes the checkpoint text, NUL-terminated, into `buffer` of `capacity`
// bytes. `needed` receives the required size including the NUL; a buffer
// that is too small (or NULL) yields a domain error and writes nothing.
//
// # Safety
// `buffer` must have room for `capacity` bytes; `needed` must be NULL or
// writable.
enum LqrlStatus lqrl_mlp_checkpoint(const struct LqrlMlp *mlp,
                                    char *buffer,
                                    size_t capacity,
                                    size_t *needed);

// # Safety
// `mlp` must come from this library and not be used afterwards. NULL is
// ignored.
void lqrl_mlp_free(struct LqrlMlp *mlp);

// Starts an estimate of `p` parameters at zero with information `δ I`.
//
// # Safety
// `out` must be writable.
enum LqrlStatus lqrl_rls_new(size_t p, double delta, struct LqrlRls **out);

// Folds in one observation `y` with regressor `phi` of length `len`.
//
// # Safety
// `rls` must be a live handle and `phi` must hold `len` doubles.
enum LqrlStatus lqrl_rls_update(struct LqrlRls *rls, double y, const double *phi, size_t len);

// Number of parameters, or 0 for NULL.
//
// # Safety
// `rls` must be NULL or a live handle.
size_t lqrl_rls_len(const struct LqrlRls *rls);

// Copies the current estimate into `theta` (length `len`).
//
// # Safety
// `rls` must be a live handle and `theta` must have room for `len` doubles.
enum LqrlStatus lqrl_rls_theta(const struct LqrlRls *rls, double *theta, size_t len);

// # Safety
// `rls` must come from this library and not be used afterwards. NULL is
// ignored.
void lqrl_rls_free(struct LqrlRls *rls);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LQRL_H */
