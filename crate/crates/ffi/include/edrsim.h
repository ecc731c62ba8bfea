#ifndef EDRSIM_H
#define EDRSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define EDR_FORMAT_CSV 0

#define EDR_FORMAT_JSON 1

typedef enum EdrStatus {
  EDR_STATUS_OK = 0,
  EDR_STATUS_NULL_POINTER = 1,
  EDR_STATUS_INVALID_ARGUMENT = 2,
  EDR_STATUS_NEGATIVE_RADICAND = 3,
  EDR_STATUS_ZERO_COUNTS = 4,
  EDR_STATUS_CONFIG = 5,
  EDR_STATUS_IO = 6,
  EDR_STATUS_EMPTY_RESULTS = 7,
  EDR_STATUS_PANIC = 8,
} EdrStatus;

/**
 * Rows of an evaluated scenario.
 */
typedef struct EdrRows EdrRows;

/**
 * Parsed scenario.
 */
typedef struct EdrScenario EdrScenario;

/**
 * Observables, state and apparatus axis of a spin configuration.
 */
typedef struct EdrSpinConfig EdrSpinConfig;

/**
 * Cartesian 3-vector; axes must have unit length to within 1e-9.
 */
typedef struct EdrVec3 {
  double x;
  double y;
  double z;
} EdrVec3;

typedef struct EdrReport {
  double eps;
  double eta;
  double sigma_a;
  double sigma_b;
  double robertson_bound;
  double schroedinger_extra;
  double schroedinger_bound;
  double commutator_bound;
  double heisenberg_lhs;
  double ozawa_lhs;
  double combined_lhs;
  bool heisenberg_ok;
  bool ozawa_ok;
  bool combined_ok;
} EdrReport;

/**
 * Monte Carlo settings; `jitter` is the angle standard deviation in radians.
 */
typedef struct EdrMonteCarlo {
  double counts_per_setting;
  uint32_t replicates;
  double efficiency;
  double jitter;
} EdrMonteCarlo;

typedef struct EdrEstimate {
  double eps;
  double eps_sd;
  double eta;
  double eta_sd;
  double sigma_a;
  double sigma_a_sd;
  double sigma_b;
  double sigma_b_sd;
  uint32_t eps_failures;
  uint32_t eta_failures;
} EdrEstimate;

typedef struct EdrRow {
  double phi;
  double theta;
  struct EdrReport exact;
  bool has_estimate;
  struct EdrEstimate estimate;
  /**
   * `p_{++}, p_{+-}, p_{-+}, p_{--}`
   */
  double ports[4];
} EdrRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL.
 */
const char *edr_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *edr_version(void);

/**
 * Creates a configuration from unit vectors for `A`, `B`, the Bloch
 * direction of `ψ` and the apparatus axis `o_a`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EdrStatus edr_spin_config_new(struct EdrVec3 a,
                                   struct EdrVec3 b,
                                   struct EdrVec3 psi,
                                   struct EdrVec3 o_a,
                                   struct EdrSpinConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from `edr_spin_config_new` not yet freed.
 */
void edr_spin_config_free(struct EdrSpinConfig *cfg);

/**
 * Replaces the apparatus axis.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum EdrStatus edr_spin_config_set_apparatus(struct EdrSpinConfig *cfg, struct EdrVec3 o_a);

/**
 * Exact error, disturbance and all relation terms.
 *
 * # Safety
 * `cfg` must be a live handle and `out` valid for writes.
 */
enum EdrStatus edr_spin_config_report(const struct EdrSpinConfig *cfg, struct EdrReport *out);

/**
 * Three-state reconstruction from exact expectation values.
 *
 * # Safety
 * `cfg` must be a live handle; `eps` and `eta` valid for writes.
 */
enum EdrStatus edr_spin_config_three_state(const struct EdrSpinConfig *cfg,
                                           double *eps,
                                           double *eta);

/**
 * Simulated counting experiment with replicate error bars.
 *
 * # Safety
 * `cfg` must be a live handle, `settings` readable, `out` writable.
 */
enum EdrStatus edr_spin_config_simulate(const struct EdrSpinConfig *cfg,
                                        const struct EdrMonteCarlo *settings,
                                        uint64_t seed,
                                        struct EdrEstimate *out);

/**
 * Four-port probabilities `p_{++}, p_{+-}, p_{-+}, p_{--}`.
 *
 * # Safety
 * `out` must be valid for 4 writes.
 */
enum EdrStatus edr_port_probabilities(struct EdrVec3 psi,
                                      struct EdrVec3 o_a,
                                      struct EdrVec3 b,
                                      double *out);

/**
 * Polar angle of `o_a` below which `εη` stays above the bound for every
 * azimuth, bisected on `[lo, hi]` to `tol`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EdrStatus edr_violation_threshold(struct EdrVec3 a,
                                       struct EdrVec3 b,
                                       struct EdrVec3 psi,
                                       double lo,
                                       double hi,
                                       double tol,
                                       double *out);

/**
 * Parses a TOML scenario.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` valid for writes.
 */
enum EdrStatus edr_scenario_parse(const char *text, struct EdrScenario **out);

/**
 * Scenario from a preset name such as `"standard"` or `"phiB"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` valid for writes.
 */
enum EdrStatus edr_scenario_from_preset(const char *name, struct EdrScenario **out);

/**
 * # Safety
 * `sc` must be NULL or a live scenario handle.
 */
void edr_scenario_free(struct EdrScenario *sc);

/**
 * # Safety
 * `sc` must be a live handle.
 */
enum EdrStatus edr_scenario_set_seed(struct EdrScenario *sc, uint64_t seed);

/**
 * # Safety
 * `sc` must be a live handle.
 */
enum EdrStatus edr_scenario_set_samples(struct EdrScenario *sc, size_t samples);

/**
 * Evaluates every point of the scenario's path.
 *
 * # Safety
 * `sc` must be a live handle; `out` valid for writes.
 */
enum EdrStatus edr_scenario_run(const struct EdrScenario *sc, struct EdrRows **out);

/**
 * # Safety
 * `rows` must be NULL or a live handle.
 */
void edr_rows_free(struct EdrRows *rows);

/**
 * Number of rows; 0 for NULL.
 *
 * # Safety
 * `rows` must be NULL or a live handle.
 */
size_t edr_rows_len(const struct EdrRows *rows);

/**
 * # Safety
 * `rows` must be a live handle; `out` valid for writes.
 */
enum EdrStatus edr_rows_get(const struct EdrRows *rows, size_t index, struct EdrRow *out);

/**
 * Writes the rows to `path` as `EDR_FORMAT_CSV` or `EDR_FORMAT_JSON`.
 *
 * # Safety
 * `rows` must be a live handle; `path` a NUL-terminated string.
 */
enum EdrStatus edr_rows_write(const struct EdrRows *rows, const char *path, uint32_t format);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDRSIM_H */
