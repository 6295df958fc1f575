#ifndef VARXNET_H
#define VARXNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VxStatus {
  VX_STATUS_OK = 0,
  VX_STATUS_NULL_POINTER = 1,
  VX_STATUS_INVALID_ARGUMENT = 2,
  VX_STATUS_IO = 3,
  VX_STATUS_PARSE = 4,
  VX_STATUS_DATA = 5,
  VX_STATUS_SINGULAR = 6,
  VX_STATUS_NUMERICAL = 7,
  VX_STATUS_STATIONARITY = 8,
  VX_STATUS_MODEL = 9,
  VX_STATUS_BUFFER_TOO_SMALL = 10,
  VX_STATUS_PANIC = 11,
} VxStatus;

typedef enum VxCriterion {
  VX_CRITERION_AIC = 0,
  VX_CRITERION_BIC = 1,
} VxCriterion;

typedef enum VxEquation {
  VX_EQUATION_GDP = 0,
  VX_EQUATION_CPI = 1,
} VxEquation;

typedef enum VxCorrection {
  VX_CORRECTION_NONE = 0,
  VX_CORRECTION_BONFERRONI = 1,
  VX_CORRECTION_BENJAMINI_HOCHBERG = 2,
} VxCorrection;

typedef enum VxRole {
  VX_ROLE_PHI = 0,
  VX_ROLE_PI = 1,
  VX_ROLE_PSI = 2,
  VX_ROLE_GAMMA = 3,
} VxRole;

/**
 * Both fitted lines of the coupled system.
 */
typedef struct VxFit VxFit;

/**
 * The four weighted adjacency matrices.
 */
typedef struct VxNetwork VxNetwork;

/**
 * Aligned quarterly panel.
 */
typedef struct VxPanel VxPanel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into the library.
 */
const char *vx_last_error_message(void);

/**
 * Reads a panel CSV as written by `varxnet ingest`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum VxStatus vx_panel_load(const char *path, struct VxPanel **out);

/**
 * Loads the two raw CSV files, interpolates annual CPI at `anchor` (1..4)
 * unless `cpi_quarterly` is nonzero, and aligns them.
 *
 * # Safety
 * Paths must be NUL-terminated strings and `out` a writable pointer.
 */
enum VxStatus vx_panel_ingest(const char *gdp_path,
                              const char *cpi_path,
                              int32_t cpi_quarterly,
                              uint8_t anchor,
                              struct VxPanel **out);

/**
 * Builds a panel from row-major `n_periods × n_countries` arrays. `labels`
 * may be null, in which case countries are named C01, C02, ...
 *
 * # Safety
 * `gdp` and `cpi` must each point to `n_periods * n_countries` doubles;
 * `labels`, when not null, to `n_countries` NUL-terminated strings.
 */
enum VxStatus vx_panel_from_arrays(size_t n_periods,
                                   size_t n_countries,
                                   int32_t start_year,
                                   uint8_t start_quarter,
                                   const double *gdp,
                                   const double *cpi,
                                   const char *const *labels,
                                   struct VxPanel **out);

/**
 * # Safety
 * `panel` must be a live handle; `n_periods` and `n_countries` writable.
 */
enum VxStatus vx_panel_dims(const struct VxPanel *panel, size_t *n_periods, size_t *n_countries);

/**
 * Copies the NUL-terminated label of country `index` into `buf`.
 *
 * # Safety
 * `panel` must be a live handle and `buf` hold `len` bytes.
 */
enum VxStatus vx_panel_label(const struct VxPanel *panel, size_t index, char *buf, size_t len);

/**
 * # Safety
 * `panel` must come from this library and not be used afterwards.
 */
void vx_panel_free(struct VxPanel *panel);

/**
 * Fits both lines at lag order `p`.
 *
 * # Safety
 * `panel` must be a live handle and `out` writable.
 */
enum VxStatus vx_fit(const struct VxPanel *panel, size_t p, struct VxFit **out);

/**
 * Chooses p in 1..=p_max by the summed criterion of both lines.
 *
 * # Safety
 * `panel` must be a live handle and `chosen_p` writable.
 */
enum VxStatus vx_select_lag(const struct VxPanel *panel,
                            size_t p_max,
                            enum VxCriterion criterion,
                            size_t *chosen_p);

/**
 * # Safety
 * `fit` must be a live handle and `p` writable.
 */
enum VxStatus vx_fit_lag_order(const struct VxFit *fit, size_t *p);

/**
 * Copies one n × n coefficient matrix, row-major. `exogenous` selects the
 * exogenous block; `lag` counts from 1.
 *
 * # Safety
 * `fit` must be a live handle and `out` hold `len` doubles.
 */
enum VxStatus vx_fit_coefficients(const struct VxFit *fit,
                                  enum VxEquation eq,
                                  int32_t exogenous,
                                  size_t lag,
                                  double *out,
                                  size_t len);

/**
 * Copies the n intercepts of one line.
 *
 * # Safety
 * `fit` must be a live handle and `out` hold `len` doubles.
 */
enum VxStatus vx_fit_intercepts(const struct VxFit *fit,
                                enum VxEquation eq,
                                double *out,
                                size_t len);

/**
 * Largest companion eigenvalue modulus of one line's endogenous block.
 *
 * # Safety
 * `fit` must be a live handle and `modulus` writable.
 */
enum VxStatus vx_fit_max_modulus(const struct VxFit *fit, enum VxEquation eq, double *modulus);

/**
 * Writes the fit as a model JSON document readable by the CLI.
 *
 * # Safety
 * Handles must be live and `path` a NUL-terminated string.
 */
enum VxStatus vx_fit_save(const struct VxFit *fit, const struct VxPanel *panel, const char *path);

/**
 * # Safety
 * `fit` must come from this library and not be used afterwards.
 */
void vx_fit_free(struct VxFit *fit);

/**
 * Runs every block F-test and keeps significant lag sums as weights.
 *
 * # Safety
 * Handles must be live, `fit` estimated on `panel`, and `out` writable.
 */
enum VxStatus vx_network_build(const struct VxPanel *panel,
                               const struct VxFit *fit,
                               double alpha,
                               enum VxCorrection correction,
                               struct VxNetwork **out);

/**
 * Copies one weighted adjacency matrix, row-major, row = target country.
 *
 * # Safety
 * `network` must be a live handle and `out` hold `len` doubles.
 */
enum VxStatus vx_network_matrix(const struct VxNetwork *network,
                                enum VxRole r,
                                double *out,
                                size_t len);

/**
 * # Safety
 * `network` must be a live handle and `count` writable.
 */
enum VxStatus vx_network_edge_count(const struct VxNetwork *network, enum VxRole r, size_t *count);

/**
 * # Safety
 * `network` must come from this library and not be used afterwards.
 */
void vx_network_free(struct VxNetwork *network);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VARXNET_H */
