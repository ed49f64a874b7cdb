/* C ABI for the decoyforge estimators and scenario runner.
 *
 * Generated from the Rust source with cbindgen (see cbindgen.toml); kept in
 * sync by the capi integration tests. Handles returned through out-pointers
 * are owned by the caller and must be released with the matching _free
 * function. All fallible calls return DfStatus and record a message
 * retrievable with df_last_error_message().
 */

#ifndef DECOYFORGE_H
#define DECOYFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum DfStatus {
  DF_STATUS_OK = 0,
  DF_STATUS_NULL_POINTER = 1,
  DF_STATUS_INVALID_ARGUMENT = 2,
  DF_STATUS_INVALID_UTF8 = 3,
  DF_STATUS_UNKNOWN_SCENARIO = 4,
  DF_STATUS_CONDITION_VIOLATED = 5,
  DF_STATUS_NUMERIC_FAILURE = 6,
  DF_STATUS_IO_FAILURE = 7,
  DF_STATUS_ORACLE_VIOLATIONS = 8,
  DF_STATUS_INDEX_OUT_OF_RANGE = 9,
  DF_STATUS_PANIC = 10,
} DfStatus;

/**
 * Opaque scenario configuration handle.
 */
typedef struct DfScenario DfScenario;

/**
 * Opaque sweep result handle.
 */
typedef struct DfSweep DfSweep;

/**
 * One loss-grid record, plain-old-data for easy binding.
 */
typedef struct DfSweepPoint {
  double loss_db;
  double mu_opt_3;
  double r3;
  double mu_opt_4;
  double r4;
  double mu_opt_inf;
  double r_inf;
  double s_lower_3;
  double s_lower_4;
  double e_upper_3;
  double e_upper_4;
  double s_true;
  double e_true;
  size_t flag_count;
} DfSweepPoint;

/**
 * Aggregate oracle outcome.
 */
typedef struct DfOracleSummary {
  uint64_t trials;
  uint64_t violations;
  uint64_t precondition_failures;
  double max_gap;
} DfOracleSummary;

#ifdef __cplusplus
extern "C" {
#endif  // __cplusplus

/**
 * Crate version as a static NUL-terminated string.
 */
const char *df_version(void);

/**
 * Copy the last error message into `buf` (truncating) and return the full
 * message length in bytes, excluding the terminator. A zero-length buffer
 * simply reports the length.
 */
size_t df_last_error_message(char *buf, size_t len);

/**
 * Create a scenario from a built-in name (`bb84_wcs`, `bb84_hsps`,
 * `mdi_wcs`, `mdi_hsps`).
 */
enum DfStatus df_scenario_builtin(const char *name, struct DfScenario **out);

/**
 * Create a scenario from a config file (same grammar as the CLI).
 */
enum DfStatus df_scenario_from_file(const char *path, struct DfScenario **out);

enum DfStatus df_scenario_set_seed(struct DfScenario *scenario, uint64_t seed);

void df_scenario_free(struct DfScenario *scenario);

/**
 * Run the loss sweep for a scenario.
 */
enum DfStatus df_sweep_run(const struct DfScenario *scenario, struct DfSweep **out);

/**
 * Number of loss-grid records in a sweep.
 */
size_t df_sweep_len(const struct DfSweep *sweep);

/**
 * Copy record `index` into `out`.
 */
enum DfStatus df_sweep_point(const struct DfSweep *sweep,
                             size_t index,
                             struct DfSweepPoint *out);

void df_sweep_free(struct DfSweep *sweep);

/**
 * Run a scenario and write the figure CSVs, raw CSV and manifest into
 * `out_dir`, as the CLI `run` subcommand does.
 */
enum DfStatus df_run_to_dir(const struct DfScenario *scenario, const char *out_dir);

/**
 * Certify the bounds with random truth tables: `protocol` 0 = BB84,
 * 1 = MDI; `source` 0 = WCS, 1 = HSPS, 2 = thermal. Returns
 * DF_STATUS_ORACLE_VIOLATIONS when the summary records violations.
 */
enum DfStatus df_oracle_certify(int32_t protocol,
                                int32_t source,
                                uint64_t trials,
                                uint64_t seed,
                                struct DfOracleSummary *out);

/**
 * Binary Shannon entropy, exported for sanity checks from bindings.
 */
double df_binary_entropy(double p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  // DECOYFORGE_H
