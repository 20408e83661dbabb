#ifndef NCGEOM_H
#define NCGEOM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of one check in a report.
 */
typedef enum {
  NCG_CHECK_STATUS_PASS = 0,
  NCG_CHECK_STATUS_FAIL = 1,
  NCG_CHECK_STATUS_SKIPPED = 2,
  NCG_CHECK_STATUS_EXPECTED_FAIL = 3,
  NCG_CHECK_STATUS_UNEXPECTED_PASS = 4,
} NcgCheckStatus;

typedef enum {
  NCG_FORMAT_JSON = 0,
  NCG_FORMAT_MARKDOWN = 1,
} NcgFormat;

/**
 * Result codes. `NCG_STATUS_OK` is zero.
 */
typedef enum {
  NCG_STATUS_OK = 0,
  NCG_STATUS_NULL_POINTER = 1,
  NCG_STATUS_INVALID_UTF8 = 2,
  NCG_STATUS_PARSE = 3,
  NCG_STATUS_VALIDATION = 4,
  NCG_STATUS_IO = 5,
  /**
   * The engine rejected the input data (shape, invertibility, star product, …).
   */
  NCG_STATUS_DOMAIN = 6,
  /**
   * Two independent computations of one quantity disagreed.
   */
  NCG_STATUS_INTERNAL = 7,
  NCG_STATUS_OUT_OF_RANGE = 8,
  NCG_STATUS_NOT_FOUND = 9,
  NCG_STATUS_PANIC = 10,
} NcgStatus;

/**
 * Finished run report.
 */
typedef struct NcgReport NcgReport;

/**
 * Parsed scenario.
 */
typedef struct NcgScenario NcgScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *ncg_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ncg_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library and not yet freed.
 */
void ncg_string_free(char *s);

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
NcgStatus ncg_scenario_from_json(const char *json, NcgScenario **out);

/**
 * Loads a scenario from a file path or a `builtin:NAME` reference.
 *
 * # Safety
 * `source` must be a nul-terminated string; `out` must be writable.
 */
NcgStatus ncg_scenario_load(const char *source, NcgScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle from this library not yet freed.
 */
void ncg_scenario_free(NcgScenario *scenario);

/**
 * Runs every check of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
NcgStatus ncg_run(const NcgScenario *scenario, NcgReport **out);

/**
 * Checks the sixteen trigonometric product identities.
 *
 * # Safety
 * `out` must be writable.
 */
NcgStatus ncg_verify_appendix(uint32_t order, uint32_t points, uint64_t seed, NcgReport **out);

/**
 * # Safety
 * `report` must be null or a handle from this library not yet freed.
 */
void ncg_report_free(NcgReport *report);

/**
 * Process exit code the report maps to: 0 when every check is acceptable, 1 otherwise.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
NcgStatus ncg_report_exit_code(const NcgReport *report, int32_t *out);

/**
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
NcgStatus ncg_report_check_count(const NcgReport *report, size_t *out);

/**
 * Status of the check at `index`.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
NcgStatus ncg_report_check_status(const NcgReport *report, size_t index, NcgCheckStatus *out);

/**
 * Name of the check at `index`; free with [`ncg_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
NcgStatus ncg_report_check_name(const NcgReport *report, size_t index, char **out);

/**
 * Rendered value of a named quantity such as `R¹₁`; free with [`ncg_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `name` nul-terminated; `out` writable.
 */
NcgStatus ncg_report_quantity(const NcgReport *report, const char *name, char **out);

/**
 * Whole report as JSON or markdown; free with [`ncg_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
NcgStatus ncg_report_render(const NcgReport *report, NcgFormat format, char **out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NCGEOM_H */
