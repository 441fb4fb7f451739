/* C ABI for the nemvis hyperstreamline visualization library.
 *
 * Conventions:
 *   - Every fallible function returns NEMVIS_OK (0) on success and a
 *     nonzero NemvisStatus on failure; the failure message for the calling
 *     thread is retrievable with nemvis_last_error().
 *   - Handles returned through `out` parameters are owned by the caller and
 *     must be released with the matching *_free function.
 *   - All path/string arguments are NUL-terminated UTF-8.
 */

#ifndef NEMVIS_H
#define NEMVIS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible function. */
typedef enum NemvisStatus {
  NEMVIS_OK = 0,
  /* null pointer, bad enum value, or out-of-range parameter */
  NEMVIS_INVALID_ARGUMENT = 1,
  /* input file failed to parse */
  NEMVIS_PARSE_ERROR = 2,
  /* filesystem error */
  NEMVIS_IO_ERROR = 3,
  /* numerical failure (divergence, empty template, ...) */
  NEMVIS_COMPUTE_ERROR = 4,
} NemvisStatus;

/* Opaque tensor-field handle. */
typedef struct NemvisField NemvisField;

/* Scenario identifiers for nemvis_field_generate. */
#define NEMVIS_CASE_UNIFORM_CIRCLE 0
#define NEMVIS_CASE_TWO_DEFECT_CIRCLE 1
#define NEMVIS_CASE_MANY_DEFECT_SQUARE 2

/* Copy the last error message of this thread into buf (NUL terminated,
 * truncated to len bytes). Returns the full message length in bytes,
 * excluding the terminator. Passing a null or empty buffer just queries the
 * length. */
size_t nemvis_last_error(char *buf, size_t len);

/* Generate a built-in test field. ln <= 0, steps < 0, and prng_seed < 0
 * select the per-scenario defaults. On success *out owns a new handle. */
int32_t nemvis_field_generate(int32_t case_id, size_t nx, size_t ny,
                              double ln, int64_t steps, int64_t prng_seed,
                              NemvisField **out);

/* Read a .qtf field file. On success *out owns a new handle. */
int32_t nemvis_field_read(const char *path, NemvisField **out);

/* Write a field to a .qtf file (atomic write). */
int32_t nemvis_field_write(const NemvisField *field, const char *path);

/* Grid dimensions and spacing. Any output pointer may be null. */
int32_t nemvis_field_dims(const NemvisField *field, size_t *nx, size_t *ny,
                          double *dx, double *dy);

/* Number of defects detected at the given planar-anisotropy threshold
 * (threshold <= 0 selects the calibrated default). */
int32_t nemvis_field_defect_count(const NemvisField *field, double threshold,
                                  size_t *out);

/* Release a field handle. Accepts null. */
void nemvis_field_free(NemvisField *field);

/* Run the full seeding + tracing pipeline at spacing ls and write the
 * requested outputs. Each of svg_path, polydata_path, and template_path may
 * be null to skip that output. */
int32_t nemvis_render(const NemvisField *field, double ls,
                      const char *svg_path, const char *polydata_path,
                      const char *template_path);

#ifdef __cplusplus
}
#endif

#endif /* NEMVIS_H */
