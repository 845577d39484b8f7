/* Block-sparse recovery simulator: C API.
 *
 * A configuration handle is built from key/value pairs (the same keys the
 * bomp-sim CLI and config files use), then bsr_run_sweep executes the Monte
 * Carlo sweep and writes the CSV configured under the "out" key.
 *
 * Every function that can fail returns a bsr_status; on failure the handle
 * stores a message retrievable with bsr_last_error. Status values double as
 * process exit codes for the CLI.
 */
#ifndef BSR_H
#define BSR_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct bsr_config bsr_config;

typedef enum bsr_status {
  BSR_OK = 0,
  BSR_ERR_CONFIG = 2,  /* invalid key, value, file or parameter combination */
  BSR_ERR_RUNTIME = 3  /* numerical or I/O failure while running */
} bsr_status;

/* Library version, e.g. "1.0.0". */
const char* bsr_version(void);

/* Fresh configuration with library defaults. Returns NULL on allocation
 * failure. Free with bsr_config_free. */
bsr_config* bsr_config_new(void);
void bsr_config_free(bsr_config* cfg);

/* Sets one key. Keys: scenario, preset, n, d, m, na, mant, t, snr-db,
 * trials, rules, pm, pf, na-assumed, seed, out, guard, threads. */
bsr_status bsr_config_set(bsr_config* cfg, const char* key, const char* value);

/* Applies "key = value" lines from a file; '#' starts a comment. */
bsr_status bsr_config_load_file(bsr_config* cfg, const char* path);

/* Current value of one key, rendered as text (lists comma-separated).
 * Returns NULL for unknown keys. The pointer stays valid until the next
 * call on the handle. */
const char* bsr_config_get(bsr_config* cfg, const char* key);

/* Runs the sweep: one CSV row per (rule, snr) cell. Writes the CSV to the
 * configured "out" path; *rows_out (optional) receives the row count. */
bsr_status bsr_run_sweep(bsr_config* cfg, size_t* rows_out);

/* Message describing the most recent failure on this handle; empty string
 * if none. The pointer stays valid until the next call on the handle. */
const char* bsr_last_error(const bsr_config* cfg);

#ifdef __cplusplus
}
#endif

#endif /* BSR_H */
