/* C API for the slow-fast alpha-stable simulation library.
 *
 * All entry points operate on an opaque session handle and return status
 * codes; the last error message is retrievable per session. The library is
 * usable from C, or from any language with a C FFI.
 */
#ifndef SFALPHA_H
#define SFALPHA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct sf_session sf_session;

typedef enum sf_status {
    SF_OK = 0,
    SF_ERR_CONFIG = 1,  /* configuration error (bad file, bad field, bad subcommand) */
    SF_ERR_ASSERT = 2,  /* experiment-level failure (assertion or too many aborts) */
    SF_ERR_RUNTIME = 3, /* unexpected runtime failure */
    SF_ERR_ARG = 4      /* null handle or invalid argument */
} sf_status;

const char* sf_version(void);

sf_session* sf_session_new(void);
void sf_session_free(sf_session* session);

/* Message describing the most recent failure on this session. */
const char* sf_last_error(const sf_session* session);

/* Load a config file (flat key-value text with [section] headers). */
sf_status sf_load_config(sf_session* session, const char* path);

/* Override a single "section.key" with a string value; wins over the file. */
sf_status sf_set_option(sf_session* session, const char* dotted_key, const char* value);

sf_status sf_set_seed(sf_session* session, uint64_t seed);
sf_status sf_set_threads(sf_session* session, int threads); /* 0 = auto */

/* flags: "assert", "deterministic" */
sf_status sf_set_flag(sf_session* session, const char* name, int value);

/* Run all static invariant checks without simulating; writes a report into
 * the caller's buffer (truncated to capacity). Returns SF_ERR_CONFIG when
 * any check fails. */
sf_status sf_validate(sf_session* session, char* report, size_t capacity);

/* Run one experiment subcommand (strong-rate, weak-rate, galerkin,
 * ergodicity, noise-check, bbar-check, phi-check), writing manifest.txt,
 * CSVs and SVGs into out_dir. */
sf_status sf_run(sf_session* session, const char* subcommand, const char* out_dir);

/* Result lines of the last successful sf_run (joined with newlines). */
const char* sf_last_results(const sf_session* session);

#ifdef __cplusplus
}
#endif

#endif /* SFALPHA_H */
