#ifndef MUTSYM_H
#define MUTSYM_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MutsymStatus {
  MUTSYM_STATUS_OK = 0,
  MUTSYM_STATUS_NULL_POINTER = 1,
  MUTSYM_STATUS_INVALID_UTF8 = 2,
  MUTSYM_STATUS_SYNTAX = 3,
  MUTSYM_STATUS_SEMANTIC = 4,
  MUTSYM_STATUS_LOWERING = 5,
  MUTSYM_STATUS_MUTATION = 6,
  MUTSYM_STATUS_DOMAIN_VIOLATION = 7,
  MUTSYM_STATUS_IO = 8,
  MUTSYM_STATUS_CONFIG = 9,
  MUTSYM_STATUS_INTERNAL = 10,
} MutsymStatus;

/**
 * The mutants of one program.
 */
typedef struct MutsymMutants MutsymMutants;

/**
 * A compiled program.
 */
typedef struct MutsymProgram MutsymProgram;

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library from the same thread.
 */
const char *mutsym_last_error(void);

/**
 * Parses and lowers program text.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum MutsymStatus mutsym_program_parse(const char *source, struct MutsymProgram **out);

/**
 * # Safety
 * `program` must come from [`mutsym_program_parse`] or be null.
 */
void mutsym_program_free(struct MutsymProgram *program);

/**
 * Number of locations, the exit location included.
 *
 * # Safety
 * `program` must be a live handle; `out` must be writable.
 */
enum MutsymStatus mutsym_program_location_count(const struct MutsymProgram *program, size_t *out);

/**
 * Runs the original program on `input` (`name=value,...`) and writes the
 * outcome, e.g. `[4]` or `[] error`, to `out`.
 *
 * # Safety
 * `program` must be a live handle, `input` a NUL-terminated string and
 * `out` writable.
 */
enum MutsymStatus mutsym_program_run(const struct MutsymProgram *program,
                                     const char *input,
                                     uint64_t step_budget,
                                     char **out);

/**
 * Generates the mutants of `program`. `operators` is a comma-separated list
 * of operator names, or null for all operators.
 *
 * # Safety
 * `program` must be a live handle, `operators` null or NUL-terminated, and
 * `out` writable.
 */
enum MutsymStatus mutsym_mutants_generate(const struct MutsymProgram *program,
                                          const char *operators,
                                          struct MutsymMutants **out);

/**
 * # Safety
 * `mutants` must be a live handle; `out` must be writable.
 */
enum MutsymStatus mutsym_mutants_count(const struct MutsymMutants *mutants, size_t *out);

/**
 * Tab-separated mutant listing with a header line.
 *
 * # Safety
 * `mutants` must be a live handle; `out` must be writable.
 */
enum MutsymStatus mutsym_mutants_tsv(const struct MutsymMutants *mutants, char **out);

/**
 * # Safety
 * `mutants` must come from [`mutsym_mutants_generate`] or be null.
 */
void mutsym_mutants_free(struct MutsymMutants *mutants);

/**
 * Generates tests for the mutants of `program` that survive the trivial
 * equivalence filter and the seeds. `config` holds `key=value` lines in the
 * command-line configuration format and `seeds` one valuation per line;
 * either may be null. The generated-test file text is written to `out`.
 *
 * # Safety
 * `program` must be a live handle, `config` and `seeds` null or
 * NUL-terminated, and `out` writable.
 */
enum MutsymStatus mutsym_generate_tests(const struct MutsymProgram *program,
                                        const char *config,
                                        const char *seeds,
                                        char **out);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void mutsym_string_free(char *s);

#endif  /* MUTSYM_H */
