#ifndef WRANGLE_H
#define WRANGLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum {
  WRANGLE_STATUS_OK = 0,
  WRANGLE_STATUS_NULL_ARGUMENT = 1,
  WRANGLE_STATUS_INVALID_UTF8 = 2,
  WRANGLE_STATUS_UNKNOWN_ASSISTANT = 3,
  WRANGLE_STATUS_MISSING_BINDING = 4,
  WRANGLE_STATUS_IO = 5,
  WRANGLE_STATUS_INVALID_CONSTRAINT = 6,
  WRANGLE_STATUS_INVALID_DATA = 7,
  /**
   * The interaction set admits no expression.
   */
  WRANGLE_STATUS_CONFLICT = 8,
  WRANGLE_STATUS_CHOICE_OUT_OF_RANGE = 9,
  WRANGLE_STATUS_STALE_CHOICE = 10,
  WRANGLE_STATUS_SESSION_ACCEPTED = 11,
  WRANGLE_STATUS_NO_RECOMMENDATION = 12,
  WRANGLE_STATUS_PROTOCOL = 13,
  WRANGLE_STATUS_PANIC = 14,
} WrangleStatus;

/**
 * Opaque session handle.
 */
typedef struct WrangleSession WrangleSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Opens a session. `bindings` uses the wire form
 * `slot=path,slot=path`; `settings_json` may be null or a JSON object
 * with `seed`, `preview_rows`, `column` and `m`.
 *
 * # Safety
 * String arguments must be null or valid NUL-terminated strings and `out`
 * must be a valid pointer.
 */
WrangleStatus wrangle_session_new(const char *assistant,
                                  const char *bindings,
                                  const char *settings_json,
                                  WrangleSession **out);

/**
 * # Safety
 * `s` must be null or a handle from [`wrangle_session_new`] not yet freed.
 */
void wrangle_session_free(WrangleSession *s);

/**
 * The recommended script for the current interaction set, one patch per
 * line.
 *
 * # Safety
 * `s` must be a live handle and `out` a valid pointer.
 */
WrangleStatus wrangle_session_script(WrangleSession *s, char **out);

/**
 * Offered choices in the wire form: label line, interaction line, and a
 * blank line at the end.
 *
 * # Safety
 * `s` must be a live handle and `out` a valid pointer.
 */
WrangleStatus wrangle_session_choices(WrangleSession *s, char **out);

/**
 * # Safety
 * `s` must be a live handle and `count` a valid pointer.
 */
WrangleStatus wrangle_session_choice_count(WrangleSession *s, uintptr_t *count);

/**
 * Selects the choice at a 0-based index of the current list.
 *
 * # Safety
 * `s` must be a live handle.
 */
WrangleStatus wrangle_session_select(WrangleSession *s, uintptr_t index);

/**
 * Adds a constraint given in its textual form.
 *
 * # Safety
 * `s` must be a live handle and `constraint` a NUL-terminated string.
 */
WrangleStatus wrangle_session_constrain(WrangleSession *s, const char *constraint);

/**
 * Accepts the current recommendation and returns its script.
 *
 * # Safety
 * `s` must be a live handle and `out` a valid pointer.
 */
WrangleStatus wrangle_session_accept(WrangleSession *s, char **out);

/**
 * The accepted output table as CSV.
 *
 * # Safety
 * `s` must be a live handle and `out` a valid pointer.
 */
WrangleStatus wrangle_session_result_csv(WrangleSession *s, char **out);

/**
 * The message of the last failure on this thread, or null.
 */
char *wrangle_last_error(void);

/**
 * # Safety
 * `p` must be null or a string returned by this library, freed once.
 */
void wrangle_string_free(char *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WRANGLE_H */
