#ifndef POOLEVO_H
#define POOLEVO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PoolevoStatus {
  POOLEVO_STATUS_OK = 0,
  POOLEVO_STATUS_NULL_POINTER = 1,
  POOLEVO_STATUS_INVALID_ARGUMENT = 2,
  POOLEVO_STATUS_IO = 3,
  POOLEVO_STATUS_INTERNAL = 4,
  POOLEVO_STATUS_PANIC = 5,
} PoolevoStatus;

/**
 * A generated F15 instance.
 */
typedef struct PoolevoF15Spec PoolevoF15Spec;

/**
 * A pool server running on a background thread.
 */
typedef struct PoolevoServer PoolevoServer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the last error message on this thread, or NULL if there is none.
 * Free it with `poolevo_string_free`.
 */
char *poolevo_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void poolevo_string_free(char *s);

/**
 * Trap fitness of `len` bits (one byte per bit, 0 or 1) split into blocks
 * of `l`.
 *
 * # Safety
 * `bits` must point to `len` readable bytes and `out` to a writable double.
 */
enum PoolevoStatus poolevo_trap_fitness(const uint8_t *bits,
                                        size_t len,
                                        size_t l,
                                        double a,
                                        double b,
                                        size_t z,
                                        double *out);

/**
 * # Safety
 * `x` must point to `len` readable doubles and `out` to a writable double.
 */
enum PoolevoStatus poolevo_rastrigin(const double *x, size_t len, double *out);

/**
 * Generates an F15 instance. On success `*out` owns a new handle.
 *
 * # Safety
 * `out` must point to a writable handle pointer.
 */
enum PoolevoStatus poolevo_f15_spec_new(size_t dimension,
                                        size_t group_size,
                                        uint64_t seed,
                                        double lower,
                                        double upper,
                                        struct PoolevoF15Spec **out);

/**
 * # Safety
 * `spec` must be NULL or a handle from `poolevo_f15_spec_new` not yet freed.
 */
void poolevo_f15_spec_free(struct PoolevoF15Spec *spec);

/**
 * # Safety
 * `spec` must be a live handle or NULL.
 */
size_t poolevo_f15_spec_dimension(const struct PoolevoF15Spec *spec);

/**
 * # Safety
 * `spec` must be a live handle, `x` must point to `len` readable doubles and
 * `out` to a writable double.
 */
enum PoolevoStatus poolevo_f15_eval(const struct PoolevoF15Spec *spec,
                                    const double *x,
                                    size_t len,
                                    double *out);

/**
 * The instance as JSON (`D`, `m`, `seed`, `bounds`, `o`, `M`, 1-based `P`).
 * Free the string with `poolevo_string_free`.
 *
 * # Safety
 * `spec` must be a live handle and `out` a writable pointer.
 */
enum PoolevoStatus poolevo_f15_spec_to_json(const struct PoolevoF15Spec *spec, char **out);

/**
 * Starts a pool server. `config_json` is a JSON server configuration or
 * NULL for the defaults on a free local port.
 *
 * # Safety
 * `config_json` must be NULL or a NUL-terminated string; `out` must be a
 * writable handle pointer.
 */
enum PoolevoStatus poolevo_server_start(const char *config_json, struct PoolevoServer **out);

/**
 * # Safety
 * `server` must be a live handle or NULL.
 */
uint16_t poolevo_server_port(const struct PoolevoServer *server);

/**
 * Current `/v1/stats` document. Free it with `poolevo_string_free`.
 *
 * # Safety
 * `server` must be a live handle and `out` a writable pointer.
 */
enum PoolevoStatus poolevo_server_stats_json(const struct PoolevoServer *server, char **out);

/**
 * Stops the server and frees the handle.
 *
 * # Safety
 * `server` must be NULL or a live handle; it is invalid afterwards.
 */
void poolevo_server_stop(struct PoolevoServer *server);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POOLEVO_H */
