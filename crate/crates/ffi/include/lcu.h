#ifndef LCU_H
#define LCU_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LcuStatus {
  LCU_STATUS_OK = 0,
  LCU_STATUS_NULL_ARGUMENT = 1,
  LCU_STATUS_INVALID_UTF8 = 2,
  LCU_STATUS_IO = 3,
  LCU_STATUS_PARSE = 4,
  LCU_STATUS_INVALID_INPUT = 5,
  LCU_STATUS_UNKNOWN_METHOD = 6,
  LCU_STATUS_CAPABILITY = 7,
  LCU_STATUS_NUMERICAL = 8,
  LCU_STATUS_PANIC = 9,
} LcuStatus;

// Spatial-orbital Hamiltonian in chemist notation.
typedef struct LcuHamiltonian LcuHamiltonian;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call on the same thread.
const char *lcu_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *lcu_version(void);

// Load an FCIDUMP file. On success `*out` owns a handle to be released with
// `lcu_hamiltonian_free`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum LcuStatus lcu_hamiltonian_load(const char *path, struct LcuHamiltonian **out);

// Parse FCIDUMP text held in memory.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum LcuStatus lcu_hamiltonian_parse(const char *text, struct LcuHamiltonian **out);

// Release a handle. Null is ignored.
//
// # Safety
// `h` must come from this library and not be used afterwards.
void lcu_hamiltonian_free(struct LcuHamiltonian *h);

// Number of spatial orbitals, 0 for a null handle.
//
// # Safety
// `h` must be null or a live handle.
size_t lcu_hamiltonian_n_orbitals(const struct LcuHamiltonian *h);

// 1-norm of one method (`de2`, `pauli`, `oo-pauli`, `ac`, `oo-ac`, `df`,
// `gcsa-f`, `gcsa-sr`), optionally after the symmetry shift. `*count` gets
// the number of unitaries, or -1 where none is defined.
//
// # Safety
// `h` must be a live handle, `method` NUL-terminated, outputs writable.
enum LcuStatus lcu_norm(const struct LcuHamiltonian *h,
                        const char *method,
                        bool shift,
                        uint64_t seed,
                        double *lambda,
                        int64_t *count);

// Optimal shift coefficients of `Ne` and `Ne^2`.
//
// # Safety
// `h` must be a live handle and both outputs writable.
enum LcuStatus lcu_symmetry_shift(const struct LcuHamiltonian *h, double *s1, double *s2);

// Lowest and highest eigenvalue over the whole Fock space, `e0` included.
//
// # Safety
// `h` must be a live handle and both outputs writable.
enum LcuStatus lcu_spectral_range(const struct LcuHamiltonian *h, double *e_min, double *e_max);

// Full report as JSON. `methods` is a comma list as accepted by the CLI;
// `interaction` selects the interaction-picture residual. The string in
// `*json` must be released with `lcu_string_free`.
//
// # Safety
// `h` must be a live handle, `methods` NUL-terminated, `json` writable.
enum LcuStatus lcu_report_json(const struct LcuHamiltonian *h,
                               const char *methods,
                               bool shift,
                               bool interaction,
                               uint64_t seed,
                               char **json);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void lcu_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCU_H */
