/* rblab: restless-bandit lab, C interface.
 *
 * Every function returns an rblab_status. On failure a thread-local message
 * is available through rblab_last_error() until the next call on the same
 * thread. Strings returned through char** out-parameters are owned by the
 * caller and released with rblab_string_free().
 */
#ifndef RBLAB_H
#define RBLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RBLAB_API __declspec(dllexport)
#else
#define RBLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rblab_status {
    RBLAB_OK = 0,
    RBLAB_INVALID_ARGUMENT = 1, /* bad input, malformed model or config */
    RBLAB_IO = 2,               /* file could not be read or written */
    RBLAB_PARSE = 3,            /* JSON syntax error */
    RBLAB_NUMERICAL = 4,        /* singular system, no convergence, degenerate index */
    RBLAB_GUARDRAIL = 5,        /* problem too large for an exact method */
    RBLAB_INVARIANT = 6,        /* a run or verification check failed */
    RBLAB_INTERNAL = 7
} rblab_status;

typedef struct rblab_model rblab_model;

typedef struct rblab_fit {
    int linear_available;
    double linear[2]; /* p0, p1 */
    double linear_rmse;
    int power_available; /* needs at least 4 points */
    double power[3];     /* p0, p1, p2 of p0 + p1 n + p2 n^1.5 */
    double power_rmse;
    int best_is_power;
} rblab_fit;

RBLAB_API const char* rblab_last_error(void);
RBLAB_API const char* rblab_version(void);
RBLAB_API const char* rblab_status_name(rblab_status status);

/* Environment A or B ("A" / "B") with n arms of S states, m = 1. */
RBLAB_API rblab_status rblab_model_generate(const char* kind, int n, int S, uint64_t seed, rblab_model** out);
RBLAB_API rblab_status rblab_model_load(const char* path, rblab_model** out);
RBLAB_API rblab_status rblab_model_from_json(const char* json, rblab_model** out);
RBLAB_API rblab_status rblab_model_save(const rblab_model* model, const char* path);
RBLAB_API rblab_status rblab_model_to_json(const rblab_model* model, char** json_out);
RBLAB_API void rblab_model_free(rblab_model* model);

RBLAB_API rblab_status rblab_model_num_arms(const rblab_model* model, int* out);
RBLAB_API rblab_status rblab_model_num_states(const rblab_model* model, int arm, int* out);
/* RBLAB_OK when valid; RBLAB_INVALID_ARGUMENT with the first violation otherwise.
 * *violations (may be NULL) receives the violation count. */
RBLAB_API rblab_status rblab_model_validate(const rblab_model* model, int* violations);

/* Whittle index of every state of one arm; `out` holds `capacity` doubles. */
RBLAB_API rblab_status rblab_whittle_indices(const rblab_model* model, int arm, double* out, size_t capacity);

/* Runs an experiment config (JSON text). outdir_override and jobs <= 0 fall
 * back to the config's output_dir and hardware concurrency. The summary JSON
 * is returned through summary_json when non-NULL. RBLAB_INVARIANT when
 * strict trend checks fail (files are still written). */
RBLAB_API rblab_status rblab_run_experiment(const char* config_json, const char* outdir_override, int jobs,
                                            char** summary_json);

/* suite: "whittle", "gain", "generator" or "all"; instances <= 0 uses suite
 * defaults. Writes report.json into outdir when outdir is non-NULL.
 * RBLAB_INVARIANT when any check fails. */
RBLAB_API rblab_status rblab_verify(const char* suite, int instances, uint64_t seed, const char* outdir,
                                    char** report_json);

RBLAB_API rblab_status rblab_fit_scaling(const double* n, const double* regret, size_t count, rblab_fit* out);

RBLAB_API void rblab_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* RBLAB_H */
