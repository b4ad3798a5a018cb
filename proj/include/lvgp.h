/* C interface to the LVGP regression library.
 *
 * All functions return an error code; 0 means success. On failure a
 * human-readable message is available from lvgp_last_error() (thread-local).
 * Strings returned through output parameters are heap-allocated and must be
 * released with lvgp_free().
 */
#ifndef LVGP_H
#define LVGP_H

#ifdef __cplusplus
extern "C" {
#endif

#define LVGP_OK 0
#define LVGP_ERR_VALIDATION 2 /* bad inputs, files, or configuration */
#define LVGP_ERR_NUMERICAL 3  /* factorization/optimization/sampling failure */
#define LVGP_ERR_INTERNAL 4   /* internal invariant breach */

/* Message describing the most recent failure on this thread. */
const char* lvgp_last_error(void);

/* Release a string allocated by this library. */
void lvgp_free(char* ptr);

/* Opaque handle to a loaded model. */
typedef struct lvgp_model lvgp_model;

/* Generate a stratified design of experiments and write it as CSV.
 * per_level rows are produced for every joint qualitative level
 * combination; quantitative columns are Latin hypercube sampled. Pass "-"
 * to write to standard output. */
int lvgp_doe(const char* space_json_path, int per_level, unsigned long long seed,
             const char* out_csv_path);

/* Fit a model from a space declaration and a data CSV. options_json selects
 * the method; all fields are optional:
 *   {"method": "map"|"mle"|"bayes", "approx": "exact"|"fitc"|"vfe",
 *    "inducing": 50, "latent_dim": 2, "restarts": 8, "chains": 4,
 *    "warmup": 500, "draws": 250, "max_iters": 500, "seed": 0,
 *    "threads": 0, "priors": {...}}
 * The fitted model is written to model_out_path. If summary_json is
 * non-null it receives a JSON fit summary (objective value or sampler
 * diagnostics). */
int lvgp_fit(const char* space_json_path, const char* data_csv_path,
             const char* options_json, const char* model_out_path,
             char** summary_json);

int lvgp_model_open(const char* model_json_path, lvgp_model** out);
void lvgp_model_close(lvgp_model* model);

/* Predict at the inputs in a CSV (response column optional, ignored).
 * Writes a CSV with the input columns followed by mean, variance, lower95,
 * upper95 (bounds at the requested level). Pass "-" for standard output. */
int lvgp_predict(const lvgp_model* model, const char* data_csv_path, double level,
                 int interval_samples, unsigned long long seed,
                 const char* out_csv_path);

/* Export latent coordinates for one qualitative variable as CSV: per-draw
 * coordinates plus the representative latent space for Bayes models, a
 * single coordinate set for MAP/MLE. Pass "-" for standard output. */
int lvgp_latents(const lvgp_model* model, const char* variable,
                 unsigned long long seed, const char* out_csv_path);

/* Run the benchmark harness from an experiment config JSON file and write
 * report.json, metrics.csv, and latent CSVs into out_dir. */
int lvgp_bench(const char* config_json_path, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LVGP_H */
