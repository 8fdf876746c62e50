/*
 * asyncmde - asynchronous amortized depth perception, C API.
 *
 * The library is exposed through opaque handles and status codes; every
 * function returns AMDE_OK on success and records a thread-local error
 * message retrievable with amde_last_error(). Handles are created and
 * destroyed with the matching _create/_destroy pairs and must not be
 * shared across threads without external synchronization.
 */

#ifndef ASYNCMDE_H
#define ASYNCMDE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum amde_status {
  AMDE_OK = 0,
  AMDE_ERR_INVALID_ARGUMENT = 1,
  AMDE_ERR_CONFIG = 2,
  AMDE_ERR_FORMAT = 3,
  AMDE_ERR_TRUNCATED = 4,
  AMDE_ERR_IO = 5,
  AMDE_ERR_STATE = 6,
  AMDE_ERR_DEGENERATE = 7,
  AMDE_ERR_INVARIANT = 8,
  AMDE_ERR_UNKNOWN = 9
} amde_status;

typedef struct amde_config amde_config;     /* key=value configuration */
typedef struct amde_sequence amde_sequence; /* generated or loaded frame bundles */
typedef struct amde_run amde_run;           /* per-frame results of one run */

const char* amde_version_string(void);

/* Thread-local message describing the most recent failure. */
const char* amde_last_error(void);

/* ------------------------------ configuration --------------------------- */

amde_config* amde_config_create(void);
void amde_config_destroy(amde_config* cfg);
amde_status amde_config_load_file(amde_config* cfg, const char* path);
amde_status amde_config_set(amde_config* cfg, const char* key, const char* value);
/* Copies the effective value (set or default) into buf, NUL-terminated. */
amde_status amde_config_get(const amde_config* cfg, const char* key, char* buf,
                            size_t buf_len);
/* Static documentation of every config key (for --help). */
const char* amde_config_describe_keys(void);

/* ------------------------------- sequences ------------------------------ */

amde_status amde_sequence_generate(const amde_config* cfg, amde_sequence** out);
amde_status amde_sequence_load(const char* dir, amde_sequence** out);
amde_status amde_sequence_save(const amde_sequence* seq, const char* dir);
int64_t amde_sequence_length(const amde_sequence* seq);
void amde_sequence_destroy(amde_sequence* seq);

/* --------------------------------- runs --------------------------------- */

typedef struct amde_frame_info {
  int64_t frame;
  int64_t lag;
  uint64_t cache_version;
  double mean_trust;
  double fastpath_pct;
  double fast_start_ms;
  double fast_end_ms;
  int has_metrics; /* absrel/rmse/delta1 valid only when nonzero */
  double absrel;
  double rmse;
  double delta1;
} amde_frame_info;

typedef struct amde_cycle_stats {
  int64_t frames;
  double absrel;
  double rmse;
  double delta1;
  double mean_trust;
  double fastpath_pct;
} amde_cycle_stats;

/* Deterministic synchronous replay (refresh every run.refresh_interval). */
amde_status amde_run_sync(const amde_config* cfg, const amde_sequence* seq,
                          amde_run** out);
/* Dual-rate asynchronous execution (virtual clock unless disabled). */
amde_status amde_run_async(const amde_config* cfg, const amde_sequence* seq,
                           amde_run** out);
int64_t amde_run_frame_count(const amde_run* run);
amde_status amde_run_frame(const amde_run* run, int64_t index, amde_frame_info* out);
amde_status amde_run_cycle_stats(const amde_run* run, amde_cycle_stats* out);
amde_status amde_run_write_log(const amde_run* run, const char* path);
amde_status amde_run_write_lag_csv(const amde_run* run, int bins, const char* path);
void amde_run_destroy(amde_run* run);

/* ------------------------------ subcommands ----------------------------- */

/* Generate run.frames frames and export them (tensor files + manifest). */
amde_status amde_generate(const amde_config* cfg, const char* out_dir);

/* Multi-seed degradation sweep; writes lag_seed<k>.csv and lag_mean.csv. */
amde_status amde_sweep_lag(const amde_config* cfg, const char* out_dir);

/* Cache stress benchmark; writes a human-readable report into buf and
 * returns AMDE_ERR_INVARIANT if any torn read was observed. */
amde_status amde_bench_cache(const amde_config* cfg, char* buf, size_t buf_len);

/* Effective refresh interval in frames for the given path rates. */
amde_status amde_effective_interval(double fast_rate_hz, double slow_rate_hz,
                                    double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ASYNCMDE_H */
