#ifndef PASCAL_H
#define PASCAL_H

/* C interface to the phase-aware serving simulator. All functions return a
 * pascal_status; on failure pascal_last_error() describes the problem. Handles
 * are opaque and must be released with the matching *_free function. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    PASCAL_OK = 0,
    PASCAL_ERR_INVALID_ARGUMENT = 1,
    PASCAL_ERR_IO = 2,
    PASCAL_ERR_INTERNAL = 3
} pascal_status;

typedef struct pascal_trace pascal_trace;
typedef struct pascal_profile pascal_profile;
typedef struct pascal_report pascal_report;

/* Message for the most recent failure on this thread; empty string if none. */
const char* pascal_last_error(void);

/* --- request traces (pascal-trace-v1) --- */

pascal_status pascal_trace_load(const char* path, pascal_trace** out);
pascal_status pascal_trace_save(const pascal_trace* t, const char* path);

/* Distribution specs: "constant:N", "uniform:LO:HI", "hist:V=W,V=W,...". */
pascal_status pascal_trace_generate(long count, double arrival_rate,
                                    const char* prompt_dist,
                                    const char* reasoning_dist,
                                    const char* answering_dist, uint64_t seed,
                                    int kv_preloaded, pascal_trace** out);

/* Replaces floor(fraction * |base|) randomly chosen base requests with
 * length samples drawn from the replacement trace. */
pascal_status pascal_trace_mix(const pascal_trace* base,
                               const pascal_trace* replacement, double fraction,
                               uint64_t seed, pascal_trace** out);

long pascal_trace_size(const pascal_trace* t);
void pascal_trace_free(pascal_trace* t);

/* --- latency profiles (pascal-profile-v1) --- */

pascal_status pascal_profile_default(pascal_profile** out);
pascal_status pascal_profile_load(const char* path, pascal_profile** out);
pascal_status pascal_profile_save(const pascal_profile* p, const char* path);
pascal_status pascal_profile_set(pascal_profile* p, const char* key, double value);

/* Fits decode_base/decode_per_request/decode_per_kv_token to measured step
 * times ("batch,kv,seconds" lines) and stores them in p. */
pascal_status pascal_profile_calibrate(const char* samples_path, pascal_profile* p,
                                       double* rmse_out);
void pascal_profile_free(pascal_profile* p);

/* --- simulation runs --- */

typedef struct {
    int instance_count;
    long gpu_capacity;        /* KV tokens per instance; 0 derives from the trace */
    double capacity_fraction; /* used when gpu_capacity == 0 */
    long token_quantum;
    long demotion_threshold;
    const char* policy; /* fcfs | rr | oracle | pascal */
    int no_migration;   /* ablation: never migrate at the phase boundary */
    int non_adaptive;   /* ablation: always follow the placement choice */
    double target_tpot;
    double ttfat_target;
    double qoe_threshold;
    long pacer_slack_tokens;
} pascal_run_config;

void pascal_run_config_init(pascal_run_config* cfg);

/* Runs the trace to completion and writes <report_prefix>.requests.csv,
 * <report_prefix>.summary.txt and <report_prefix>.bins.csv (pascal-report-v1).
 * event_log_path, when non-NULL, receives a pascal-events-v1 log. */
pascal_status pascal_run(const pascal_trace* t, const pascal_profile* p,
                         const pascal_run_config* cfg, const char* report_prefix,
                         const char* event_log_path);

/* --- reports (pascal-report-v1) --- */

pascal_status pascal_report_load(const char* prefix, pascal_report** out);

/* Summary keys: ttft_mean, ttft_p50, ttft_p90, ttft_p95, ttft_p99,
 * slo_violation_rate, ttfat_attainment, throughput. */
pascal_status pascal_report_summary_value(const pascal_report* r, const char* key,
                                          double* out);
void pascal_report_free(pascal_report* r);

/* Writes an aligned comparison of count previously written reports. The first
 * report is the baseline; all must cover the same trace. */
pascal_status pascal_compare(const char* const* prefixes, const char* const* names,
                             size_t count, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* PASCAL_H */
