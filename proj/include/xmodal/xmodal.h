/* xmodal — multi-modal security detection engine, C API.
 *
 * The engine is driven through an opaque pipeline handle created from a JSON
 * config file (or built-in defaults). Stage functions exchange data through
 * files in the documented JSONL/JSON/CSV schemas; every call is synchronous
 * and returns a status code, with a per-handle error message available via
 * xm_last_error(). Handles are not thread-safe; use one per thread.
 */
#ifndef XMODAL_XMODAL_H
#define XMODAL_XMODAL_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum xm_status {
    XM_OK = 0,
    XM_ERR_RUNTIME = 1,
    XM_ERR_CONFIG = 2,
    XM_ERR_IO = 3,
    XM_ERR_CORRUPT_INPUT = 4,
    XM_ERR_CONTRACT = 5,
    XM_ERR_INVALID_ARGUMENT = 6,
} xm_status;

typedef struct xm_pipeline xm_pipeline;

const char* xm_version(void);

/* config_path may be NULL for built-in defaults. */
xm_status xm_pipeline_create(const char* config_path, xm_pipeline** out);
void xm_pipeline_destroy(xm_pipeline* pipeline);

/* Message for the last failing call on this handle; empty string if none. */
const char* xm_last_error(const xm_pipeline* pipeline);

/* Frees strings returned through char** out-parameters. */
void xm_string_free(char* s);

/* Overrides the configured time quantum (seconds, > 0) for later calls on
 * this handle. */
xm_status xm_set_quantum(xm_pipeline* pipeline, unsigned long long quantum_seconds);

/* Synthetic telemetry: writes flows.jsonl, proxy.jsonl, endpoint.jsonl and
 * labels.jsonl into out_dir. sim_config_path NULL selects the default
 * desk-scale simulation. */
xm_status xm_simulate(xm_pipeline* pipeline, const char* sim_config_path, const char* out_dir);

/* Parse, validate, de-duplicate and time-sort one modality's telemetry.
 * modality is one of "network_flow", "proxy_log", "endpoint". Per-call
 * counts are returned as a JSON string when stats_json is non-NULL. */
xm_status xm_ingest(xm_pipeline* pipeline, const char* modality, const char* in_path,
                    const char* out_path, char** stats_json);

/* The event dictionary of the configured detectors as JSON. */
xm_status xm_events_dictionary(xm_pipeline* pipeline, char** out_json);

/* Run all configured unimodal detectors; writes the events store. */
xm_status xm_run_detectors(xm_pipeline* pipeline, const char* flows_path,
                           const char* proxy_path, const char* endpoint_path,
                           const char* out_events);

/* Build the IP<->endpoint map (optionally with an inventory feed) and, when
 * events_path is non-NULL, merge the events store onto cross-modal
 * entities. */
xm_status xm_match(xm_pipeline* pipeline, const char* endpoint_path,
                   const char* inventory_path, const char* events_path, const char* out_map,
                   const char* out_merged);

/* Mine group-discriminative rules. config selects the event universe:
 * "endpoint", "network" or "combined" (NULL means combined). */
xm_status xm_mine(xm_pipeline* pipeline, const char* merged_path, const char* labels_path,
                  const char* config, const char* out_rules);

/* Classify per-entity windows against mined rules. severity_path NULL uses
 * the pipeline config's ranking. */
xm_status xm_detect(xm_pipeline* pipeline, const char* merged_path, const char* rules_path,
                    const char* severity_path, const char* config,
                    const char* out_detections);

/* Score per-config detection files against the ground truth; writes
 * table.txt and report.csv into out_dir. */
xm_status xm_evaluate(xm_pipeline* pipeline, const char* truth_path, const char* det_endpoint,
                      const char* det_network, const char* det_combined, const char* out_dir);

/* Run the staged pipeline end to end. stages_csv selects a subset
 * ("ingest,match"); NULL or "" runs every stage. out_dir NULL uses the
 * config's out_dir. */
xm_status xm_run_pipeline(xm_pipeline* pipeline, const char* stages_csv, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* XMODAL_XMODAL_H */
