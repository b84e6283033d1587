#include "xmodal/xmodal.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "xmodal/detectors.hpp"
#include "xmodal/error.hpp"
#include "xmodal/pipeline.hpp"
#include "xmodal/simgen.hpp"

using namespace xmodal;

// Opaque handle: the parsed config plus the last error message.
struct xm_pipeline {
    PipelineConfig cfg;
    std::string last_error;
};

namespace {

xm_status status_of(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::io: return XM_ERR_IO;
        case ErrorKind::corrupt_input: return XM_ERR_CORRUPT_INPUT;
        case ErrorKind::config: return XM_ERR_CONFIG;
        case ErrorKind::contract: return XM_ERR_CONTRACT;
        case ErrorKind::runtime: return XM_ERR_RUNTIME;
    }
    return XM_ERR_RUNTIME;
}

template <typename Fn>
xm_status guarded(xm_pipeline* p, Fn&& fn) {
    if (!p) return XM_ERR_INVALID_ARGUMENT;
    p->last_error.clear();
    try {
        fn();
        return XM_OK;
    } catch (const Error& e) {
        p->last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        p->last_error = e.what();
        return XM_ERR_RUNTIME;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string or_empty(const char* s) { return s ? s : ""; }

}  // namespace

extern "C" {

const char* xm_version(void) { return "0.1.0"; }

xm_status xm_pipeline_create(const char* config_path, xm_pipeline** out) {
    if (!out) return XM_ERR_INVALID_ARGUMENT;
    *out = nullptr;
    auto p = new xm_pipeline{};
    if (config_path && *config_path) {
        xm_status st = guarded(p, [&] { p->cfg = PipelineConfig::from_file(config_path); });
        if (st != XM_OK) {
            delete p;
            return st;
        }
    } else {
        p->cfg = PipelineConfig::defaults();
    }
    *out = p;
    return XM_OK;
}

void xm_pipeline_destroy(xm_pipeline* pipeline) { delete pipeline; }

const char* xm_last_error(const xm_pipeline* pipeline) {
    return pipeline ? pipeline->last_error.c_str() : "null pipeline handle";
}

void xm_string_free(char* s) { std::free(s); }

xm_status xm_set_quantum(xm_pipeline* pipeline, unsigned long long quantum_seconds) {
    return guarded(pipeline, [&] {
        if (quantum_seconds == 0)
            throw Error(ErrorKind::config, "time quantum must be positive");
        pipeline->cfg.quantum_seconds = quantum_seconds;
        pipeline->cfg.detectors.quantum_seconds = quantum_seconds;
    });
}

xm_status xm_simulate(xm_pipeline* pipeline, const char* sim_config_path, const char* out_dir) {
    if (!out_dir) return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        SimConfig cfg = sim_config_path && *sim_config_path
                            ? SimConfig::from_json_file(sim_config_path)
                            : default_sim_config();
        write_sim_output(generate(cfg), out_dir);
    });
}

xm_status xm_ingest(xm_pipeline* pipeline, const char* modality, const char* in_path,
                    const char* out_path, char** stats_json) {
    if (!modality || !in_path || !out_path) return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        auto m = modality_from_string(modality);
        if (!m)
            throw Error(ErrorKind::config, std::string("unknown modality: ") + modality);
        const ParseStats stats = stage_ingest(pipeline->cfg, *m, in_path, out_path);
        if (stats_json) {
            std::ostringstream js;
            js << "{\"valid\":" << stats.valid << ",\"malformed\":" << stats.malformed
               << ",\"duplicates\":" << stats.duplicates << "}";
            *stats_json = dup_string(js.str());
        }
    });
}

xm_status xm_events_dictionary(xm_pipeline* pipeline, char** out_json) {
    if (!out_json) return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        DetectorRegistry registry;
        register_default_detectors(registry, pipeline->cfg.detectors);
        *out_json = dup_string(registry.event_dictionary_json());
    });
}

xm_status xm_run_detectors(xm_pipeline* pipeline, const char* flows_path,
                           const char* proxy_path, const char* endpoint_path,
                           const char* out_events) {
    if (!flows_path || !proxy_path || !endpoint_path || !out_events)
        return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        stage_events(pipeline->cfg, flows_path, proxy_path, endpoint_path, out_events);
    });
}

xm_status xm_match(xm_pipeline* pipeline, const char* endpoint_path,
                   const char* inventory_path, const char* events_path, const char* out_map,
                   const char* out_merged) {
    if (!endpoint_path || !out_map) return XM_ERR_INVALID_ARGUMENT;
    if (events_path && *events_path && !out_merged) return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        stage_match(pipeline->cfg, endpoint_path, or_empty(inventory_path),
                    or_empty(events_path), out_map, or_empty(out_merged));
    });
}

xm_status xm_mine(xm_pipeline* pipeline, const char* merged_path, const char* labels_path,
                  const char* config, const char* out_rules) {
    if (!merged_path || !labels_path || !out_rules) return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        const std::string cfg = config && *config ? config : "combined";
        stage_mine(pipeline->cfg, merged_path, labels_path, cfg, out_rules);
    });
}

xm_status xm_detect(xm_pipeline* pipeline, const char* merged_path, const char* rules_path,
                    const char* severity_path, const char* config,
                    const char* out_detections) {
    if (!merged_path || !rules_path || !out_detections) return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        const std::string cfg = config && *config ? config : "combined";
        stage_detect(pipeline->cfg, merged_path, rules_path, or_empty(severity_path), cfg,
                     out_detections);
    });
}

xm_status xm_evaluate(xm_pipeline* pipeline, const char* truth_path, const char* det_endpoint,
                      const char* det_network, const char* det_combined, const char* out_dir) {
    if (!truth_path || !det_endpoint || !det_network || !det_combined || !out_dir)
        return XM_ERR_INVALID_ARGUMENT;
    return guarded(pipeline, [&] {
        stage_evaluate(pipeline->cfg, truth_path, det_endpoint, det_network, det_combined,
                       out_dir);
    });
}

xm_status xm_run_pipeline(xm_pipeline* pipeline, const char* stages_csv, const char* out_dir) {
    return guarded(pipeline, [&] {
        std::vector<std::string> stages;
        if (stages_csv && *stages_csv) {
            std::istringstream ss(stages_csv);
            std::string stage;
            while (std::getline(ss, stage, ','))
                if (!stage.empty()) stages.push_back(stage);
        }
        run_pipeline(pipeline->cfg, stages, or_empty(out_dir));
    });
}

}  // extern "C"
