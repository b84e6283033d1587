#pragma once

#include <string>
#include <vector>

#include "xmodal/detectors.hpp"
#include "xmodal/evaluation.hpp"
#include "xmodal/multimodal.hpp"
#include "xmodal/rule_mining.hpp"
#include "xmodal/telemetry.hpp"

namespace xmodal {

// Everything one experiment needs, captured in a single JSON document so a
// run is reproducible from its config alone. Environment variables
// (XMODAL_FLOWS, XMODAL_PROXY, XMODAL_ENDPOINT, XMODAL_LABELS,
// XMODAL_INVENTORY, XMODAL_SEVERITY, XMODAL_OUT_DIR) override paths only.
struct PipelineConfig {
    std::uint64_t quantum_seconds = 300;
    std::uint64_t window_buckets = 288;  // one day of 300 s buckets
    double train_fraction = 0.5;
    DetectorParams detectors;
    MiningParams mining;
    SeverityOrder severity = SeverityOrder::defaults();

    struct Paths {
        std::string flows;
        std::string proxy;
        std::string endpoint;
        std::string labels;
        std::string inventory;  // optional
        std::string severity;   // optional override file
        std::string out_dir = "out";
    } paths;

    static PipelineConfig defaults();
    static PipelineConfig from_file(const std::string& path);  // env overrides applied
    static PipelineConfig from_json_text(const std::string& text);
    std::string to_json() const;
    void validate() const;

    AblationParams ablation_params() const;
};

// Stage artifact names inside the output directory.
namespace artifacts {
inline constexpr const char* normalized_flows = "normalized_flows.jsonl";
inline constexpr const char* normalized_proxy = "normalized_proxy.jsonl";
inline constexpr const char* normalized_endpoint = "normalized_endpoint.jsonl";
inline constexpr const char* events_store = "events.jsonl";
inline constexpr const char* entity_map = "entity_map.json";
inline constexpr const char* merged = "merged.jsonl";
std::string rules(const std::string& config);      // rules_<config>.json
std::string detections(const std::string& config); // detections_<config>.jsonl
inline constexpr const char* report_text = "report/table.txt";
inline constexpr const char* report_csv = "report/report.csv";
}  // namespace artifacts

// File-level stages; run_pipeline chains exactly these, so a manual chain of
// stage calls produces byte-identical artifacts.

ParseStats stage_ingest(const PipelineConfig& cfg, Modality modality, const std::string& in_path,
                        const std::string& out_path);

void stage_events(const PipelineConfig& cfg, const std::string& flows_path,
                  const std::string& proxy_path, const std::string& endpoint_path,
                  const std::string& out_events);

// Builds and writes the entity map; when events_path is non-empty the
// events store is merged onto cross-modal entities as well.
void stage_match(const PipelineConfig& cfg, const std::string& endpoint_path,
                 const std::string& inventory_path, const std::string& events_path,
                 const std::string& out_map, const std::string& out_merged);

// `config` is an ablation configuration name (endpoint|network|combined).
void stage_mine(const PipelineConfig& cfg, const std::string& merged_path,
                const std::string& labels_path, const std::string& config,
                const std::string& out_rules);

void stage_detect(const PipelineConfig& cfg, const std::string& merged_path,
                  const std::string& rules_path, const std::string& severity_path,
                  const std::string& config, const std::string& out_detections);

void stage_evaluate(const PipelineConfig& cfg, const std::string& truth_path,
                    const std::string& det_endpoint, const std::string& det_network,
                    const std::string& det_combined, const std::string& out_dir);

inline const std::vector<std::string>& pipeline_stage_names() {
    static const std::vector<std::string> names = {"ingest", "events", "match",
                                                   "mine",   "detect", "evaluate"};
    return names;
}

// Runs the selected stages (all when empty) in canonical order, reading raw
// inputs from cfg.paths and exchanging artifacts through out_dir.
void run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& stages,
                  const std::string& out_dir);

// The severity order a stage should use: the explicit file if given, else
// the config's ranking.
SeverityOrder load_severity(const PipelineConfig& cfg, const std::string& severity_path);

}  // namespace xmodal
