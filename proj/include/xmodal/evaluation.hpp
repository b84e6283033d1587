#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xmodal/multimodal.hpp"
#include "xmodal/rule_mining.hpp"

namespace xmodal {

struct ConfigMetrics {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    // tp/(tp+fp); undefined (rendered "nan") when nothing was detected.
    std::optional<double> precision() const;
    double recall() const;
};

// Per-entity scoring: an entity is a TP for family F when its ground truth
// is F and any detection labels it F; detections on entities missing from
// the truth score against benign (with a warning). Rows cover every
// non-benign family present in the truth or in the detections, keyed by
// family name (sorted).
std::map<std::string, ConfigMetrics> evaluate(const std::vector<ThreatDetection>& detections,
                                              const LabelFeed& truth);

inline const std::vector<std::string>& ablation_configs() {
    static const std::vector<std::string> configs = {"endpoint", "network", "combined"};
    return configs;
}

// Modality subset for one ablation configuration name.
std::set<Modality> ablation_modalities(const std::string& config);

struct AblationParams {
    MiningParams mining;
    SeverityOrder severity;
    std::uint64_t window_buckets = 288;
    std::uint64_t quantum_seconds = 300;
    // Rules are mined on windows before the split and detections evaluated
    // on windows from the split on; the split point sits at this fraction
    // of the merged events' time span.
    double train_fraction = 0.5;
};

struct AblationTable {
    // family -> configuration -> metrics
    std::map<std::string, std::map<std::string, ConfigMetrics>> rows;
    // One human-readable line describing the train/test split.
    std::string split_note;
};

// Events are filtered to `merged`'s modality subset per configuration;
// mining parameters are identical across configurations.
AblationTable run_ablation(const MergedDetections& merged, const LabelFeed& truth,
                           const AblationParams& params);

// First window index of the test half, given the merged events' span.
// nullopt when there are no events.
std::optional<std::uint64_t> split_window(const MergedDetections& merged,
                                          const AblationParams& params);

MergedDetections filter_by_modality(const MergedDetections& merged,
                                    const std::set<Modality>& keep);
MergedDetections filter_from_window(const MergedDetections& merged,
                                    std::uint64_t first_window,
                                    std::uint64_t window_buckets,
                                    std::uint64_t quantum_seconds);

// Aligned text table in the endpoint/network/combined column layout, and a
// machine-readable CSV (family,config,precision,recall,tp,fp,fn). Undefined
// precision renders exactly as "nan".
std::string render_table_text(const AblationTable& table);
std::string render_table_csv(const AblationTable& table);

}  // namespace xmodal
