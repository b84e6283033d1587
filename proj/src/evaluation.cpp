#include "xmodal/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "xmodal/error.hpp"

namespace xmodal {

std::optional<double> ConfigMetrics::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ConfigMetrics::recall() const {
    if (tp + fn == 0) return 0.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::map<std::string, ConfigMetrics> evaluate(const std::vector<ThreatDetection>& detections,
                                              const LabelFeed& truth) {
    // Families in scope: everything non-benign seen in truth or detections.
    std::set<std::string> families;
    for (const auto& [entity, label] : truth.assignments)
        if (label != kBenignLabel) families.insert(label);

    std::map<std::string, std::set<std::string>> detected_labels;  // entity -> labels
    for (const auto& d : detections) {
        if (!truth.assignments.count(d.entity))
            std::cerr << "xmodal: warning: detected entity " << d.entity
                      << " is absent from the ground truth; scoring it as benign\n";
        detected_labels[d.entity].insert(d.label);
        if (d.label != kBenignLabel) families.insert(d.label);
    }

    std::map<std::string, ConfigMetrics> rows;
    for (const auto& family : families) rows[family];

    for (const auto& [entity, label] : truth.assignments) {
        auto it = detected_labels.find(entity);
        const std::set<std::string> detected =
            it == detected_labels.end() ? std::set<std::string>{} : it->second;
        for (auto& [family, metrics] : rows) {
            const bool is_truth = label == family;
            const bool is_detected = detected.count(family) > 0;
            if (is_truth && is_detected)
                metrics.tp++;
            else if (is_truth && !is_detected)
                metrics.fn++;
            else if (!is_truth && is_detected)
                metrics.fp++;
        }
    }
    // Entities outside the truth universe score against benign: any
    // detection on them is a false positive for its family.
    for (const auto& [entity, labels] : detected_labels) {
        if (truth.assignments.count(entity)) continue;
        for (const auto& label : labels)
            if (label != kBenignLabel) rows[label].fp++;
    }
    return rows;
}

std::set<Modality> ablation_modalities(const std::string& config) {
    if (config == "endpoint") return {Modality::endpoint};
    if (config == "network") return {Modality::network_flow, Modality::proxy_log};
    if (config == "combined")
        return {Modality::network_flow, Modality::proxy_log, Modality::endpoint};
    throw Error(ErrorKind::config, "unknown ablation configuration: " + config);
}

MergedDetections filter_by_modality(const MergedDetections& merged,
                                    const std::set<Modality>& keep) {
    MergedDetections out;
    for (const auto& [entity, events] : merged.per_entity) {
        std::vector<MergedEvent> kept;
        for (const auto& e : events)
            if (keep.count(e.source_modality)) kept.push_back(e);
        if (!kept.empty()) out.per_entity.emplace(entity, std::move(kept));
    }
    for (const auto& u : merged.unresolved)
        if (keep.count(u.modality)) out.unresolved.push_back(u);
    return out;
}

MergedDetections filter_from_window(const MergedDetections& merged,
                                    std::uint64_t first_window,
                                    std::uint64_t window_buckets,
                                    std::uint64_t quantum_seconds) {
    MergedDetections out;
    for (const auto& [entity, events] : merged.per_entity) {
        std::vector<MergedEvent> kept;
        for (const auto& e : events)
            if (bucket(e.ts, quantum_seconds) / window_buckets >= first_window)
                kept.push_back(e);
        if (!kept.empty()) out.per_entity.emplace(entity, std::move(kept));
    }
    out.unresolved = merged.unresolved;
    return out;
}

std::optional<std::uint64_t> split_window(const MergedDetections& merged,
                                          const AblationParams& params) {
    const auto lo = merged.min_ts();
    const auto hi = merged.max_ts();
    if (!lo || !hi) return std::nullopt;
    const double span = static_cast<double>(*hi - *lo);
    const Timestamp split_ts =
        *lo + static_cast<Timestamp>(span * std::min(std::max(params.train_fraction, 0.0), 1.0));
    return bucket(split_ts, params.quantum_seconds) / params.window_buckets;
}

AblationTable run_ablation(const MergedDetections& merged, const LabelFeed& truth,
                           const AblationParams& params) {
    AblationTable table;
    const auto w_split = split_window(merged, params);
    {
        std::ostringstream note;
        if (w_split)
            note << "rules mined on windows < " << *w_split << ", detections evaluated on windows >= "
                 << *w_split << " (train fraction " << params.train_fraction << " of the event span)";
        else
            note << "no events; nothing to split";
        table.split_note = note.str();
    }

    for (const auto& config : ablation_configs()) {
        const MergedDetections filtered = filter_by_modality(merged, ablation_modalities(config));

        std::vector<ThreatDetection> detections;
        if (w_split) {
            std::vector<Transaction> txns = build_transactions(filtered, params.window_buckets,
                                                               params.quantum_seconds);
            std::vector<Transaction> train;
            for (auto& t : txns)
                if (t.window < *w_split) train.push_back(std::move(t));
            const RuleSets rules = mine_group_rules(train, truth, params.mining);
            const MergedDetections test = filter_from_window(
                filtered, *w_split, params.window_buckets, params.quantum_seconds);
            detections = detect(test, rules, params.severity, params.window_buckets,
                                params.quantum_seconds);
        }

        for (const auto& [family, metrics] : evaluate(detections, truth))
            table.rows[family][config] = metrics;
    }
    return table;
}

namespace {

std::string fmt2(const std::optional<double>& v) {
    if (!v) return "nan";
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return buf;
}

std::string fmt6(const std::optional<double>& v) {
    if (!v) return "nan";
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}

}  // namespace

std::string render_table_text(const AblationTable& table) {
    std::size_t name_w = std::string("family").size();
    for (const auto& [family, row] : table.rows) name_w = std::max(name_w, family.size());

    std::ostringstream out;
    out << "# " << table.split_note << "\n";
    out << std::string(name_w, ' ') << "  |  endpoint   |  network    |  combined\n";
    out << std::string(name_w, ' ') << "  |  pre   rec  |  pre   rec  |  pre   rec\n";
    out << std::string(name_w + 44, '-') << "\n";
    for (const auto& [family, row] : table.rows) {
        out << family << std::string(name_w - family.size(), ' ') << "  |";
        for (const auto& config : ablation_configs()) {
            ConfigMetrics m;
            auto it = row.find(config);
            if (it != row.end()) m = it->second;
            char cell[32];
            std::snprintf(cell, sizeof(cell), "  %-5s %-5s|", fmt2(m.precision()).c_str(),
                          fmt2(std::optional<double>(m.recall())).c_str());
            out << cell;
        }
        out << "\n";
    }
    return out.str();
}

std::string render_table_csv(const AblationTable& table) {
    std::ostringstream out;
    out << "family,config,precision,recall,tp,fp,fn\n";
    for (const auto& [family, row] : table.rows) {
        for (const auto& config : ablation_configs()) {
            ConfigMetrics m;
            auto it = row.find(config);
            if (it != row.end()) m = it->second;
            out << family << ',' << config << ',' << fmt6(m.precision()) << ','
                << fmt6(std::optional<double>(m.recall())) << ',' << m.tp << ',' << m.fp << ','
                << m.fn << "\n";
        }
    }
    return out.str();
}

}  // namespace xmodal
