#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xmodal/rule_mining.hpp"
#include "xmodal/telemetry.hpp"

namespace xmodal {

// Benign background rates. Individual suspicious events occur in benign
// traffic on purpose: whole per-modality event combinations appear on
// dedicated single-modality "burst" days, single events on "singles" days,
// and a day never mixes the two modalities' combinations. That keeps
// cross-modal co-occurrence out of the benign population while every
// single-modality combination stays frequent enough to be filtered.
struct BenignProfile {
    double proxy_per_day = 12.0;
    double flows_per_day = 8.0;
    double endpoint_per_day = 6.0;
    std::uint32_t popular_hosts = 40;
    std::uint32_t tail_hosts = 2000;
    double endpoint_burst_prob = 0.08;
    double network_burst_prob = 0.08;
    double singles_prob = 0.04;
    double download_prob = 0.25;
    double flow_no_sni_prob = 0.2;
};

enum class ScenarioKind { shlayer_dropper, generic_trojan, benign_lookalike };

std::string to_string(ScenarioKind k);
std::optional<ScenarioKind> scenario_kind_from_string(const std::string& name);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::shlayer_dropper;
    std::vector<std::string> target_entities;
    Timestamp start_ts = 0;
    std::string label;
};

struct SimConfig {
    std::uint64_t n_entities = 500;
    std::uint64_t days = 14;
    std::uint64_t seed = 20240101;
    Timestamp start_ts = 1704067200;  // 2024-01-01 00:00:00 UTC, day-aligned
    // Environment profiling phase: benign hosts are swept and habits are
    // established during the first warmup_days, matching the detectors'
    // default baseline window.
    std::uint64_t warmup_days = 7;
    BenignProfile benign;
    double conflict_fraction = 0.02;  // per entity-day chance of a deliberate IP conflict
    std::vector<ScenarioSpec> scenarios;

    // Throws Error{config} listing every violated constraint.
    void validate() const;

    static SimConfig from_json_file(const std::string& path);
    static SimConfig from_json_text(const std::string& text);
    std::string to_json() const;
};

struct SimOutput {
    Dataset flows;
    Dataset proxy;
    Dataset endpoint;
    LabelFeed truth;  // every simulated entity, scenario targets labelled
};

// Deterministic in SimConfig (seed included): equal configs produce
// byte-identical datasets.
SimOutput generate(const SimConfig& config);

std::string entity_name(std::uint64_t index);
std::string entity_ip(std::uint64_t index);

// The default desk-scale simulation: 500 entities, 14 days, six
// shlayer-infected and five trojan-infected entities.
SimConfig default_sim_config();

void write_sim_output(const SimOutput& out, const std::string& dir);

}  // namespace xmodal
