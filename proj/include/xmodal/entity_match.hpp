#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xmodal/detector.hpp"
#include "xmodal/telemetry.hpp"

namespace xmodal {

// The cross-modal entity is the endpoint ID.
using CrossModalEntity = std::string;

struct InventoryRecord {
    std::string ip;
    std::string endpoint_id;
    Timestamp ts = 0;
};

// Time-bucketed IP <-> endpoint association. An (ip, bucket) pair claimed by
// two or more distinct endpoints is discarded: precision over coverage.
struct EntityMap {
    std::uint64_t quantum_seconds = 300;
    std::map<std::pair<std::string, std::uint64_t>, CrossModalEntity> assoc;
    std::set<std::pair<std::string, std::uint64_t>> discarded;

    // assoc lookup for (ip, bucket(ts)); nullopt for unknown or discarded.
    std::optional<CrossModalEntity> resolve(const std::string& ip, Timestamp ts) const;
};

// Evidence: endpoint network_connection records carrying local_ip, plus an
// optional inventory feed with identical conflict semantics.
EntityMap build_entity_map(const Dataset& endpoint_ds, std::uint64_t quantum_seconds,
                           const std::vector<InventoryRecord>& inventory = {});

struct MergedEvent {
    Timestamp ts = 0;
    Event event;
    Modality source_modality = Modality::proxy_log;

    bool operator==(const MergedEvent&) const = default;
};

struct UnresolvedDetection {
    Modality modality = Modality::proxy_log;
    UnimodalDetection detection;

    bool operator==(const UnresolvedDetection&) const = default;
};

// Every input detection lands exactly once: either under its cross-modal
// entity or in `unresolved`.
struct MergedDetections {
    std::map<CrossModalEntity, std::vector<MergedEvent>> per_entity;
    std::vector<UnresolvedDetection> unresolved;

    std::size_t attributed_count() const;
    std::optional<Timestamp> min_ts() const;
    std::optional<Timestamp> max_ts() const;
};

// Entity matching: endpoint detections map through identity, network
// detections resolve via the entity map. Per-entity lists are sorted by ts.
MergedDetections merge(const std::vector<DetectorResult>& detection_sets,
                       const EntityMap& map);

}  // namespace xmodal
