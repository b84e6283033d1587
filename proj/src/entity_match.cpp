#include "xmodal/entity_match.hpp"

#include <algorithm>
#include <tuple>

#include "xmodal/error.hpp"

namespace xmodal {

std::optional<CrossModalEntity> EntityMap::resolve(const std::string& ip, Timestamp ts) const {
    auto it = assoc.find({ip, bucket(ts, quantum_seconds)});
    if (it == assoc.end()) return std::nullopt;
    return it->second;
}

EntityMap build_entity_map(const Dataset& endpoint_ds, std::uint64_t quantum_seconds,
                           const std::vector<InventoryRecord>& inventory) {
    if (endpoint_ds.modality_id != Modality::endpoint)
        throw Error(ErrorKind::config, "entity map requires the endpoint modality");
    if (quantum_seconds == 0)
        throw Error(ErrorKind::config, "time quantum must be positive");

    std::map<std::pair<std::string, std::uint64_t>, std::set<std::string>> claims;
    for (const auto& r : endpoint_ds.endpoint) {
        if (r.record_kind != EndpointRecordKind::network_connection) continue;
        const std::string* local_ip = r.attr("local_ip");
        if (!local_ip || local_ip->empty()) continue;
        claims[{*local_ip, bucket(r.ts, quantum_seconds)}].insert(r.endpoint_id);
    }
    for (const auto& r : inventory) {
        if (r.ip.empty() || r.endpoint_id.empty()) continue;
        claims[{r.ip, bucket(r.ts, quantum_seconds)}].insert(r.endpoint_id);
    }

    EntityMap map;
    map.quantum_seconds = quantum_seconds;
    for (auto& [key, endpoints] : claims) {
        if (endpoints.size() == 1)
            map.assoc.emplace(key, *endpoints.begin());
        else
            map.discarded.insert(key);
    }
    return map;
}

std::size_t MergedDetections::attributed_count() const {
    std::size_t n = 0;
    for (const auto& [entity, events] : per_entity) n += events.size();
    return n;
}

std::optional<Timestamp> MergedDetections::min_ts() const {
    std::optional<Timestamp> lo;
    for (const auto& [entity, events] : per_entity)
        for (const auto& e : events)
            if (!lo || e.ts < *lo) lo = e.ts;
    return lo;
}

std::optional<Timestamp> MergedDetections::max_ts() const {
    std::optional<Timestamp> hi;
    for (const auto& [entity, events] : per_entity)
        for (const auto& e : events)
            if (!hi || e.ts > *hi) hi = e.ts;
    return hi;
}

MergedDetections merge(const std::vector<DetectorResult>& detection_sets,
                       const EntityMap& map) {
    MergedDetections merged;
    for (const auto& set : detection_sets) {
        for (const auto& d : set.detections) {
            if (d.entity.kind == ModalityEntity::Kind::endpoint_id) {
                merged.per_entity[d.entity.value].push_back(
                    {d.ts, d.event, set.modality});
                continue;
            }
            auto entity = map.resolve(d.entity.value, d.ts);
            if (entity)
                merged.per_entity[*entity].push_back({d.ts, d.event, set.modality});
            else
                merged.unresolved.push_back({set.modality, d});
        }
    }
    for (auto& [entity, events] : merged.per_entity) {
        std::stable_sort(events.begin(), events.end(),
                         [](const MergedEvent& a, const MergedEvent& b) { return a.ts < b.ts; });
    }
    return merged;
}

}  // namespace xmodal
