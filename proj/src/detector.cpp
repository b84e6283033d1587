#include "xmodal/detector.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "xmodal/error.hpp"

namespace xmodal {

std::string to_string(SourceCategory c) {
    switch (c) {
        case SourceCategory::signature: return "signature";
        case SourceCategory::classifier: return "classifier";
        case SourceCategory::anomaly: return "anomaly";
        case SourceCategory::contextual: return "contextual";
    }
    return "unknown";
}

std::string to_string(ModalityEntity::Kind k) {
    return k == ModalityEntity::Kind::ip_address ? "ip_address" : "endpoint_id";
}

void sort_detections(std::vector<UnimodalDetection>& v) {
    std::sort(v.begin(), v.end(), [](const UnimodalDetection& a, const UnimodalDetection& b) {
        return std::tie(a.ts, a.entity, a.event.event_type, a.event.metadata) <
               std::tie(b.ts, b.entity, b.event.event_type, b.event.metadata);
    });
}

void DetectorRegistry::register_detector(DetectorDescriptor descriptor, DetectorFn fn) {
    if (descriptor.name.empty())
        throw Error(ErrorKind::config, "detector name must be non-empty");
    if (detectors_.count(descriptor.name))
        throw Error(ErrorKind::config,
                    "detector already registered: " + descriptor.name);
    if (!fn)
        throw Error(ErrorKind::config,
                    "detector has no implementation: " + descriptor.name);

    Registered reg;
    for (const auto& et : descriptor.emitted_event_types) {
        if (et.id.empty())
            throw Error(ErrorKind::config, "event type id must be non-empty");
        auto it = dictionary_.find(et.id);
        if (it != dictionary_.end() && it->second.source_category != et.source_category)
            throw Error(ErrorKind::config,
                        "event type '" + et.id + "' already registered with category " +
                            to_string(it->second.source_category));
        reg.declared_ids.insert(et.id);
    }
    for (const auto& et : descriptor.emitted_event_types)
        dictionary_.emplace(et.id, et);
    reg.descriptor = std::move(descriptor);
    reg.fn = std::move(fn);
    detectors_.emplace(reg.descriptor.name, std::move(reg));
}

std::vector<DetectorResult> DetectorRegistry::run_all(
    const std::map<Modality, const Dataset*>& datasets) const {
    std::set<std::string> missing;
    for (const auto& [name, reg] : detectors_) {
        auto it = datasets.find(reg.descriptor.modality_id);
        if (it == datasets.end() || it->second == nullptr)
            missing.insert(to_string(reg.descriptor.modality_id));
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "missing datasets for registered modalities:";
        for (const auto& m : missing) msg << ' ' << m;
        throw Error(ErrorKind::config, msg.str());
    }

    std::vector<DetectorResult> results;
    results.reserve(detectors_.size());
    for (const auto& [name, reg] : detectors_) {
        const Dataset& ds = *datasets.at(reg.descriptor.modality_id);
        if (ds.modality_id != reg.descriptor.modality_id)
            throw Error(ErrorKind::config,
                        "dataset modality mismatch for detector " + name);

        DetectorResult result;
        result.detector = name;
        result.modality = reg.descriptor.modality_id;
        result.detections = reg.fn(ds);

        const auto lo = ds.min_ts();
        const auto hi = ds.max_ts();
        const auto want_kind = reg.descriptor.modality_id == Modality::endpoint
                                   ? ModalityEntity::Kind::endpoint_id
                                   : ModalityEntity::Kind::ip_address;
        for (const auto& d : result.detections) {
            if (!reg.declared_ids.count(d.event.event_type))
                throw Error(ErrorKind::contract,
                            "detector '" + name + "' emitted undeclared event type '" +
                                d.event.event_type + "'");
            if (d.entity.kind != want_kind)
                throw Error(ErrorKind::contract,
                            "detector '" + name + "' emitted entity of wrong kind for " +
                                to_string(reg.descriptor.modality_id));
            if (!lo || d.ts < *lo || d.ts > *hi)
                throw Error(ErrorKind::contract,
                            "detector '" + name +
                                "' emitted detection outside its dataset's time span");
        }
        sort_detections(result.detections);
        results.push_back(std::move(result));
    }
    return results;
}

std::vector<DetectorDescriptor> DetectorRegistry::descriptors() const {
    std::vector<DetectorDescriptor> out;
    out.reserve(detectors_.size());
    for (const auto& [name, reg] : detectors_) out.push_back(reg.descriptor);
    return out;
}

std::string DetectorRegistry::event_dictionary_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [id, et] : dictionary_) {
        nlohmann::json j;
        j["id"] = et.id;
        j["source_category"] = to_string(et.source_category);
        arr.push_back(j);
    }
    nlohmann::json doc;
    doc["event_dictionary"] = arr;
    return doc.dump(2) + "\n";
}

}  // namespace xmodal
