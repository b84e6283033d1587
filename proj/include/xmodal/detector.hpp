#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xmodal/telemetry.hpp"

namespace xmodal {

enum class SourceCategory { signature, classifier, anomaly, contextual };

std::string to_string(SourceCategory c);

// One entry of the event dictionary shared by all detectors.
struct EventType {
    std::string id;
    SourceCategory source_category = SourceCategory::signature;

    bool operator==(const EventType&) const = default;
};

struct Event {
    std::string event_type;
    std::map<std::string, std::string> metadata;

    bool operator==(const Event&) const = default;
};

// Per-modality entity: network detections carry the client IP, endpoint
// detections the endpoint ID.
struct ModalityEntity {
    enum class Kind { ip_address, endpoint_id };
    Kind kind = Kind::ip_address;
    std::string value;

    bool operator==(const ModalityEntity&) const = default;
    auto operator<=>(const ModalityEntity&) const = default;
};

std::string to_string(ModalityEntity::Kind k);

struct UnimodalDetection {
    Timestamp ts = 0;
    ModalityEntity entity;
    Event event;

    bool operator==(const UnimodalDetection&) const = default;
};

struct DetectorDescriptor {
    std::string name;
    Modality modality_id = Modality::proxy_log;
    std::vector<EventType> emitted_event_types;
    std::map<std::string, std::string> parameters;
};

using DetectorFn = std::function<std::vector<UnimodalDetection>(const Dataset&)>;

// One detector's output over its modality, canonically ordered.
struct DetectorResult {
    std::string detector;
    Modality modality = Modality::proxy_log;
    std::vector<UnimodalDetection> detections;
};

// Registry of unimodal detectors. The event dictionary is the union of all
// registered detectors' declared event types; detectors are pure functions
// over immutable Datasets and may run in any order.
class DetectorRegistry {
public:
    // Throws Error{config} on duplicate name or on an event type id that is
    // already registered with a different category.
    void register_detector(DetectorDescriptor descriptor, DetectorFn fn);

    // Runs every registered detector against the dataset of its modality.
    // Throws Error{config} if a needed modality is missing and
    // Error{contract} if a detector emits an undeclared event type, an
    // entity of the wrong kind, or a timestamp outside its dataset's span.
    std::vector<DetectorResult> run_all(
        const std::map<Modality, const Dataset*>& datasets) const;

    const std::map<std::string, EventType>& event_dictionary() const {
        return dictionary_;
    }
    std::vector<DetectorDescriptor> descriptors() const;
    bool has(const std::string& name) const { return detectors_.count(name) > 0; }
    std::size_t size() const { return detectors_.size(); }

    // The dictionary as a JSON document (sorted by event id).
    std::string event_dictionary_json() const;

private:
    struct Registered {
        DetectorDescriptor descriptor;
        DetectorFn fn;
        std::set<std::string> declared_ids;
    };
    std::map<std::string, Registered> detectors_;  // keyed by name: canonical order
    std::map<std::string, EventType> dictionary_;
};

// Canonical intra-detector ordering: (ts, entity, event id, metadata).
void sort_detections(std::vector<UnimodalDetection>& v);

}  // namespace xmodal
