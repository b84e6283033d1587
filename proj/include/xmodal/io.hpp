#pragma once

#include <string>
#include <vector>

#include "xmodal/detector.hpp"
#include "xmodal/entity_match.hpp"
#include "xmodal/multimodal.hpp"
#include "xmodal/rule_mining.hpp"

namespace xmodal {

// Events store: one UnimodalDetection per line, canonical order
// (detector, ts, entity, event type).
void write_events_store(const std::string& path, const std::vector<DetectorResult>& results);
std::vector<DetectorResult> read_events_store(const std::string& path);

// Merged detections: attributed lines carry entity_id, unresolved lines the
// original modality entity.
void write_merged(const std::string& path, const MergedDetections& merged);
MergedDetections read_merged(const std::string& path);

// Label feed: {"entity_id": ..., "label": ...} per line. A second distinct
// label for the same entity is rejected (multi-label feeds are errors).
void write_label_feed(const std::string& path, const LabelFeed& feed);
LabelFeed read_label_feed(const std::string& path);

// Inventory feed: {"ip": ..., "endpoint_id": ..., "ts": ...} per line.
std::vector<InventoryRecord> read_inventory(const std::string& path);

// Entity map artifact (single JSON document).
void write_entity_map(const std::string& path, const EntityMap& map);
EntityMap read_entity_map(const std::string& path);

// Mined rules (single JSON document; supports with fixed 6-decimal places).
void write_rules(const std::string& path, const RuleSets& rules);
RuleSets read_rules(const std::string& path);

// Severity ranking: {"ranking": ["most-severe", ...]}.
void write_severity(const std::string& path, const SeverityOrder& severity);
SeverityOrder read_severity(const std::string& path);

// Final detections, one JSON object per line.
void write_detections(const std::string& path, const std::vector<ThreatDetection>& detections);
std::vector<ThreatDetection> read_detections(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace xmodal
