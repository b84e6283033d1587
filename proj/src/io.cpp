#include "xmodal/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xmodal/error.hpp"

namespace xmodal {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot open output file: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open input file: " + path);
    return in;
}

json parse_line(const std::string& line, const std::string& path) {
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorKind::corrupt_input, "malformed line in " + path + ": " + line);
    return j;
}

json parse_document(const std::string& path) {
    std::ifstream in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    json j = json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded())
        throw Error(ErrorKind::corrupt_input, "malformed JSON document: " + path);
    return j;
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json metadata_json(const std::map<std::string, std::string>& metadata) {
    json j = json::object();
    for (const auto& [k, v] : metadata) j[k] = v;
    return j;
}

std::map<std::string, std::string> metadata_from(const json& j) {
    std::map<std::string, std::string> out;
    if (!j.is_object()) return out;
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value().get<std::string>();
    return out;
}

Modality require_modality(const json& j, const std::string& path) {
    auto m = modality_from_string(j.value("modality", ""));
    if (!m) throw Error(ErrorKind::corrupt_input, "unknown modality in " + path);
    return *m;
}

}  // namespace

void write_events_store(const std::string& path, const std::vector<DetectorResult>& results) {
    std::ofstream out = open_out(path);
    for (const auto& result : results) {
        for (const auto& d : result.detections) {
            json j;
            j["ts"] = d.ts;
            j["modality"] = to_string(result.modality);
            j["detector"] = result.detector;
            j["entity_kind"] = to_string(d.entity.kind);
            j["entity"] = d.entity.value;
            j["event_type"] = d.event.event_type;
            j["metadata"] = metadata_json(d.event.metadata);
            out << j.dump() << '\n';
        }
    }
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

std::vector<DetectorResult> read_events_store(const std::string& path) {
    std::ifstream in = open_in(path);
    std::map<std::string, DetectorResult> by_detector;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse_line(line, path);
        const std::string detector = j.value("detector", "");
        DetectorResult& result = by_detector[detector];
        result.detector = detector;
        result.modality = require_modality(j, path);
        UnimodalDetection d;
        d.ts = j.value("ts", std::uint64_t{0});
        d.entity.kind = j.value("entity_kind", "") == "endpoint_id"
                            ? ModalityEntity::Kind::endpoint_id
                            : ModalityEntity::Kind::ip_address;
        d.entity.value = j.value("entity", "");
        d.event.event_type = j.value("event_type", "");
        if (j.contains("metadata")) d.event.metadata = metadata_from(j.at("metadata"));
        result.detections.push_back(std::move(d));
    }
    std::vector<DetectorResult> out;
    for (auto& [name, result] : by_detector) out.push_back(std::move(result));
    return out;
}

void write_merged(const std::string& path, const MergedDetections& merged) {
    std::ofstream out = open_out(path);
    for (const auto& [entity, events] : merged.per_entity) {
        for (const auto& e : events) {
            json j;
            j["entity_id"] = entity;
            j["ts"] = e.ts;
            j["event_type"] = e.event.event_type;
            j["source_modality"] = to_string(e.source_modality);
            j["metadata"] = metadata_json(e.event.metadata);
            out << j.dump() << '\n';
        }
    }
    for (const auto& u : merged.unresolved) {
        json j;
        j["unresolved"] = true;
        j["ts"] = u.detection.ts;
        j["source_modality"] = to_string(u.modality);
        j["entity_kind"] = to_string(u.detection.entity.kind);
        j["entity"] = u.detection.entity.value;
        j["event_type"] = u.detection.event.event_type;
        j["metadata"] = metadata_json(u.detection.event.metadata);
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

MergedDetections read_merged(const std::string& path) {
    std::ifstream in = open_in(path);
    MergedDetections merged;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse_line(line, path);
        if (j.value("unresolved", false)) {
            UnresolvedDetection u;
            u.modality = *modality_from_string(j.value("source_modality", "proxy_log"));
            u.detection.ts = j.value("ts", std::uint64_t{0});
            u.detection.entity.kind = j.value("entity_kind", "") == "endpoint_id"
                                          ? ModalityEntity::Kind::endpoint_id
                                          : ModalityEntity::Kind::ip_address;
            u.detection.entity.value = j.value("entity", "");
            u.detection.event.event_type = j.value("event_type", "");
            if (j.contains("metadata"))
                u.detection.event.metadata = metadata_from(j.at("metadata"));
            merged.unresolved.push_back(std::move(u));
            continue;
        }
        MergedEvent e;
        e.ts = j.value("ts", std::uint64_t{0});
        e.source_modality = *modality_from_string(j.value("source_modality", "proxy_log"));
        e.event.event_type = j.value("event_type", "");
        if (j.contains("metadata")) e.event.metadata = metadata_from(j.at("metadata"));
        merged.per_entity[j.value("entity_id", "")].push_back(std::move(e));
    }
    return merged;
}

void write_label_feed(const std::string& path, const LabelFeed& feed) {
    std::ofstream out = open_out(path);
    for (const auto& [entity, label] : feed.assignments) {
        json j;
        j["entity_id"] = entity;
        j["label"] = label;
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

LabelFeed read_label_feed(const std::string& path) {
    std::ifstream in = open_in(path);
    LabelFeed feed;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse_line(line, path);
        const std::string entity = j.value("entity_id", "");
        const std::string label = j.value("label", "");
        if (entity.empty() || label.empty())
            throw Error(ErrorKind::corrupt_input, "label line missing entity_id/label in " + path);
        auto it = feed.assignments.find(entity);
        if (it != feed.assignments.end() && it->second != label)
            throw Error(ErrorKind::config,
                        "multi-label feed: entity " + entity + " has labels '" + it->second +
                            "' and '" + label + "'; one label per entity is required");
        feed.assignments[entity] = label;
    }
    return feed;
}

std::vector<InventoryRecord> read_inventory(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<InventoryRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse_line(line, path);
        InventoryRecord r;
        r.ip = j.value("ip", "");
        r.endpoint_id = j.value("endpoint_id", "");
        r.ts = j.value("ts", std::uint64_t{0});
        if (r.ip.empty() || r.endpoint_id.empty())
            throw Error(ErrorKind::corrupt_input, "inventory line missing ip/endpoint_id in " + path);
        out.push_back(std::move(r));
    }
    return out;
}

void write_entity_map(const std::string& path, const EntityMap& map) {
    json assoc = json::array();
    for (const auto& [key, endpoint] : map.assoc) {
        json j;
        j["ip"] = key.first;
        j["bucket"] = key.second;
        j["endpoint_id"] = endpoint;
        assoc.push_back(j);
    }
    json discarded = json::array();
    for (const auto& key : map.discarded) {
        json j;
        j["ip"] = key.first;
        j["bucket"] = key.second;
        discarded.push_back(j);
    }
    json doc;
    doc["quantum_seconds"] = map.quantum_seconds;
    doc["assoc"] = assoc;
    doc["discarded"] = discarded;
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

EntityMap read_entity_map(const std::string& path) {
    json doc = parse_document(path);
    EntityMap map;
    map.quantum_seconds = doc.value("quantum_seconds", std::uint64_t{300});
    for (const json& j : doc.value("assoc", json::array()))
        map.assoc[{j.value("ip", ""), j.value("bucket", std::uint64_t{0})}] =
            j.value("endpoint_id", "");
    for (const json& j : doc.value("discarded", json::array()))
        map.discarded.insert({j.value("ip", ""), j.value("bucket", std::uint64_t{0})});
    return map;
}

void write_rules(const std::string& path, const RuleSets& rules) {
    json groups = json::array();
    for (const auto& g : rules.groups) {
        json rj = json::array();
        for (const auto& rule : g.rules) {
            json j;
            j["items"] = rule.items;
            j["support"] = fixed6(rule.support);
            j["count"] = rule.count;
            rj.push_back(j);
        }
        json gj;
        gj["label"] = g.group;
        gj["rules"] = rj;
        groups.push_back(gj);
    }
    json doc;
    doc["params"] = {
        {"min_support_own", fixed6(rules.params.min_support_own)},
        {"max_support_other", fixed6(rules.params.max_support_other)},
        {"max_itemset_size", rules.params.max_itemset_size},
    };
    doc["groups"] = groups;
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

RuleSets read_rules(const std::string& path) {
    json doc = parse_document(path);
    RuleSets rules;
    if (doc.contains("params")) {
        const json& p = doc.at("params");
        if (p.contains("min_support_own"))
            rules.params.min_support_own = std::stod(p.at("min_support_own").get<std::string>());
        if (p.contains("max_support_other"))
            rules.params.max_support_other =
                std::stod(p.at("max_support_other").get<std::string>());
        rules.params.max_itemset_size = p.value("max_itemset_size", rules.params.max_itemset_size);
    }
    for (const json& gj : doc.value("groups", json::array())) {
        GroupRuleSet g;
        g.group = gj.value("label", "");
        for (const json& rj : gj.value("rules", json::array())) {
            FrequentItemset rule;
            for (const json& item : rj.value("items", json::array()))
                rule.items.push_back(item.get<std::string>());
            rule.support = std::stod(rj.value("support", "0"));
            rule.count = rj.value("count", std::uint64_t{0});
            rule.group = g.group;
            g.rules.push_back(std::move(rule));
        }
        rules.groups.push_back(std::move(g));
    }
    return rules;
}

void write_severity(const std::string& path, const SeverityOrder& severity) {
    json doc;
    doc["ranking"] = severity.ranking;
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

SeverityOrder read_severity(const std::string& path) {
    json doc = parse_document(path);
    SeverityOrder severity;
    for (const json& label : doc.value("ranking", json::array()))
        severity.ranking.push_back(label.get<std::string>());
    if (severity.ranking.empty())
        throw Error(ErrorKind::config, "severity file has an empty ranking: " + path);
    return severity;
}

void write_detections(const std::string& path, const std::vector<ThreatDetection>& detections) {
    std::ofstream out = open_out(path);
    for (const auto& d : detections) {
        json counts = json::object();
        for (const auto& [label, n] : d.match_counts) counts[label] = n;
        json matched = json::array();
        for (const auto& rule : d.matched_rules) matched.push_back(rule.id());
        json j;
        j["ts"] = d.ts;
        j["entity_id"] = d.entity;
        j["label"] = d.label;
        j["window"] = d.window;
        j["match_counts"] = counts;
        j["matched_rules"] = matched;
        j["first_event_ts"] = d.first_event_ts;
        j["last_event_ts"] = d.last_event_ts;
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

std::vector<ThreatDetection> read_detections(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<ThreatDetection> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse_line(line, path);
        ThreatDetection d;
        d.ts = j.value("ts", std::uint64_t{0});
        d.entity = j.value("entity_id", "");
        d.label = j.value("label", "");
        d.window = j.value("window", std::uint64_t{0});
        if (j.contains("match_counts"))
            for (auto it = j.at("match_counts").begin(); it != j.at("match_counts").end(); ++it)
                d.match_counts[it.key()] = it.value().get<std::uint64_t>();
        if (j.contains("matched_rules")) {
            for (const json& rid : j.at("matched_rules")) {
                FrequentItemset rule;
                std::istringstream ss(rid.get<std::string>());
                std::string item;
                while (std::getline(ss, item, '+')) rule.items.push_back(item);
                rule.group = d.label;
                d.matched_rules.push_back(std::move(rule));
            }
        }
        d.first_event_ts = j.value("first_event_ts", std::uint64_t{0});
        d.last_event_ts = j.value("last_event_ts", std::uint64_t{0});
        out.push_back(std::move(d));
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out = open_out(path);
    out << content;
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

}  // namespace xmodal
