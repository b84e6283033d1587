#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xmodal/rule_mining.hpp"

namespace xmodal {

// Total severity order over threat labels, most severe first.
struct SeverityOrder {
    std::vector<std::string> ranking;

    static SeverityOrder defaults();

    // Position in the ranking; smaller is more severe.
    std::optional<std::size_t> rank(const std::string& label) const;

    // Throws Error{config} on duplicates or when a rule-set label is
    // missing from the ranking.
    void validate(const RuleSets& rules) const;
};

struct ThreatDetection {
    Timestamp ts = 0;  // start of the window's last bucket
    CrossModalEntity entity;
    std::string label;
    std::uint64_t window = 0;
    std::vector<FrequentItemset> matched_rules;  // the winning group's matches
    std::map<std::string, std::uint64_t> match_counts;
    Timestamp first_event_ts = 0;
    Timestamp last_event_ts = 0;
};

// Rules per group whose itemset is contained in `items`; groups with zero
// matches are omitted.
std::map<std::string, std::uint64_t> match_entity(const std::set<std::string>& items,
                                                  const RuleSets& rules);

// Label with the maximum match count; exact ties resolve to the most severe
// label. nullopt for empty counts. Throws Error{config} on unranked labels.
std::optional<std::string> classify(const std::map<std::string, std::uint64_t>& match_counts,
                                    const SeverityOrder& severity);

// Builds per-entity window itemsets exactly as build_transactions does and
// emits one ThreatDetection per (entity, window) that classifies to a label,
// in (entity, window) order.
std::vector<ThreatDetection> detect(const MergedDetections& merged, const RuleSets& rules,
                                    const SeverityOrder& severity,
                                    std::uint64_t window_buckets,
                                    std::uint64_t quantum_seconds);

}  // namespace xmodal
