#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xmodal/entity_match.hpp"

namespace xmodal {

// Reserved label for unlabelled entities; never emits rules.
inline constexpr const char* kBenignLabel = "benign";

// One entity's distinct event types within one tumbling time window.
struct Transaction {
    CrossModalEntity entity;
    std::uint64_t window = 0;
    std::set<std::string> items;

    bool operator==(const Transaction&) const = default;
};

// Groups each entity's events into tumbling windows of window_buckets
// consecutive time buckets; multiplicity is dropped, empty windows are not
// emitted. Output order: (entity, window).
std::vector<Transaction> build_transactions(const MergedDetections& merged,
                                            std::uint64_t window_buckets,
                                            std::uint64_t quantum_seconds);

struct LabelFeed {
    std::map<CrossModalEntity, std::string> assignments;

    const std::string& label_of(const CrossModalEntity& entity) const;
};

struct FrequentItemset {
    std::vector<std::string> items;  // sorted lexicographically
    double support = 0.0;            // fraction of the group's transactions
    std::uint64_t count = 0;
    std::string group;

    // Canonical rule id: items joined with '+'.
    std::string id() const;
    bool matches(const std::set<std::string>& transaction_items) const;
};

// Exact frequent itemsets of size 1..max_itemset_size with support >=
// min_support, in canonical order (size ascending, then lexicographic).
std::vector<FrequentItemset> fp_growth(const std::vector<Transaction>& transactions,
                                       double min_support,
                                       std::size_t max_itemset_size);

struct MiningParams {
    double min_support_own = 0.3;
    double max_support_other = 0.05;
    std::size_t max_itemset_size = 4;
};

struct GroupRuleSet {
    std::string group;
    std::vector<FrequentItemset> rules;
};

struct RuleSets {
    MiningParams params;
    std::vector<GroupRuleSet> groups;  // sorted by group label; benign absent

    const GroupRuleSet* find(const std::string& group) const;
    std::size_t rule_count() const;
};

// Per-group FP-Growth followed by cross-group filtering: a rule survives
// only if its exact support in every other group (benign included) is below
// max_support_other. Throws Error{config} when no non-benign group exists.
RuleSets mine_group_rules(const std::vector<Transaction>& transactions,
                          const LabelFeed& labels, const MiningParams& params);

}  // namespace xmodal
