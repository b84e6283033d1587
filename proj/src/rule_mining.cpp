#include "xmodal/rule_mining.hpp"

#include <algorithm>
#include <iostream>
#include <memory>
#include <numeric>

#include "xmodal/error.hpp"

namespace xmodal {

std::vector<Transaction> build_transactions(const MergedDetections& merged,
                                            std::uint64_t window_buckets,
                                            std::uint64_t quantum_seconds) {
    if (window_buckets == 0)
        throw Error(ErrorKind::config, "window_buckets must be positive");

    std::vector<Transaction> out;
    for (const auto& [entity, events] : merged.per_entity) {
        std::map<std::uint64_t, std::set<std::string>> windows;
        for (const auto& e : events)
            windows[bucket(e.ts, quantum_seconds) / window_buckets].insert(e.event.event_type);
        for (auto& [window, items] : windows) {
            if (items.empty()) continue;
            out.push_back({entity, window, std::move(items)});
        }
    }
    return out;
}

const std::string& LabelFeed::label_of(const CrossModalEntity& entity) const {
    static const std::string benign = kBenignLabel;
    auto it = assignments.find(entity);
    return it == assignments.end() ? benign : it->second;
}

std::string FrequentItemset::id() const {
    std::string s;
    for (const auto& item : items) {
        if (!s.empty()) s += '+';
        s += item;
    }
    return s;
}

bool FrequentItemset::matches(const std::set<std::string>& transaction_items) const {
    return std::all_of(items.begin(), items.end(), [&](const std::string& item) {
        return transaction_items.count(item) > 0;
    });
}

namespace {

// FP-tree over item indices. Items are ordered by descending global count
// (ties: ascending lexicographic), the classic header-table order.
struct FpNode {
    std::uint32_t item = 0;
    std::uint64_t count = 0;
    FpNode* parent = nullptr;
    std::map<std::uint32_t, std::unique_ptr<FpNode>> children;
    FpNode* next_same_item = nullptr;  // header-table chain
};

struct FpTree {
    FpNode root;
    // For each item index (in header order): chain head and total count.
    std::vector<FpNode*> heads;
    std::vector<std::uint64_t> item_counts;

    explicit FpTree(std::size_t n_items) : heads(n_items, nullptr), item_counts(n_items, 0) {}

    void insert(const std::vector<std::uint32_t>& sorted_items, std::uint64_t count) {
        FpNode* node = &root;
        for (std::uint32_t item : sorted_items) {
            auto it = node->children.find(item);
            if (it == node->children.end()) {
                auto child = std::make_unique<FpNode>();
                child->item = item;
                child->parent = node;
                child->next_same_item = heads[item];
                heads[item] = child.get();
                it = node->children.emplace(item, std::move(child)).first;
            }
            it->second->count += count;
            node = it->second.get();
        }
        for (std::uint32_t item : sorted_items) item_counts[item] += count;
    }
};

struct Miner {
    std::uint64_t n_transactions;
    double min_support;
    std::size_t max_itemset_size;
    const std::vector<std::string>* item_names;  // index -> name (header order)
    std::vector<FrequentItemset>* out;

    bool frequent(std::uint64_t count) const {
        return static_cast<double>(count) / static_cast<double>(n_transactions) >= min_support;
    }

    void mine(const FpTree& tree, std::vector<std::uint32_t>& prefix) {
        // Header items processed least-frequent-first (highest index first).
        for (std::uint32_t item = static_cast<std::uint32_t>(tree.heads.size()); item-- > 0;) {
            const std::uint64_t count = tree.item_counts[item];
            if (count == 0 || !frequent(count)) continue;

            prefix.push_back(item);
            FrequentItemset fi;
            fi.count = count;
            fi.support = static_cast<double>(count) / static_cast<double>(n_transactions);
            for (std::uint32_t idx : prefix) fi.items.push_back((*item_names)[idx]);
            std::sort(fi.items.begin(), fi.items.end());
            out->push_back(std::move(fi));

            if (prefix.size() < max_itemset_size) {
                // Conditional tree from the paths above each node of `item`.
                FpTree cond(item);  // only items that precede `item` in header order
                for (FpNode* node = tree.heads[item]; node; node = node->next_same_item) {
                    std::vector<std::uint32_t> path;
                    for (FpNode* up = node->parent; up && up->parent; up = up->parent)
                        path.push_back(up->item);
                    std::reverse(path.begin(), path.end());
                    if (!path.empty()) cond.insert(path, node->count);
                }
                mine(cond, prefix);
            }
            prefix.pop_back();
        }
    }
};

}  // namespace

std::vector<FrequentItemset> fp_growth(const std::vector<Transaction>& transactions,
                                       double min_support, std::size_t max_itemset_size) {
    if (min_support <= 0.0 || min_support > 1.0)
        throw Error(ErrorKind::config, "min_support must be in (0,1]");
    if (max_itemset_size == 0)
        throw Error(ErrorKind::config, "max_itemset_size must be positive");

    std::vector<FrequentItemset> out;
    const std::uint64_t n = transactions.size();
    if (n == 0) return out;

    std::map<std::string, std::uint64_t> global_counts;
    for (const auto& t : transactions)
        for (const auto& item : t.items) global_counts[item]++;

    // Header order: count descending, name ascending.
    std::vector<std::string> names;
    for (const auto& [item, count] : global_counts)
        if (static_cast<double>(count) / static_cast<double>(n) >= min_support)
            names.push_back(item);
    std::sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
        if (global_counts[a] != global_counts[b]) return global_counts[a] > global_counts[b];
        return a < b;
    });
    std::map<std::string, std::uint32_t> index_of;
    for (std::uint32_t i = 0; i < names.size(); ++i) index_of[names[i]] = i;

    FpTree tree(names.size());
    for (const auto& t : transactions) {
        std::vector<std::uint32_t> items;
        for (const auto& item : t.items) {
            auto it = index_of.find(item);
            if (it != index_of.end()) items.push_back(it->second);
        }
        std::sort(items.begin(), items.end());
        if (!items.empty()) tree.insert(items, 1);
    }

    Miner miner{n, min_support, max_itemset_size, &names, &out};
    std::vector<std::uint32_t> prefix;
    miner.mine(tree, prefix);

    std::sort(out.begin(), out.end(), [](const FrequentItemset& a, const FrequentItemset& b) {
        if (a.items.size() != b.items.size()) return a.items.size() < b.items.size();
        return a.items < b.items;
    });
    return out;
}

const GroupRuleSet* RuleSets::find(const std::string& group) const {
    for (const auto& g : groups)
        if (g.group == group) return &g;
    return nullptr;
}

std::size_t RuleSets::rule_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.rules.size();
    return n;
}

RuleSets mine_group_rules(const std::vector<Transaction>& transactions,
                          const LabelFeed& labels, const MiningParams& params) {
    if (params.min_support_own <= 0.0 || params.min_support_own > 1.0)
        throw Error(ErrorKind::config, "min_support_own must be in (0,1]");
    if (params.max_support_other <= 0.0 || params.max_support_other > 1.0)
        throw Error(ErrorKind::config, "max_support_other must be in (0,1]");

    std::map<std::string, std::vector<Transaction>> by_group;
    for (const auto& t : transactions) by_group[labels.label_of(t.entity)].push_back(t);

    bool has_non_benign = false;
    for (const auto& [entity, label] : labels.assignments)
        if (label != kBenignLabel) has_non_benign = true;
    if (!has_non_benign)
        throw Error(ErrorKind::config,
                    "label feed contains no group besides benign; nothing to mine");

    // Exact support of `items` within one group's transactions.
    auto support_in = [](const std::vector<Transaction>& group,
                         const FrequentItemset& rule) -> double {
        if (group.empty()) return 0.0;
        std::uint64_t count = 0;
        for (const auto& t : group)
            if (rule.matches(t.items)) count++;
        return static_cast<double>(count) / static_cast<double>(group.size());
    };

    RuleSets result;
    result.params = params;
    for (const auto& [entity, label] : labels.assignments) {
        (void)entity;
        if (label == kBenignLabel) continue;
        if (result.find(label)) continue;
        result.groups.push_back({label, {}});
    }
    std::sort(result.groups.begin(), result.groups.end(),
              [](const GroupRuleSet& a, const GroupRuleSet& b) { return a.group < b.group; });

    for (auto& group_set : result.groups) {
        auto it = by_group.find(group_set.group);
        if (it == by_group.end() || it->second.empty()) {
            std::cerr << "xmodal: warning: group '" << group_set.group
                      << "' has no transactions; no rules mined for it\n";
            continue;
        }
        auto candidates = fp_growth(it->second, params.min_support_own, params.max_itemset_size);
        for (auto& cand : candidates) {
            bool discriminative = true;
            for (const auto& [other_label, other_txns] : by_group) {
                if (other_label == group_set.group) continue;
                if (support_in(other_txns, cand) >= params.max_support_other) {
                    discriminative = false;
                    break;
                }
            }
            if (!discriminative) continue;
            cand.group = group_set.group;
            group_set.rules.push_back(std::move(cand));
        }
    }
    return result;
}

}  // namespace xmodal
