#include "xmodal/multimodal.hpp"

#include <algorithm>

#include "xmodal/error.hpp"

namespace xmodal {

SeverityOrder SeverityOrder::defaults() {
    return SeverityOrder{{
        "trojan",
        "dropper_shlayer",
        "worm",
        "downloader",
        "malware_distribution",
        "fake_search_engine",
        "pua_crossrider",
        "pua_conduit",
        "pua_arcadeyum",
        "pua_pirrit",
        "pua_patchbrowse",
        "pua_genieo",
        "ad_injector",
        "benign",
    }};
}

std::optional<std::size_t> SeverityOrder::rank(const std::string& label) const {
    for (std::size_t i = 0; i < ranking.size(); ++i)
        if (ranking[i] == label) return i;
    return std::nullopt;
}

void SeverityOrder::validate(const RuleSets& rules) const {
    std::set<std::string> seen;
    for (const auto& label : ranking)
        if (!seen.insert(label).second)
            throw Error(ErrorKind::config, "severity ranking lists '" + label + "' twice");
    for (const auto& g : rules.groups)
        if (!rank(g.group))
            throw Error(ErrorKind::config,
                        "severity ranking does not rank label '" + g.group + "'");
}

std::map<std::string, std::uint64_t> match_entity(const std::set<std::string>& items,
                                                  const RuleSets& rules) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& g : rules.groups) {
        std::uint64_t n = 0;
        for (const auto& rule : g.rules)
            if (rule.matches(items)) n++;
        if (n > 0) counts[g.group] = n;
    }
    return counts;
}

std::optional<std::string> classify(const std::map<std::string, std::uint64_t>& match_counts,
                                    const SeverityOrder& severity) {
    if (match_counts.empty()) return std::nullopt;

    std::optional<std::string> best;
    std::uint64_t best_count = 0;
    std::size_t best_rank = 0;
    for (const auto& [label, count] : match_counts) {
        auto r = severity.rank(label);
        if (!r)
            throw Error(ErrorKind::config,
                        "severity ranking does not rank label '" + label + "'");
        if (!best || count > best_count || (count == best_count && *r < best_rank)) {
            best = label;
            best_count = count;
            best_rank = *r;
        }
    }
    return best;
}

std::vector<ThreatDetection> detect(const MergedDetections& merged, const RuleSets& rules,
                                    const SeverityOrder& severity,
                                    std::uint64_t window_buckets,
                                    std::uint64_t quantum_seconds) {
    severity.validate(rules);

    std::vector<ThreatDetection> out;
    for (const auto& [entity, events] : merged.per_entity) {
        struct WindowAcc {
            std::set<std::string> items;
            Timestamp first_ts = 0;
            Timestamp last_ts = 0;
        };
        std::map<std::uint64_t, WindowAcc> windows;
        for (const auto& e : events) {
            const std::uint64_t w = bucket(e.ts, quantum_seconds) / window_buckets;
            auto [it, inserted] = windows.try_emplace(w);
            WindowAcc& acc = it->second;
            if (inserted) {
                acc.first_ts = e.ts;
                acc.last_ts = e.ts;
            }
            acc.items.insert(e.event.event_type);
            acc.first_ts = std::min(acc.first_ts, e.ts);
            acc.last_ts = std::max(acc.last_ts, e.ts);
        }
        for (const auto& [w, acc] : windows) {
            auto counts = match_entity(acc.items, rules);
            auto label = classify(counts, severity);
            if (!label) continue;
            ThreatDetection d;
            d.ts = ((w + 1) * window_buckets - 1) * quantum_seconds;
            d.entity = entity;
            d.label = *label;
            d.window = w;
            d.match_counts = std::move(counts);
            d.first_event_ts = acc.first_ts;
            d.last_event_ts = acc.last_ts;
            if (const GroupRuleSet* g = rules.find(*label))
                for (const auto& rule : g->rules)
                    if (rule.matches(acc.items)) d.matched_rules.push_back(rule);
            out.push_back(std::move(d));
        }
    }
    return out;
}

}  // namespace xmodal
