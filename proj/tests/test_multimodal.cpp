#include <doctest.h>

#include <algorithm>
#include <random>

#include "xmodal/error.hpp"
#include "xmodal/multimodal.hpp"

using namespace xmodal;

namespace {

FrequentItemset rule(const std::string& group, std::initializer_list<const char*> items) {
    FrequentItemset fi;
    for (const char* i : items) fi.items.push_back(i);
    std::sort(fi.items.begin(), fi.items.end());
    fi.group = group;
    fi.support = 0.5;
    fi.count = 1;
    return fi;
}

RuleSets two_group_rules() {
    RuleSets rs;
    rs.groups.push_back({"adware", {rule("adware", {"x", "y"})}});
    rs.groups.push_back(
        {"trojan", {rule("trojan", {"a"}), rule("trojan", {"a", "b"}), rule("trojan", {"c"})}});
    return rs;
}

SeverityOrder severity_of(std::vector<std::string> ranking) { return SeverityOrder{std::move(ranking)}; }

}  // namespace

TEST_CASE("match_entity counts containment per group, omitting empty groups") {
    auto rs = two_group_rules();
    auto counts = match_entity({"a", "b", "c"}, rs);
    CHECK(counts.at("trojan") == 3);
    CHECK(counts.count("adware") == 0);

    CHECK(match_entity({}, rs).empty());

    // Rule {a,b} against items {a}: strict subset semantics, no match.
    auto partial = match_entity({"a"}, rs);
    CHECK(partial.at("trojan") == 1);
}

TEST_CASE("classify picks the strict maximum") {
    auto sev = severity_of({"trojan", "adware", "benign"});
    CHECK(*classify({{"trojan", 3}, {"adware", 1}}, sev) == "trojan");
    CHECK(!classify({}, sev));
}

TEST_CASE("a tie resolves to the most severe label") {
    auto sev = severity_of({"trojan", "adware", "benign"});
    CHECK(*classify({{"adware", 2}, {"trojan", 2}}, sev) == "trojan");

    auto reversed = severity_of({"adware", "trojan", "benign"});
    CHECK(*classify({{"adware", 2}, {"trojan", 2}}, reversed) == "adware");
}

TEST_CASE("severity applies only to exact ties") {
    // adware outranks nothing when trojan simply has more matches.
    auto sev = severity_of({"adware", "trojan"});
    CHECK(*classify({{"adware", 1}, {"trojan", 2}}, sev) == "trojan");
}

TEST_CASE("an unranked label is a configuration error") {
    auto sev = severity_of({"trojan"});
    CHECK_THROWS_AS(classify({{"mystery", 1}}, sev), Error);
}

TEST_CASE("classify is invariant under match-count insertion order") {
    auto sev = severity_of({"a", "b", "c", "d"});
    std::vector<std::pair<std::string, std::uint64_t>> entries = {
        {"a", 2}, {"b", 2}, {"c", 1}, {"d", 2}};
    std::sort(entries.begin(), entries.end());
    std::string expected;
    int permutations = 0;
    do {
        std::map<std::string, std::uint64_t> counts;
        for (const auto& [k, v] : entries) counts.emplace(k, v);
        auto got = classify(counts, sev);
        REQUIRE(got.has_value());
        if (expected.empty()) expected = *got;
        CHECK(*got == expected);
        permutations++;
    } while (std::next_permutation(entries.begin(), entries.end()));
    CHECK(permutations == 24);
    CHECK(expected == "a");  // tie among a, b, d -> most severe
}

TEST_CASE("severity validation rejects duplicates and unranked groups") {
    RuleSets rs = two_group_rules();
    CHECK_THROWS_AS(severity_of({"trojan", "trojan"}).validate(rs), Error);
    CHECK_THROWS_AS(severity_of({"trojan"}).validate(rs), Error);  // adware unranked
    severity_of({"trojan", "adware"}).validate(rs);                // fine
}

TEST_CASE("detect emits one labelled detection per qualifying window") {
    RuleSets rs = two_group_rules();
    auto sev = severity_of({"trojan", "adware", "benign"});
    const std::uint64_t q = 300, wb = 288;

    MergedDetections merged;
    // Window 0: all trojan rules matched. Window 1: nothing that matches.
    merged.per_entity["E1"] = {
        {10, {"a", {}}, Modality::proxy_log},
        {20, {"b", {}}, Modality::endpoint},
        {30, {"c", {}}, Modality::proxy_log},
        {wb * q + 10, {"unrelated", {}}, Modality::proxy_log},
    };
    merged.per_entity["E2"] = {{15, {"unrelated", {}}, Modality::endpoint}};

    auto detections = detect(merged, rs, sev, wb, q);
    REQUIRE(detections.size() == 1);
    const auto& d = detections[0];
    CHECK(d.entity == "E1");
    CHECK(d.label == "trojan");
    CHECK(d.window == 0);
    CHECK(d.ts == (wb - 1) * q);  // start of the window's last bucket
    CHECK(d.first_event_ts == 10);
    CHECK(d.last_event_ts == 30);
    CHECK(d.match_counts.at("trojan") == 3);
    CHECK(d.matched_rules.size() == 3);
    // Auditability: every matched rule is contained in the window items.
    for (const auto& r : d.matched_rules)
        CHECK(r.matches({"a", "b", "c"}));

    CHECK(detect(MergedDetections{}, rs, sev, wb, q).empty());
}

TEST_CASE("adding events never decreases any group's match count") {
    auto rs = two_group_rules();
    std::mt19937_64 rng(99);
    const std::vector<std::string> universe = {"a", "b", "c", "x", "y", "z"};
    for (int trial = 0; trial < 50; ++trial) {
        std::set<std::string> items;
        for (const auto& i : universe)
            if (rng() % 2) items.insert(i);
        auto base = match_entity(items, rs);
        std::set<std::string> more = items;
        more.insert(universe[rng() % universe.size()]);
        auto extended = match_entity(more, rs);
        for (const auto& [label, count] : base) CHECK(extended[label] >= count);
    }
}

TEST_CASE("default severity ranks the shipped families") {
    auto sev = SeverityOrder::defaults();
    REQUIRE(sev.rank("trojan").has_value());
    REQUIRE(sev.rank("dropper_shlayer").has_value());
    CHECK(*sev.rank("trojan") < *sev.rank("dropper_shlayer"));
    CHECK(sev.ranking.back() == "benign");
}
