#include <doctest.h>

#include <algorithm>
#include <random>

#include "xmodal/detectors.hpp"
#include "xmodal/error.hpp"

using namespace xmodal;

namespace {

ProxyLogRecord visit(Timestamp ts, const std::string& host, const std::string& ua,
                     std::size_t url_len = 20, const std::string& client = "10.0.0.1") {
    ProxyLogRecord r;
    r.ts = ts;
    r.client_ip = client;
    r.hostname = host;
    std::string path(url_len > host.size() + 9 ? url_len - host.size() - 9 : 1, 'q');
    r.url = "https://" + host + "/" + path;
    r.user_agent = ua;
    return r;
}

Dataset proxy_ds(std::vector<ProxyLogRecord> records) {
    Dataset ds;
    ds.modality_id = Modality::proxy_log;
    ds.proxy = std::move(records);
    ds.sort_by_ts();
    return ds;
}

EndpointRecord ep_record(Timestamp ts, const std::string& id, EndpointRecordKind kind,
                         std::map<std::string, std::string> attrs) {
    return {ts, id, kind, std::move(attrs)};
}

Dataset endpoint_ds(std::vector<EndpointRecord> records) {
    Dataset ds;
    ds.modality_id = Modality::endpoint;
    ds.endpoint = std::move(records);
    ds.sort_by_ts();
    return ds;
}

}  // namespace

TEST_CASE("long unseen URL fires, known or short ones do not") {
    auto ds = proxy_ds({visit(10, "fresh.example.net", "ua", 400)});
    auto hits = detect_long_url_first_visit(ds, 250);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].event.event_type == events::long_url_first_visit);
    CHECK(hits[0].event.metadata.at("hostname") == "fresh.example.net");

    // Same hostname visited earlier in the pass: the later record is not a
    // first visit.
    auto ds2 = proxy_ds({visit(5, "fresh.example.net", "ua", 20),
                         visit(10, "fresh.example.net", "ua", 400)});
    CHECK(detect_long_url_first_visit(ds2, 250).empty());

    // Short URL on an unseen hostname.
    auto ds3 = proxy_ds({visit(10, "fresh.example.net", "ua", 10)});
    CHECK(detect_long_url_first_visit(ds3, 250).empty());
}

TEST_CASE("pre-seeded history suppresses first-visit detections") {
    auto ds = proxy_ds({visit(10, "seen.example.net", "ua", 400)});
    CHECK(detect_long_url_first_visit(ds, 250, {"seen.example.net"}).empty());
}

TEST_CASE("duplicating an early visit never adds later detections") {
    std::vector<ProxyLogRecord> base = {visit(5, "h1.example.net", "ua", 300),
                                        visit(10, "h2.example.net", "ua", 300),
                                        visit(20, "h1.example.net", "ua", 300)};
    auto without = detect_long_url_first_visit(proxy_ds(base), 250);
    auto duplicated = base;
    duplicated.push_back(visit(5, "h1.example.net", "ua", 300));
    auto with = detect_long_url_first_visit(proxy_ds(duplicated), 250);
    CHECK(with.size() <= without.size() + 1);  // the duplicate itself is not first
    // Later detections unchanged: h1 at ts=20 fires in neither.
    for (const auto& d : with) CHECK(d.ts != 20);
}

TEST_CASE("unseen key over a large baseline is rare with frequency 0") {
    BaselineSet set;
    set.scope = BaselineScope::environment;
    set.key_kind = BaselineKeyKind::file_hash;
    FrequencyBaseline& b = set.per_scope[""];
    for (int i = 0; i < 1000; ++i) b.counts["common" + std::to_string(i % 10)]++;
    b.total = 1000;

    auto ds = endpoint_ds({ep_record(1, "E1", EndpointRecordKind::file_create,
                                     {{"file_hash", "neverseen"}, {"file_type", "exe"}})});
    auto hits = detect_rare_key(ds, set, 0.01, events::unusual_file_hash);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].event.metadata.at("frequency") == "0");
    CHECK(hits[0].event.metadata.at("key") == "neverseen");
}

TEST_CASE("a frequent key is not rare") {
    BaselineSet set;
    set.scope = BaselineScope::environment;
    set.key_kind = BaselineKeyKind::file_hash;
    set.per_scope[""].counts["h"] = 500;
    set.per_scope[""].total = 1000;
    auto ds = endpoint_ds({ep_record(1, "E1", EndpointRecordKind::file_create,
                                     {{"file_hash", "h"}})});
    CHECK(detect_rare_key(ds, set, 0.01, events::unusual_file_hash).empty());
}

TEST_CASE("baseline {a:1,b:99} with threshold 0.05 flags a") {
    BaselineSet set;
    set.scope = BaselineScope::environment;
    set.key_kind = BaselineKeyKind::file_hash;
    set.per_scope[""].counts["a"] = 1;
    set.per_scope[""].counts["b"] = 99;
    set.per_scope[""].total = 100;
    auto ds = endpoint_ds({ep_record(1, "E1", EndpointRecordKind::file_create,
                                     {{"file_hash", "a"}})});
    auto hits = detect_rare_key(ds, set, 0.05, events::unusual_file_hash);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].event.metadata.at("frequency") == "0.01");
}

TEST_CASE("key kind mismatched with the modality is a configuration error") {
    BaselineSet set;
    set.scope = BaselineScope::environment;
    set.key_kind = BaselineKeyKind::remote_port;
    auto ds = proxy_ds({visit(1, "a.example.com", "ua")});
    CHECK_THROWS_AS(detect_rare_key(ds, set, 0.01, events::unusual_remote_port), Error);
}

TEST_CASE("lowering the rarity threshold never adds detections") {
    BaselineSet set;
    set.scope = BaselineScope::environment;
    set.key_kind = BaselineKeyKind::file_type;
    auto& b = set.per_scope[""];
    b.counts = {{"exe", 50}, {"pdf", 30}, {"xz", 2}, {"jar", 1}};
    for (const auto& [k, v] : b.counts) b.total += v;

    std::vector<EndpointRecord> records;
    int i = 0;
    for (const std::string t : {"exe", "pdf", "xz", "jar", "new"})
        records.push_back(ep_record(++i, "E1", EndpointRecordKind::file_create,
                                    {{"file_hash", "h"}, {"file_type", t}}));
    auto ds = endpoint_ds(std::move(records));

    std::size_t prev = detect_rare_key(ds, set, 0.5, events::unusual_file_type).size();
    for (double thr : {0.1, 0.05, 0.02, 0.005}) {
        std::size_t n = detect_rare_key(ds, set, thr, events::unusual_file_type).size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("baselines built before the window never self-count") {
    // Records at ts >= 100 are the evaluation window; removing them from the
    // baseline-building input must not change detections.
    std::vector<EndpointRecord> history;
    for (int i = 0; i < 20; ++i)
        history.push_back(ep_record(i, "E1", EndpointRecordKind::file_create,
                                    {{"file_hash", "common"}}));
    std::vector<EndpointRecord> window = {
        ep_record(100, "E1", EndpointRecordKind::file_create, {{"file_hash", "common"}}),
        ep_record(101, "E1", EndpointRecordKind::file_create, {{"file_hash", "fresh"}}),
    };

    auto all = history;
    all.insert(all.end(), window.begin(), window.end());
    auto full_ds = endpoint_ds(all);
    auto history_ds = endpoint_ds(history);

    auto b_full = build_frequency_baseline(full_ds, BaselineScope::environment,
                                           BaselineKeyKind::file_hash, 100);
    auto b_hist = build_frequency_baseline(history_ds, BaselineScope::environment,
                                           BaselineKeyKind::file_hash, 100);
    CHECK(b_full.per_scope.at("").counts == b_hist.per_scope.at("").counts);

    auto d_full = detect_rare_key(full_ds, b_full, 0.01, events::unusual_file_hash, 100);
    auto d_hist = detect_rare_key(full_ds, b_hist, 0.01, events::unusual_file_hash, 100);
    CHECK(d_full == d_hist);
    REQUIRE(d_full.size() == 1);
    CHECK(d_full[0].event.metadata.at("key") == "fresh");
}

TEST_CASE("signature patterns: probe host and fingerprint script") {
    SignaturePattern probe;
    probe.name = "probe";
    probe.match_kind = SignaturePattern::MatchKind::hostname_exact;
    probe.values = {"captive.apple.com"};
    probe.emitted_event = events::connection_check;

    auto ds = proxy_ds({visit(10, "captive.apple.com", "ua"), visit(20, "other.example.com", "ua")});
    auto hits = detect_signature(ds, {probe});
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].event.event_type == events::connection_check);

    SignaturePattern fp;
    fp.name = "fp";
    fp.match_kind = SignaturePattern::MatchKind::script_name_set;
    fp.values = {"system_profiler"};
    fp.emitted_event = events::fingerprinting_tool;
    auto eds = endpoint_ds({ep_record(5, "E1", EndpointRecordKind::script_execute,
                                      {{"script_name", "system_profiler"}}),
                            ep_record(6, "E1", EndpointRecordKind::script_execute,
                                      {{"script_name", "backup.sh"}})});
    auto ep_hits = detect_signature(eds, {fp});
    REQUIRE(ep_hits.size() == 1);
    CHECK(ep_hits[0].event.event_type == events::fingerprinting_tool);

    // No pattern matches -> empty.
    auto none = detect_signature(proxy_ds({visit(1, "benign.example.com", "ua")}), {probe});
    CHECK(none.empty());
}

TEST_CASE("invalid signature regex is a configuration error") {
    SignaturePattern bad;
    bad.name = "broken";
    bad.match_kind = SignaturePattern::MatchKind::url_regex;
    bad.regex = "([unclosed";
    bad.emitted_event = "x";
    auto ds = proxy_ds({visit(1, "a.example.com", "ua")});
    CHECK_THROWS_AS(detect_signature(ds, {bad}), Error);
}

TEST_CASE("signature detection is order-independent") {
    SignaturePattern probe;
    probe.name = "probe";
    probe.match_kind = SignaturePattern::MatchKind::hostname_exact;
    probe.values = {"p.example.com"};
    probe.emitted_event = events::connection_check;

    std::vector<ProxyLogRecord> records;
    for (int i = 0; i < 12; ++i)
        records.push_back(visit(100 + i, i % 3 == 0 ? "p.example.com" : "x.example.com", "ua"));
    auto sorted_hits = detect_signature(proxy_ds(records), {probe});

    std::mt19937 shuffle_rng(7);
    std::shuffle(records.begin(), records.end(), shuffle_rng);
    auto shuffled_hits = detect_signature(proxy_ds(records), {probe});

    auto key = [](const UnimodalDetection& d) { return std::make_pair(d.ts, d.entity.value); };
    std::vector<std::pair<Timestamp, std::string>> a, b;
    for (const auto& d : sorted_hits) a.push_back(key(d));
    for (const auto& d : shuffled_hits) b.push_back(key(d));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("recurring rare site: buckets {1,5,9} with span >= 4 fire once") {
    const std::uint64_t q = 300;
    auto ds = proxy_ds({visit(1 * q, "rare.example.net", "ua"), visit(5 * q, "rare.example.net", "ua"),
                        visit(9 * q, "rare.example.net", "ua")});
    std::map<std::string, std::uint64_t> popularity{{"rare.example.net", 1}};
    auto hits = detect_recurring_rare_site(ds, popularity, 3, 3, 4, q);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].ts == 9 * q);  // fires at the qualifying record
    CHECK(hits[0].event.metadata.at("hostname") == "rare.example.net");
}

TEST_CASE("popular sites and one-off contacts do not recur") {
    const std::uint64_t q = 300;
    auto ds = proxy_ds({visit(1 * q, "popular.example.com", "ua"),
                        visit(5 * q, "popular.example.com", "ua"),
                        visit(9 * q, "popular.example.com", "ua"),
                        visit(2 * q, "single.example.net", "ua")});
    std::map<std::string, std::uint64_t> popularity{{"popular.example.com", 500},
                                                    {"single.example.net", 1}};
    CHECK(detect_recurring_rare_site(ds, popularity, 3, 3, 4, q).empty());
}

TEST_CASE("contextual events: downloads and raw IP access") {
    auto eds = endpoint_ds({ep_record(5, "E1", EndpointRecordKind::binary_download,
                                      {{"file_hash", "h"},
                                       {"file_type", "dmg"},
                                       {"source_url", "https://dl.example.com/x"}})});
    auto down = detect_contextual(eds);
    REQUIRE(down.size() == 1);
    CHECK(down[0].event.event_type == events::file_download);
    CHECK(down[0].event.metadata.at("source_url") == "https://dl.example.com/x");

    ProxyLogRecord ip_visit;
    ip_visit.ts = 7;
    ip_visit.client_ip = "10.0.0.2";
    ip_visit.hostname = "93.184.216.34";
    ip_visit.url = "http://93.184.216.34/payload";
    ip_visit.user_agent = "ua";
    auto pds = proxy_ds({ip_visit, visit(8, "example.com", "ua")});
    auto raw = detect_contextual(pds);
    REQUIRE(raw.size() == 1);
    CHECK(raw[0].event.event_type == events::raw_ip_access);
    CHECK(raw[0].ts == 7);

    Dataset fds;
    fds.modality_id = Modality::network_flow;
    NetworkFlowRecord f1;
    f1.ts = 1;
    f1.client_ip = "10.0.0.3";
    f1.server_ip = "198.51.100.9";
    f1.packets = 2;
    f1.bytes = 100;
    NetworkFlowRecord f2 = f1;
    f2.ts = 2;
    f2.server_name = "named.example.com";
    fds.flows = {f1, f2};
    auto flow_raw = detect_contextual(fds);
    REQUIRE(flow_raw.size() == 1);  // only the SNI-less flow
    CHECK(flow_raw[0].ts == 1);
}

TEST_CASE("default detector registration covers the event dictionary") {
    DetectorRegistry reg;
    register_default_detectors(reg, DetectorParams{});
    const auto& dict = reg.event_dictionary();
    for (const char* id :
         {events::long_url_first_visit, events::unusual_file_hash, events::unusual_file_type,
          events::rare_user_agent_for_site, events::connection_check, events::recurring_rare_site,
          events::unusual_user_agent_for_user, events::fingerprinting_tool,
          events::unusual_remote_port, events::file_download, events::raw_ip_access,
          events::suspicious_tld_access})
        CHECK(dict.count(id) == 1);

    DetectorRegistry network_only;
    register_default_detectors(network_only, DetectorParams{},
                               std::set<Modality>{Modality::proxy_log, Modality::network_flow});
    CHECK(network_only.event_dictionary().count(events::unusual_file_hash) == 0);
    CHECK(network_only.event_dictionary().count(events::long_url_first_visit) == 1);
}
