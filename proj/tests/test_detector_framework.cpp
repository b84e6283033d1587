#include <doctest.h>

#include "xmodal/detector.hpp"
#include "xmodal/error.hpp"

using namespace xmodal;

namespace {

Dataset proxy_dataset(std::vector<std::pair<Timestamp, std::string>> visits) {
    Dataset ds;
    ds.modality_id = Modality::proxy_log;
    for (auto& [ts, host] : visits) {
        ProxyLogRecord r;
        r.ts = ts;
        r.client_ip = "10.0.0.1";
        r.hostname = host;
        r.url = "https://" + host + "/x";
        r.user_agent = "ua";
        ds.proxy.push_back(std::move(r));
    }
    ds.sort_by_ts();
    return ds;
}

DetectorDescriptor descriptor(const std::string& name, Modality m,
                              std::vector<EventType> types) {
    DetectorDescriptor d;
    d.name = name;
    d.modality_id = m;
    d.emitted_event_types = std::move(types);
    return d;
}

// Emits one "probe_hit" per record whose hostname matches.
DetectorFn host_matcher(const std::string& host, const std::string& event_type) {
    return [host, event_type](const Dataset& ds) {
        std::vector<UnimodalDetection> out;
        for (const auto& r : ds.proxy)
            if (r.hostname == host)
                out.push_back({r.ts, {ModalityEntity::Kind::ip_address, r.client_ip},
                               {event_type, {}}});
        return out;
    };
}

}  // namespace

TEST_CASE("registered detector on an empty dataset yields nothing") {
    DetectorRegistry reg;
    reg.register_detector(
        descriptor("conn_check", Modality::proxy_log, {{"probe_hit", SourceCategory::signature}}),
        host_matcher("probe.example.com", "probe_hit"));
    Dataset empty = proxy_dataset({});
    auto results = reg.run_all({{Modality::proxy_log, &empty}});
    REQUIRE(results.size() == 1);
    CHECK(results[0].detections.empty());
}

TEST_CASE("duplicate detector names are rejected") {
    DetectorRegistry reg;
    auto desc = descriptor("dup", Modality::proxy_log, {{"e", SourceCategory::signature}});
    reg.register_detector(desc, host_matcher("h", "e"));
    try {
        reg.register_detector(desc, host_matcher("h", "e"));
        FAIL("expected duplicate-name error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}

TEST_CASE("same event id with a different category is rejected") {
    DetectorRegistry reg;
    reg.register_detector(descriptor("a", Modality::proxy_log, {{"e", SourceCategory::signature}}),
                          host_matcher("h", "e"));
    CHECK_THROWS_AS(reg.register_detector(
                        descriptor("b", Modality::proxy_log, {{"e", SourceCategory::anomaly}}),
                        host_matcher("h", "e")),
                    Error);
}

TEST_CASE("an undeclared emitted event type is a contract violation naming the type") {
    DetectorRegistry reg;
    reg.register_detector(
        descriptor("liar", Modality::proxy_log, {{"declared", SourceCategory::signature}}),
        host_matcher("probe.example.com", "undeclared_event"));
    Dataset ds = proxy_dataset({{10, "probe.example.com"}});
    try {
        reg.run_all({{Modality::proxy_log, &ds}});
        FAIL("expected contract violation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::contract);
        CHECK(std::string(e.what()).find("undeclared_event") != std::string::npos);
    }
}

TEST_CASE("missing modality dataset lists the missing modalities") {
    DetectorRegistry reg;
    reg.register_detector(descriptor("p", Modality::proxy_log, {{"e", SourceCategory::anomaly}}),
                          host_matcher("h", "e"));
    try {
        reg.run_all({});
        FAIL("expected configuration error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("proxy_log") != std::string::npos);
    }
}

TEST_CASE("a dataset triggering a detector twice yields two detections") {
    DetectorRegistry reg;
    reg.register_detector(
        descriptor("probe", Modality::proxy_log, {{"probe_hit", SourceCategory::signature}}),
        host_matcher("probe.example.com", "probe_hit"));
    Dataset ds = proxy_dataset(
        {{10, "probe.example.com"}, {20, "other.example.com"}, {30, "probe.example.com"}});
    auto results = reg.run_all({{Modality::proxy_log, &ds}});
    REQUIRE(results.size() == 1);
    CHECK(results[0].detections.size() == 2);
}

TEST_CASE("run_all is deterministic and canonically ordered") {
    DetectorRegistry reg;
    reg.register_detector(
        descriptor("zeta", Modality::proxy_log, {{"z", SourceCategory::anomaly}}),
        host_matcher("a.example.com", "z"));
    reg.register_detector(
        descriptor("alpha", Modality::proxy_log, {{"a", SourceCategory::anomaly}}),
        host_matcher("a.example.com", "a"));
    Dataset ds = proxy_dataset({{30, "a.example.com"}, {10, "a.example.com"}});
    auto r1 = reg.run_all({{Modality::proxy_log, &ds}});
    auto r2 = reg.run_all({{Modality::proxy_log, &ds}});
    REQUIRE(r1.size() == 2);
    CHECK(r1[0].detector == "alpha");  // name order
    CHECK(r1[1].detector == "zeta");
    CHECK(r1[0].detections[0].ts == 10);  // ts order within a detector
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].detector == r2[i].detector);
        CHECK(r1[i].detections == r2[i].detections);
    }
}

TEST_CASE("detectors on disjoint modalities are independent") {
    DetectorRegistry reg;
    reg.register_detector(descriptor("p", Modality::proxy_log, {{"pe", SourceCategory::anomaly}}),
                          host_matcher("a.example.com", "pe"));
    reg.register_detector(
        descriptor("ep", Modality::endpoint, {{"ee", SourceCategory::anomaly}}),
        [](const Dataset& ds) {
            std::vector<UnimodalDetection> out;
            for (const auto& r : ds.endpoint)
                out.push_back(
                    {r.ts, {ModalityEntity::Kind::endpoint_id, r.endpoint_id}, {"ee", {}}});
            return out;
        });

    Dataset proxy1 = proxy_dataset({{10, "a.example.com"}});
    Dataset proxy2 = proxy_dataset({{10, "a.example.com"}, {20, "b.example.com"}});
    Dataset ep;
    ep.modality_id = Modality::endpoint;
    ep.endpoint.push_back({7, "E1", EndpointRecordKind::file_create, {}});

    auto r1 = reg.run_all({{Modality::proxy_log, &proxy1}, {Modality::endpoint, &ep}});
    auto r2 = reg.run_all({{Modality::proxy_log, &proxy2}, {Modality::endpoint, &ep}});
    // Changing the proxy dataset leaves the endpoint detector's output alone.
    CHECK(r1[0].detections == r2[0].detections);
    CHECK(r1[0].detector == "ep");
}

TEST_CASE("detection timestamps outside the dataset span are rejected") {
    DetectorRegistry reg;
    reg.register_detector(
        descriptor("oracle_of_future", Modality::proxy_log, {{"e", SourceCategory::anomaly}}),
        [](const Dataset& ds) {
            std::vector<UnimodalDetection> out;
            if (!ds.proxy.empty())
                out.push_back({ds.proxy.back().ts + 999,
                               {ModalityEntity::Kind::ip_address, "10.0.0.1"},
                               {"e", {}}});
            return out;
        });
    Dataset ds = proxy_dataset({{10, "a.example.com"}});
    CHECK_THROWS_AS(reg.run_all({{Modality::proxy_log, &ds}}), Error);
}

TEST_CASE("event dictionary is the union of detector declarations") {
    DetectorRegistry reg;
    reg.register_detector(descriptor("a", Modality::proxy_log,
                                     {{"x", SourceCategory::anomaly},
                                      {"shared", SourceCategory::contextual}}),
                          host_matcher("h", "x"));
    reg.register_detector(descriptor("b", Modality::endpoint,
                                     {{"y", SourceCategory::classifier},
                                      {"shared", SourceCategory::contextual}}),
                          [](const Dataset&) { return std::vector<UnimodalDetection>{}; });
    const auto& dict = reg.event_dictionary();
    CHECK(dict.size() == 3);
    CHECK(dict.count("x") == 1);
    CHECK(dict.count("y") == 1);
    CHECK(dict.count("shared") == 1);
    CHECK(reg.event_dictionary_json().find("\"shared\"") != std::string::npos);
}
