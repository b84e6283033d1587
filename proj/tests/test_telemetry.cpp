#include <doctest.h>

#include <sstream>

#include "xmodal/error.hpp"
#include "xmodal/telemetry.hpp"

using namespace xmodal;

namespace {

std::string proxy_line(Timestamp ts, const std::string& host, const std::string& tag) {
    ProxyLogRecord r;
    r.ts = ts;
    r.client_ip = "10.0.0.1";
    r.hostname = host;
    r.url = "https://" + host + "/" + tag;
    r.user_agent = "ua";
    r.bytes = 10;
    r.http_status = 200;
    return to_json_line(r);
}

}  // namespace

TEST_CASE("bucket quantizes and is monotone") {
    CHECK(bucket(0, 300) == 0);
    CHECK(bucket(299, 300) == 0);
    CHECK(bucket(300, 300) == 1);
    CHECK_THROWS_AS(bucket(5, 0), Error);

    Timestamp prev = 0;
    for (Timestamp ts : {0ULL, 1ULL, 299ULL, 300ULL, 301ULL, 100000ULL}) {
        CHECK(bucket(ts, 300) >= bucket(prev, 300));
        prev = ts;
    }
}

TEST_CASE("empty stream parses to an empty dataset") {
    std::istringstream in("");
    auto result = parse_dataset(Modality::proxy_log, in);
    CHECK(result.dataset.size() == 0);
    CHECK(result.stats.valid == 0);
    CHECK(result.stats.malformed == 0);
}

TEST_CASE("records are sorted by ts") {
    std::ostringstream buf;
    buf << proxy_line(30, "a.example.com", "x") << "\n"
        << proxy_line(10, "b.example.com", "y") << "\n"
        << proxy_line(20, "c.example.com", "z") << "\n";
    std::istringstream in(buf.str());
    auto result = parse_dataset(Modality::proxy_log, in);
    REQUIRE(result.dataset.proxy.size() == 3);
    CHECK(result.dataset.proxy[0].ts == 10);
    CHECK(result.dataset.proxy[1].ts == 20);
    CHECK(result.dataset.proxy[2].ts == 30);
}

TEST_CASE("a line missing endpoint_id is dropped and counted") {
    std::ostringstream buf;
    EndpointRecord r;
    r.ts = 5;
    r.endpoint_id = "E1";
    r.record_kind = EndpointRecordKind::file_create;
    r.attributes["file_hash"] = "h";
    buf << to_json_line(r) << "\n";
    r.ts = 6;
    buf << to_json_line(r) << "\n";
    r.ts = 7;
    buf << to_json_line(r) << "\n";
    buf << R"({"ts":8,"record_kind":"file_create","attributes":{}})" << "\n";
    std::istringstream in(buf.str());
    auto result = parse_dataset(Modality::endpoint, in);
    CHECK(result.dataset.endpoint.size() == 3);
    CHECK(result.stats.malformed == 1);
}

TEST_CASE("duplicate identical lines are removed and counted") {
    const std::string line = proxy_line(10, "a.example.com", "x");
    std::istringstream in(line + "\n" + line + "\n" + proxy_line(11, "b.example.com", "y") + "\n");
    auto result = parse_dataset(Modality::proxy_log, in);
    CHECK(result.dataset.proxy.size() == 2);
    CHECK(result.stats.duplicates == 1);
    CHECK(result.stats.valid == 2);
}

TEST_CASE("line accounting: valid + malformed + duplicates = input lines") {
    std::ostringstream buf;
    buf << proxy_line(1, "a.example.com", "1") << "\n";
    buf << "not json\n";
    buf << proxy_line(1, "a.example.com", "1") << "\n";  // duplicate
    buf << proxy_line(2, "b.example.com", "2") << "\n";
    buf << R"({"ts":-4})" << "\n";
    std::istringstream in(buf.str());
    auto result = parse_dataset(Modality::proxy_log, in);
    CHECK(result.stats.valid == 2);
    CHECK(result.stats.malformed == 2);
    CHECK(result.stats.duplicates == 1);
    CHECK(result.stats.input_lines() == 5);
}

TEST_CASE("more than half malformed lines raise corrupt-input") {
    std::istringstream in("garbage1\ngarbage2\n" + proxy_line(1, "a.example.com", "x") + "\n");
    try {
        parse_dataset(Modality::proxy_log, in);
        FAIL("expected corrupt-input");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::corrupt_input);
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("flow invariants: packets = 0 forces bytes = 0") {
    std::istringstream bad(
        R"({"ts":1,"client_ip":"10.0.0.1","server_ip":"1.2.3.4","bytes":10,"packets":0,"duration":0})"
        "\n");
    CHECK_THROWS_AS(parse_dataset(Modality::network_flow, bad), Error);  // 1/1 malformed

    std::istringstream ok(
        R"({"ts":1,"client_ip":"10.0.0.1","server_ip":"1.2.3.4","bytes":0,"packets":0,"duration":0})"
        "\n");
    auto result = parse_dataset(Modality::network_flow, ok);
    CHECK(result.dataset.flows.size() == 1);
}

TEST_CASE("proxy invariants: status range and hostname/url consistency") {
    std::istringstream bad_status(
        R"({"ts":1,"client_ip":"10.0.0.1","hostname":"a.com","url":"https://a.com/","user_agent":"u","bytes":1,"http_status":99})"
        "\n");
    CHECK_THROWS_AS(parse_dataset(Modality::proxy_log, bad_status), Error);

    std::istringstream inconsistent(
        R"({"ts":1,"client_ip":"10.0.0.1","hostname":"b.com","url":"https://a.com/","user_agent":"u","bytes":1,"http_status":200})"
        "\n");
    CHECK_THROWS_AS(parse_dataset(Modality::proxy_log, inconsistent), Error);

    // Subdomain authority is suffix-consistent with the hostname.
    std::istringstream subdomain(
        R"({"ts":1,"client_ip":"10.0.0.1","hostname":"a.com","url":"https://cdn.a.com/x","user_agent":"u","bytes":1,"http_status":200})"
        "\n");
    CHECK(parse_dataset(Modality::proxy_log, subdomain).dataset.proxy.size() == 1);
}

TEST_CASE("network_connection records need local_ip and a valid remote_port") {
    std::istringstream missing(
        R"({"ts":1,"endpoint_id":"E1","record_kind":"network_connection","attributes":{"remote_port":"443"}})"
        "\n");
    CHECK_THROWS_AS(parse_dataset(Modality::endpoint, missing), Error);

    std::istringstream bad_port(
        R"({"ts":1,"endpoint_id":"E1","record_kind":"network_connection","attributes":{"local_ip":"10.0.0.1","remote_port":"70000"}})"
        "\n");
    CHECK_THROWS_AS(parse_dataset(Modality::endpoint, bad_port), Error);
}

TEST_CASE("parse is deterministic and records round-trip") {
    std::ostringstream buf;
    for (int i = 0; i < 20; ++i)
        buf << proxy_line(100 - i, "h" + std::to_string(i) + ".com", "t") << "\n";
    const std::string text = buf.str();

    std::istringstream in1(text), in2(text);
    auto r1 = parse_dataset(Modality::proxy_log, in1);
    auto r2 = parse_dataset(Modality::proxy_log, in2);
    CHECK(r1.dataset.proxy == r2.dataset.proxy);

    for (const auto& rec : r1.dataset.proxy) {
        std::istringstream rt(to_json_line(rec) + "\n");
        auto back = parse_dataset(Modality::proxy_log, rt);
        REQUIRE(back.dataset.proxy.size() == 1);
        CHECK(back.dataset.proxy[0] == rec);
    }
}

TEST_CASE("flow round-trip preserves optional server_name and duration") {
    NetworkFlowRecord r;
    r.ts = 42;
    r.client_ip = "10.1.2.3";
    r.server_ip = "198.51.100.7";
    r.bytes = 1234;
    r.packets = 5;
    r.duration = 1.25;
    SUBCASE("with server_name") { r.server_name = "sni.example.com"; }
    SUBCASE("without server_name") {}
    std::istringstream rt(to_json_line(r) + "\n");
    auto back = parse_dataset(Modality::network_flow, rt);
    REQUIRE(back.dataset.flows.size() == 1);
    CHECK(back.dataset.flows[0] == r);
}

TEST_CASE("ip literal detection") {
    CHECK(is_ip_literal("93.184.216.34"));
    CHECK(is_ip_literal("::1"));
    CHECK(is_ip_literal("2001:db8::7"));
    CHECK(!is_ip_literal("example.com"));
    CHECK(!is_ip_literal("10.0.0"));
}
