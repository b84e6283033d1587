#include "xmodal/telemetry.hpp"

#include <algorithm>
#include <arpa/inet.h>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "xmodal/error.hpp"

namespace xmodal {

using nlohmann::json;

std::uint64_t bucket(Timestamp ts, std::uint64_t quantum_seconds) {
    if (quantum_seconds == 0)
        throw Error(ErrorKind::config, "time quantum must be positive");
    return ts / quantum_seconds;
}

std::string to_string(Modality m) {
    switch (m) {
        case Modality::network_flow: return "network_flow";
        case Modality::proxy_log: return "proxy_log";
        case Modality::endpoint: return "endpoint";
    }
    return "unknown";
}

std::optional<Modality> modality_from_string(const std::string& name) {
    if (name == "network_flow") return Modality::network_flow;
    if (name == "proxy_log") return Modality::proxy_log;
    if (name == "endpoint") return Modality::endpoint;
    return std::nullopt;
}

std::string to_string(EndpointRecordKind k) {
    switch (k) {
        case EndpointRecordKind::file_create: return "file_create";
        case EndpointRecordKind::binary_execute: return "binary_execute";
        case EndpointRecordKind::binary_download: return "binary_download";
        case EndpointRecordKind::file_transfer: return "file_transfer";
        case EndpointRecordKind::network_connection: return "network_connection";
        case EndpointRecordKind::script_execute: return "script_execute";
    }
    return "unknown";
}

std::optional<EndpointRecordKind> endpoint_kind_from_string(const std::string& name) {
    if (name == "file_create") return EndpointRecordKind::file_create;
    if (name == "binary_execute") return EndpointRecordKind::binary_execute;
    if (name == "binary_download") return EndpointRecordKind::binary_download;
    if (name == "file_transfer") return EndpointRecordKind::file_transfer;
    if (name == "network_connection") return EndpointRecordKind::network_connection;
    if (name == "script_execute") return EndpointRecordKind::script_execute;
    return std::nullopt;
}

const std::string* EndpointRecord::attr(const std::string& key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? nullptr : &it->second;
}

std::size_t Dataset::size() const {
    switch (modality_id) {
        case Modality::network_flow: return flows.size();
        case Modality::proxy_log: return proxy.size();
        case Modality::endpoint: return endpoint.size();
    }
    return 0;
}

namespace {

template <typename R>
std::optional<Timestamp> min_ts_of(const std::vector<R>& v) {
    if (v.empty()) return std::nullopt;
    return v.front().ts;  // sorted
}

template <typename R>
std::optional<Timestamp> max_ts_of(const std::vector<R>& v) {
    if (v.empty()) return std::nullopt;
    return v.back().ts;
}

}  // namespace

std::optional<Timestamp> Dataset::min_ts() const {
    switch (modality_id) {
        case Modality::network_flow: return min_ts_of(flows);
        case Modality::proxy_log: return min_ts_of(proxy);
        case Modality::endpoint: return min_ts_of(endpoint);
    }
    return std::nullopt;
}

std::optional<Timestamp> Dataset::max_ts() const {
    switch (modality_id) {
        case Modality::network_flow: return max_ts_of(flows);
        case Modality::proxy_log: return max_ts_of(proxy);
        case Modality::endpoint: return max_ts_of(endpoint);
    }
    return std::nullopt;
}

void Dataset::sort_by_ts() {
    auto by_ts = [](const auto& a, const auto& b) { return a.ts < b.ts; };
    std::stable_sort(flows.begin(), flows.end(), by_ts);
    std::stable_sort(proxy.begin(), proxy.end(), by_ts);
    std::stable_sort(endpoint.begin(), endpoint.end(), by_ts);
}

bool is_ip_literal(const std::string& s) {
    unsigned char buf[sizeof(in6_addr)];
    if (inet_pton(AF_INET, s.c_str(), buf) == 1) return true;
    if (inet_pton(AF_INET6, s.c_str(), buf) == 1) return true;
    return false;
}

namespace {

bool get_ts(const json& j, Timestamp& out) {
    auto it = j.find("ts");
    if (it == j.end() || !it->is_number_integer()) return false;
    if (it->is_number_integer() && !it->is_number_unsigned() && it->get<std::int64_t>() < 0)
        return false;
    out = it->get<std::uint64_t>();
    return true;
}

bool get_string(const json& j, const char* key, std::string& out, bool allow_empty = false) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return false;
    out = it->get<std::string>();
    return allow_empty || !out.empty();
}

bool get_u64(const json& j, const char* key, std::uint64_t& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) return false;
    if (!it->is_number_unsigned() && it->get<std::int64_t>() < 0) return false;
    out = it->get<std::uint64_t>();
    return true;
}

// Host part of the URL's authority, ignoring scheme, userinfo and port.
std::string url_host(const std::string& url) {
    std::string rest = url;
    auto scheme = rest.find("://");
    if (scheme != std::string::npos) rest = rest.substr(scheme + 3);
    auto slash = rest.find('/');
    if (slash != std::string::npos) rest = rest.substr(0, slash);
    auto at = rest.rfind('@');
    if (at != std::string::npos) rest = rest.substr(at + 1);
    if (!rest.empty() && rest.front() == '[') {  // bracketed IPv6
        auto close = rest.find(']');
        return close == std::string::npos ? rest : rest.substr(1, close - 1);
    }
    auto colon = rest.find(':');
    if (colon != std::string::npos) rest = rest.substr(0, colon);
    return rest;
}

bool hostname_consistent(const std::string& hostname, const std::string& url) {
    std::string host = url_host(url);
    if (host == hostname) return true;
    if (host.size() > hostname.size() + 1 &&
        host.compare(host.size() - hostname.size() - 1, std::string::npos,
                     "." + hostname) == 0)
        return true;
    return false;
}

// Normalize fractional seconds so a serialize/parse round trip is exact.
double round_duration(double d) {
    return std::round(d * 1e6) / 1e6;
}

bool parse_flow(const json& j, NetworkFlowRecord& r) {
    if (!get_ts(j, r.ts)) return false;
    if (!get_string(j, "client_ip", r.client_ip)) return false;
    if (!get_string(j, "server_ip", r.server_ip)) return false;
    if (!get_u64(j, "bytes", r.bytes)) return false;
    if (!get_u64(j, "packets", r.packets)) return false;
    if (r.packets == 0 && r.bytes != 0) return false;
    auto dur = j.find("duration");
    if (dur == j.end() || !dur->is_number()) return false;
    r.duration = round_duration(dur->get<double>());
    if (r.duration < 0.0) return false;
    auto sn = j.find("server_name");
    if (sn != j.end() && !sn->is_null()) {
        if (!sn->is_string()) return false;
        std::string v = sn->get<std::string>();
        if (!v.empty()) r.server_name = std::move(v);
    }
    return true;
}

bool parse_proxy(const json& j, ProxyLogRecord& r) {
    if (!get_ts(j, r.ts)) return false;
    if (!get_string(j, "client_ip", r.client_ip)) return false;
    if (!get_string(j, "hostname", r.hostname)) return false;
    if (!get_string(j, "url", r.url)) return false;
    if (!get_string(j, "user_agent", r.user_agent, /*allow_empty=*/true)) return false;
    if (!get_u64(j, "bytes", r.bytes)) return false;
    auto st = j.find("http_status");
    if (st == j.end() || !st->is_number_integer()) return false;
    r.http_status = st->get<int>();
    if (r.http_status < 100 || r.http_status > 599) return false;
    if (!hostname_consistent(r.hostname, r.url)) return false;
    return true;
}

bool parse_endpoint(const json& j, EndpointRecord& r) {
    if (!get_ts(j, r.ts)) return false;
    if (!get_string(j, "endpoint_id", r.endpoint_id)) return false;
    std::string kind;
    if (!get_string(j, "record_kind", kind)) return false;
    auto k = endpoint_kind_from_string(kind);
    if (!k) return false;
    r.record_kind = *k;
    auto attrs = j.find("attributes");
    if (attrs != j.end()) {
        if (!attrs->is_object()) return false;
        for (auto it = attrs->begin(); it != attrs->end(); ++it) {
            if (!it.value().is_string()) return false;
            r.attributes[it.key()] = it.value().get<std::string>();
        }
    }
    if (r.record_kind == EndpointRecordKind::network_connection) {
        const std::string* local_ip = r.attr("local_ip");
        const std::string* port = r.attr("remote_port");
        if (!local_ip || !port) return false;
        try {
            std::size_t pos = 0;
            long p = std::stol(*port, &pos);
            if (pos != port->size() || p < 0 || p > 65535) return false;
        } catch (const std::exception&) {
            return false;
        }
    }
    return true;
}

json duration_json(double d) {
    // Emitted as a plain JSON number; value already normalized to <= 6 dp.
    return json(d);
}

}  // namespace

ParseResult parse_dataset(Modality modality, std::istream& in) {
    if (!in.good())
        throw Error(ErrorKind::io, "telemetry stream is not readable");

    ParseResult result;
    result.dataset.modality_id = modality;
    std::unordered_set<std::string> seen_lines;

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;  // blank lines carry no record
        if (!seen_lines.insert(line).second) {
            result.stats.duplicates++;
            continue;
        }
        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        bool ok = j.is_object();
        if (ok) {
            switch (modality) {
                case Modality::network_flow: {
                    NetworkFlowRecord r;
                    if ((ok = parse_flow(j, r))) result.dataset.flows.push_back(std::move(r));
                    break;
                }
                case Modality::proxy_log: {
                    ProxyLogRecord r;
                    if ((ok = parse_proxy(j, r))) result.dataset.proxy.push_back(std::move(r));
                    break;
                }
                case Modality::endpoint: {
                    EndpointRecord r;
                    if ((ok = parse_endpoint(j, r))) result.dataset.endpoint.push_back(std::move(r));
                    break;
                }
            }
        }
        if (ok)
            result.stats.valid++;
        else
            result.stats.malformed++;
    }
    if (in.bad())
        throw Error(ErrorKind::io, "telemetry stream failed mid-read");

    if (result.stats.malformed * 2 > result.stats.input_lines()) {
        std::ostringstream msg;
        msg << "corrupt input: " << result.stats.malformed << " of "
            << result.stats.input_lines() << " lines malformed";
        throw Error(ErrorKind::corrupt_input, msg.str());
    }

    result.dataset.sort_by_ts();
    return result;
}

ParseResult parse_dataset_file(Modality modality, const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "cannot open telemetry file: " + path);
    return parse_dataset(modality, in);
}

std::string to_json_line(const NetworkFlowRecord& r) {
    json j;
    j["ts"] = r.ts;
    j["client_ip"] = r.client_ip;
    j["server_ip"] = r.server_ip;
    j["bytes"] = r.bytes;
    j["packets"] = r.packets;
    j["duration"] = duration_json(r.duration);
    if (r.server_name) j["server_name"] = *r.server_name;
    return j.dump();
}

std::string to_json_line(const ProxyLogRecord& r) {
    json j;
    j["ts"] = r.ts;
    j["client_ip"] = r.client_ip;
    j["hostname"] = r.hostname;
    j["url"] = r.url;
    j["user_agent"] = r.user_agent;
    j["bytes"] = r.bytes;
    j["http_status"] = r.http_status;
    return j.dump();
}

std::string to_json_line(const EndpointRecord& r) {
    json j;
    j["ts"] = r.ts;
    j["endpoint_id"] = r.endpoint_id;
    j["record_kind"] = to_string(r.record_kind);
    j["attributes"] = json::object();
    for (const auto& [k, v] : r.attributes) j["attributes"][k] = v;
    return j.dump();
}

void write_dataset_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::io, "cannot open output file: " + path);
    switch (ds.modality_id) {
        case Modality::network_flow:
            for (const auto& r : ds.flows) out << to_json_line(r) << '\n';
            break;
        case Modality::proxy_log:
            for (const auto& r : ds.proxy) out << to_json_line(r) << '\n';
            break;
        case Modality::endpoint:
            for (const auto& r : ds.endpoint) out << to_json_line(r) << '\n';
            break;
    }
    if (!out)
        throw Error(ErrorKind::io, "write failed: " + path);
}

}  // namespace xmodal
