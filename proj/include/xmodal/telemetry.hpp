#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xmodal {

// Epoch seconds, UTC. One global clock is shared by all modalities.
using Timestamp = std::uint64_t;

// floor(ts / quantum); monotone in ts for a fixed quantum.
std::uint64_t bucket(Timestamp ts, std::uint64_t quantum_seconds);

enum class Modality { network_flow, proxy_log, endpoint };

std::string to_string(Modality m);
std::optional<Modality> modality_from_string(const std::string& name);

struct NetworkFlowRecord {
    Timestamp ts = 0;
    std::string client_ip;
    std::string server_ip;
    std::uint64_t bytes = 0;
    std::uint64_t packets = 0;
    double duration = 0.0;  // seconds, >= 0
    std::optional<std::string> server_name;  // URL for HTTP, SNI for HTTPS

    bool operator==(const NetworkFlowRecord&) const = default;
};

struct ProxyLogRecord {
    Timestamp ts = 0;
    std::string client_ip;
    std::string hostname;
    std::string url;
    std::string user_agent;
    std::uint64_t bytes = 0;
    int http_status = 200;

    bool operator==(const ProxyLogRecord&) const = default;
};

enum class EndpointRecordKind {
    file_create,
    binary_execute,
    binary_download,
    file_transfer,
    network_connection,
    script_execute,
};

std::string to_string(EndpointRecordKind k);
std::optional<EndpointRecordKind> endpoint_kind_from_string(const std::string& name);

struct EndpointRecord {
    Timestamp ts = 0;
    std::string endpoint_id;
    EndpointRecordKind record_kind = EndpointRecordKind::file_create;
    // Expected keys depend on record_kind: file_hash, file_type, source_url,
    // remote_ip, remote_port, local_ip, script_name.
    std::map<std::string, std::string> attributes;

    bool operator==(const EndpointRecord&) const = default;

    const std::string* attr(const std::string& key) const;
};

// One modality's records, time-ordered. Only the vector matching
// modality_id is populated; a Dataset is immutable once built.
struct Dataset {
    Modality modality_id = Modality::network_flow;
    std::vector<NetworkFlowRecord> flows;
    std::vector<ProxyLogRecord> proxy;
    std::vector<EndpointRecord> endpoint;

    std::size_t size() const;
    bool empty() const { return size() == 0; }

    // Smallest / largest record timestamp; nullopt when empty.
    std::optional<Timestamp> min_ts() const;
    std::optional<Timestamp> max_ts() const;

    void sort_by_ts();
};

struct ParseStats {
    std::uint64_t valid = 0;
    std::uint64_t malformed = 0;
    std::uint64_t duplicates = 0;

    std::uint64_t input_lines() const { return valid + malformed + duplicates; }
};

struct ParseResult {
    Dataset dataset;
    ParseStats stats;
};

// Parses one JSONL record per line. Malformed lines are dropped and counted,
// exact duplicate lines are dropped and counted, records are sorted by ts
// (stable, so equal timestamps keep input order). Throws Error{io} if the
// stream is unreadable and Error{corrupt_input} if more than half of the
// lines are malformed.
ParseResult parse_dataset(Modality modality, std::istream& in);
ParseResult parse_dataset_file(Modality modality, const std::string& path);

// Canonical single-line JSON serialization (sorted keys). parse of the
// emitted line yields an equivalent record.
std::string to_json_line(const NetworkFlowRecord& r);
std::string to_json_line(const ProxyLogRecord& r);
std::string to_json_line(const EndpointRecord& r);

void write_dataset_file(const Dataset& ds, const std::string& path);

// True when the string parses as an IPv4 or IPv6 literal.
bool is_ip_literal(const std::string& s);

}  // namespace xmodal
