#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xmodal/detector.hpp"
#include "xmodal/telemetry.hpp"

namespace xmodal {

// Stable event type ids emitted by the default detectors.
namespace events {
inline constexpr const char* long_url_first_visit = "long_url_first_visit";
inline constexpr const char* unusual_file_hash = "unusual_file_hash";
inline constexpr const char* unusual_file_type = "unusual_file_type";
inline constexpr const char* rare_user_agent_for_site = "rare_user_agent_for_site";
inline constexpr const char* connection_check = "connection_check";
inline constexpr const char* recurring_rare_site = "recurring_rare_site";
inline constexpr const char* unusual_user_agent_for_user = "unusual_user_agent_for_user";
inline constexpr const char* fingerprinting_tool = "fingerprinting_tool";
inline constexpr const char* unusual_remote_port = "unusual_remote_port";
inline constexpr const char* file_download = "file_download";
inline constexpr const char* raw_ip_access = "raw_ip_access";
inline constexpr const char* suspicious_tld_access = "suspicious_tld_access";
}  // namespace events

enum class BaselineScope { environment, per_entity, per_hostname };
enum class BaselineKeyKind { file_hash, file_type, user_agent, remote_port };

std::string to_string(BaselineScope s);
std::string to_string(BaselineKeyKind k);

// Occurrence counts for one scope instance (the whole environment, one
// entity, or one hostname). Counts come from history strictly before the
// evaluation window; an empty baseline means every key is unseen.
struct FrequencyBaseline {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;

    double frequency(const std::string& key) const;
};

// All baselines of one (scope, key kind) pair, keyed by scope instance.
// Environment scope uses the single instance "".
struct BaselineSet {
    BaselineScope scope = BaselineScope::environment;
    BaselineKeyKind key_kind = BaselineKeyKind::file_hash;
    std::map<std::string, FrequencyBaseline> per_scope;

    const FrequencyBaseline* find(const std::string& scope_key) const;
};

// Builds baselines from records with ts < history_end (no self-counting:
// the evaluation window never feeds its own baseline).
BaselineSet build_frequency_baseline(const Dataset& ds, BaselineScope scope,
                                     BaselineKeyKind key_kind, Timestamp history_end);

// Hostname -> number of distinct client IPs seen before history_end.
std::map<std::string, std::uint64_t> hostname_popularity(const Dataset& proxy_ds,
                                                         Timestamp history_end);

struct SignaturePattern {
    enum class MatchKind { url_regex, hostname_exact, script_name_set };
    std::string name;
    MatchKind match_kind = MatchKind::hostname_exact;
    std::string regex;                   // url_regex only
    std::set<std::string> values;        // hostname_exact / script_name_set
    std::string emitted_event;
};

// --- detection passes -------------------------------------------------
// Every pass walks records in ts order and emits detections only for
// records with ts >= eval_start; earlier records are history.

// Long URL on a hostname not yet visited. `history` seeds the visited set;
// every record's hostname is added as the pass advances.
std::vector<UnimodalDetection> detect_long_url_first_visit(
    const Dataset& proxy_ds, std::size_t min_url_len,
    std::set<std::string> history = {}, Timestamp eval_start = 0);

// Emits `event_type` whenever the record's key frequency in the baseline is
// below rarity_threshold (unseen keys have frequency 0). Throws
// Error{config} when the baseline's key kind cannot be read from ds.
std::vector<UnimodalDetection> detect_rare_key(const Dataset& ds,
                                               const BaselineSet& baseline,
                                               double rarity_threshold,
                                               const std::string& event_type,
                                               Timestamp eval_start = 0);

std::vector<UnimodalDetection> detect_signature(
    const Dataset& ds, const std::vector<SignaturePattern>& patterns,
    Timestamp eval_start = 0);

// One detection per (client_ip, hostname) pair with <= max_clients distinct
// clients (per `popularity`) contacted in >= min_recurrences distinct time
// buckets spanning >= min_span_buckets; fires at the record that completes
// the qualification.
std::vector<UnimodalDetection> detect_recurring_rare_site(
    const Dataset& proxy_ds, const std::map<std::string, std::uint64_t>& popularity,
    std::uint64_t max_clients, std::uint64_t min_recurrences,
    std::uint64_t min_span_buckets, std::uint64_t quantum_seconds,
    Timestamp eval_start = 0);

// Low-significance context: file_download for binary_download records,
// raw_ip_access for proxy/flow records with an absent or literal-IP server
// name.
std::vector<UnimodalDetection> detect_contextual(const Dataset& ds,
                                                 Timestamp eval_start = 0);

// --- default detector wiring ------------------------------------------

struct DetectorParams {
    std::uint64_t quantum_seconds = 300;
    // Environment profile window: baselines, popularity and visit history
    // come from the first warmup_seconds of each dataset; detections are
    // emitted only after it.
    std::uint64_t warmup_seconds = 7 * 86400;
    std::size_t min_url_len = 250;
    double rarity_threshold = 0.01;
    std::uint64_t max_clients = 3;
    std::uint64_t min_recurrences = 3;
    std::uint64_t min_span_buckets = 4;
    std::vector<std::string> connectivity_check_hostnames = {
        "captive.apple.com",
        "connectivitycheck.gstatic.com",
        "www.msftconnecttest.com",
        "detectportal.firefox.com",
    };
    std::vector<std::string> fingerprint_script_names = {
        "system_profiler", "ioreg", "sw_vers", "dmidecode", "wmic",
    };
    std::string suspicious_tld_regex =
        R"(^[a-z]+://[^/]*\.(xyz|top|gdn|click|cam)(:[0-9]+)?(/|$))";
};

// Registers the default signature/anomaly/contextual detectors. When
// `modalities` is given, only detectors of those modalities are registered
// (modality ablation). Classifier-based detectors are not shipped; they
// plug in through DetectorRegistry::register_detector.
void register_default_detectors(DetectorRegistry& registry, const DetectorParams& params,
                                const std::optional<std::set<Modality>>& modalities = std::nullopt);

}  // namespace xmodal
