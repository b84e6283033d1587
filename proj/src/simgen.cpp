#include "xmodal/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "xmodal/error.hpp"
#include "xmodal/io.hpp"

namespace xmodal {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDay = 86400;

// Consistent with the default DetectorParams lists.
constexpr const char* kProbeHost = "captive.apple.com";
constexpr const char* kUpdateHost = "swupdates.vendorsoft.example.com";

const std::vector<std::string>& browser_uas() {
    static const std::vector<std::string> uas = {
        "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_15_7) AppleWebKit/605.1.15 Safari/605.1.15",
        "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 Chrome/120.0 Safari/537.36",
        "Mozilla/5.0 (Windows NT 10.0; Win64; x64; rv:121.0) Gecko/20100101 Firefox/121.0",
        "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_15_7) AppleWebKit/537.36 Chrome/119.0 Safari/537.36",
        "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 Chrome/120.0 Safari/537.36",
        "Mozilla/5.0 (iPhone; CPU iPhone OS 17_1 like Mac OS X) AppleWebKit/605.1.15 Mobile/15E148",
        "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 Edg/120.0.0.0",
        "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_15_7) Version/17.1 Safari/605.1.15",
    };
    return uas;
}

const std::vector<std::string>& common_hashes() {
    static std::vector<std::string> hashes = [] {
        std::vector<std::string> v;
        for (int i = 0; i < 30; ++i) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "b%02d%08x%08x", i, 0x5f3a9c00 + i * 7919,
                          0x11d0a100 + i * 104729);
            v.emplace_back(buf);
        }
        return v;
    }();
    return hashes;
}

const std::vector<std::string>& common_file_types() {
    static const std::vector<std::string> types = {"exe", "dll", "pdf", "docx",
                                                   "png", "zip", "dmg", "txt"};
    return types;
}

const std::vector<std::string>& rare_file_types() {
    static const std::vector<std::string> types = {"xz", "bz2", "jar", "cab", "scr"};
    return types;
}

const std::vector<std::string>& benign_scripts() {
    static const std::vector<std::string> scripts = {"backup.sh", "sync_tool",
                                                     "update_checker", "inventory_agent"};
    return scripts;
}

const std::vector<std::string>& fingerprint_scripts() {
    static const std::vector<std::string> scripts = {"system_profiler", "ioreg", "sw_vers"};
    return scripts;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic helpers; std distributions are avoided because their
// algorithms are implementation-defined.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(std::uint64_t seed) : gen(seed) {}

    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen() % n; }
    double unit() { return std::ldexp(static_cast<double>(gen() >> 11), -53); }
    bool chance(double p) { return unit() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

    std::string token(std::size_t len) {
        static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
        std::string s;
        s.reserve(len);
        for (std::size_t i = 0; i < len; ++i) s += alphabet[below(36)];
        return s;
    }
};

Rng entity_rng(std::uint64_t seed, std::uint64_t entity, std::uint64_t stream) {
    return Rng(splitmix64(seed ^ splitmix64(entity * 2654435761ULL + stream)));
}

struct Builder {
    const SimConfig& cfg;
    std::vector<NetworkFlowRecord> flows;
    std::vector<ProxyLogRecord> proxy;
    std::vector<EndpointRecord> endpoint;
    // First network_connection timestamp per (entity, day); conflict
    // injection picks its victims from here.
    std::vector<std::vector<std::optional<Timestamp>>> first_conn;
    std::vector<std::string> popular;
    std::vector<std::string> tail;
    std::vector<double> popular_cdf;
    std::vector<std::string> server_ips;

    explicit Builder(const SimConfig& c) : cfg(c) {
        first_conn.assign(c.n_entities, std::vector<std::optional<Timestamp>>(c.days));
        popular.push_back(kUpdateHost);
        for (std::uint32_t i = 1; i < c.benign.popular_hosts; ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "www.portal%02u.example.com", i);
            popular.emplace_back(buf);
        }
        for (std::uint32_t i = 0; i < c.benign.tail_hosts; ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "site%04u.tail.example.net", i);
            tail.emplace_back(buf);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < popular.size(); ++i) {
            acc += 1.0 / static_cast<double>(i + 1);
            popular_cdf.push_back(acc);
        }
        for (double& v : popular_cdf) v /= acc;
        for (int i = 0; i < 32; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "198.51.100.%d", i + 1);
            server_ips.emplace_back(buf);
        }
    }

    const std::string& zipf_popular(Rng& rng) {
        const double r = rng.unit();
        auto it = std::lower_bound(popular_cdf.begin(), popular_cdf.end(), r);
        std::size_t idx = static_cast<std::size_t>(it - popular_cdf.begin());
        if (idx >= popular.size()) idx = popular.size() - 1;
        return popular[idx];
    }

    std::uint64_t day_of(Timestamp ts) const { return (ts - cfg.start_ts) / kDay; }

    void note_conn(std::uint64_t entity, Timestamp ts) {
        const std::uint64_t d = day_of(ts);
        if (d < cfg.days && !first_conn[entity][d]) first_conn[entity][d] = ts;
    }

    void add_conn(std::uint64_t entity, Timestamp ts, const std::string& port,
                  const std::string& remote_ip) {
        EndpointRecord r;
        r.ts = ts;
        r.endpoint_id = entity_name(entity);
        r.record_kind = EndpointRecordKind::network_connection;
        r.attributes["local_ip"] = entity_ip(entity);
        r.attributes["remote_ip"] = remote_ip;
        r.attributes["remote_port"] = port;
        endpoint.push_back(std::move(r));
        note_conn(entity, ts);
    }

    // Every proxied request leaves a matching endpoint connection record in
    // the same instant, which is what keeps the IP map resolvable at the
    // detection's bucket.
    void add_proxy(std::uint64_t entity, Timestamp ts, const std::string& host,
                   const std::string& url, const std::string& ua, Rng& rng) {
        ProxyLogRecord r;
        r.ts = ts;
        r.client_ip = entity_ip(entity);
        r.hostname = host;
        r.url = url;
        r.user_agent = ua;
        r.bytes = 200 + rng.below(50000);
        r.http_status = rng.chance(0.05) ? 404 : 200;
        proxy.push_back(std::move(r));
        add_conn(entity, ts, "443", rng.pick(server_ips));
    }

    void add_flow(std::uint64_t entity, Timestamp ts, bool with_sni, Rng& rng) {
        NetworkFlowRecord r;
        r.ts = ts;
        r.client_ip = entity_ip(entity);
        r.server_ip = rng.pick(server_ips);
        r.packets = 2 + rng.below(400);
        r.bytes = r.packets * (60 + rng.below(1200));
        r.duration = static_cast<double>(rng.below(120000)) / 1000.0;
        if (with_sni) r.server_name = zipf_popular(rng);
        const std::string server_ip = r.server_ip;
        flows.push_back(std::move(r));
        add_conn(entity, ts, "443", server_ip);
    }

    void add_file_record(std::uint64_t entity, Timestamp ts, EndpointRecordKind kind,
                         const std::string& hash, const std::string& type,
                         const std::string& source_url = "") {
        EndpointRecord r;
        r.ts = ts;
        r.endpoint_id = entity_name(entity);
        r.record_kind = kind;
        r.attributes["file_hash"] = hash;
        r.attributes["file_type"] = type;
        if (!source_url.empty()) r.attributes["source_url"] = source_url;
        endpoint.push_back(std::move(r));
    }

    void add_script(std::uint64_t entity, Timestamp ts, const std::string& name) {
        EndpointRecord r;
        r.ts = ts;
        r.endpoint_id = entity_name(entity);
        r.record_kind = EndpointRecordKind::script_execute;
        r.attributes["script_name"] = name;
        endpoint.push_back(std::move(r));
    }

    std::string short_url(const std::string& host, Rng& rng) {
        return "https://" + host + "/" + rng.token(8);
    }

    std::string long_url(const std::string& host, Rng& rng) {
        return "https://" + host + "/update/" + rng.token(160) + "?session=" + rng.token(120);
    }

    const std::string& primary_ua(std::uint64_t entity) const {
        return browser_uas()[splitmix64(cfg.seed ^ (entity + 17)) % browser_uas().size()];
    }

    // ---- benign day content -------------------------------------------

    void benign_base_day(std::uint64_t entity, std::uint64_t day, Rng& rng) {
        const Timestamp day_start = cfg.start_ts + day * kDay;
        const bool profiling = day < cfg.warmup_days;
        auto count_of = [&](double rate) {
            std::uint64_t n = static_cast<std::uint64_t>(rate);
            if (rng.chance(rate - static_cast<double>(n))) n++;
            return n;
        };

        const std::uint64_t n_proxy = count_of(cfg.benign.proxy_per_day);
        for (std::uint64_t i = 0; i < n_proxy; ++i) {
            const Timestamp ts = day_start + rng.below(kDay);
            const bool tail_visit = profiling && !tail.empty() && rng.chance(0.3);
            const std::string& host =
                tail_visit ? tail[rng.below(tail.size())] : zipf_popular(rng);
            add_proxy(entity, ts, host, short_url(host, rng), primary_ua(entity), rng);
        }

        const std::uint64_t n_flows = count_of(cfg.benign.flows_per_day);
        for (std::uint64_t i = 0; i < n_flows; ++i)
            add_flow(entity, day_start + rng.below(kDay),
                     !rng.chance(cfg.benign.flow_no_sni_prob), rng);

        const std::uint64_t n_ep = count_of(cfg.benign.endpoint_per_day);
        for (std::uint64_t i = 0; i < n_ep; ++i) {
            const Timestamp ts = day_start + rng.below(kDay);
            const double r = rng.unit();
            if (r < 0.4)
                add_file_record(entity, ts, EndpointRecordKind::file_create,
                                rng.pick(common_hashes()), rng.pick(common_file_types()));
            else if (r < 0.8)
                add_file_record(entity, ts, EndpointRecordKind::binary_execute,
                                rng.pick(common_hashes()), rng.pick(common_file_types()));
            else
                add_script(entity, ts, rng.pick(benign_scripts()));
        }

        if (rng.chance(cfg.benign.download_prob)) {
            const std::string& host = zipf_popular(rng);
            add_file_record(entity, day_start + rng.below(kDay),
                            EndpointRecordKind::binary_download, rng.pick(common_hashes()),
                            rng.pick(common_file_types()), short_url(host, rng));
        }
    }

    // A single-endpoint-modality combination: odd install plus
    // fingerprinting plus a rare port, never any network-side oddity.
    void endpoint_burst(std::uint64_t entity, std::uint64_t day, Rng& rng) {
        const Timestamp t0 = cfg.start_ts + day * kDay + 12 * 3600 + rng.below(3600);
        char hash[48];
        std::snprintf(hash, sizeof(hash), "bh-%04llu-%03llu-%s",
                      static_cast<unsigned long long>(entity),
                      static_cast<unsigned long long>(day), rng.token(8).c_str());
        const std::string url = "http://dl" + std::to_string(day) + ".mirrors.example.com/pkg/" +
                                rng.token(10);
        add_file_record(entity, t0, EndpointRecordKind::binary_download, hash,
                        rng.pick(rare_file_types()), url);
        add_file_record(entity, t0 + 120, EndpointRecordKind::binary_execute, hash,
                        rng.pick(rare_file_types()));
        add_script(entity, t0 + 300, rng.pick(fingerprint_scripts()));
        add_conn(entity, t0 + 420, std::to_string(40000 + rng.below(20000)), "203.0.113.50");
        add_flow(entity, t0 + 540, /*with_sni=*/false, rng);
    }

    // The matching network-only combination, tlds included so every
    // network-side pattern stays common in the benign population.
    void network_burst(std::uint64_t entity, std::uint64_t day, Rng& rng) {
        const Timestamp t0 = cfg.start_ts + day * kDay + 13 * 3600 + rng.below(3600);
        const std::string eid = std::to_string(entity);
        const std::string d = std::to_string(day);

        const std::string fresh = "promo" + d + "x" + eid + ".landing.example.net";
        add_proxy(entity, t0, fresh, long_url(fresh, rng), primary_ua(entity), rng);
        add_proxy(entity, t0 + 120, kUpdateHost, short_url(kUpdateHost, rng), "curl/8.4.0", rng);
        add_proxy(entity, t0 + 240, kProbeHost, short_url(kProbeHost, rng), primary_ua(entity),
                  rng);
        const std::string rare = "news-" + eid + "-" + d + ".blogs.example.net";
        const std::string burst_ua = "burst-" + eid + "-" + d + "/1.1";
        for (int k = 0; k < 6; ++k)
            add_proxy(entity, t0 + 600 + static_cast<Timestamp>(k) * 1800, rare,
                      short_url(rare, rng), burst_ua, rng);
        const std::string tracker = "ads" + d + ".tracker.example.xyz";
        add_proxy(entity, t0 + 300, tracker, short_url(tracker, rng), primary_ua(entity), rng);
        add_file_record(entity, t0 + 400, EndpointRecordKind::binary_download,
                        rng.pick(common_hashes()), rng.pick(common_file_types()),
                        short_url(zipf_popular(rng), rng));
        add_flow(entity, t0 + 500, /*with_sni=*/false, rng);
    }

    // Exactly one suspicious event type, always inside one modality.
    void singles_day(std::uint64_t entity, std::uint64_t day, Rng& rng) {
        const Timestamp t0 = cfg.start_ts + day * kDay + 14 * 3600 + rng.below(3600);
        const std::string eid = std::to_string(entity);
        const std::string d = std::to_string(day);
        switch (rng.below(9)) {
            case 0: {
                const std::string host = "long-" + eid + "-" + d + ".pages.example.net";
                add_proxy(entity, t0, host, long_url(host, rng), primary_ua(entity), rng);
                break;
            }
            case 1:
                add_file_record(entity, t0, EndpointRecordKind::binary_download,
                                "sole-" + eid + "-" + d + "-" + rng.token(6),
                                rng.pick(common_file_types()),
                                short_url(zipf_popular(rng), rng));
                break;
            case 2:
                add_file_record(entity, t0, EndpointRecordKind::binary_download,
                                rng.pick(common_hashes()), rng.pick(rare_file_types()),
                                short_url(zipf_popular(rng), rng));
                break;
            case 3:
                add_proxy(entity, t0, zipf_popular(rng), short_url(popular[0], rng), "wget/1.21",
                          rng);
                break;
            case 4:
                add_proxy(entity, t0, kProbeHost, short_url(kProbeHost, rng),
                          primary_ua(entity), rng);
                break;
            case 5: {
                const std::string host = "one-" + eid + "-" + d + ".example.net";
                for (int k = 0; k < 4; ++k)
                    add_proxy(entity, t0 + static_cast<Timestamp>(k) * 2400, host,
                              short_url(host, rng), primary_ua(entity), rng);
                break;
            }
            case 6:
                add_proxy(entity, t0, zipf_popular(rng), short_url(popular[0], rng),
                          "odd-" + eid + "-" + d + "/0.1", rng);
                break;
            case 7:
                add_script(entity, t0, rng.pick(fingerprint_scripts()));
                break;
            case 8:
                add_conn(entity, t0, std::to_string(40000 + rng.below(20000)), "203.0.113.51");
                break;
        }
    }

    // ---- scenarios ------------------------------------------------------

    void shlayer_day(std::uint64_t entity, std::uint64_t day, Rng& rng) {
        const Timestamp t0 = cfg.start_ts + day * kDay + 10 * 3600 + rng.below(3600);
        const std::string eid = std::to_string(entity);
        const std::string d = std::to_string(day);

        // Fake plugin update fetched over a very long URL from a throwaway CDN.
        const std::string cdn = "cdn" + d + "x" + eid + ".fake-flash.example.net";
        const std::string update_url = long_url(cdn, rng);
        add_proxy(entity, t0, cdn, update_url, primary_ua(entity), rng);
        // The payload lands as a 7z archive nobody else has.
        add_file_record(entity, t0 + 60, EndpointRecordKind::binary_download,
                        "slh-" + eid + "-" + d + "-" + rng.token(8), "7z", update_url);
        add_file_record(entity, t0 + 120, EndpointRecordKind::binary_execute,
                        "slh-" + eid + "-" + d + "-" + rng.token(8), "7z");
        // The real plugin is fetched with curl from the vendor site.
        add_proxy(entity, t0 + 180, kUpdateHost, short_url(kUpdateHost, rng), "curl/8.4.0", rng);
        add_proxy(entity, t0 + 240, kProbeHost, short_url(kProbeHost, rng), primary_ua(entity),
                  rng);
        add_script(entity, t0 + 300, "system_profiler");
        // C&C plus exfiltration through the user-agent field.
        const std::string c2 = "c2-" + eid + ".relay.example.org";
        const std::string exfil_ua = "x-agent-" + eid + "/2.1";
        for (int k = 0; k < 6; ++k)
            add_proxy(entity, t0 + 600 + static_cast<Timestamp>(k) * 7200, c2,
                      short_url(c2, rng), exfil_ua, rng);
        add_conn(entity, t0 + 660, std::to_string(4600 + entity % 100), "203.0.113.77");
    }

    void trojan_day(std::uint64_t entity, std::uint64_t day, Rng& rng) {
        const Timestamp t0 = cfg.start_ts + day * kDay + 9 * 3600 + rng.below(3600);
        const std::string eid = std::to_string(entity);
        const std::string d = std::to_string(day);

        const std::string c2 = "upd-" + eid + ".collect.example.xyz";
        add_file_record(entity, t0, EndpointRecordKind::binary_download,
                        "trj-" + eid + "-" + d + "-" + rng.token(8), "exe",
                        "https://" + c2 + "/mod/" + rng.token(6));
        const std::string ua = "tj-" + eid + "/0.9";
        for (int k = 0; k < 4; ++k)
            add_proxy(entity, t0 + 900 + static_cast<Timestamp>(k) * 5400, c2,
                      short_url(c2, rng), ua, rng);
        add_conn(entity, t0 + 1200, std::to_string(51820 + entity % 50), "203.0.113.88");
    }
};

}  // namespace

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::shlayer_dropper: return "shlayer_dropper";
        case ScenarioKind::generic_trojan: return "generic_trojan";
        case ScenarioKind::benign_lookalike: return "benign_lookalike";
    }
    return "unknown";
}

std::optional<ScenarioKind> scenario_kind_from_string(const std::string& name) {
    if (name == "shlayer_dropper") return ScenarioKind::shlayer_dropper;
    if (name == "generic_trojan") return ScenarioKind::generic_trojan;
    if (name == "benign_lookalike") return ScenarioKind::benign_lookalike;
    return std::nullopt;
}

std::string entity_name(std::uint64_t index) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "E%04llu", static_cast<unsigned long long>(index));
    return buf;
}

std::string entity_ip(std::uint64_t index) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "10.%llu.%llu.%llu",
                  static_cast<unsigned long long>((index >> 16) & 0xff),
                  static_cast<unsigned long long>((index >> 8) & 0xff),
                  static_cast<unsigned long long>(index & 0xff));
    return buf;
}

void SimConfig::validate() const {
    std::vector<std::string> violations;
    if (n_entities < 1) violations.push_back("n_entities must be >= 1");
    if (days < 1) violations.push_back("days must be >= 1");
    if (warmup_days >= days) violations.push_back("warmup_days must be < days");
    auto rate_ok = [&](double v, const char* name) {
        if (v < 0.0) violations.push_back(std::string(name) + " must be >= 0");
    };
    rate_ok(benign.proxy_per_day, "proxy_per_day");
    rate_ok(benign.flows_per_day, "flows_per_day");
    rate_ok(benign.endpoint_per_day, "endpoint_per_day");
    if (benign.popular_hosts < 1) violations.push_back("popular_hosts must be >= 1");
    if (conflict_fraction < 0.0 || conflict_fraction > 1.0)
        violations.push_back("conflict_fraction must be in [0,1]");

    std::set<std::string> known;
    for (std::uint64_t i = 0; i < n_entities; ++i) known.insert(entity_name(i));
    std::set<std::string> labelled;
    for (const auto& s : scenarios) {
        if (s.label.empty()) violations.push_back("scenario label must be non-empty");
        if (s.target_entities.empty())
            violations.push_back(to_string(s.kind) + " scenario has no target entities");
        for (const auto& t : s.target_entities) {
            if (!known.count(t))
                violations.push_back("scenario target " + t + " is not a simulated entity");
            if (!labelled.insert(t).second)
                violations.push_back("entity " + t + " is targeted by more than one scenario");
        }
        if (s.start_ts < start_ts || s.start_ts >= start_ts + days * kDay)
            violations.push_back(to_string(s.kind) + " start_ts is outside the simulation span");
    }

    if (!violations.empty()) {
        std::string msg = "invalid simulation config:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw Error(ErrorKind::config, msg);
    }
}

SimOutput generate(const SimConfig& config) {
    config.validate();

    Builder b(config);

    // Profiling sweep: every catalog host sees at least one visit during the
    // profiling days, so no benign destination looks unknown later.
    {
        std::vector<std::string> all_hosts = b.popular;
        all_hosts.insert(all_hosts.end(), b.tail.begin(), b.tail.end());
        all_hosts.push_back(kProbeHost);
        Rng rng(splitmix64(config.seed ^ 0x53574545ULL));
        const std::uint64_t warm = std::max<std::uint64_t>(config.warmup_days, 1);
        for (std::size_t i = 0; i < all_hosts.size(); ++i) {
            const std::uint64_t entity = i % config.n_entities;
            const Timestamp ts = config.start_ts + (i % warm) * kDay + 7200 +
                                 (i / warm) % 3600 + rng.below(1800);
            b.add_proxy(entity, ts, all_hosts[i], b.short_url(all_hosts[i], rng),
                        b.primary_ua(entity), rng);
        }
    }

    for (std::uint64_t e = 0; e < config.n_entities; ++e) {
        Rng rng = entity_rng(config.seed, e, 1);
        for (std::uint64_t day = 0; day < config.days; ++day) {
            b.benign_base_day(e, day, rng);
            if (day < config.warmup_days) continue;
            const double r = rng.unit();
            const BenignProfile& p = config.benign;
            if (r < p.endpoint_burst_prob)
                b.endpoint_burst(e, day, rng);
            else if (r < p.endpoint_burst_prob + p.network_burst_prob)
                b.network_burst(e, day, rng);
            else if (r < p.endpoint_burst_prob + p.network_burst_prob + p.singles_prob)
                b.singles_day(e, day, rng);
        }
    }

    LabelFeed truth;
    for (std::uint64_t e = 0; e < config.n_entities; ++e)
        truth.assignments[entity_name(e)] = kBenignLabel;

    for (const auto& scenario : config.scenarios) {
        for (const auto& target : scenario.target_entities) {
            std::uint64_t e = 0;
            for (; e < config.n_entities; ++e)
                if (entity_name(e) == target) break;
            Rng rng = entity_rng(config.seed, e, 2 + static_cast<std::uint64_t>(scenario.kind));
            const std::uint64_t first_day = b.day_of(scenario.start_ts);
            for (std::uint64_t day = first_day; day < config.days; ++day) {
                switch (scenario.kind) {
                    case ScenarioKind::shlayer_dropper: b.shlayer_day(e, day, rng); break;
                    case ScenarioKind::generic_trojan: b.trojan_day(e, day, rng); break;
                    case ScenarioKind::benign_lookalike:
                        if (day % 2 == 0)
                            b.endpoint_burst(e, day, rng);
                        else
                            b.network_burst(e, day, rng);
                        break;
                }
            }
            truth.assignments[target] = scenario.label;
        }
    }

    // Deliberate IP conflicts: an entity claims another endpoint's address
    // in a bucket where the owner is also present.
    if (config.conflict_fraction > 0.0) {
        Rng rng(splitmix64(config.seed ^ 0xC0FFEEULL));
        for (std::uint64_t e = 0; e < config.n_entities; ++e) {
            for (std::uint64_t day = 0; day < config.days; ++day) {
                if (!rng.chance(config.conflict_fraction)) continue;
                if (config.n_entities < 2) continue;
                std::uint64_t victim = rng.below(config.n_entities - 1);
                if (victim >= e) victim++;
                const auto& ts = b.first_conn[victim][day];
                if (!ts) continue;
                EndpointRecord r;
                r.ts = *ts;
                r.endpoint_id = entity_name(e);
                r.record_kind = EndpointRecordKind::network_connection;
                r.attributes["local_ip"] = entity_ip(victim);
                r.attributes["remote_ip"] = "203.0.113.9";
                r.attributes["remote_port"] = "443";
                b.endpoint.push_back(std::move(r));
            }
        }
    }

    SimOutput out;
    out.flows.modality_id = Modality::network_flow;
    out.flows.flows = std::move(b.flows);
    out.proxy.modality_id = Modality::proxy_log;
    out.proxy.proxy = std::move(b.proxy);
    out.endpoint.modality_id = Modality::endpoint;
    out.endpoint.endpoint = std::move(b.endpoint);
    out.flows.sort_by_ts();
    out.proxy.sort_by_ts();
    out.endpoint.sort_by_ts();
    out.truth = std::move(truth);
    return out;
}

SimConfig default_sim_config() {
    SimConfig cfg;
    const Timestamp attack_start = cfg.start_ts + cfg.warmup_days * kDay;

    ScenarioSpec shlayer;
    shlayer.kind = ScenarioKind::shlayer_dropper;
    shlayer.label = "dropper_shlayer";
    shlayer.start_ts = attack_start;
    for (std::uint64_t e : {7, 70, 133, 196, 259, 322}) {
        shlayer.target_entities.push_back(entity_name(e));
    }
    cfg.scenarios.push_back(std::move(shlayer));

    ScenarioSpec trojan;
    trojan.kind = ScenarioKind::generic_trojan;
    trojan.label = "trojan";
    trojan.start_ts = attack_start;
    for (std::uint64_t e : {11, 88, 165, 242, 319}) {
        trojan.target_entities.push_back(entity_name(e));
    }
    cfg.scenarios.push_back(std::move(trojan));
    return cfg;
}

namespace {

void config_from_json(const json& j, SimConfig& cfg) {
    if (!j.is_object()) throw Error(ErrorKind::config, "simulation config must be a JSON object");
    cfg.n_entities = j.value("n_entities", cfg.n_entities);
    cfg.days = j.value("days", cfg.days);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.start_ts = j.value("start_ts", cfg.start_ts);
    cfg.warmup_days = j.value("warmup_days", cfg.warmup_days);
    cfg.conflict_fraction = j.value("conflict_fraction", cfg.conflict_fraction);
    if (j.contains("benign")) {
        const json& bp = j.at("benign");
        BenignProfile& p = cfg.benign;
        p.proxy_per_day = bp.value("proxy_per_day", p.proxy_per_day);
        p.flows_per_day = bp.value("flows_per_day", p.flows_per_day);
        p.endpoint_per_day = bp.value("endpoint_per_day", p.endpoint_per_day);
        p.popular_hosts = bp.value("popular_hosts", p.popular_hosts);
        p.tail_hosts = bp.value("tail_hosts", p.tail_hosts);
        p.endpoint_burst_prob = bp.value("endpoint_burst_prob", p.endpoint_burst_prob);
        p.network_burst_prob = bp.value("network_burst_prob", p.network_burst_prob);
        p.singles_prob = bp.value("singles_prob", p.singles_prob);
        p.download_prob = bp.value("download_prob", p.download_prob);
        p.flow_no_sni_prob = bp.value("flow_no_sni_prob", p.flow_no_sni_prob);
    }
    if (j.contains("scenarios")) {
        cfg.scenarios.clear();
        for (const json& sj : j.at("scenarios")) {
            ScenarioSpec s;
            const std::string kind = sj.value("scenario", "");
            auto k = scenario_kind_from_string(kind);
            if (!k) throw Error(ErrorKind::config, "unknown scenario kind: " + kind);
            s.kind = *k;
            s.label = sj.value("label", "");
            s.start_ts = sj.value("start_ts", cfg.start_ts);
            if (sj.contains("target_entities"))
                for (const json& t : sj.at("target_entities"))
                    s.target_entities.push_back(t.get<std::string>());
            cfg.scenarios.push_back(std::move(s));
        }
    }
}

}  // namespace

SimConfig SimConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded())
        throw Error(ErrorKind::config, "simulation config is not valid JSON");
    SimConfig cfg;
    config_from_json(j, cfg);
    cfg.validate();
    return cfg;
}

SimConfig SimConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open simulation config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string SimConfig::to_json() const {
    json j;
    j["n_entities"] = n_entities;
    j["days"] = days;
    j["seed"] = seed;
    j["start_ts"] = start_ts;
    j["warmup_days"] = warmup_days;
    j["conflict_fraction"] = conflict_fraction;
    j["benign"] = {
        {"proxy_per_day", benign.proxy_per_day},
        {"flows_per_day", benign.flows_per_day},
        {"endpoint_per_day", benign.endpoint_per_day},
        {"popular_hosts", benign.popular_hosts},
        {"tail_hosts", benign.tail_hosts},
        {"endpoint_burst_prob", benign.endpoint_burst_prob},
        {"network_burst_prob", benign.network_burst_prob},
        {"singles_prob", benign.singles_prob},
        {"download_prob", benign.download_prob},
        {"flow_no_sni_prob", benign.flow_no_sni_prob},
    };
    j["scenarios"] = json::array();
    for (const auto& s : scenarios) {
        json sj;
        sj["scenario"] = to_string(s.kind);
        sj["label"] = s.label;
        sj["start_ts"] = s.start_ts;
        sj["target_entities"] = s.target_entities;
        j["scenarios"].push_back(sj);
    }
    return j.dump(2) + "\n";
}

void write_sim_output(const SimOutput& out, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_dataset_file(out.flows, (base / "flows.jsonl").string());
    write_dataset_file(out.proxy, (base / "proxy.jsonl").string());
    write_dataset_file(out.endpoint, (base / "endpoint.jsonl").string());
    write_label_feed((base / "labels.jsonl").string(), out.truth);
}

}  // namespace xmodal
