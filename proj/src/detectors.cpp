#include "xmodal/detectors.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

#include "xmodal/error.hpp"

namespace xmodal {

std::string to_string(BaselineScope s) {
    switch (s) {
        case BaselineScope::environment: return "environment";
        case BaselineScope::per_entity: return "per_entity";
        case BaselineScope::per_hostname: return "per_hostname";
    }
    return "unknown";
}

std::string to_string(BaselineKeyKind k) {
    switch (k) {
        case BaselineKeyKind::file_hash: return "file_hash";
        case BaselineKeyKind::file_type: return "file_type";
        case BaselineKeyKind::user_agent: return "user_agent";
        case BaselineKeyKind::remote_port: return "remote_port";
    }
    return "unknown";
}

double FrequencyBaseline::frequency(const std::string& key) const {
    if (total == 0) return 0.0;
    auto it = counts.find(key);
    if (it == counts.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(total);
}

const FrequencyBaseline* BaselineSet::find(const std::string& scope_key) const {
    auto it = per_scope.find(scope_key);
    return it == per_scope.end() ? nullptr : &it->second;
}

namespace {

std::string format_fraction(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

bool endpoint_file_kind(EndpointRecordKind k) {
    return k == EndpointRecordKind::file_create || k == EndpointRecordKind::binary_execute ||
           k == EndpointRecordKind::binary_download || k == EndpointRecordKind::file_transfer;
}

struct KeyObservation {
    Timestamp ts;
    std::string scope_key;
    std::string key;
    ModalityEntity entity;
    std::map<std::string, std::string> context;
};

// Walks ds and yields every record that carries the requested key kind.
// Throws Error{config} for a key kind the modality cannot provide.
std::vector<KeyObservation> extract_keys(const Dataset& ds, BaselineScope scope,
                                         BaselineKeyKind key_kind) {
    std::vector<KeyObservation> out;
    auto scope_error = [&]() -> std::string {
        return "unsupported scope " + to_string(scope) + " for key kind " +
               to_string(key_kind);
    };
    switch (key_kind) {
        case BaselineKeyKind::file_hash:
        case BaselineKeyKind::file_type: {
            if (ds.modality_id != Modality::endpoint)
                throw Error(ErrorKind::config,
                            "key kind " + to_string(key_kind) + " requires the endpoint modality, got " +
                                to_string(ds.modality_id));
            if (scope == BaselineScope::per_hostname)
                throw Error(ErrorKind::config, scope_error());
            const char* attr = key_kind == BaselineKeyKind::file_hash ? "file_hash" : "file_type";
            for (const auto& r : ds.endpoint) {
                if (!endpoint_file_kind(r.record_kind)) continue;
                const std::string* v = r.attr(attr);
                if (!v || v->empty()) continue;
                KeyObservation obs;
                obs.ts = r.ts;
                obs.scope_key = scope == BaselineScope::per_entity ? r.endpoint_id : "";
                obs.key = *v;
                obs.entity = {ModalityEntity::Kind::endpoint_id, r.endpoint_id};
                if (const std::string* u = r.attr("source_url")) obs.context["source_url"] = *u;
                out.push_back(std::move(obs));
            }
            break;
        }
        case BaselineKeyKind::remote_port: {
            if (ds.modality_id != Modality::endpoint)
                throw Error(ErrorKind::config,
                            "key kind remote_port requires the endpoint modality, got " +
                                to_string(ds.modality_id));
            if (scope == BaselineScope::per_hostname)
                throw Error(ErrorKind::config, scope_error());
            for (const auto& r : ds.endpoint) {
                if (r.record_kind != EndpointRecordKind::network_connection) continue;
                const std::string* v = r.attr("remote_port");
                if (!v) continue;
                KeyObservation obs;
                obs.ts = r.ts;
                obs.scope_key = scope == BaselineScope::per_entity ? r.endpoint_id : "";
                obs.key = *v;
                obs.entity = {ModalityEntity::Kind::endpoint_id, r.endpoint_id};
                if (const std::string* ip = r.attr("remote_ip")) obs.context["remote_ip"] = *ip;
                out.push_back(std::move(obs));
            }
            break;
        }
        case BaselineKeyKind::user_agent: {
            if (ds.modality_id != Modality::proxy_log)
                throw Error(ErrorKind::config,
                            "key kind user_agent requires the proxy_log modality, got " +
                                to_string(ds.modality_id));
            for (const auto& r : ds.proxy) {
                KeyObservation obs;
                obs.ts = r.ts;
                switch (scope) {
                    case BaselineScope::environment: obs.scope_key = ""; break;
                    case BaselineScope::per_entity: obs.scope_key = r.client_ip; break;
                    case BaselineScope::per_hostname: obs.scope_key = r.hostname; break;
                }
                obs.key = r.user_agent;
                obs.entity = {ModalityEntity::Kind::ip_address, r.client_ip};
                obs.context["hostname"] = r.hostname;
                out.push_back(std::move(obs));
            }
            break;
        }
    }
    return out;
}

}  // namespace

BaselineSet build_frequency_baseline(const Dataset& ds, BaselineScope scope,
                                     BaselineKeyKind key_kind, Timestamp history_end) {
    BaselineSet set;
    set.scope = scope;
    set.key_kind = key_kind;
    for (const auto& obs : extract_keys(ds, scope, key_kind)) {
        if (obs.ts >= history_end) continue;
        FrequencyBaseline& b = set.per_scope[obs.scope_key];
        b.counts[obs.key]++;
        b.total++;
    }
    return set;
}

std::map<std::string, std::uint64_t> hostname_popularity(const Dataset& proxy_ds,
                                                         Timestamp history_end) {
    if (proxy_ds.modality_id != Modality::proxy_log)
        throw Error(ErrorKind::config, "hostname popularity requires the proxy_log modality");
    std::map<std::string, std::set<std::string>> clients;
    for (const auto& r : proxy_ds.proxy) {
        if (r.ts >= history_end) continue;
        clients[r.hostname].insert(r.client_ip);
    }
    std::map<std::string, std::uint64_t> out;
    for (const auto& [host, ips] : clients) out[host] = ips.size();
    return out;
}

std::vector<UnimodalDetection> detect_long_url_first_visit(const Dataset& proxy_ds,
                                                           std::size_t min_url_len,
                                                           std::set<std::string> history,
                                                           Timestamp eval_start) {
    if (proxy_ds.modality_id != Modality::proxy_log)
        throw Error(ErrorKind::config, "long URL detector requires the proxy_log modality");
    if (min_url_len == 0)
        throw Error(ErrorKind::config, "min_url_len must be positive");

    std::vector<UnimodalDetection> out;
    for (const auto& r : proxy_ds.proxy) {
        const bool first_visit = history.find(r.hostname) == history.end();
        if (first_visit && r.ts >= eval_start && r.url.size() >= min_url_len) {
            UnimodalDetection d;
            d.ts = r.ts;
            d.entity = {ModalityEntity::Kind::ip_address, r.client_ip};
            d.event.event_type = events::long_url_first_visit;
            d.event.metadata["hostname"] = r.hostname;
            d.event.metadata["url_length"] = std::to_string(r.url.size());
            out.push_back(std::move(d));
        }
        history.insert(r.hostname);
    }
    return out;
}

std::vector<UnimodalDetection> detect_rare_key(const Dataset& ds, const BaselineSet& baseline,
                                               double rarity_threshold,
                                               const std::string& event_type,
                                               Timestamp eval_start) {
    if (rarity_threshold <= 0.0 || rarity_threshold >= 1.0)
        throw Error(ErrorKind::config, "rarity_threshold must be in (0,1)");

    static const FrequencyBaseline kEmpty;
    std::vector<UnimodalDetection> out;
    for (const auto& obs : extract_keys(ds, baseline.scope, baseline.key_kind)) {
        if (obs.ts < eval_start) continue;
        const FrequencyBaseline* b = baseline.find(obs.scope_key);
        if (!b) b = &kEmpty;
        const double freq = b->frequency(obs.key);
        if (freq >= rarity_threshold) continue;
        UnimodalDetection d;
        d.ts = obs.ts;
        d.entity = obs.entity;
        d.event.event_type = event_type;
        d.event.metadata = obs.context;
        d.event.metadata["key"] = obs.key;
        d.event.metadata["frequency"] = format_fraction(freq);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<UnimodalDetection> detect_signature(const Dataset& ds,
                                                const std::vector<SignaturePattern>& patterns,
                                                Timestamp eval_start) {
    struct Compiled {
        const SignaturePattern* p;
        std::optional<std::regex> re;
    };
    std::vector<Compiled> compiled;
    for (const auto& p : patterns) {
        Compiled c{&p, std::nullopt};
        if (p.match_kind == SignaturePattern::MatchKind::url_regex) {
            try {
                c.re.emplace(p.regex, std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                throw Error(ErrorKind::config,
                            "signature '" + p.name + "' has an invalid regex: " + e.what());
            }
        }
        compiled.push_back(std::move(c));
    }

    std::vector<UnimodalDetection> out;
    auto emit = [&](Timestamp ts, ModalityEntity entity, const SignaturePattern& p,
                    std::map<std::string, std::string> metadata) {
        UnimodalDetection d;
        d.ts = ts;
        d.entity = std::move(entity);
        d.event.event_type = p.emitted_event;
        d.event.metadata = std::move(metadata);
        d.event.metadata["signature"] = p.name;
        out.push_back(std::move(d));
    };

    if (ds.modality_id == Modality::proxy_log) {
        for (const auto& r : ds.proxy) {
            if (r.ts < eval_start) continue;
            for (const auto& c : compiled) {
                const SignaturePattern& p = *c.p;
                bool hit = false;
                if (p.match_kind == SignaturePattern::MatchKind::hostname_exact)
                    hit = p.values.count(r.hostname) > 0;
                else if (p.match_kind == SignaturePattern::MatchKind::url_regex)
                    hit = std::regex_search(r.url, *c.re);
                if (hit)
                    emit(r.ts, {ModalityEntity::Kind::ip_address, r.client_ip}, p,
                         {{"hostname", r.hostname}});
            }
        }
    } else if (ds.modality_id == Modality::endpoint) {
        for (const auto& r : ds.endpoint) {
            if (r.ts < eval_start) continue;
            if (r.record_kind != EndpointRecordKind::script_execute) continue;
            const std::string* script = r.attr("script_name");
            if (!script) continue;
            for (const auto& c : compiled) {
                const SignaturePattern& p = *c.p;
                if (p.match_kind != SignaturePattern::MatchKind::script_name_set) continue;
                if (!p.values.count(*script)) continue;
                emit(r.ts, {ModalityEntity::Kind::endpoint_id, r.endpoint_id}, p,
                     {{"script_name", *script}});
            }
        }
    }
    return out;
}

std::vector<UnimodalDetection> detect_recurring_rare_site(
    const Dataset& proxy_ds, const std::map<std::string, std::uint64_t>& popularity,
    std::uint64_t max_clients, std::uint64_t min_recurrences, std::uint64_t min_span_buckets,
    std::uint64_t quantum_seconds, Timestamp eval_start) {
    if (proxy_ds.modality_id != Modality::proxy_log)
        throw Error(ErrorKind::config, "recurring-site detector requires the proxy_log modality");
    if (max_clients == 0 || min_recurrences == 0 || min_span_buckets == 0)
        throw Error(ErrorKind::config, "recurring-site thresholds must be positive");

    struct PairState {
        std::set<std::uint64_t> buckets;
        bool fired = false;
    };
    std::map<std::pair<std::string, std::string>, PairState> state;

    std::vector<UnimodalDetection> out;
    for (const auto& r : proxy_ds.proxy) {
        PairState& st = state[{r.client_ip, r.hostname}];
        st.buckets.insert(bucket(r.ts, quantum_seconds));
        if (st.fired || r.ts < eval_start) continue;
        auto pop = popularity.find(r.hostname);
        const std::uint64_t distinct_clients = pop == popularity.end() ? 0 : pop->second;
        if (distinct_clients > max_clients) continue;
        if (st.buckets.size() < min_recurrences) continue;
        const std::uint64_t span = *st.buckets.rbegin() - *st.buckets.begin() + 1;
        if (span < min_span_buckets) continue;
        st.fired = true;
        UnimodalDetection d;
        d.ts = r.ts;
        d.entity = {ModalityEntity::Kind::ip_address, r.client_ip};
        d.event.event_type = events::recurring_rare_site;
        d.event.metadata["hostname"] = r.hostname;
        d.event.metadata["distinct_buckets"] = std::to_string(st.buckets.size());
        d.event.metadata["span_buckets"] = std::to_string(span);
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<UnimodalDetection> detect_contextual(const Dataset& ds, Timestamp eval_start) {
    std::vector<UnimodalDetection> out;
    switch (ds.modality_id) {
        case Modality::endpoint:
            for (const auto& r : ds.endpoint) {
                if (r.ts < eval_start) continue;
                if (r.record_kind != EndpointRecordKind::binary_download) continue;
                UnimodalDetection d;
                d.ts = r.ts;
                d.entity = {ModalityEntity::Kind::endpoint_id, r.endpoint_id};
                d.event.event_type = events::file_download;
                if (const std::string* u = r.attr("source_url")) d.event.metadata["source_url"] = *u;
                if (const std::string* t = r.attr("file_type")) d.event.metadata["file_type"] = *t;
                out.push_back(std::move(d));
            }
            break;
        case Modality::proxy_log:
            for (const auto& r : ds.proxy) {
                if (r.ts < eval_start) continue;
                if (!is_ip_literal(r.hostname)) continue;
                UnimodalDetection d;
                d.ts = r.ts;
                d.entity = {ModalityEntity::Kind::ip_address, r.client_ip};
                d.event.event_type = events::raw_ip_access;
                d.event.metadata["hostname"] = r.hostname;
                out.push_back(std::move(d));
            }
            break;
        case Modality::network_flow:
            for (const auto& r : ds.flows) {
                if (r.ts < eval_start) continue;
                if (r.server_name && !is_ip_literal(*r.server_name)) continue;
                UnimodalDetection d;
                d.ts = r.ts;
                d.entity = {ModalityEntity::Kind::ip_address, r.client_ip};
                d.event.event_type = events::raw_ip_access;
                d.event.metadata["server_ip"] = r.server_ip;
                out.push_back(std::move(d));
            }
            break;
    }
    return out;
}

namespace {

Timestamp warmup_end_of(const Dataset& ds, std::uint64_t warmup_seconds) {
    auto lo = ds.min_ts();
    return lo ? *lo + warmup_seconds : 0;
}

EventType anomaly(const char* id) { return {id, SourceCategory::anomaly}; }
EventType signature(const char* id) { return {id, SourceCategory::signature}; }
EventType contextual(const char* id) { return {id, SourceCategory::contextual}; }

}  // namespace

void register_default_detectors(DetectorRegistry& registry, const DetectorParams& params,
                                const std::optional<std::set<Modality>>& modalities) {
    auto wanted = [&](Modality m) { return !modalities || modalities->count(m) > 0; };
    const DetectorParams p = params;

    auto add = [&](const char* name, Modality m, std::vector<EventType> types, DetectorFn fn,
                   std::map<std::string, std::string> parameters = {}) {
        if (!wanted(m)) return;
        DetectorDescriptor d;
        d.name = name;
        d.modality_id = m;
        d.emitted_event_types = std::move(types);
        d.parameters = std::move(parameters);
        registry.register_detector(std::move(d), std::move(fn));
    };

    add("long_url_first_visit", Modality::proxy_log, {anomaly(events::long_url_first_visit)},
        [p](const Dataset& ds) {
            return detect_long_url_first_visit(ds, p.min_url_len, {},
                                               warmup_end_of(ds, p.warmup_seconds));
        },
        {{"min_url_len", std::to_string(p.min_url_len)}});

    auto add_rare = [&](const char* name, Modality m, const char* event_type,
                        BaselineScope scope, BaselineKeyKind kind) {
        add(name, m, {anomaly(event_type)},
            [p, scope, kind, event_type](const Dataset& ds) {
                const Timestamp eval_start = warmup_end_of(ds, p.warmup_seconds);
                BaselineSet baseline = build_frequency_baseline(ds, scope, kind, eval_start);
                return detect_rare_key(ds, baseline, p.rarity_threshold, event_type, eval_start);
            },
            {{"rarity_threshold", format_fraction(p.rarity_threshold)},
             {"scope", to_string(scope)},
             {"key_kind", to_string(kind)}});
    };
    add_rare("rare_file_hash", Modality::endpoint, events::unusual_file_hash,
             BaselineScope::environment, BaselineKeyKind::file_hash);
    add_rare("rare_file_type", Modality::endpoint, events::unusual_file_type,
             BaselineScope::environment, BaselineKeyKind::file_type);
    add_rare("site_user_agent_profile", Modality::proxy_log, events::rare_user_agent_for_site,
             BaselineScope::per_hostname, BaselineKeyKind::user_agent);
    add_rare("client_user_agent_profile", Modality::proxy_log,
             events::unusual_user_agent_for_user, BaselineScope::per_entity,
             BaselineKeyKind::user_agent);
    add_rare("rare_remote_port", Modality::endpoint, events::unusual_remote_port,
             BaselineScope::environment, BaselineKeyKind::remote_port);

    {
        std::vector<SignaturePattern> proxy_patterns;
        SignaturePattern probe;
        probe.name = "connectivity_probe_hosts";
        probe.match_kind = SignaturePattern::MatchKind::hostname_exact;
        probe.values.insert(p.connectivity_check_hostnames.begin(),
                            p.connectivity_check_hostnames.end());
        probe.emitted_event = events::connection_check;
        proxy_patterns.push_back(std::move(probe));

        SignaturePattern tld;
        tld.name = "suspicious_tld";
        tld.match_kind = SignaturePattern::MatchKind::url_regex;
        tld.regex = p.suspicious_tld_regex;
        tld.emitted_event = events::suspicious_tld_access;
        proxy_patterns.push_back(std::move(tld));

        add("proxy_signatures", Modality::proxy_log,
            {signature(events::connection_check), signature(events::suspicious_tld_access)},
            [p, proxy_patterns](const Dataset& ds) {
                return detect_signature(ds, proxy_patterns, warmup_end_of(ds, p.warmup_seconds));
            });
    }
    {
        std::vector<SignaturePattern> ep_patterns;
        SignaturePattern fp;
        fp.name = "fingerprint_scripts";
        fp.match_kind = SignaturePattern::MatchKind::script_name_set;
        fp.values.insert(p.fingerprint_script_names.begin(), p.fingerprint_script_names.end());
        fp.emitted_event = events::fingerprinting_tool;
        ep_patterns.push_back(std::move(fp));

        add("endpoint_signatures", Modality::endpoint, {signature(events::fingerprinting_tool)},
            [p, ep_patterns](const Dataset& ds) {
                return detect_signature(ds, ep_patterns, warmup_end_of(ds, p.warmup_seconds));
            });
    }

    add("recurring_rare_site", Modality::proxy_log, {anomaly(events::recurring_rare_site)},
        [p](const Dataset& ds) {
            const Timestamp eval_start = warmup_end_of(ds, p.warmup_seconds);
            auto popularity = hostname_popularity(ds, eval_start);
            return detect_recurring_rare_site(ds, popularity, p.max_clients, p.min_recurrences,
                                              p.min_span_buckets, p.quantum_seconds, eval_start);
        },
        {{"max_clients", std::to_string(p.max_clients)},
         {"min_recurrences", std::to_string(p.min_recurrences)},
         {"min_span_buckets", std::to_string(p.min_span_buckets)}});

    add("endpoint_context", Modality::endpoint, {contextual(events::file_download)},
        [p](const Dataset& ds) {
            return detect_contextual(ds, warmup_end_of(ds, p.warmup_seconds));
        });
    add("proxy_context", Modality::proxy_log, {contextual(events::raw_ip_access)},
        [p](const Dataset& ds) {
            return detect_contextual(ds, warmup_end_of(ds, p.warmup_seconds));
        });
    add("flow_context", Modality::network_flow, {contextual(events::raw_ip_access)},
        [p](const Dataset& ds) {
            return detect_contextual(ds, warmup_end_of(ds, p.warmup_seconds));
        });
}

}  // namespace xmodal
