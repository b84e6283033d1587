#include "xmodal/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "xmodal/entity_match.hpp"
#include "xmodal/error.hpp"
#include "xmodal/io.hpp"

namespace xmodal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace artifacts {
std::string rules(const std::string& config) { return "rules_" + config + ".json"; }
std::string detections(const std::string& config) { return "detections_" + config + ".jsonl"; }
}  // namespace artifacts

PipelineConfig PipelineConfig::defaults() { return PipelineConfig{}; }

void PipelineConfig::validate() const {
    if (quantum_seconds == 0) throw Error(ErrorKind::config, "quantum_seconds must be positive");
    if (window_buckets == 0) throw Error(ErrorKind::config, "window_buckets must be positive");
    if (train_fraction < 0.0 || train_fraction > 1.0)
        throw Error(ErrorKind::config, "train_fraction must be in [0,1]");
    if (detectors.rarity_threshold <= 0.0 || detectors.rarity_threshold >= 1.0)
        throw Error(ErrorKind::config, "rarity_threshold must be in (0,1)");
    if (detectors.min_url_len == 0)
        throw Error(ErrorKind::config, "min_url_len must be positive");
    if (mining.min_support_own <= 0.0 || mining.min_support_own > 1.0)
        throw Error(ErrorKind::config, "min_support_own must be in (0,1]");
    if (mining.max_support_other <= 0.0 || mining.max_support_other > 1.0)
        throw Error(ErrorKind::config, "max_support_other must be in (0,1]");
    if (mining.max_itemset_size == 0)
        throw Error(ErrorKind::config, "max_itemset_size must be positive");
    if (severity.ranking.empty())
        throw Error(ErrorKind::config, "severity ranking must not be empty");
}

AblationParams PipelineConfig::ablation_params() const {
    AblationParams p;
    p.mining = mining;
    p.severity = severity;
    p.window_buckets = window_buckets;
    p.quantum_seconds = quantum_seconds;
    p.train_fraction = train_fraction;
    return p;
}

namespace {

void config_from_json(const json& j, PipelineConfig& cfg) {
    if (!j.is_object()) throw Error(ErrorKind::config, "pipeline config must be a JSON object");
    cfg.quantum_seconds = j.value("quantum_seconds", cfg.quantum_seconds);
    cfg.window_buckets = j.value("window_buckets", cfg.window_buckets);
    cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
    if (j.contains("detectors")) {
        const json& d = j.at("detectors");
        DetectorParams& p = cfg.detectors;
        p.warmup_seconds = d.value("warmup_seconds", p.warmup_seconds);
        p.min_url_len = d.value("min_url_len", p.min_url_len);
        p.rarity_threshold = d.value("rarity_threshold", p.rarity_threshold);
        p.max_clients = d.value("max_clients", p.max_clients);
        p.min_recurrences = d.value("min_recurrences", p.min_recurrences);
        p.min_span_buckets = d.value("min_span_buckets", p.min_span_buckets);
        p.suspicious_tld_regex = d.value("suspicious_tld_regex", p.suspicious_tld_regex);
        if (d.contains("connectivity_check_hostnames")) {
            p.connectivity_check_hostnames.clear();
            for (const json& h : d.at("connectivity_check_hostnames"))
                p.connectivity_check_hostnames.push_back(h.get<std::string>());
        }
        if (d.contains("fingerprint_script_names")) {
            p.fingerprint_script_names.clear();
            for (const json& s : d.at("fingerprint_script_names"))
                p.fingerprint_script_names.push_back(s.get<std::string>());
        }
    }
    if (j.contains("mining")) {
        const json& m = j.at("mining");
        cfg.mining.min_support_own = m.value("min_support_own", cfg.mining.min_support_own);
        cfg.mining.max_support_other = m.value("max_support_other", cfg.mining.max_support_other);
        cfg.mining.max_itemset_size = m.value("max_itemset_size", cfg.mining.max_itemset_size);
    }
    if (j.contains("severity")) {
        cfg.severity.ranking.clear();
        for (const json& label : j.at("severity"))
            cfg.severity.ranking.push_back(label.get<std::string>());
    }
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        cfg.paths.flows = p.value("flows", cfg.paths.flows);
        cfg.paths.proxy = p.value("proxy", cfg.paths.proxy);
        cfg.paths.endpoint = p.value("endpoint", cfg.paths.endpoint);
        cfg.paths.labels = p.value("labels", cfg.paths.labels);
        cfg.paths.inventory = p.value("inventory", cfg.paths.inventory);
        cfg.paths.severity = p.value("severity", cfg.paths.severity);
        cfg.paths.out_dir = p.value("out_dir", cfg.paths.out_dir);
    }
    cfg.detectors.quantum_seconds = cfg.quantum_seconds;
}

void apply_env_overrides(PipelineConfig& cfg) {
    auto override_path = [](const char* var, std::string& target) {
        if (const char* v = std::getenv(var); v && *v) target = v;
    };
    override_path("XMODAL_FLOWS", cfg.paths.flows);
    override_path("XMODAL_PROXY", cfg.paths.proxy);
    override_path("XMODAL_ENDPOINT", cfg.paths.endpoint);
    override_path("XMODAL_LABELS", cfg.paths.labels);
    override_path("XMODAL_INVENTORY", cfg.paths.inventory);
    override_path("XMODAL_SEVERITY", cfg.paths.severity);
    override_path("XMODAL_OUT_DIR", cfg.paths.out_dir);
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty())
        throw Error(ErrorKind::config, "no path configured for " + what);
    if (!fs::exists(path))
        throw Error(ErrorKind::config, what + " file does not exist: " + path);
}

Dataset load_normalized(Modality m, const std::string& path) {
    return parse_dataset_file(m, path).dataset;
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded())
        throw Error(ErrorKind::config, "pipeline config is not valid JSON");
    PipelineConfig cfg;
    config_from_json(j, cfg);
    apply_env_overrides(cfg);
    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open pipeline config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string PipelineConfig::to_json() const {
    json j;
    j["quantum_seconds"] = quantum_seconds;
    j["window_buckets"] = window_buckets;
    j["train_fraction"] = train_fraction;
    j["detectors"] = {
        {"warmup_seconds", detectors.warmup_seconds},
        {"min_url_len", detectors.min_url_len},
        {"rarity_threshold", detectors.rarity_threshold},
        {"max_clients", detectors.max_clients},
        {"min_recurrences", detectors.min_recurrences},
        {"min_span_buckets", detectors.min_span_buckets},
        {"connectivity_check_hostnames", detectors.connectivity_check_hostnames},
        {"fingerprint_script_names", detectors.fingerprint_script_names},
        {"suspicious_tld_regex", detectors.suspicious_tld_regex},
    };
    j["mining"] = {
        {"min_support_own", mining.min_support_own},
        {"max_support_other", mining.max_support_other},
        {"max_itemset_size", mining.max_itemset_size},
    };
    j["severity"] = severity.ranking;
    j["paths"] = {
        {"flows", paths.flows},       {"proxy", paths.proxy},
        {"endpoint", paths.endpoint}, {"labels", paths.labels},
        {"inventory", paths.inventory}, {"severity", paths.severity},
        {"out_dir", paths.out_dir},
    };
    return j.dump(2) + "\n";
}

SeverityOrder load_severity(const PipelineConfig& cfg, const std::string& severity_path) {
    if (!severity_path.empty()) {
        require_file(severity_path, "severity ranking");
        return read_severity(severity_path);
    }
    return cfg.severity;
}

ParseStats stage_ingest(const PipelineConfig& cfg, Modality modality, const std::string& in_path,
                        const std::string& out_path) {
    (void)cfg;
    require_file(in_path, to_string(modality) + " telemetry");
    ParseResult result = parse_dataset_file(modality, in_path);
    write_dataset_file(result.dataset, out_path);
    return result.stats;
}

void stage_events(const PipelineConfig& cfg, const std::string& flows_path,
                  const std::string& proxy_path, const std::string& endpoint_path,
                  const std::string& out_events) {
    require_file(flows_path, "network_flow telemetry");
    require_file(proxy_path, "proxy_log telemetry");
    require_file(endpoint_path, "endpoint telemetry");

    const Dataset flows = load_normalized(Modality::network_flow, flows_path);
    const Dataset proxy = load_normalized(Modality::proxy_log, proxy_path);
    const Dataset endpoint = load_normalized(Modality::endpoint, endpoint_path);

    DetectorRegistry registry;
    register_default_detectors(registry, cfg.detectors);
    const auto results = registry.run_all({{Modality::network_flow, &flows},
                                           {Modality::proxy_log, &proxy},
                                           {Modality::endpoint, &endpoint}});
    write_events_store(out_events, results);
}

void stage_match(const PipelineConfig& cfg, const std::string& endpoint_path,
                 const std::string& inventory_path, const std::string& events_path,
                 const std::string& out_map, const std::string& out_merged) {
    require_file(endpoint_path, "endpoint telemetry");
    const Dataset endpoint = load_normalized(Modality::endpoint, endpoint_path);

    std::vector<InventoryRecord> inventory;
    if (!inventory_path.empty()) {
        require_file(inventory_path, "inventory feed");
        inventory = read_inventory(inventory_path);
    }
    const EntityMap map = build_entity_map(endpoint, cfg.quantum_seconds, inventory);
    write_entity_map(out_map, map);

    if (!events_path.empty()) {
        require_file(events_path, "events store");
        const auto results = read_events_store(events_path);
        write_merged(out_merged, merge(results, map));
    }
}

void stage_mine(const PipelineConfig& cfg, const std::string& merged_path,
                const std::string& labels_path, const std::string& config,
                const std::string& out_rules) {
    require_file(merged_path, "merged detections");
    require_file(labels_path, "label feed");
    const MergedDetections merged = read_merged(merged_path);
    const LabelFeed labels = read_label_feed(labels_path);

    // The split is taken over the unfiltered event span so every ablation
    // configuration trains and tests on the same windows.
    const auto w_split = split_window(merged, cfg.ablation_params());
    const MergedDetections filtered = filter_by_modality(merged, ablation_modalities(config));

    std::vector<Transaction> train;
    if (w_split) {
        for (auto& t : build_transactions(filtered, cfg.window_buckets, cfg.quantum_seconds))
            if (t.window < *w_split) train.push_back(std::move(t));
    }
    write_rules(out_rules, mine_group_rules(train, labels, cfg.mining));
}

void stage_detect(const PipelineConfig& cfg, const std::string& merged_path,
                  const std::string& rules_path, const std::string& severity_path,
                  const std::string& config, const std::string& out_detections) {
    require_file(merged_path, "merged detections");
    require_file(rules_path, "rules file");
    const MergedDetections merged = read_merged(merged_path);
    const RuleSets rules = read_rules(rules_path);
    const SeverityOrder severity = load_severity(cfg, severity_path);

    const auto w_split = split_window(merged, cfg.ablation_params());
    MergedDetections test = filter_by_modality(merged, ablation_modalities(config));
    if (w_split)
        test = filter_from_window(test, *w_split, cfg.window_buckets, cfg.quantum_seconds);

    write_detections(out_detections,
                     detect(test, rules, severity, cfg.window_buckets, cfg.quantum_seconds));
}

void stage_evaluate(const PipelineConfig& cfg, const std::string& truth_path,
                    const std::string& det_endpoint, const std::string& det_network,
                    const std::string& det_combined, const std::string& out_dir) {
    require_file(truth_path, "label feed");
    const LabelFeed truth = read_label_feed(truth_path);

    AblationTable table;
    {
        std::ostringstream note;
        note << "per-entity scoring on the test half (train fraction " << cfg.train_fraction
             << " of the event span)";
        table.split_note = note.str();
    }
    const std::vector<std::pair<std::string, std::string>> inputs = {
        {"endpoint", det_endpoint}, {"network", det_network}, {"combined", det_combined}};
    for (const auto& [config, path] : inputs) {
        require_file(path, config + " detections");
        for (const auto& [family, metrics] : evaluate(read_detections(path), truth))
            table.rows[family][config] = metrics;
    }

    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "table.txt").string(), render_table_text(table));
    write_text_file((fs::path(out_dir) / "report.csv").string(), render_table_csv(table));
}

void run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& stages,
                  const std::string& out_dir) {
    std::set<std::string> selected(stages.begin(), stages.end());
    for (const auto& s : selected) {
        const auto& names = pipeline_stage_names();
        if (std::find(names.begin(), names.end(), s) == names.end())
            throw Error(ErrorKind::config, "unknown pipeline stage: " + s);
    }
    auto wanted = [&](const char* stage) { return selected.empty() || selected.count(stage) > 0; };

    const fs::path out(out_dir.empty() ? cfg.paths.out_dir : out_dir);
    fs::create_directories(out);
    auto at = [&](const std::string& name) { return (out / name).string(); };

    auto run_stage = [&](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
        }
        std::cerr << "xmodal: stage " << name << " done\n";
    };

    if (wanted("ingest"))
        run_stage("ingest", [&] {
            stage_ingest(cfg, Modality::network_flow, cfg.paths.flows,
                         at(artifacts::normalized_flows));
            stage_ingest(cfg, Modality::proxy_log, cfg.paths.proxy,
                         at(artifacts::normalized_proxy));
            stage_ingest(cfg, Modality::endpoint, cfg.paths.endpoint,
                         at(artifacts::normalized_endpoint));
        });
    if (wanted("events"))
        run_stage("events", [&] {
            stage_events(cfg, at(artifacts::normalized_flows), at(artifacts::normalized_proxy),
                         at(artifacts::normalized_endpoint), at(artifacts::events_store));
        });
    if (wanted("match"))
        run_stage("match", [&] {
            const std::string events_path =
                fs::exists(at(artifacts::events_store)) ? at(artifacts::events_store) : "";
            stage_match(cfg, at(artifacts::normalized_endpoint), cfg.paths.inventory, events_path,
                        at(artifacts::entity_map), at(artifacts::merged));
        });
    if (wanted("mine"))
        run_stage("mine", [&] {
            for (const auto& config : ablation_configs())
                stage_mine(cfg, at(artifacts::merged), cfg.paths.labels, config,
                           at(artifacts::rules(config)));
        });
    if (wanted("detect"))
        run_stage("detect", [&] {
            for (const auto& config : ablation_configs())
                stage_detect(cfg, at(artifacts::merged), at(artifacts::rules(config)),
                             cfg.paths.severity, config, at(artifacts::detections(config)));
        });
    if (wanted("evaluate"))
        run_stage("evaluate", [&] {
            stage_evaluate(cfg, cfg.paths.labels, at(artifacts::detections("endpoint")),
                           at(artifacts::detections("network")),
                           at(artifacts::detections("combined")), (out / "report").string());
        });
}

}  // namespace xmodal
