// xmodal command line front end. Talks to the engine exclusively through the
// C API in xmodal/xmodal.h; all heavy lifting lives in the shared library.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xmodal/xmodal.h"

namespace {

// 0 success, 1 runtime failure, 2 usage/config error.
int exit_code_of(xm_status status) {
    switch (status) {
        case XM_OK: return 0;
        case XM_ERR_CONFIG:
        case XM_ERR_INVALID_ARGUMENT: return 2;
        default: return 1;
    }
}

int finish(xm_pipeline* p, xm_status status, const char* verb) {
    if (status != XM_OK)
        std::fprintf(stderr, "xmodal: %s failed: %s\n", verb, xm_last_error(p));
    return exit_code_of(status);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xmodal - multi-modal security detection engine"};
    app.require_subcommand(0, 1);
    app.failure_message(CLI::FailureMessage::help);

    std::string config_path;
    app.add_option("--config", config_path, "pipeline config JSON file")
        ->envname("XMODAL_CONFIG");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate synthetic telemetry");
    std::string sim_config, sim_out_dir = "simdata";
    simulate->add_option("--config", sim_config, "simulation config JSON file");
    simulate->add_option("--out-dir", sim_out_dir, "output directory")->required();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse and normalize one modality");
    std::string ingest_modality, ingest_in, ingest_out;
    ingest->add_option("--modality", ingest_modality, "network_flow|proxy_log|endpoint")
        ->required();
    ingest->add_option("--in", ingest_in, "raw telemetry JSONL")->required();
    ingest->add_option("--out", ingest_out, "normalized output JSONL")->required();

    // events
    auto* events = app.add_subcommand("events", "event dictionary / unimodal detector runs");
    bool events_list = false;
    std::string ev_flows, ev_proxy, ev_endpoint, ev_out;
    events->add_flag("--list", events_list, "print the event dictionary as JSON");
    events->add_option("--flows", ev_flows, "normalized network_flow JSONL");
    events->add_option("--proxy", ev_proxy, "normalized proxy_log JSONL");
    events->add_option("--endpoint", ev_endpoint, "normalized endpoint JSONL");
    events->add_option("--out", ev_out, "events store output JSONL");

    // match
    auto* match = app.add_subcommand("match", "entity matching");
    std::string match_endpoint, match_inventory, match_events, match_map = "entity_map.json",
                match_merged = "merged.jsonl";
    std::uint64_t match_quantum = 0;
    match->add_option("--endpoint", match_endpoint, "normalized endpoint JSONL")->required();
    match->add_option("--inventory", match_inventory, "optional inventory JSONL");
    match->add_option("--events", match_events, "events store to merge");
    match->add_option("--out-map", match_map, "entity map output");
    match->add_option("--out-merged", match_merged, "merged detections output");
    match->add_option("--quantum", match_quantum, "time quantum override (seconds)");

    // mine
    auto* mine = app.add_subcommand("mine", "mine group-discriminative rules");
    std::string mine_merged, mine_labels, mine_out = "rules.json", mine_config = "combined";
    mine->add_option("--merged", mine_merged, "merged detections JSONL")->required();
    mine->add_option("--labels", mine_labels, "label feed JSONL")->required();
    mine->add_option("--modalities", mine_config, "endpoint|network|combined");
    mine->add_option("--out", mine_out, "rules output JSON");

    // detect
    auto* detect = app.add_subcommand("detect", "multi-modal detection");
    std::string det_merged, det_rules, det_severity, det_out = "detections.jsonl",
                det_config = "combined";
    detect->add_option("--merged", det_merged, "merged detections JSONL")->required();
    detect->add_option("--rules", det_rules, "rules JSON")->required();
    detect->add_option("--severity", det_severity, "severity ranking JSON");
    detect->add_option("--modalities", det_config, "endpoint|network|combined");
    detect->add_option("--out", det_out, "detections output JSONL");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score detections against ground truth");
    std::vector<std::string> eval_detections;
    std::string eval_truth, eval_out = "report";
    evaluate
        ->add_option("--detections", eval_detections,
                     "per-config files: endpoint=<path> network=<path> combined=<path>")
        ->required()
        ->expected(3);
    evaluate->add_option("--truth", eval_truth, "ground-truth label feed")->required();
    evaluate->add_option("--out", eval_out, "report output directory");

    // run
    auto* run = app.add_subcommand("run", "run the staged pipeline");
    std::string run_stages, run_out_dir;
    run->add_option("--stages", run_stages, "comma-separated subset of "
                                            "ingest,events,match,mine,detect,evaluate");
    run->add_option("--out-dir", run_out_dir, "artifact directory (default: config out_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (app.get_subcommands().empty()) {
        std::fputs(app.help().c_str(), stderr);
        return 2;
    }

    xm_pipeline* p = nullptr;
    xm_status st = xm_pipeline_create(opt(config_path), &p);
    if (st != XM_OK) {
        std::fprintf(stderr, "xmodal: cannot load config %s\n", config_path.c_str());
        return exit_code_of(st);
    }
    std::unique_ptr<xm_pipeline, decltype(&xm_pipeline_destroy)> guard(p, &xm_pipeline_destroy);

    if (simulate->parsed())
        return finish(p, xm_simulate(p, opt(sim_config), sim_out_dir.c_str()), "simulate");

    if (ingest->parsed()) {
        char* stats = nullptr;
        st = xm_ingest(p, ingest_modality.c_str(), ingest_in.c_str(), ingest_out.c_str(),
                       &stats);
        if (st == XM_OK && stats) {
            std::printf("%s\n", stats);
            xm_string_free(stats);
        }
        return finish(p, st, "ingest");
    }

    if (events->parsed()) {
        if (events_list) {
            char* json = nullptr;
            st = xm_events_dictionary(p, &json);
            if (st == XM_OK && json) {
                std::fputs(json, stdout);
                xm_string_free(json);
            }
            return finish(p, st, "events --list");
        }
        if (ev_flows.empty() || ev_proxy.empty() || ev_endpoint.empty() || ev_out.empty()) {
            std::fputs("xmodal: events needs --list or all of --flows --proxy --endpoint --out\n",
                       stderr);
            return 2;
        }
        return finish(p,
                      xm_run_detectors(p, ev_flows.c_str(), ev_proxy.c_str(),
                                       ev_endpoint.c_str(), ev_out.c_str()),
                      "events");
    }

    if (match->parsed()) {
        if (match_quantum != 0) {
            st = xm_set_quantum(p, match_quantum);
            if (st != XM_OK) return finish(p, st, "match");
        }
        return finish(p,
                      xm_match(p, match_endpoint.c_str(), opt(match_inventory),
                               opt(match_events), match_map.c_str(), match_merged.c_str()),
                      "match");
    }

    if (mine->parsed())
        return finish(p,
                      xm_mine(p, mine_merged.c_str(), mine_labels.c_str(), mine_config.c_str(),
                              mine_out.c_str()),
                      "mine");

    if (detect->parsed())
        return finish(p,
                      xm_detect(p, det_merged.c_str(), det_rules.c_str(), opt(det_severity),
                                det_config.c_str(), det_out.c_str()),
                      "detect");

    if (evaluate->parsed()) {
        std::string by_config[3];  // endpoint, network, combined
        for (const auto& spec : eval_detections) {
            const auto eq = spec.find('=');
            const std::string key = eq == std::string::npos ? "" : spec.substr(0, eq);
            const std::string path = eq == std::string::npos ? "" : spec.substr(eq + 1);
            if (key == "endpoint")
                by_config[0] = path;
            else if (key == "network")
                by_config[1] = path;
            else if (key == "combined")
                by_config[2] = path;
            else {
                std::fprintf(stderr, "xmodal: bad --detections entry '%s'\n", spec.c_str());
                return 2;
            }
        }
        if (by_config[0].empty() || by_config[1].empty() || by_config[2].empty()) {
            std::fputs("xmodal: --detections needs endpoint=, network= and combined= entries\n",
                       stderr);
            return 2;
        }
        return finish(p,
                      xm_evaluate(p, eval_truth.c_str(), by_config[0].c_str(),
                                  by_config[1].c_str(), by_config[2].c_str(), eval_out.c_str()),
                      "evaluate");
    }

    if (run->parsed())
        return finish(p, xm_run_pipeline(p, opt(run_stages), opt(run_out_dir)), "run");

    std::fputs(app.help().c_str(), stderr);
    return 2;
}
