#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dygmamba/bench.hpp"
#include "dygmamba/checkpoint.hpp"
#include "dygmamba/config.hpp"
#include "dygmamba/edgebank.hpp"
#include "dygmamba/graph.hpp"
#include "dygmamba/synth.hpp"
#include "dygmamba/trainer.hpp"

namespace dygmamba {

namespace detail {

inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << content;
}

}  // namespace detail

inline nlohmann::json report_json(const EvalReport& r, const std::string& model_name) {
    nlohmann::json j;
    j["model"] = model_name;
    j["setting"] = setting_name(r.setting);
    j["nss"] = nss_name(r.nss);
    j["num_queries"] = r.num_queries;
    j["seed"] = r.seed;
    j["metrics_defined"] = r.metrics_defined;
    j["fallbacks"] = r.fallback_count;
    if (r.metrics_defined) {
        j["ap"] = r.ap;
        j["auc"] = r.auc;
    }
    return j;
}

struct RunData {
    TemporalGraph graph;
    DataSplit split;
    std::optional<SynthResult> synth;  // set when the dataset was synthesized
};

// Materializes the run's dataset (load or synthesize) and its chronological
// split. Synthesized streams are also written into the output directory so
// the run is reproducible from its artifacts alone.
inline RunData prepare_data(const RunConfig& cfg, bool write_artifacts) {
    require(bool(cfg.data) != bool(cfg.synth), ErrorKind::config,
            "exactly one of a dataset path or a synth spec must be configured");
    RunData d;
    if (cfg.synth) {
        SynthSpec spec = *cfg.synth;
        spec.seed = cfg.seeds.empty() ? 0 : cfg.seeds[0];
        SynthResult sr = synth_dataset(spec, cfg.model.d_n, cfg.model.d_e);
        if (write_artifacts) {
            write_edge_csv(sr.graph, cfg.out_dir + "/dataset.csv");
            nlohmann::json man;
            man["num_pairs"] = spec.num_pairs;
            man["period"] = spec.period;
            man["decay"] = spec.decay;
            man["noise_edges"] = spec.noise_edges;
            man["horizon"] = spec.horizon;
            man["seed"] = spec.seed;
            man["num_users"] = sr.num_users;
            man["num_items"] = sr.num_items;
            auto& pl = man["planted"] = nlohmann::json::array();
            for (auto [u, v] : sr.planted) pl.push_back({u, v});
            detail::write_text(cfg.out_dir + "/manifest.json", man.dump(2) + "\n");
        }
        d.graph = std::move(sr.graph);
        sr.graph = TemporalGraph{};
        d.synth = std::move(sr);
    } else {
        LoadedGraph lg = load_graph(*cfg.data, cfg.node_features, cfg.edge_features, cfg.model.d_n,
                                    cfg.model.d_e);
        if (write_artifacts) write_id_map(lg.id_map, cfg.out_dir + "/id_map.csv");
        d.graph = std::move(lg.graph);
    }
    d.split = chronological_split(d.graph, cfg.train_ratio, cfg.val_ratio, cfg.test_ratio,
                                  cfg.unseen_fraction, cfg.seeds.empty() ? 0 : cfg.seeds[0]);
    return d;
}

inline void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << "epoch,train_loss,val_ap\n";
    for (const auto& e : history)
        out << e.epoch << "," << detail::fmt_double(e.train_loss) << ","
            << detail::fmt_double(e.val_ap) << "\n";
}

inline void write_reports_jsonl(const std::vector<nlohmann::json>& lines, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    for (const auto& j : lines) out << j.dump() << "\n";
}

inline nlohmann::json aggregate_json(const std::vector<EvalReport>& reports) {
    Aggregate a = aggregate_reports(reports);
    nlohmann::json j;
    j["aggregate"] = true;
    j["runs"] = a.runs;
    j["ap_mean"] = a.ap_mean;
    j["ap_std"] = a.ap_std;
    j["auc_mean"] = a.auc_mean;
    j["auc_std"] = a.auc_std;
    return j;
}

inline int run_synth(const RunConfig& cfg) {
    require(bool(cfg.synth), ErrorKind::config, "synth command requires a synth spec");
    RunConfig c = cfg;
    c.data.reset();
    prepare_data(c, /*write_artifacts=*/true);
    return 0;
}

inline int run_train(const RunConfig& cfg) {
    RunData data = prepare_data(cfg, true);
    const bool multi = cfg.seeds.size() > 1;
    std::vector<EvalReport> reports;
    std::vector<nlohmann::json> lines;
    for (uint64_t seed : cfg.seeds) {
        ModelConfig mc = cfg.model;
        mc.seed = seed;
        Model model = Model::init(mc);
        TrainOptions opt;
        opt.epochs_max = cfg.epochs_max;
        opt.patience = cfg.patience;
        opt.batch_size = cfg.batch_size;
        opt.lr = cfg.lr;
        opt.seed = seed;
        TrainResult tr = train(model, data.graph, data.split, opt);
        const std::string suffix = multi ? "_s" + std::to_string(seed) : "";
        write_history_csv(tr.history, cfg.out_dir + "/history" + suffix + ".csv");
        save_checkpoint(model, cfg.out_dir + "/checkpoint" + suffix + ".bin");
        EvalReport r = evaluate(model, data.graph, data.split, cfg.setting, cfg.nss, seed);
        reports.push_back(r);
        nlohmann::json j = report_json(r, "dygmamba");
        j["best_epoch"] = tr.best_epoch;
        j["best_val_ap"] = tr.best_val_ap;
        lines.push_back(j);
    }
    if (multi) lines.push_back(aggregate_json(reports));
    write_reports_jsonl(lines, cfg.out_dir + "/reports.jsonl");
    return 0;
}

inline int run_eval(const RunConfig& cfg) {
    std::string ckpt = cfg.checkpoint.empty() ? cfg.out_dir + "/checkpoint.bin" : cfg.checkpoint;
    require(std::filesystem::exists(ckpt), ErrorKind::config, "checkpoint not found: " + ckpt);
    Model model = load_checkpoint(ckpt);
    RunConfig c = cfg;
    c.model = model.config;  // data dims must match the trained model
    RunData data = prepare_data(c, false);
    std::vector<EvalReport> reports;
    std::vector<nlohmann::json> lines;
    for (uint64_t seed : cfg.seeds) {
        EvalReport r = evaluate(model, data.graph, data.split, cfg.setting, cfg.nss, seed);
        reports.push_back(r);
        lines.push_back(report_json(r, "dygmamba"));
    }
    if (cfg.seeds.size() > 1) lines.push_back(aggregate_json(reports));
    write_reports_jsonl(lines, cfg.out_dir + "/reports.jsonl");
    return 0;
}

inline int run_edgebank(const RunConfig& cfg) {
    RunData data = prepare_data(cfg, true);
    std::vector<nlohmann::json> lines;
    const EdgeBankStrategy strategies[] = {EdgeBankStrategy::infinite, EdgeBankStrategy::tw_ts,
                                           EdgeBankStrategy::tw_re, EdgeBankStrategy::threshold};
    uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds[0];
    double best_ap = -1.0;
    std::string best_name;
    for (EdgeBankStrategy s : strategies) {
        EvalReport r = evaluate_edgebank(data.graph, data.split, s, cfg.setting, cfg.nss, seed,
                                         cfg.edgebank_threshold);
        nlohmann::json j = report_json(r, "edgebank");
        j["strategy"] = edgebank_strategy_name(s);
        lines.push_back(j);
        if (r.metrics_defined && r.ap > best_ap) {
            best_ap = r.ap;
            best_name = edgebank_strategy_name(s);
        }
    }
    nlohmann::json best;
    best["model"] = "edgebank";
    best["best_strategy"] = best_name;
    best["best_ap"] = best_ap;
    lines.push_back(best);
    write_reports_jsonl(lines, cfg.out_dir + "/reports.jsonl");
    return 0;
}

inline int run_bench(const RunConfig& cfg) {
    uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds[0];
    auto results = scaling_run(cfg.bench_lengths, cfg.bench_width, cfg.bench_reps, seed);
    write_bench_csv(results, cfg.out_dir + "/bench.csv");
    for (const auto& r : results)
        std::cout << r.kernel << " L=" << r.seq_len << " median_ns=" << detail::fmt_double(r.median_ns)
                  << "\n";
    return 0;
}

// Dispatch with the documented exit-code contract: 0 success, 1 runtime
// failure, 2 usage/config error. Failures leave a machine-readable record in
// the output directory.
inline int run_command(const std::string& command, const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    try {
        detail::write_text(cfg.out_dir + "/resolved_config.txt", render_config(cfg));
        if (command == "synth") return run_synth(cfg);
        if (command == "train") return run_train(cfg);
        if (command == "eval") return run_eval(cfg);
        if (command == "edgebank") return run_edgebank(cfg);
        if (command == "bench") return run_bench(cfg);
        raise(ErrorKind::config, "unknown command '" + command + "'");
    } catch (const Error& e) {
        nlohmann::json rec;
        rec["error"]["kind"] = e.kind_name();
        rec["error"]["message"] = e.what();
        std::ofstream out(cfg.out_dir + "/error.json");
        if (out.good()) out << rec.dump(2) << "\n";
        std::cerr << "error (" << e.kind_name() << "): " << e.what() << "\n";
        return e.kind() == ErrorKind::config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dygmamba
