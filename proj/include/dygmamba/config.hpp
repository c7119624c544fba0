#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dygmamba/edgebank.hpp"
#include "dygmamba/model.hpp"
#include "dygmamba/nss.hpp"
#include "dygmamba/synth.hpp"
#include "dygmamba/trainer.hpp"

namespace dygmamba {

// Everything a run needs, resolvable from a flat key=value file plus CLI
// overrides (flags win). A run consumes either an on-disk dataset or an
// inline synthesis spec, never both.
struct RunConfig {
    ModelConfig model;

    std::optional<std::string> data;
    std::optional<std::string> node_features;
    std::optional<std::string> edge_features;
    std::optional<SynthSpec> synth;

    double train_ratio = 0.70;
    double val_ratio = 0.15;
    double test_ratio = 0.15;
    double unseen_fraction = 0.10;

    int epochs_max = 200;
    int patience = 20;
    int batch_size = 200;
    double lr = 1e-3;

    std::string out_dir = "out";
    std::vector<uint64_t> seeds = {0};

    Setting setting = Setting::transductive;
    NssKind nss = NssKind::random;
    std::string checkpoint;

    int edgebank_threshold = 1;

    std::vector<int> bench_lengths = {1024, 2048, 4096, 8192};
    int bench_width = 128;
    int bench_reps = 5;
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        require(pos == v.size(), ErrorKind::config, "bad number for " + key + ": '" + v + "'");
        return x;
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise(ErrorKind::config, "bad number for " + key + ": '" + v + "'");
    }
}

inline long to_long(const std::string& key, const std::string& v) {
    double x = to_double(key, v);
    long l = long(x);
    require(double(l) == x, ErrorKind::config, "expected integer for " + key + ": '" + v + "'");
    return l;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F&& conv) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(T(conv(key, item)));
    require(!out.empty(), ErrorKind::config, "empty list for " + key);
    return out;
}

}  // namespace detail

inline SynthSpec& ensure_synth(RunConfig& c) {
    if (!c.synth) c.synth = SynthSpec{};
    return *c.synth;
}

inline void apply_config_kv(RunConfig& c, const std::string& key, const std::string& value) {
    using detail::to_double;
    using detail::to_long;
    if (key == "rho") c.model.rho = int(to_long(key, value));
    else if (key == "patch") c.model.patch = int(to_long(key, value));
    else if (key == "k") c.model.k = int(to_long(key, value));
    else if (key == "d") c.model.d = int(to_long(key, value));
    else if (key == "d_ssm") c.model.d_ssm = int(to_long(key, value));
    else if (key == "gamma") c.model.gamma = to_double(key, value);
    else if (key == "l_n") c.model.l_n = int(to_long(key, value));
    else if (key == "l_t") c.model.l_t = int(to_long(key, value));
    else if (key == "d_n") c.model.d_n = int(to_long(key, value));
    else if (key == "d_e") c.model.d_e = int(to_long(key, value));
    else if (key == "d_t") c.model.d_t = int(to_long(key, value));
    else if (key == "d_f") c.model.d_f = int(to_long(key, value));
    else if (key == "dropout") c.model.dropout = to_double(key, value);
    else if (key == "variant") {
        if (value == "full") c.model.variant = Variant::full;
        else if (value == "a") c.model.variant = Variant::a;
        else if (value == "b") c.model.variant = Variant::b;
        else raise(ErrorKind::config, "variant must be full, a or b, got '" + value + "'");
    }
    else if (key == "data") c.data = value;
    else if (key == "node_features") c.node_features = value;
    else if (key == "edge_features") c.edge_features = value;
    else if (key == "synth.num_pairs") ensure_synth(c).num_pairs = int(to_long(key, value));
    else if (key == "synth.period") ensure_synth(c).period = to_double(key, value);
    else if (key == "synth.decay") ensure_synth(c).decay = to_double(key, value);
    else if (key == "synth.noise_edges") ensure_synth(c).noise_edges = int(to_long(key, value));
    else if (key == "synth.horizon") ensure_synth(c).horizon = to_double(key, value);
    else if (key == "train_ratio") c.train_ratio = to_double(key, value);
    else if (key == "val_ratio") c.val_ratio = to_double(key, value);
    else if (key == "test_ratio") c.test_ratio = to_double(key, value);
    else if (key == "unseen_fraction") c.unseen_fraction = to_double(key, value);
    else if (key == "epochs_max") c.epochs_max = int(to_long(key, value));
    else if (key == "patience") c.patience = int(to_long(key, value));
    else if (key == "batch_size") c.batch_size = int(to_long(key, value));
    else if (key == "lr") c.lr = to_double(key, value);
    else if (key == "out") c.out_dir = value;
    else if (key == "seeds") c.seeds = detail::to_list<uint64_t>(key, value, to_long);
    else if (key == "setting") c.setting = parse_setting(value);
    else if (key == "nss") c.nss = parse_nss(value);
    else if (key == "checkpoint") c.checkpoint = value;
    else if (key == "edgebank_threshold") c.edgebank_threshold = int(to_long(key, value));
    else if (key == "bench.lengths") c.bench_lengths = detail::to_list<int>(key, value, to_long);
    else if (key == "bench.width") c.bench_width = int(to_long(key, value));
    else if (key == "bench.reps") c.bench_reps = int(to_long(key, value));
    else raise(ErrorKind::config, "unknown config key '" + key + "'");
}

inline void load_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::config, "cannot open config file " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        size_t eq = line.find('=');
        require(eq != std::string::npos, ErrorKind::config,
                "config line " + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            size_t b2 = s.find_first_not_of(" \t");
            size_t e2 = s.find_last_not_of(" \t");
            return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
        };
        apply_config_kv(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

// Round-trippable snapshot of a resolved configuration.
inline std::string render_config(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "rho=" << c.model.rho << "\npatch=" << c.model.patch << "\nk=" << c.model.k
        << "\nd=" << c.model.d << "\nd_ssm=" << c.model.d_ssm << "\ngamma=" << c.model.gamma
        << "\nl_n=" << c.model.l_n << "\nl_t=" << c.model.l_t << "\nd_n=" << c.model.d_n
        << "\nd_e=" << c.model.d_e << "\nd_t=" << c.model.d_t << "\nd_f=" << c.model.d_f
        << "\ndropout=" << c.model.dropout << "\nvariant=" << variant_name(c.model.variant) << "\n";
    if (c.data) out << "data=" << *c.data << "\n";
    if (c.node_features) out << "node_features=" << *c.node_features << "\n";
    if (c.edge_features) out << "edge_features=" << *c.edge_features << "\n";
    if (c.synth) {
        out << "synth.num_pairs=" << c.synth->num_pairs << "\nsynth.period=" << c.synth->period
            << "\nsynth.decay=" << c.synth->decay << "\nsynth.noise_edges=" << c.synth->noise_edges
            << "\nsynth.horizon=" << c.synth->horizon << "\n";
    }
    out << "train_ratio=" << c.train_ratio << "\nval_ratio=" << c.val_ratio
        << "\ntest_ratio=" << c.test_ratio << "\nunseen_fraction=" << c.unseen_fraction
        << "\nepochs_max=" << c.epochs_max << "\npatience=" << c.patience
        << "\nbatch_size=" << c.batch_size << "\nlr=" << c.lr << "\nout=" << c.out_dir << "\nseeds=";
    for (size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
    out << "\nsetting=" << setting_name(c.setting) << "\nnss=" << nss_name(c.nss) << "\n";
    if (!c.checkpoint.empty()) out << "checkpoint=" << c.checkpoint << "\n";
    out << "edgebank_threshold=" << c.edgebank_threshold << "\nbench.lengths=";
    for (size_t i = 0; i < c.bench_lengths.size(); ++i) out << (i ? "," : "") << c.bench_lengths[i];
    out << "\nbench.width=" << c.bench_width << "\nbench.reps=" << c.bench_reps << "\n";
    return out.str();
}

}  // namespace dygmamba
