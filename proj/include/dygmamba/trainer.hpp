#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dygmamba/graph.hpp"
#include "dygmamba/metrics.hpp"
#include "dygmamba/model.hpp"
#include "dygmamba/nss.hpp"
#include "dygmamba/optim.hpp"

namespace dygmamba {

enum class Setting { transductive, inductive };

inline const char* setting_name(Setting s) {
    return s == Setting::transductive ? "transductive" : "inductive";
}

inline Setting parse_setting(const std::string& s) {
    if (s == "transductive") return Setting::transductive;
    if (s == "inductive") return Setting::inductive;
    raise(ErrorKind::config, "unknown setting '" + s + "'");
}

struct EvalReport {
    Setting setting = Setting::transductive;
    NssKind nss = NssKind::random;
    double ap = 0.0;
    double auc = 0.0;
    int num_queries = 0;
    uint64_t seed = 0;
    bool metrics_defined = true;
    int fallback_count = 0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_ap = 0.0;
};

struct TrainOptions {
    int epochs_max = 200;
    int patience = 20;
    int batch_size = 200;
    double lr = 1e-3;
    uint64_t seed = 0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_ap = 0.0;
};

inline std::vector<Query> range_queries(const TemporalGraph& g, int32_t begin, int32_t end) {
    std::vector<Query> out;
    out.reserve(size_t(end - begin));
    for (int32_t i = begin; i < end; ++i)
        out.push_back({g.interactions[i].src, g.interactions[i].dst, g.interactions[i].ts});
    return out;
}

// Scores a query set with 1/0 labels. Each positive is immediately followed
// by its negative, so query times stay monotone for replay-based scorers and
// tied scores interleave both classes instead of favoring one.
template <typename Scorer>
inline std::pair<std::vector<double>, std::vector<int>> score_queries(
    Scorer&& scorer, const std::vector<Query>& positives, const std::vector<NegativeSample>& negatives) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(positives.size() * 2);
    labels.reserve(positives.size() * 2);
    for (size_t i = 0; i < positives.size(); ++i) {
        scores.push_back(scorer(positives[i]));
        labels.push_back(1);
        scores.push_back(scorer(negatives[i].q));
        labels.push_back(0);
    }
    return {std::move(scores), std::move(labels)};
}

// Chronological mini-batch training with one random negative per positive,
// per-epoch validation (random NSS AP on the validation span, negatives fixed
// at start), and best-checkpoint early stopping: training stops once the
// number of consecutive non-improving epochs exceeds `patience`. The optional
// watch callback sees every interaction index the loop touches.
inline TrainResult train(Model& model, const TemporalGraph& g, const DataSplit& split,
                         const TrainOptions& opt,
                         const std::function<void(int32_t)>& watch = nullptr) {
    require(split.train_end > 0 && split.val_end > split.train_end, ErrorKind::config,
            "train: split has empty train or validation range");
    require(opt.batch_size >= 1 && opt.epochs_max >= 1 && opt.patience >= 0, ErrorKind::config,
            "train: bad options");

    Adam optimizer(model.parameters(), AdamConfig{opt.lr});
    NegativeSampler sampler(g, split);
    Rng run_rng(opt.seed);

    std::vector<Query> val_pos = range_queries(g, split.train_end, split.val_end);
    auto val_neg = sampler.sample(NssKind::random, val_pos, run_rng.fork(1).seed());
    if (watch)
        for (int32_t i = split.train_end; i < split.val_end; ++i) watch(i);

    std::vector<Tensor> best_params;
    auto snapshot = [&] {
        best_params.clear();
        for (Parameter* p : model.parameters()) best_params.push_back(p->value);
    };

    TrainResult result;
    result.best_val_ap = -1.0;
    int non_improving = 0;
    for (int epoch = 1; epoch <= opt.epochs_max; ++epoch) {
        double loss_sum = 0.0;
        int batches = 0;
        uint64_t epoch_seed = run_rng.fork(1000 + uint64_t(epoch)).seed();
        for (int32_t begin = 0; begin < split.train_end; begin += opt.batch_size) {
            const int32_t end = std::min(split.train_end, begin + opt.batch_size);
            std::vector<Query> pos = range_queries(g, begin, end);
            if (watch)
                for (int32_t i = begin; i < end; ++i) watch(i);
            auto neg = sampler.sample(NssKind::random, pos, epoch_seed + uint64_t(begin));
            std::vector<Query> negq;
            negq.reserve(neg.size());
            for (auto& n : neg) negq.push_back(n.q);
            optimizer.zero_grad();
            double loss = model.batch_loss(g, pos, negq, /*with_grad=*/true, /*training=*/true);
            if (!std::isfinite(loss))
                raise(ErrorKind::numeric, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                              " batch " + std::to_string(batches));
            optimizer.step();
            loss_sum += loss;
            ++batches;
        }

        auto [scores, labels] = score_queries(
            [&](const Query& q) { return model.predict(g, q.u, q.v, q.ts); }, val_pos, val_neg);
        double val_ap = average_precision(scores, labels);
        result.history.push_back({epoch, loss_sum / std::max(1, batches), val_ap});

        if (val_ap > result.best_val_ap) {
            result.best_val_ap = val_ap;
            result.best_epoch = epoch;
            non_improving = 0;
            snapshot();
        } else if (++non_improving > opt.patience) {
            break;
        }
    }

    auto params = model.parameters();
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_params[i];
    return result;
}

// Scores the test span under a setting/NSS combination. Inductive keeps only
// positives touching an unseen node; historical NSS is undefined there (it
// coincides with inductive NSS), so the combination is rejected.
template <typename Scorer>
inline EvalReport evaluate_with(Scorer&& scorer, const TemporalGraph& g, const DataSplit& split,
                                Setting setting, NssKind nss, uint64_t seed) {
    require(!(setting == Setting::inductive && nss == NssKind::historical), ErrorKind::config,
            "historical NSS is not defined for the inductive setting");
    std::vector<Query> pos;
    for (int32_t i = split.val_end; i < split.size; ++i) {
        const auto& e = g.interactions[i];
        if (setting == Setting::inductive && !split.is_unseen(e.src) && !split.is_unseen(e.dst))
            continue;
        pos.push_back({e.src, e.dst, e.ts});
    }
    EvalReport r;
    r.setting = setting;
    r.nss = nss;
    r.seed = seed;
    r.num_queries = int(pos.size());
    if (pos.empty()) {
        r.metrics_defined = false;
        return r;
    }
    NegativeSampler sampler(g, split);
    auto neg = sampler.sample(nss, pos, seed);
    for (const auto& n : neg) r.fallback_count += n.fallback;
    auto [scores, labels] = score_queries(scorer, pos, neg);
    r.ap = average_precision(scores, labels);
    r.auc = auc_roc(scores, labels);
    return r;
}

inline EvalReport evaluate(Model& model, const TemporalGraph& g, const DataSplit& split,
                           Setting setting, NssKind nss, uint64_t seed) {
    return evaluate_with([&](const Query& q) { return model.predict(g, q.u, q.v, q.ts); }, g, split,
                         setting, nss, seed);
}

struct Aggregate {
    double ap_mean = 0.0, ap_std = 0.0;
    double auc_mean = 0.0, auc_std = 0.0;
    int runs = 0;
};

inline Aggregate aggregate_reports(const std::vector<EvalReport>& reports) {
    Aggregate a;
    for (const auto& r : reports) {
        if (!r.metrics_defined) continue;
        a.ap_mean += r.ap;
        a.auc_mean += r.auc;
        ++a.runs;
    }
    if (a.runs == 0) return a;
    a.ap_mean /= a.runs;
    a.auc_mean /= a.runs;
    for (const auto& r : reports) {
        if (!r.metrics_defined) continue;
        a.ap_std += (r.ap - a.ap_mean) * (r.ap - a.ap_mean);
        a.auc_std += (r.auc - a.auc_mean) * (r.auc - a.auc_mean);
    }
    a.ap_std = std::sqrt(a.ap_std / a.runs);
    a.auc_std = std::sqrt(a.auc_std / a.runs);
    return a;
}

}  // namespace dygmamba
