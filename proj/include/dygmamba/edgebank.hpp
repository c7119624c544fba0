#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "dygmamba/graph.hpp"
#include "dygmamba/nss.hpp"
#include "dygmamba/trainer.hpp"

namespace dygmamba {

enum class EdgeBankStrategy { infinite, tw_ts, tw_re, threshold };

inline const char* edgebank_strategy_name(EdgeBankStrategy s) {
    switch (s) {
        case EdgeBankStrategy::infinite: return "infinite";
        case EdgeBankStrategy::tw_ts: return "tw_ts";
        case EdgeBankStrategy::tw_re: return "tw_re";
        case EdgeBankStrategy::threshold: return "threshold";
    }
    return "?";
}

// Pure-memory link predictor. Feeds on the stream chronologically and
// predicts 1 iff the queried pair survives the strategy's retention rule:
//   infinite  - ever observed
//   tw_ts     - last observation within a fixed window (test duration)
//   tw_re     - window is the running average gap of repeated edges
//   threshold - observed more than `thresh` times
class EdgeMemory {
public:
    explicit EdgeMemory(EdgeBankStrategy strategy, double window = 0.0, int thresh = 1)
        : strategy_(strategy), window_(window), thresh_(thresh) {}

    void observe(const Interaction& e) {
        require(e.ts >= last_ts_, ErrorKind::order, "edgebank: out-of-order interaction");
        last_ts_ = e.ts;
        uint64_t key = detail::pair_key(e.src, e.dst);
        auto [it, inserted] = store_.try_emplace(key, Entry{e.ts, 1});
        if (!inserted) {
            gap_sum_ += e.ts - it->second.last_ts;
            ++gap_count_;
            it->second.last_ts = e.ts;
            ++it->second.count;
        }
    }

    int predict(NodeId u, NodeId v, double t) const {
        auto it = store_.find(detail::pair_key(u, v));
        if (it == store_.end()) return 0;
        switch (strategy_) {
            case EdgeBankStrategy::infinite:
                return 1;
            case EdgeBankStrategy::tw_ts:
                return it->second.last_ts >= t - window_ ? 1 : 0;
            case EdgeBankStrategy::tw_re: {
                double w = gap_count_ > 0 ? gap_sum_ / gap_count_
                                          : std::numeric_limits<double>::infinity();
                return it->second.last_ts >= t - w ? 1 : 0;
            }
            case EdgeBankStrategy::threshold:
                return it->second.count > thresh_ ? 1 : 0;
        }
        return 0;
    }

    double repeat_window() const {
        return gap_count_ > 0 ? gap_sum_ / gap_count_ : std::numeric_limits<double>::infinity();
    }

private:
    struct Entry {
        double last_ts;
        int count;
    };
    EdgeBankStrategy strategy_;
    double window_;
    int thresh_;
    std::unordered_map<uint64_t, Entry> store_;
    double gap_sum_ = 0.0;
    long gap_count_ = 0;
    double last_ts_ = -std::numeric_limits<double>::infinity();
};

// Replays the stream up to each test query and scores positives plus sampled
// negatives, sharing the trainer's report shape. The tw_ts window is the test
// span duration.
inline EvalReport evaluate_edgebank(const TemporalGraph& g, const DataSplit& split,
                                    EdgeBankStrategy strategy, Setting setting, NssKind nss,
                                    uint64_t seed, int thresh = 1) {
    double window = 0.0;
    if (!g.interactions.empty() && split.val_end < split.size)
        window = g.interactions.back().ts - g.interactions[split.val_end].ts;
    EdgeMemory mem(strategy, window, thresh);
    int32_t fed = 0;
    auto scorer = [&](const Query& q) {
        while (fed < split.size && g.interactions[fed].ts < q.ts) mem.observe(g.interactions[fed++]);
        return double(mem.predict(q.u, q.v, q.ts));
    };
    // score_queries interleaves each positive with its negative, so query
    // times are monotone and the replay never observes past a query.
    return evaluate_with(scorer, g, split, setting, nss, seed);
}

}  // namespace dygmamba
