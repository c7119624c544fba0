#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "dygmamba/graph.hpp"
#include "dygmamba/model.hpp"
#include "dygmamba/rng.hpp"

namespace dygmamba {

enum class NssKind { random, historical, inductive };

inline const char* nss_name(NssKind k) {
    switch (k) {
        case NssKind::random: return "random";
        case NssKind::historical: return "historical";
        case NssKind::inductive: return "inductive";
    }
    return "?";
}

inline NssKind parse_nss(const std::string& s) {
    if (s == "random") return NssKind::random;
    if (s == "historical") return NssKind::historical;
    if (s == "inductive") return NssKind::inductive;
    raise(ErrorKind::config, "unknown negative sampling strategy '" + s + "'");
}

struct NegativeSample {
    Query q;
    bool fallback = false;    // strategy pool was empty, random used instead
    bool degenerate = false;  // only candidate equals the positive
};

namespace detail {
inline uint64_t pair_key(NodeId a, NodeId b) {
    return (uint64_t(uint32_t(a)) << 32) | uint32_t(b);
}
}  // namespace detail

// One negative per positive. Random corrupts the destination uniformly over
// the graph's destination universe; historical draws a (src, dst) pair
// observed strictly before t but absent at t; inductive draws a pair observed
// in the evaluation span (after the training boundary) before t and never
// during training. Empty pools fall back to random with a flag. Positives
// must be fed in chronological order (the pools replay the stream).
class NegativeSampler {
public:
    NegativeSampler(const TemporalGraph& g, const DataSplit& split)
        : g_(g), split_(split) {
        std::unordered_set<NodeId> dsts;
        for (const auto& e : g.interactions) dsts.insert(e.dst);
        dst_universe_.assign(dsts.begin(), dsts.end());
        std::sort(dst_universe_.begin(), dst_universe_.end());
        require(!dst_universe_.empty(), ErrorKind::sampling, "empty destination universe");
        for (int32_t i = 0; i < split.train_end; ++i) {
            const auto& e = g.interactions[i];
            train_pairs_.insert(detail::pair_key(e.src, e.dst));
        }
    }

    std::vector<NegativeSample> sample(NssKind kind, const std::vector<Query>& positives,
                                       uint64_t seed) {
        Rng rng(splitmix64(seed ^ 0x6e6567ULL));
        std::vector<NegativeSample> out;
        out.reserve(positives.size());
        reset_replay(kind);
        double prev_t = -1.0;
        for (const Query& pos : positives) {
            require(pos.ts >= prev_t, ErrorKind::order, "negative sampling: positives out of order");
            prev_t = pos.ts;
            advance(kind, pos.ts);
            out.push_back(sample_one(kind, pos, rng));
        }
        return out;
    }

private:
    void reset_replay(NssKind kind) {
        pool_.clear();
        pool_set_.clear();
        at_t_.clear();
        replay_pos_ = kind == NssKind::inductive ? split_.train_end : 0;
        at_t_ts_ = -1.0;
    }

    void advance(NssKind kind, double t) {
        if (kind == NssKind::random) return;
        const int32_t n = int32_t(g_.interactions.size());
        while (replay_pos_ < n && g_.interactions[replay_pos_].ts < t) {
            const auto& e = g_.interactions[replay_pos_];
            uint64_t key = detail::pair_key(e.src, e.dst);
            bool eligible = kind == NssKind::historical || !train_pairs_.count(key);
            if (eligible && pool_set_.insert(key).second) pool_.push_back({e.src, e.dst});
            ++replay_pos_;
        }
        if (at_t_ts_ != t) {
            at_t_.clear();
            at_t_ts_ = t;
            for (int32_t i = replay_pos_; i < n && g_.interactions[i].ts == t; ++i)
                at_t_.insert(detail::pair_key(g_.interactions[i].src, g_.interactions[i].dst));
        }
    }

    NegativeSample sample_one(NssKind kind, const Query& pos, Rng& rng) {
        if (kind != NssKind::random && !pool_.empty()) {
            for (int tries = 0; tries < 64; ++tries) {
                const auto& pr = pool_[size_t(rng.uniform_index(pool_.size()))];
                if (at_t_.count(detail::pair_key(pr.first, pr.second))) continue;
                return NegativeSample{Query{pr.first, pr.second, pos.ts}};
            }
            // pool saturated by pairs occurring at t; fall through to random
        }
        NegativeSample ns = random_negative(pos, rng);
        ns.fallback = kind != NssKind::random;
        return ns;
    }

    NegativeSample random_negative(const Query& pos, Rng& rng) {
        NegativeSample ns;
        if (dst_universe_.size() == 1) {
            ns.q = Query{pos.u, dst_universe_[0], pos.ts};
            ns.degenerate = dst_universe_[0] == pos.v;
            return ns;
        }
        for (;;) {
            NodeId v = dst_universe_[size_t(rng.uniform_index(dst_universe_.size()))];
            if (v == pos.v) continue;
            ns.q = Query{pos.u, v, pos.ts};
            return ns;
        }
    }

    const TemporalGraph& g_;
    const DataSplit& split_;
    std::vector<NodeId> dst_universe_;
    std::unordered_set<uint64_t> train_pairs_;
    std::vector<std::pair<NodeId, NodeId>> pool_;
    std::unordered_set<uint64_t> pool_set_;
    std::unordered_set<uint64_t> at_t_;
    double at_t_ts_ = -1.0;
    int32_t replay_pos_ = 0;
};

}  // namespace dygmamba
