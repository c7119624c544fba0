#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "dygmamba/errors.hpp"

namespace dygmamba {

// Mean, over the positives taken in descending-score order, of the precision
// at each positive's rank. Ties keep their input order (stable sort).
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), ErrorKind::dimension, "average_precision: size mismatch");
    require(!scores.empty(), ErrorKind::metric, "average_precision: empty input");
    int num_pos = 0;
    for (int l : labels) num_pos += l != 0;
    require(num_pos > 0, ErrorKind::metric, "average_precision: no positive labels");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    int hits = 0;
    for (size_t r = 0; r < order.size(); ++r) {
        if (labels[order[r]] != 0) {
            ++hits;
            sum += double(hits) / double(r + 1);
        }
    }
    return sum / num_pos;
}

// Exact Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(equal), computed
// via average ranks so ties contribute exactly one half.
inline double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size(), ErrorKind::dimension, "auc_roc: size mismatch");
    int num_pos = 0, num_neg = 0;
    for (int l : labels) (l != 0 ? num_pos : num_neg)++;
    require(num_pos > 0 && num_neg > 0, ErrorKind::metric,
            "auc_roc: need at least one positive and one negative");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * double(i + 1 + j);  // mean of ranks i+1..j
        for (size_t m = i; m < j; ++m)
            if (labels[order[m]] != 0) rank_sum_pos += avg_rank;
        i = j;
    }
    return (rank_sum_pos - double(num_pos) * (num_pos + 1) / 2.0) / (double(num_pos) * num_neg);
}

}  // namespace dygmamba
