#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <utility>
#include <vector>

#include "c2df/core.hpp"
#include "c2df/patching.hpp"

namespace c2df {

// Pearson correlation with population statistics; 0 when either input has no
// variance. Invariant under positive affine rescaling of either argument.
inline double corr_coeff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    require(a.size() == b.size(), "corr_coeff: length mismatch");
    require(a.size() >= 2, "corr_coeff: need at least two samples");
    const double ma = a.mean(), mb = b.mean();
    const Eigen::VectorXd da = a.array() - ma;
    const Eigen::VectorXd db = b.array() - mb;
    const double na = da.norm(), nb = db.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double r = da.dot(db) / (na * nb);
    return std::clamp(r, -1.0, 1.0);
}

// Patches similar to an anchor. The anchor always belongs to its own set and
// carries correlation 1; weights are the normalized absolute correlations.
struct NeighborSet {
    int anchor = -1;
    std::vector<int> members;     // anchor first, then decreasing |r|
    std::vector<double> abs_corr;
    std::vector<double> weights;  // sums to 1
};

// Optional spatial restriction of the candidate pool (Chebyshev distance
// between patch centers).
struct SearchWindow {
    bool enabled = false;
    int radius = 0;
};

namespace detail {

// Assembles a NeighborSet from per-candidate correlations. `hits` holds
// (|r|, index) pairs that already passed the epsilon test, anchor excluded.
inline NeighborSet assemble_neighbors(int anchor, std::vector<std::pair<double, int>>&& hits,
                                      int max_neighbors) {
    std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    if (static_cast<int>(hits.size()) > max_neighbors - 1)
        hits.resize(static_cast<size_t>(max_neighbors - 1));

    NeighborSet ns;
    ns.anchor = anchor;
    ns.members.reserve(hits.size() + 1);
    ns.abs_corr.reserve(hits.size() + 1);
    ns.members.push_back(anchor);
    ns.abs_corr.push_back(1.0);
    double wsum = 1.0;
    for (const auto& [absr, i] : hits) {
        ns.members.push_back(i);
        ns.abs_corr.push_back(absr);
        wsum += absr;
    }
    ns.weights.resize(ns.members.size());
    for (size_t t = 0; t < ns.weights.size(); ++t) ns.weights[t] = ns.abs_corr[t] / wsum;
    return ns;
}

// Search restricted to an explicit candidate list (used for windowed search,
// where the caller enumerates the indices inside the window).
inline NeighborSet find_neighbors_among(const Eigen::MatrixXd& standardized, int anchor,
                                        double epsilon, int max_neighbors,
                                        const std::vector<int>& candidates) {
    const Eigen::VectorXd z = standardized.col(anchor);
    std::vector<std::pair<double, int>> hits;
    for (int i : candidates) {
        if (i == anchor) continue;
        const double r = std::clamp(z.dot(standardized.col(i)), -1.0, 1.0);
        if (std::abs(r) >= epsilon) hits.emplace_back(std::abs(r), i);
    }
    return assemble_neighbors(anchor, std::move(hits), max_neighbors);
}

// Full scan over all columns, done as one matrix-vector product.
inline NeighborSet find_neighbors_all(const Eigen::MatrixXd& standardized, int anchor,
                                      double epsilon, int max_neighbors) {
    const Eigen::VectorXd scores = standardized.transpose() * standardized.col(anchor);
    std::vector<std::pair<double, int>> hits;
    for (int i = 0; i < scores.size(); ++i) {
        if (i == anchor) continue;
        const double a = std::min(std::abs(scores[i]), 1.0);
        if (a >= epsilon) hits.emplace_back(a, i);
    }
    return assemble_neighbors(anchor, std::move(hits), max_neighbors);
}

}  // namespace detail

inline NeighborSet find_neighbors(const PatchSet& patches, int anchor, double epsilon,
                                  int max_neighbors, const SearchWindow& window = {}) {
    const int K = static_cast<int>(patches.standardized.cols());
    require(anchor >= 0 && anchor < K, "neighbor search: anchor out of range");
    require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0,1]");
    require(max_neighbors >= 1, "max_neighbors must be >= 1");
    if (!window.enabled)
        return detail::find_neighbors_all(patches.standardized, anchor, epsilon, max_neighbors);

    const auto [ar, ac] = patches.origin[anchor];
    const int r0 = std::max(0, ar - window.radius), r1 = std::min(patches.rows - 1, ar + window.radius);
    const int c0 = std::max(0, ac - window.radius), c1 = std::min(patches.cols - 1, ac + window.radius);
    std::vector<int> cand;
    cand.reserve(static_cast<size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) cand.push_back(r * patches.cols + c);
    return detail::find_neighbors_among(patches.standardized, anchor, epsilon, max_neighbors, cand);
}

}  // namespace c2df
