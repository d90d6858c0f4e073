#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "c2df/core.hpp"
#include "c2df/dict.hpp"

namespace c2df {

// Independent Bernoulli activity prior over dictionary atoms. Probabilities
// are clamped away from {0,1} so no support is ever impossible.
struct SparsePrior {
    Eigen::VectorXd tap_probs;
    Eigen::VectorXd logit;     // log p - log(1-p), per atom
    double base_log = 0.0;     // sum_j log(1 - p_j), the empty-support prior

    static SparsePrior from_probs(Eigen::VectorXd probs, double prob_floor) {
        require(probs.size() > 0, "prior: empty probability vector");
        require(prob_floor > 0.0 && prob_floor < 0.5, "prior: floor must lie in (0, 0.5)");
        SparsePrior pr;
        pr.tap_probs = std::move(probs);
        pr.logit.resize(pr.tap_probs.size());
        for (Eigen::Index j = 0; j < pr.tap_probs.size(); ++j) {
            double p = std::clamp(pr.tap_probs[j], prob_floor, 1.0 - prob_floor);
            pr.tap_probs[j] = p;
            pr.logit[j] = std::log(p) - std::log1p(-p);
            pr.base_log += std::log1p(-p);
        }
        return pr;
    }

    static SparsePrior uniform(int num_atoms, double p, double prob_floor) {
        require(num_atoms > 0, "prior: need at least one atom");
        return from_probs(Eigen::VectorXd::Constant(num_atoms, p), prob_floor);
    }
};

struct SolverParams {
    int max_support = 8;              // deepest support size explored
    int branch_width = 4;             // beam width and per-node branching
    double delta_log = std::log(1e3); // posterior window kept around the best
};

struct SupportCandidate {
    std::vector<int> support;       // strictly increasing atom indices
    double log_posterior = 0.0;     // unnormalized log p(S | y)
    double posterior = 0.0;         // normalized within the dominant set
    Eigen::VectorXd blue_coeffs;    // aligned with `support`
};

struct SparseEstimate {
    Eigen::VectorXd coeffs;        // posterior mixture of the candidates' BLUEs
    Eigen::VectorXd active_probs;  // per-atom posterior inclusion mass
    std::vector<SupportCandidate> candidates;  // descending posterior
};

namespace detail {

// Pivot floor for Cholesky on unit-diagonal Gram submatrices; a pivot at or
// below it marks the support as numerically rank deficient.
constexpr double kPivotTol = 1e-10;

inline std::optional<Eigen::VectorXd> cholesky_solve(Eigen::MatrixXd g, Eigen::VectorXd rhs) {
    const Eigen::Index n = g.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = g(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= g(j, k) * g(j, k);
        if (d <= kPivotTol) return std::nullopt;
        g(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = g(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= g(i, k) * g(j, k);
            g(i, j) = s / g(j, j);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = rhs[i];
        for (Eigen::Index k = 0; k < i; ++k) s -= g(i, k) * rhs[k];
        rhs[i] = s / g(i, i);
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        double s = rhs[i];
        for (Eigen::Index k = i + 1; k < n; ++k) s -= g(k, i) * rhs[k];
        rhs[i] = s / g(i, i);
    }
    return rhs;
}

inline void check_support(const Dictionary& dict, const std::vector<int>& support) {
    for (int j : support)
        require(j >= 0 && j < dict.num_atoms(), "support index out of range");
}

}  // namespace detail

// Best linear unbiased estimate of the coefficients on a fixed support:
// solves the normal equations restricted to the chosen atoms.
inline Eigen::VectorXd blue_estimate(const Dictionary& dict, const std::vector<int>& support,
                                     const Eigen::VectorXd& y) {
    require(!support.empty(), "blue_estimate: empty support");
    require(y.size() == dict.atom_len(), "blue_estimate: signal length mismatch");
    detail::check_support(dict, support);
    const int s = static_cast<int>(support.size());
    Eigen::MatrixXd g(s, s);
    Eigen::VectorXd c(s);
    for (int i = 0; i < s; ++i) {
        c[i] = dict.atoms.col(support[i]).dot(y);
        for (int j = 0; j < s; ++j) g(i, j) = dict.gram(support[i], support[j]);
    }
    auto h = detail::cholesky_solve(std::move(g), std::move(c));
    if (!h) throw Error("blue_estimate: degenerate support");
    return *h;
}

// Log likelihood of observing y given that exactly `support` is active, up to
// a support-independent constant: -||y - A_S h_S||^2 / (2 sigma^2), with the
// coefficients integrated out at their BLUE value.
inline double log_likelihood(const Dictionary& dict, const std::vector<int>& support,
                             const Eigen::VectorXd& y, double sigma) {
    require(sigma > 0.0, "log_likelihood: sigma must be positive");
    require(y.size() == dict.atom_len(), "log_likelihood: signal length mismatch");
    if (support.empty()) return -y.squaredNorm() / (2.0 * sigma * sigma);
    const Eigen::VectorXd h = blue_estimate(dict, support, y);
    Eigen::VectorXd r = y;
    for (size_t i = 0; i < support.size(); ++i) r -= h[static_cast<Eigen::Index>(i)] * dict.atoms.col(support[i]);
    return -r.squaredNorm() / (2.0 * sigma * sigma);
}

inline double log_support_prior(const SparsePrior& prior, const std::vector<int>& support) {
    double lp = prior.base_log;
    for (int j : support) {
        require(j >= 0 && j < prior.logit.size(), "prior: support index out of range");
        lp += prior.logit[j];
    }
    return lp;
}

namespace detail {

// Beam node. The Cholesky factor of the support's Gram block is kept packed
// row-major (row i holds i+1 entries), in atom insertion order.
struct BeamNode {
    std::vector<int> order;
    std::vector<double> lfac;
    std::vector<double> z;     // L^{-1} A_S^T y, insertion order
    double rss = 0.0;          // ||y - proj_S y||^2
    double log_prior = 0.0;
    Eigen::VectorXd t;         // A^T (y - proj_S y)
};

struct LevelCandidate {
    std::vector<int> sorted_support;
    int parent = -1;
    int atom = -1;
    std::vector<double> w;     // solves L_parent w = G(order_parent, atom)
    double pivot = 0.0;
    double z_new = 0.0;
    double rss = 0.0;
    double log_prior = 0.0;
    double log_post = 0.0;
};

struct EvalRecord {
    std::vector<int> support;  // ascending
    double log_post = 0.0;
};

inline void packed_forward_solve(const std::vector<double>& lfac, int n, double* x) {
    for (int i = 0; i < n; ++i) {
        const double* row = lfac.data() + static_cast<size_t>(i) * (i + 1) / 2;
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= row[k] * x[k];
        x[i] = s / row[i];
    }
}

inline void packed_backward_solve(const std::vector<double>& lfac, int n, double* x) {
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k)
            s -= lfac[static_cast<size_t>(k) * (k + 1) / 2 + i] * x[k];
        x[i] = s / lfac[static_cast<size_t>(i) * (i + 1) / 2 + i];
    }
}

}  // namespace detail

// Posterior exploration by beam search. Each beam node is extended by the
// branch_width atoms most correlated with its residual; the branch_width best
// extensions (by log posterior) survive to the next level. Search stops at
// max_support, or as soon as a whole level fails to improve on the best
// posterior seen so far. Every evaluated support within delta_log of the best
// forms the dominant set that the returned estimate mixes over.
inline SparseEstimate solve(const Dictionary& dict, const Eigen::VectorXd& y, double sigma,
                            const SparsePrior& prior, const SolverParams& params) {
    const int M = dict.num_atoms();
    require(y.size() == dict.atom_len(), "solve: signal length mismatch");
    require(sigma > 0.0, "solve: sigma must be positive");
    require(prior.tap_probs.size() == M, "solve: prior size mismatch");
    require(params.max_support >= 1, "solve: max_support must be >= 1");
    require(params.branch_width >= 1, "solve: branch_width must be >= 1");
    require(params.delta_log >= 0.0, "solve: delta_log must be nonnegative");

    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const int depth_cap = std::min(params.max_support, M);

    const Eigen::VectorXd c = dict.atoms.transpose() * y;

    std::vector<detail::EvalRecord> evals;
    evals.push_back({{}, -y.squaredNorm() * inv2s2 + prior.base_log});
    double global_best = evals[0].log_post;

    std::vector<detail::BeamNode> beam(1);
    beam[0].rss = y.squaredNorm();
    beam[0].log_prior = prior.base_log;
    beam[0].t = c;

    std::vector<char> in_support(M, 0);
    std::vector<std::pair<double, int>> scratch;

    for (int level = 1; level <= depth_cap; ++level) {
        std::map<std::vector<int>, detail::LevelCandidate> cands;
        for (int b = 0; b < static_cast<int>(beam.size()); ++b) {
            const detail::BeamNode& node = beam[b];
            for (int j : node.order) in_support[j] = 1;

            scratch.clear();
            scratch.reserve(M - level + 1);
            for (int j = 0; j < M; ++j)
                if (!in_support[j]) scratch.emplace_back(std::abs(node.t[j]), j);
            const int take = std::min<int>(params.branch_width, static_cast<int>(scratch.size()));
            std::partial_sort(scratch.begin(), scratch.begin() + take, scratch.end(),
                              [](const auto& a, const auto& b) {
                                  if (a.first != b.first) return a.first > b.first;
                                  return a.second < b.second;
                              });

            for (int sel = 0; sel < take; ++sel) {
                const int a = scratch[sel].second;
                std::vector<int> key(node.order);
                key.push_back(a);
                std::sort(key.begin(), key.end());
                if (cands.count(key)) continue;

                detail::LevelCandidate lc;
                lc.sorted_support = std::move(key);
                lc.parent = b;
                lc.atom = a;
                lc.w.resize(node.order.size());
                for (size_t i = 0; i < node.order.size(); ++i)
                    lc.w[i] = dict.gram(node.order[i], a);
                detail::packed_forward_solve(node.lfac, static_cast<int>(node.order.size()),
                                             lc.w.data());
                double d = dict.gram(a, a);
                for (double wi : lc.w) d -= wi * wi;
                if (d <= detail::kPivotTol) continue;  // rank-deficient extension
                lc.pivot = std::sqrt(d);
                double cz = c[a];
                for (size_t i = 0; i < node.order.size(); ++i) cz -= lc.w[i] * node.z[i];
                lc.z_new = cz / lc.pivot;
                lc.rss = std::max(0.0, node.rss - lc.z_new * lc.z_new);
                lc.log_prior = node.log_prior + prior.logit[a];
                lc.log_post = -lc.rss * inv2s2 + lc.log_prior;
                cands.emplace(lc.sorted_support, std::move(lc));
            }
            for (int j : node.order) in_support[j] = 0;
        }
        if (cands.empty()) break;

        double level_best = -std::numeric_limits<double>::infinity();
        for (const auto& [key, lc] : cands) {
            evals.push_back({key, lc.log_post});
            level_best = std::max(level_best, lc.log_post);
        }
        if (level_best <= global_best) break;
        global_best = level_best;
        if (level == depth_cap) break;

        std::vector<const detail::LevelCandidate*> ranked;
        ranked.reserve(cands.size());
        for (const auto& [key, lc] : cands) ranked.push_back(&lc);
        std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
            if (a->log_post != b->log_post) return a->log_post > b->log_post;
            return a->sorted_support < b->sorted_support;
        });
        if (static_cast<int>(ranked.size()) > params.branch_width)
            ranked.resize(static_cast<size_t>(params.branch_width));

        std::vector<detail::BeamNode> next;
        next.reserve(ranked.size());
        for (const auto* lc : ranked) {
            const detail::BeamNode& p = beam[lc->parent];
            detail::BeamNode n;
            n.order = p.order;
            n.order.push_back(lc->atom);
            n.lfac = p.lfac;
            n.lfac.insert(n.lfac.end(), lc->w.begin(), lc->w.end());
            n.lfac.push_back(lc->pivot);
            n.z = p.z;
            n.z.push_back(lc->z_new);
            n.rss = lc->rss;
            n.log_prior = lc->log_prior;

            // t update: A^T q scaled by the new z, where q is the unit vector
            // extending the support's orthonormal basis.
            Eigen::VectorXd atq = dict.gram.col(lc->atom);
            if (!p.order.empty()) {
                std::vector<double> u(lc->w);
                detail::packed_backward_solve(p.lfac, static_cast<int>(p.order.size()), u.data());
                for (size_t i = 0; i < p.order.size(); ++i)
                    atq -= u[i] * dict.gram.col(p.order[i]);
            }
            atq /= lc->pivot;
            n.t = p.t - lc->z_new * atq;
            next.push_back(std::move(n));
        }
        beam = std::move(next);
    }

    // Dominant set and normalized posteriors.
    std::vector<const detail::EvalRecord*> dom;
    for (const auto& e : evals)
        if (e.log_post >= global_best - params.delta_log) dom.push_back(&e);
    std::sort(dom.begin(), dom.end(), [](const auto* a, const auto* b) {
        if (a->log_post != b->log_post) return a->log_post > b->log_post;
        return a->support < b->support;
    });
    double mass = 0.0;
    for (const auto* e : dom) mass += std::exp(e->log_post - global_best);

    SparseEstimate est;
    est.coeffs = Eigen::VectorXd::Zero(M);
    est.active_probs = Eigen::VectorXd::Zero(M);
    est.candidates.reserve(dom.size());
    for (const auto* e : dom) {
        SupportCandidate sc;
        sc.support = e->support;
        sc.log_posterior = e->log_post;
        sc.posterior = std::exp(e->log_post - global_best) / mass;
        if (!sc.support.empty()) {
            sc.blue_coeffs = blue_estimate(dict, sc.support, y);
            for (size_t i = 0; i < sc.support.size(); ++i) {
                est.coeffs[sc.support[i]] += sc.posterior * sc.blue_coeffs[static_cast<Eigen::Index>(i)];
                est.active_probs[sc.support[i]] += sc.posterior;
            }
        }
        est.candidates.push_back(std::move(sc));
    }
    return est;
}

// Second solver pass under an externally pooled activity prior.
inline SparseEstimate refine(const Dictionary& dict, const Eigen::VectorXd& y, double sigma,
                             const Eigen::VectorXd& tap_probs, const SolverParams& params,
                             double prob_floor) {
    require(tap_probs.size() == dict.num_atoms(), "refine: prior size mismatch");
    return solve(dict, y, sigma, SparsePrior::from_probs(tap_probs, prob_floor), params);
}

}  // namespace c2df
