#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "c2df/core.hpp"
#include "c2df/dict.hpp"
#include "c2df/grouping.hpp"
#include "c2df/imgio.hpp"
#include "c2df/patching.hpp"
#include "c2df/postproc.hpp"
#include "c2df/sparse.hpp"

namespace c2df {

struct DenoiseConfig {
    // Scales and fusion.
    std::vector<int> patch_sizes{3, 5, 7, 9};
    std::vector<double> gamma;  // empty selects uniform weights

    // Grouping. Noise shrinks the correlation between structurally identical
    // patches toward s^2/(s^2+sigma^2), so the threshold stays permissive and
    // the descending-|r| neighbor cap does the real selection.
    double epsilon = 0.30;
    int max_neighbors = 32;
    int window_radius = 32;           // used when the image exceeds the limit below
    int full_search_max_pixels = 256 * 256;

    // Dictionary.
    double beta = 0.95;
    double overcompleteness = 4.0;

    // Solver. Zero means "derive from the patch size / dictionary".
    double p = 0.0;                   // first-pass activity probability
    int branch_width = 4;
    int max_support = 0;              // 0 -> ceil(N^2 / 2)
    double delta_log = std::log(1e3);
    double lambda_min = 1e-4;

    // Collaboration switch (off reuses the first-pass estimates directly).
    bool collaborate = true;

    // Noise level: negative requests estimation from the input.
    double sigma_w = -1.0;

    // Post-processing.
    bool postprocess_enabled = true;
    double zeta = 0.0;                // 0 -> max(2, 2 * residual sigma estimate)
    PostprocConfig postproc;

    // When set, intermediate stages (per-scale images, fused image, flat
    // mask, bin map, dictionary sheets) are written there as PGM files.
    std::string debug_dir;

    void validate() const {
        require(!patch_sizes.empty(), "config: patch_sizes empty");
        for (int n : patch_sizes)
            require(n >= 3 && n % 2 == 1, "config: patch sizes must be odd and >= 3");
        if (!gamma.empty()) {
            require(gamma.size() == patch_sizes.size(),
                    "config: gamma must match patch_sizes length");
            double s = 0.0;
            for (double g : gamma) {
                require(g >= 0.0, "config: gamma weights must be nonnegative");
                s += g;
            }
            require(std::abs(s - 1.0) <= 1e-9, "config: gamma must sum to 1");
        }
        require(epsilon >= 0.0 && epsilon <= 1.0, "config: epsilon must lie in [0,1]");
        require(max_neighbors >= 1, "config: max_neighbors must be >= 1");
        require(beta > 0.0 && beta <= 1.0, "config: beta must lie in (0,1]");
        require(lambda_min > 0.0 && lambda_min < 0.5, "config: lambda_min must lie in (0,0.5)");
        require(branch_width >= 1, "config: branch_width must be >= 1");
        require(zeta >= 0.0, "config: zeta must be nonnegative");
    }

    std::vector<double> fusion_weights() const {
        if (!gamma.empty()) return gamma;
        return std::vector<double>(patch_sizes.size(), 1.0 / static_cast<double>(patch_sizes.size()));
    }
};

// Robust noise estimate: median absolute finest-level diagonal Haar detail
// over non-overlapping 2x2 blocks, scaled to Gaussian sigma.
inline double estimate_sigma(const Image& img) {
    require(img.rows >= 2 && img.cols >= 2, "estimate_sigma: image too small");
    std::vector<double> details;
    details.reserve(img.size() / 4);
    for (int ch = 0; ch < img.channels; ++ch) {
        const double* p = img.plane(ch);
        for (int r = 0; r + 1 < img.rows; r += 2) {
            for (int c = 0; c + 1 < img.cols; c += 2) {
                const double a = p[static_cast<size_t>(r) * img.cols + c];
                const double b = p[static_cast<size_t>(r) * img.cols + c + 1];
                const double d = p[static_cast<size_t>(r + 1) * img.cols + c];
                const double e = p[static_cast<size_t>(r + 1) * img.cols + c + 1];
                details.push_back(std::abs((a - b - d + e) / 2.0));
            }
        }
    }
    std::sort(details.begin(), details.end());
    const size_t n = details.size();
    const double med = (n % 2 == 1) ? details[n / 2]
                                    : 0.5 * (details[n / 2 - 1] + details[n / 2]);
    return med / 0.6745;
}

namespace detail {

// Per-scale state shared by the grayscale and color paths. Patches from all
// channels live side by side; global column g maps to channel g / K, patch
// g % K, so cross-channel grouping needs no special casing.
struct ScaleContext {
    std::vector<PatchSet> sets;          // one per channel
    Eigen::MatrixXd standardized;        // N^2 x (C*K)
    std::vector<std::pair<int, int>> origin;
    int per_channel = 0;

    const Eigen::VectorXd patch(int g) const {
        return sets[static_cast<size_t>(g / per_channel)].vectors.col(g % per_channel);
    }
    double norm_of(int g) const {
        return sets[static_cast<size_t>(g / per_channel)].norms[g % per_channel];
    }
};

inline NeighborSet group_one(const ScaleContext& ctx, int g, const DenoiseConfig& cfg,
                             bool windowed, int rows, int cols) {
    if (!windowed)
        return find_neighbors_all(ctx.standardized, g, cfg.epsilon, cfg.max_neighbors);
    const auto [ar, ac] = ctx.origin[static_cast<size_t>(g)];
    const int r0 = std::max(0, ar - cfg.window_radius), r1 = std::min(rows - 1, ar + cfg.window_radius);
    const int c0 = std::max(0, ac - cfg.window_radius), c1 = std::min(cols - 1, ac + cfg.window_radius);
    std::vector<int> cand;
    const int channels = static_cast<int>(ctx.sets.size());
    cand.reserve(static_cast<size_t>(channels) * (r1 - r0 + 1) * (c1 - c0 + 1));
    for (int ch = 0; ch < channels; ++ch)
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) cand.push_back(ch * ctx.per_channel + r * cols + c);
    return find_neighbors_among(ctx.standardized, g, cfg.epsilon, cfg.max_neighbors, cand);
}

// One denoising pass over every channel of one scale: group, solve, pool the
// activity probabilities over each neighbor set, re-solve under the pooled
// prior, de-normalize, and overlap-average per channel. When requested,
// `pooled_out` receives the per-patch prior used by the second pass (columns
// of failed patches keep the first pass's failure sentinel).
inline std::vector<Image> denoise_scale(const std::vector<Image>& planes, int patch_size,
                                        double sigma_w, const DenoiseConfig& cfg,
                                        Eigen::MatrixXd* pooled_out = nullptr) {
    const Dictionary dict = decorrelate(build_dictionary(patch_size, cfg.overcompleteness), cfg.beta);
    const int M = dict.num_atoms();
    const int N = patch_size;

    SolverParams params;
    params.max_support = cfg.max_support > 0 ? cfg.max_support : (N * N + 1) / 2;
    params.branch_width = cfg.branch_width;
    params.delta_log = cfg.delta_log;
    const double p0 = cfg.p > 0.0 ? cfg.p : std::min(0.5, 2.0 * N / static_cast<double>(M));
    const SparsePrior first_prior = SparsePrior::uniform(M, p0, cfg.lambda_min);

    ScaleContext ctx;
    for (const Image& pl : planes) ctx.sets.push_back(decompose(pl, N));
    const int rows = planes[0].rows, cols = planes[0].cols;
    const int K = rows * cols;
    const int C = static_cast<int>(planes.size());
    const int G = C * K;
    ctx.per_channel = K;
    ctx.standardized.resize(N * N, G);
    ctx.origin.resize(static_cast<size_t>(G));
    for (int ch = 0; ch < C; ++ch) {
        ctx.standardized.middleCols(ch * K, K) = ctx.sets[static_cast<size_t>(ch)].standardized;
        std::copy(ctx.sets[static_cast<size_t>(ch)].origin.begin(),
                  ctx.sets[static_cast<size_t>(ch)].origin.end(),
                  ctx.origin.begin() + static_cast<size_t>(ch) * K);
    }
    const bool windowed = K > cfg.full_search_max_pixels;

    // Phase 1: grouping and first-pass estimates. Writes are per-column.
    std::vector<NeighborSet> groups(static_cast<size_t>(G));
    Eigen::MatrixXd lambda(M, G), coeff_first(M, G);
#pragma omp parallel for schedule(dynamic, 16)
    for (int g = 0; g < G; ++g) {
        groups[static_cast<size_t>(g)] = group_one(ctx, g, cfg, windowed, rows, cols);
        const double nrm = ctx.norm_of(g);
        const double sig = sigma_w / std::max(nrm, 1e-8);
        try {
            SparseEstimate est = solve(dict, ctx.patch(g), sig, first_prior, params);
            lambda.col(g) = est.active_probs;
            coeff_first.col(g) = est.coeffs;
        } catch (const Error&) {
            // Patch-level fallback: pass the noisy patch through unchanged by
            // flagging it with an invalid probability.
            lambda.col(g).setConstant(-1.0);
            coeff_first.col(g).setZero();
        }
    }

    // Phase 2+3: pooled priors, then the refined pass.
    Eigen::MatrixXd coeff_final(M, G);
    if (pooled_out) *pooled_out = lambda;
    if (cfg.collaborate) {
#pragma omp parallel for schedule(dynamic, 16)
        for (int g = 0; g < G; ++g) {
            if (lambda(0, g) < 0.0) {  // first pass failed: keep the fallback
                coeff_final.col(g) = coeff_first.col(g);
                continue;
            }
            const NeighborSet& ns = groups[static_cast<size_t>(g)];
            Eigen::VectorXd pooled = Eigen::VectorXd::Zero(M);
            double wsum = 0.0;
            for (size_t t = 0; t < ns.members.size(); ++t) {
                const int j = ns.members[t];
                if (lambda(0, j) < 0.0) continue;  // skip failed neighbors
                pooled += ns.weights[t] * lambda.col(j);
                wsum += ns.weights[t];
            }
            if (wsum <= 0.0) {
                coeff_final.col(g) = coeff_first.col(g);
                continue;
            }
            pooled /= wsum;
            if (pooled_out) pooled_out->col(g) = pooled;
            const double nrm = ctx.norm_of(g);
            const double sig = sigma_w / std::max(nrm, 1e-8);
            try {
                SparseEstimate est = refine(dict, ctx.patch(g), sig, pooled, params, cfg.lambda_min);
                coeff_final.col(g) = est.coeffs;
            } catch (const Error&) {
                coeff_final.col(g) = coeff_first.col(g);
            }
        }
    } else {
        coeff_final = coeff_first;
    }

    // Phase 4: de-normalize and rebuild each channel.
    std::vector<Image> out;
    out.reserve(static_cast<size_t>(C));
    for (int ch = 0; ch < C; ++ch) {
        const PatchSet& ps = ctx.sets[static_cast<size_t>(ch)];
        Eigen::MatrixXd values(N * N, K);
        Eigen::MatrixXd block = dict.atoms * coeff_final.middleCols(ch * K, K);
        for (int k = 0; k < K; ++k) {
            const int g = ch * K + k;
            if (lambda(0, g) < 0.0) {
                values.col(k) = ps.vectors.col(k) * ps.norms[k];  // noisy pass-through
            } else {
                values.col(k) = block.col(k) * ps.norms[k];
            }
        }
        out.push_back(reconstruct(ps, values));
    }
    return out;
}

}  // namespace detail

// One scale of the pipeline on a single-channel image; no fusion and no
// post-processing.
inline Image denoise_single_scale(const Image& img, int patch_size, double sigma,
                                  const DenoiseConfig& cfg = {}) {
    require(img.channels == 1, "denoise_single_scale expects a single channel");
    require(sigma > 0.0, "denoise_single_scale: sigma must be positive");
    cfg.validate();
    return detail::denoise_scale({img}, patch_size, sigma, cfg)[0];
}

namespace detail {

inline void dump_debug_stage(const DenoiseConfig& cfg, const Image& img, const std::string& name) {
    if (cfg.debug_dir.empty()) return;
    save_image(img, cfg.debug_dir + "/" + name);
}

inline Image denoise_impl(const Image& img, const DenoiseConfig& cfg) {
    cfg.validate();
    require(img.channels == 1 || img.channels == 3, "denoise: expected 1 or 3 channels");
    const double sigma = cfg.sigma_w >= 0.0 ? cfg.sigma_w : estimate_sigma(img);
    if (sigma == 0.0) return img;  // noiseless input: nothing to remove

    std::vector<Image> planes;
    for (int ch = 0; ch < img.channels; ++ch) planes.push_back(extract_channel(img, ch));

    std::vector<Image> per_scale;
    per_scale.reserve(cfg.patch_sizes.size());
    for (int n : cfg.patch_sizes) {
        per_scale.push_back(merge_channels(denoise_scale(planes, n, sigma, cfg)));
        dump_debug_stage(cfg, per_scale.back(), "scale_" + std::to_string(n) + ".pgm");
        if (!cfg.debug_dir.empty())
            dump_contact_sheet(decorrelate(build_dictionary(n, cfg.overcompleteness), cfg.beta),
                               cfg.debug_dir + "/dict_" + std::to_string(n) + ".pgm");
    }
    Image fused = fuse_scales(per_scale, cfg.fusion_weights());
    dump_debug_stage(cfg, fused, "fused.pgm");

    if (!cfg.postprocess_enabled) return fused;
    // The MAD estimate runs low on overlap-averaged residuals; the flat
    // detector needs a threshold above the residual's local 3x3 std.
    const double zeta = cfg.zeta > 0.0 ? cfg.zeta : std::max(2.0, 2.0 * estimate_sigma(fused));
    if (!cfg.debug_dir.empty()) {
        const FlatMask mask = detect_flat(fused, zeta);
        Image mimg(fused.rows, fused.cols, 1);
        for (size_t i = 0; i < mimg.size(); ++i) mimg.data[i] = mask.flat[i] ? 255.0 : 0.0;
        dump_debug_stage(cfg, mimg, "flat_mask.pgm");
        const BinPartition bins = make_bins(fused, 0, cfg.postproc.num_bins);
        Image bimg(fused.rows, fused.cols, 1);
        const int width = 256 / cfg.postproc.num_bins;
        for (size_t i = 0; i < bimg.size(); ++i) bimg.data[i] = bins.bin_of[i] * width;
        dump_debug_stage(cfg, bimg, "bins.pgm");
    }
    return postprocess(fused, sigma, zeta, cfg.postproc);
}

}  // namespace detail

// Full pipeline: per-scale denoising, scale fusion, post-processing.
inline Image denoise(const Image& img, const DenoiseConfig& cfg = {}) {
    return detail::denoise_impl(img, cfg);
}

// Color variant; patch grouping and probability pooling run across all three
// channels while solving and reconstruction stay per-channel.
inline Image denoise_color(const Image& img, const DenoiseConfig& cfg = {}) {
    require(img.channels == 3, "denoise_color expects a 3-channel image");
    return detail::denoise_impl(img, cfg);
}

}  // namespace c2df
