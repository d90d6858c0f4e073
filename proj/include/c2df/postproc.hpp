#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "c2df/core.hpp"
#include "c2df/imgio.hpp"

namespace c2df {

// Pixels whose 3x3 neighborhood (edge-repeating extension) has population
// standard deviation at or below zeta.
struct FlatMask {
    int rows = 0;
    int cols = 0;
    double zeta = 0.0;
    std::vector<uint8_t> flat;  // one plane per channel, like Image

    bool is_flat(int ch, int r, int c) const {
        return flat[static_cast<size_t>(ch) * rows * cols + static_cast<size_t>(r) * cols + c] != 0;
    }
};

inline FlatMask detect_flat(const Image& img, double zeta) {
    require(zeta >= 0.0, "zeta must be nonnegative");
    FlatMask m;
    m.rows = img.rows;
    m.cols = img.cols;
    m.zeta = zeta;
    m.flat.assign(img.size(), 0);
    size_t idx = 0;
    for (int ch = 0; ch < img.channels; ++ch) {
        const double* p = img.plane(ch);
        for (int r = 0; r < img.rows; ++r) {
            for (int c = 0; c < img.cols; ++c, ++idx) {
                double s = 0.0, ss = 0.0;
                for (int dr = -1; dr <= 1; ++dr) {
                    const int tr = mirror_index(r + dr, img.rows);
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int tc = mirror_index(c + dc, img.cols);
                        const double v = p[static_cast<size_t>(tr) * img.cols + tc];
                        s += v;
                        ss += v * v;
                    }
                }
                const double mean = s / 9.0;
                const double var = std::max(0.0, ss / 9.0 - mean * mean);
                m.flat[idx] = std::sqrt(var) <= zeta ? 1 : 0;
            }
        }
    }
    return m;
}

// Replaces each flat pixel by its 3x3 neighborhood mean; other pixels pass
// through. Means are taken over the input image, so the result does not
// depend on processing order.
inline Image smooth_flat(const Image& img, const FlatMask& mask) {
    require(mask.rows == img.rows && mask.cols == img.cols &&
                mask.flat.size() == img.size(),
            "smooth_flat: mask shape mismatch");
    Image out = img;
    size_t idx = 0;
    for (int ch = 0; ch < img.channels; ++ch) {
        const double* p = img.plane(ch);
        double* q = out.plane(ch);
        for (int r = 0; r < img.rows; ++r) {
            for (int c = 0; c < img.cols; ++c, ++idx) {
                if (!mask.flat[idx]) continue;
                double s = 0.0;
                for (int dr = -1; dr <= 1; ++dr) {
                    const int tr = mirror_index(r + dr, img.rows);
                    for (int dc = -1; dc <= 1; ++dc)
                        s += p[static_cast<size_t>(tr) * img.cols + mirror_index(c + dc, img.cols)];
                }
                q[static_cast<size_t>(r) * img.cols + c] = s / 9.0;
            }
        }
    }
    return out;
}

// Equal-width partition of [0, 255] applied to rounded, clamped intensities.
struct BinPartition {
    int num_bins = 0;
    int rows = 0;
    int cols = 0;
    std::vector<int> bin_of;                     // per pixel of one plane
    std::vector<std::vector<int>> pixels_of_bin; // pixel indices per bin
};

inline BinPartition make_bins(const Image& img, int ch, int num_bins = 64) {
    require(num_bins >= 1 && 256 % num_bins == 0, "num_bins must divide 256");
    require(ch >= 0 && ch < img.channels, "make_bins: channel out of range");
    BinPartition bp;
    bp.num_bins = num_bins;
    bp.rows = img.rows;
    bp.cols = img.cols;
    bp.bin_of.resize(img.plane_size());
    bp.pixels_of_bin.resize(static_cast<size_t>(num_bins));
    const int width = 256 / num_bins;
    const double* p = img.plane(ch);
    for (size_t i = 0; i < img.plane_size(); ++i) {
        const int b = static_cast<int>(to_byte(p[i])) / width;
        bp.bin_of[i] = b;
        bp.pixels_of_bin[static_cast<size_t>(b)].push_back(static_cast<int>(i));
    }
    return bp;
}

// Within each intensity bin, finds 4-connected components and replaces every
// component of at least min_region pixels by its mean value. Component means
// come from the input image, so replacements never interact.
inline Image region_grow(const Image& img, int ch, const BinPartition& bins, int min_region) {
    require(bins.rows == img.rows && bins.cols == img.cols, "region_grow: bin shape mismatch");
    require(min_region >= 1, "min_region must be >= 1");
    const int R = img.rows, C = img.cols;
    Image out = img;
    const double* p = img.plane(ch);
    double* q = out.plane(ch);

    std::vector<uint8_t> seen(img.plane_size(), 0);
    std::vector<int> stack, component;
    for (size_t seed = 0; seed < img.plane_size(); ++seed) {
        if (seen[seed]) continue;
        const int bin = bins.bin_of[seed];
        component.clear();
        stack.assign(1, static_cast<int>(seed));
        seen[seed] = 1;
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            component.push_back(i);
            const int r = i / C, c = i % C;
            const int nb[4] = {r > 0 ? i - C : -1, r < R - 1 ? i + C : -1,
                               c > 0 ? i - 1 : -1, c < C - 1 ? i + 1 : -1};
            for (int n : nb) {
                if (n < 0 || seen[n] || bins.bin_of[n] != bin) continue;
                seen[n] = 1;
                stack.push_back(n);
            }
        }
        if (static_cast<int>(component.size()) < min_region) continue;
        double s = 0.0;
        for (int i : component) s += p[i];
        const double mean = s / static_cast<double>(component.size());
        for (int i : component) q[i] = mean;
    }
    return out;
}

namespace detail {

inline Image convex_mix(const Image& a, const Image& b, double share_b) {
    require(a.same_shape(b), "blend: shape mismatch");
    require(share_b >= 0.0 && share_b <= 1.0, "blend share must lie in [0,1]");
    Image out = a;
    for (size_t i = 0; i < out.size(); ++i)
        out.data[i] = (1.0 - share_b) * a.data[i] + share_b * b.data[i];
    return out;
}

}  // namespace detail

// Final mix of the denoised image with its region-grown variant. The grown
// share rises linearly with the noise level and saturates at one half.
inline Image blend(const Image& denoised, const Image& grown, double sigma) {
    require(sigma >= 0.0, "blend: sigma must be nonnegative");
    return detail::convex_mix(denoised, grown, std::min(0.5, sigma / 100.0));
}

// Piecewise-linear map from sigma to the region-grown blend share, clamped at
// the table ends. The default table reproduces blend()'s min(0.5, sigma/100).
struct RhoPoint {
    double sigma = 0.0;
    double rho2 = 0.0;
};

inline double rho2_for_sigma(const std::vector<RhoPoint>& table, double sigma) {
    require(!table.empty(), "rho table is empty");
    for (size_t i = 1; i < table.size(); ++i)
        require(table[i].sigma > table[i - 1].sigma, "rho table sigmas must increase");
    if (sigma <= table.front().sigma) return table.front().rho2;
    if (sigma >= table.back().sigma) return table.back().rho2;
    for (size_t i = 1; i < table.size(); ++i) {
        if (sigma <= table[i].sigma) {
            const double f = (sigma - table[i - 1].sigma) / (table[i].sigma - table[i - 1].sigma);
            return table[i - 1].rho2 + f * (table[i].rho2 - table[i - 1].rho2);
        }
    }
    return table.back().rho2;
}

struct PostprocConfig {
    double zeta = 0.0;  // 0 selects the adaptive rule in the denoiser
    int num_bins = 64;
    int min_region = 64;
    std::vector<RhoPoint> rho_table{{0.0, 0.0}, {50.0, 0.5}};
};

// Full post-processing chain: flat smoothing, per-channel region growing on
// the smoothed image, then a sigma-dependent mix of the raw denoised input
// with the region-grown result.
inline Image postprocess(const Image& denoised, double sigma, double zeta,
                         const PostprocConfig& cfg) {
    require(sigma >= 0.0, "postprocess: sigma must be nonnegative");
    const FlatMask mask = detect_flat(denoised, zeta);
    const Image smoothed = smooth_flat(denoised, mask);
    Image grown = smoothed;
    for (int ch = 0; ch < denoised.channels; ++ch) {
        const BinPartition bins = make_bins(smoothed, ch, cfg.num_bins);
        Image g = region_grow(smoothed, ch, bins, cfg.min_region);
        std::copy(g.plane(ch), g.plane(ch) + g.plane_size(), grown.plane(ch));
    }
    return detail::convex_mix(denoised, grown, rho2_for_sigma(cfg.rho_table, sigma));
}

}  // namespace c2df
