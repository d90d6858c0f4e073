#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "c2df/core.hpp"

namespace c2df {

// One patch per pixel position, column-vectorized (column-major within the
// patch window). `vectors` holds unit-norm patches; the pre-normalization
// magnitude lives in `norms` (0 for all-zero patches, whose column stays 0).
// `standardized` caches the zero-mean unit-norm version used for correlation;
// a constant patch maps to the zero column.
struct PatchSet {
    int patch_size = 0;
    int rows = 0;
    int cols = 0;
    Eigen::MatrixXd vectors;       // N^2 x K
    Eigen::VectorXd norms;         // K
    Eigen::MatrixXd standardized;  // N^2 x K
    std::vector<std::pair<int, int>> origin;  // center (row, col) per patch

    int count() const { return static_cast<int>(origin.size()); }
};

inline PatchSet decompose(const Image& img, int patch_size) {
    require(img.channels == 1, "decompose expects a single-channel image");
    require(patch_size >= 3 && patch_size % 2 == 1, "patch size must be odd and >= 3");
    require(patch_size <= img.rows && patch_size <= img.cols,
            "patch size exceeds image dimensions");

    const int N = patch_size, h = N / 2;
    const int R = img.rows, C = img.cols;
    PatchSet ps;
    ps.patch_size = N;
    ps.rows = R;
    ps.cols = C;
    const int K = R * C;
    ps.vectors.resize(N * N, K);
    ps.norms.resize(K);
    ps.standardized.resize(N * N, K);
    ps.origin.resize(K);

    const double* src = img.plane(0);
    int k = 0;
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c, ++k) {
            ps.origin[k] = {r, c};
            auto col = ps.vectors.col(k);
            for (int cc = 0; cc < N; ++cc) {
                const int tc = mirror_index(c - h + cc, C);
                for (int rr = 0; rr < N; ++rr) {
                    const int tr = mirror_index(r - h + rr, R);
                    col[cc * N + rr] = src[static_cast<size_t>(tr) * C + tc];
                }
            }
            const double nrm = col.norm();
            ps.norms[k] = nrm > 0.0 ? nrm : 0.0;
            if (nrm > 0.0) col /= nrm;

            auto zc = ps.standardized.col(k);
            zc = (col.array() - col.mean()).matrix();
            const double zn = zc.norm();
            if (zn > 0.0)
                zc /= zn;
            else
                zc.setZero();
        }
    }
    return ps;
}

// Rebuilds an image from per-patch pixel estimates by scattering each value
// back to its source pixel (through the same mirror map) and dividing by the
// contribution count. With edge-repeating extension every pixel receives
// exactly N^2 contributions, so the divisor is constant.
inline Image reconstruct(const PatchSet& patches, const Eigen::MatrixXd& values) {
    const int N = patches.patch_size, h = N / 2;
    const int R = patches.rows, C = patches.cols;
    require(values.rows() == N * N && values.cols() == patches.count(),
            "reconstruct: value matrix shape mismatch");

    Image out(R, C, 1);
    double* dst = out.plane(0);
    for (int k = 0; k < patches.count(); ++k) {
        const auto [r, c] = patches.origin[k];
        const auto col = values.col(k);
        for (int cc = 0; cc < N; ++cc) {
            const int tc = mirror_index(c - h + cc, C);
            for (int rr = 0; rr < N; ++rr) {
                const int tr = mirror_index(r - h + rr, R);
                dst[static_cast<size_t>(tr) * C + tc] += col[cc * N + rr];
            }
        }
    }
    const double scale = 1.0 / (static_cast<double>(N) * N);
    for (size_t i = 0; i < out.size(); ++i) dst[i] *= scale;
    return out;
}

// Pixelwise convex combination of per-scale estimates.
inline Image fuse_scales(const std::vector<Image>& scales, const std::vector<double>& weights) {
    require(!scales.empty() && scales.size() == weights.size(),
            "fuse_scales: need one weight per image");
    double wsum = 0.0;
    for (double w : weights) {
        require(w >= 0.0, "fuse_scales: weights must be nonnegative");
        wsum += w;
    }
    require(std::abs(wsum - 1.0) <= 1e-9, "fuse_scales: weights must sum to 1");

    Image out(scales[0].rows, scales[0].cols, scales[0].channels);
    for (size_t s = 0; s < scales.size(); ++s) {
        require(scales[s].same_shape(out), "fuse_scales: shape mismatch");
        for (size_t i = 0; i < out.size(); ++i) out.data[i] += weights[s] * scales[s].data[i];
    }
    return out;
}

}  // namespace c2df
