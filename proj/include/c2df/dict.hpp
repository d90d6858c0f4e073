#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "c2df/core.hpp"
#include "c2df/imgio.hpp"

namespace c2df {

enum class AtomKind : uint8_t { dct, wavelet };

// Fixed analytic dictionary over N x N patches: a separable overcomplete DCT
// bank plus dyadic Haar detail atoms. Columns are unit norm. The Gram matrix
// is kept alongside because the sparse solver works entirely in it.
struct Dictionary {
    int patch_size = 0;
    Eigen::MatrixXd atoms;  // N^2 x M, unit columns
    std::vector<AtomKind> kind;
    Eigen::MatrixXd gram;   // M x M

    int atom_len() const { return static_cast<int>(atoms.rows()); }
    int num_atoms() const { return static_cast<int>(atoms.cols()); }

    void rebuild_gram() { gram = atoms.transpose() * atoms; }
};

namespace detail {

// 1D cosine bank with F frequencies sampled on N points, F >= N.
inline Eigen::MatrixXd dct_bank(int n, int freqs) {
    Eigen::MatrixXd d(n, freqs);
    for (int f = 0; f < freqs; ++f)
        for (int i = 0; i < n; ++i)
            d(i, f) = std::cos(M_PI / freqs * f * (i + 0.5));
    return d;
}

}  // namespace detail

// `overcompleteness` is the target ratio of DCT atoms to pixels; the actual
// frequency count per axis is ceil(sqrt(overcompleteness) * N).
inline Dictionary build_dictionary(int patch_size, double overcompleteness = 4.0) {
    require(patch_size >= 3 && patch_size % 2 == 1, "patch size must be odd and >= 3");
    require(overcompleteness >= 1.0, "overcompleteness must be >= 1");

    const int N = patch_size;
    const int F = static_cast<int>(std::ceil(std::sqrt(overcompleteness) * N));
    const Eigen::MatrixXd bank = detail::dct_bank(N, F);

    std::vector<Eigen::VectorXd> cols;
    std::vector<AtomKind> kinds;
    cols.reserve(F * F);

    Eigen::VectorXd atom(N * N);
    for (int fr = 0; fr < F; ++fr) {
        for (int fc = 0; fc < F; ++fc) {
            for (int c = 0; c < N; ++c)
                for (int r = 0; r < N; ++r)
                    atom[c * N + r] = bank(r, fr) * bank(c, fc);
            cols.push_back(atom);
            kinds.push_back(AtomKind::dct);
        }
    }

    // Haar details on non-overlapping dyadic blocks, three orientations per
    // block, no approximation (DC) atoms. Side 2^l blocks placed at offsets
    // that keep them inside the patch.
    for (int side = 2; side <= N; side *= 2) {
        const int half = side / 2;
        for (int r0 = 0; r0 + side <= N; r0 += side) {
            for (int c0 = 0; c0 + side <= N; c0 += side) {
                for (int orient = 0; orient < 3; ++orient) {
                    atom.setZero();
                    for (int r = 0; r < side; ++r) {
                        for (int c = 0; c < side; ++c) {
                            const double sr = (r < half) ? 1.0 : -1.0;
                            const double sc = (c < half) ? 1.0 : -1.0;
                            double s = (orient == 0) ? sr : (orient == 1) ? sc : sr * sc;
                            atom[(c0 + c) * N + (r0 + r)] = s;
                        }
                    }
                    cols.push_back(atom);
                    kinds.push_back(AtomKind::wavelet);
                }
            }
        }
    }

    Dictionary dict;
    dict.patch_size = N;
    dict.atoms.resize(N * N, static_cast<Eigen::Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) dict.atoms.col(static_cast<Eigen::Index>(j)) = cols[j];
    dict.kind = std::move(kinds);
    dict.atoms.colwise().normalize();
    dict.rebuild_gram();
    return dict;
}

// Greedy keep-first pruning: walk columns in order and drop any whose
// absolute inner product with an already kept column exceeds beta.
inline Dictionary decorrelate(const Dictionary& dict, double beta) {
    require(beta > 0.0 && beta <= 1.0, "beta must be in (0, 1]");
    std::vector<int> kept;
    kept.reserve(dict.num_atoms());
    for (int j = 0; j < dict.num_atoms(); ++j) {
        bool ok = true;
        for (int i : kept) {
            if (std::abs(dict.gram(i, j)) > beta) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(j);
    }
    Dictionary out;
    out.patch_size = dict.patch_size;
    out.atoms.resize(dict.atoms.rows(), static_cast<Eigen::Index>(kept.size()));
    out.kind.reserve(kept.size());
    for (size_t t = 0; t < kept.size(); ++t) {
        out.atoms.col(static_cast<Eigen::Index>(t)) = dict.atoms.col(kept[t]);
        out.kind.push_back(dict.kind[kept[t]]);
    }
    out.rebuild_gram();
    return out;
}

// Debug visualization: atoms tiled on a grid, each rescaled to full range.
inline void dump_contact_sheet(const Dictionary& dict, const std::string& path) {
    const int N = dict.patch_size;
    const int M = dict.num_atoms();
    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(M))));
    const int cell = N + 1;
    Image sheet(grid * cell + 1, grid * cell + 1, 1, 128.0);
    for (int j = 0; j < M; ++j) {
        const int gr = (j / grid) * cell + 1, gc = (j % grid) * cell + 1;
        const double lo = dict.atoms.col(j).minCoeff(), hi = dict.atoms.col(j).maxCoeff();
        const double span = (hi > lo) ? hi - lo : 1.0;
        for (int c = 0; c < N; ++c)
            for (int r = 0; r < N; ++r)
                sheet.at(0, gr + r, gc + c) = 255.0 * (dict.atoms(c * N + r, j) - lo) / span;
    }
    save_image(sheet, path);
}

}  // namespace c2df
