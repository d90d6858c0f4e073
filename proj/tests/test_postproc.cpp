#include <catch2/catch_amalgamated.hpp>

#include "c2df/postproc.hpp"
#include "oracles.hpp"

using c2df::BinPartition;
using c2df::FlatMask;
using c2df::Image;

namespace {

Image checkerboard(int rows, int cols, double lo = 0.0, double hi = 255.0) {
    Image img(rows, cols, 1);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) img.at(0, r, c) = ((r + c) % 2 == 0) ? lo : hi;
    return img;
}

Image two_level(int rows, int cols, double top, double bottom) {
    Image img(rows, cols, 1);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) img.at(0, r, c) = (r < rows / 2) ? top : bottom;
    return img;
}

}  // namespace

TEST_CASE("flat detection separates smooth areas from edges", "[postproc]") {
    const Image flat(8, 8, 1, 77.0);
    const FlatMask all = c2df::detect_flat(flat, 0.0);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK(all.is_flat(0, r, c));

    const Image board = checkerboard(8, 8);
    const FlatMask none = c2df::detect_flat(board, 100.0);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK_FALSE(none.is_flat(0, r, c));

    // Step image: only windows that straddle the edge see variance.
    const Image step = two_level(8, 8, 40.0, 200.0);
    const FlatMask m = c2df::detect_flat(step, 2.0);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            const bool near_edge = (r == 3 || r == 4);
            CHECK(m.is_flat(0, r, c) == !near_edge);
        }

    CHECK_THROWS_AS(c2df::detect_flat(flat, -1.0), c2df::Error);
}

TEST_CASE("flat smoothing is a box filter on flat pixels only", "[postproc]") {
    Image img(6, 6, 1, 10.0);
    img.at(0, 2, 2) = 100.0;  // impulse

    // Huge zeta: everything flat, result is the plain 3x3 box filter.
    const Image all = c2df::smooth_flat(img, c2df::detect_flat(img, 1e9));
    CHECK(all.at(0, 2, 2) == Catch::Approx(10.0 + 90.0 / 9.0).margin(1e-12));
    CHECK(all.at(0, 0, 0) == Catch::Approx(10.0).margin(1e-12));

    // Tight zeta: windows containing the impulse are not flat and pass through.
    const FlatMask tight = c2df::detect_flat(img, 1.0);
    const Image some = c2df::smooth_flat(img, tight);
    size_t changed = 0;
    for (size_t i = 0; i < img.size(); ++i)
        if (some.data[i] != img.data[i]) ++changed;
    CHECK(changed == 0);  // flat pixels average an all-equal window
    CHECK_FALSE(tight.is_flat(0, 2, 2));
    CHECK(tight.is_flat(0, 0, 0));

    // Constant image is a fixed point at any zeta.
    const Image c(5, 5, 1, 42.0);
    CHECK(c2df::smooth_flat(c, c2df::detect_flat(c, 0.0)).data == c.data);
}

TEST_CASE("bins partition rounded intensities into equal widths", "[postproc]") {
    Image img(1, 6, 1);
    img.data = {0.0, 3.4, 4.0, 127.7, 255.0, 251.2};
    const BinPartition bp = c2df::make_bins(img, 0, 64);
    CHECK(bp.bin_of == std::vector<int>{0, 0, 1, 32, 63, 62});

    // Every pixel appears in exactly one bin list.
    size_t total = 0;
    for (int b = 0; b < bp.num_bins; ++b) {
        for (const int i : bp.pixels_of_bin[static_cast<size_t>(b)]) CHECK(bp.bin_of[i] == b);
        total += bp.pixels_of_bin[static_cast<size_t>(b)].size();
    }
    CHECK(total == img.plane_size());

    const BinPartition coarse = c2df::make_bins(img, 0, 4);  // width 64
    CHECK(coarse.bin_of == std::vector<int>{0, 0, 0, 2, 3, 3});

    CHECK_THROWS_AS(c2df::make_bins(img, 0, 60), c2df::Error);  // 256 % 60 != 0
    CHECK_THROWS_AS(c2df::make_bins(img, 1, 64), c2df::Error);  // no channel 1
}

TEST_CASE("region growing flattens large components and spares small ones", "[postproc]") {
    // Top half 100 with an embedded 2x2 island of 104; bottom half 200.
    Image img(16, 16, 1, 200.0);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 16; ++c) img.at(0, r, c) = 100.0;
    img.at(0, 3, 3) = img.at(0, 3, 4) = img.at(0, 4, 3) = img.at(0, 4, 4) = 104.0;

    const BinPartition bins = c2df::make_bins(img, 0, 64);
    const Image grown = c2df::region_grow(img, 0, bins, 64);

    // 124-pixel and 128-pixel components flatten to their means (already
    // constant); the 4-pixel island stays.
    CHECK(grown.at(0, 3, 3) == 104.0);
    CHECK(grown.at(0, 0, 0) == 100.0);
    CHECK(grown.at(0, 15, 15) == 200.0);

    // Lower threshold: the island flattens too.
    const Image grown4 = c2df::region_grow(img, 0, bins, 4);
    CHECK(grown4.at(0, 3, 3) == 104.0);

    // Checkerboard of contrasting values: all components are singletons.
    const Image board = checkerboard(8, 8, 0.0, 255.0);
    const BinPartition bb = c2df::make_bins(board, 0, 64);
    CHECK(c2df::region_grow(board, 0, bb, 2).data == board.data);

    CHECK_THROWS_AS(c2df::region_grow(img, 0, bins, 0), c2df::Error);
}

TEST_CASE("region growing agrees with independent component labeling", "[postproc]") {
    Image img(12, 12, 1);
    c2df::Rng rng(21);
    for (double& v : img.data) v = 4.0 * std::floor(16.0 * rng.uniform());  // 16 levels
    const BinPartition bins = c2df::make_bins(img, 0, 64);

    const std::vector<int> labels = oracles::connected_components_4(bins.bin_of, 12, 12);
    const int count = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<double> mean(static_cast<size_t>(count), 0.0);
    std::vector<int> size(static_cast<size_t>(count), 0);
    for (size_t i = 0; i < img.size(); ++i) {
        mean[static_cast<size_t>(labels[i])] += img.data[i];
        ++size[static_cast<size_t>(labels[i])];
    }
    for (int k = 0; k < count; ++k) mean[static_cast<size_t>(k)] /= size[static_cast<size_t>(k)];

    // min_region 1: every pixel is replaced by its component mean.
    const Image grown = c2df::region_grow(img, 0, bins, 1);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(grown.data[i] == Catch::Approx(mean[static_cast<size_t>(labels[i])]).margin(1e-12));

    // min_region 3: components of size 1 and 2 keep their original pixels.
    const Image g3 = c2df::region_grow(img, 0, bins, 3);
    for (size_t i = 0; i < img.size(); ++i) {
        if (size[static_cast<size_t>(labels[i])] < 3)
            CHECK(g3.data[i] == img.data[i]);
        else
            CHECK(g3.data[i] == Catch::Approx(mean[static_cast<size_t>(labels[i])]).margin(1e-12));
    }
}

TEST_CASE("blend share follows the saturating noise rule", "[postproc]") {
    const Image a(4, 4, 1, 0.0), b(4, 4, 1, 100.0);

    CHECK(c2df::blend(a, b, 0.0).data == a.data);
    for (const double v : c2df::blend(a, b, 33.0).data)
        CHECK(v == Catch::Approx(33.0).margin(1e-12));
    for (const double v : c2df::blend(a, b, 100.0).data)
        CHECK(v == Catch::Approx(50.0).margin(1e-12));  // share capped at 0.5
    for (const double v : c2df::blend(a, b, 70.0).data)
        CHECK(v == Catch::Approx(50.0).margin(1e-12));

    CHECK_THROWS_AS(c2df::blend(a, b, -1.0), c2df::Error);
    const Image c(4, 5, 1, 0.0);
    CHECK_THROWS_AS(c2df::blend(a, c, 10.0), c2df::Error);
}

TEST_CASE("rho table interpolates linearly and clamps at the ends", "[postproc]") {
    const std::vector<c2df::RhoPoint> def{{0.0, 0.0}, {50.0, 0.5}};
    CHECK(c2df::rho2_for_sigma(def, 0.0) == 0.0);
    CHECK(c2df::rho2_for_sigma(def, 20.0) == Catch::Approx(0.2).margin(1e-12));
    CHECK(c2df::rho2_for_sigma(def, 33.0) == Catch::Approx(0.33).margin(1e-12));
    CHECK(c2df::rho2_for_sigma(def, 50.0) == 0.5);
    CHECK(c2df::rho2_for_sigma(def, 80.0) == 0.5);

    const std::vector<c2df::RhoPoint> table{{10.0, 0.1}, {20.0, 0.2}, {40.0, 0.1}};
    CHECK(c2df::rho2_for_sigma(table, 5.0) == Catch::Approx(0.1));
    CHECK(c2df::rho2_for_sigma(table, 15.0) == Catch::Approx(0.15).margin(1e-12));
    CHECK(c2df::rho2_for_sigma(table, 30.0) == Catch::Approx(0.15).margin(1e-12));
    CHECK(c2df::rho2_for_sigma(table, 99.0) == Catch::Approx(0.1));

    const std::vector<c2df::RhoPoint> bad{{10.0, 0.1}, {10.0, 0.2}};
    CHECK_THROWS_AS(c2df::rho2_for_sigma(bad, 5.0), c2df::Error);
    CHECK_THROWS_AS(c2df::rho2_for_sigma({}, 5.0), c2df::Error);
}

TEST_CASE("piecewise-constant images are fixed points of postprocessing", "[postproc]") {
    const Image img = two_level(32, 32, 40.0, 200.0);
    const c2df::PostprocConfig cfg;
    const Image out = c2df::postprocess(img, 33.0, 2.0, cfg);
    double max_err = 0.0;
    for (size_t i = 0; i < img.size(); ++i)
        max_err = std::max(max_err, std::abs(out.data[i] - img.data[i]));
    CHECK(max_err <= 1e-9);

    CHECK_THROWS_AS(c2df::postprocess(img, -1.0, 2.0, cfg), c2df::Error);
}

TEST_CASE("postprocessing contracts residual noise on flat areas", "[postproc]") {
    Image noisy(32, 32, 1, 100.0);
    c2df::Rng rng(33);
    for (double& v : noisy.data) v += 0.4 * (rng.uniform() - 0.5);  // rounds to one byte level

    const c2df::PostprocConfig cfg;
    const Image out = c2df::postprocess(noisy, 50.0, 2.0, cfg);
    CHECK(c2df::image_std(out) < c2df::image_std(noisy));
    CHECK(c2df::image_mean(out) == Catch::Approx(c2df::image_mean(noisy)).margin(1e-6));

    // sigma 0 disables the region-grown share entirely.
    const Image kept = c2df::postprocess(noisy, 0.0, 2.0, cfg);
    // Flat smoothing still runs inside the chain, but the final mix assigns it
    // zero weight, so the output equals the input.
    CHECK(kept.data == noisy.data);
}

TEST_CASE("postprocessing treats channels independently", "[postproc]") {
    const Image mono = two_level(16, 16, 60.0, 180.0);
    Image color = c2df::merge_channels({mono, mono, mono});
    const c2df::PostprocConfig cfg;
    const Image out = c2df::postprocess(color, 25.0, 2.0, cfg);
    const Image ref = c2df::postprocess(mono, 25.0, 2.0, cfg);
    for (int ch = 0; ch < 3; ++ch) {
        const Image plane = c2df::extract_channel(out, ch);
        for (size_t i = 0; i < plane.size(); ++i)
            CHECK(plane.data[i] == Catch::Approx(ref.data[i]).margin(1e-12));
    }
}
