#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "c2df/imgio.hpp"
#include "oracles.hpp"

using c2df::Image;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("pgm bytes map directly to intensities", "[imgio]") {
    const auto p = temp_path("c2df_t1.pgm");
    write_bytes(p, std::string("P5\n2 2\n255\n") + '\x00' + '\xff' + '\x80' + '\x40');
    const Image img = c2df::load_image(p.string());
    REQUIRE(img.rows == 2);
    REQUIRE(img.cols == 2);
    REQUIRE(img.channels == 1);
    CHECK(img.data == std::vector<double>{0, 255, 128, 64});
}

TEST_CASE("ppm single red pixel splits into planes", "[imgio]") {
    const auto p = temp_path("c2df_t2.ppm");
    write_bytes(p, std::string("P6\n1 1\n255\n") + '\xff' + '\x00' + '\x00');
    const Image img = c2df::load_image(p.string());
    REQUIRE(img.channels == 3);
    CHECK(img.data == std::vector<double>{255, 0, 0});
}

TEST_CASE("header comments and whitespace are tolerated", "[imgio]") {
    const auto p = temp_path("c2df_t3.pgm");
    write_bytes(p, std::string("P5 # format\n# a comment line\n 2\t1 # dims\n255\n") + '\x07' + '\x20');
    const Image img = c2df::load_image(p.string());
    REQUIRE(img.rows == 1);
    REQUIRE(img.cols == 2);
    CHECK(img.data[0] == 7);
    CHECK(img.data[1] == 32);  // raster byte that happens to be a space
}

TEST_CASE("malformed files are rejected", "[imgio]") {
    const auto trunc = temp_path("c2df_t4.pgm");
    write_bytes(trunc, std::string("P5\n4 4\n255\n") + "abc");
    CHECK_THROWS_AS(c2df::load_image(trunc.string()), c2df::Error);

    const auto badmax = temp_path("c2df_t5.pgm");
    write_bytes(badmax, std::string("P5\n1 1\n65535\n") + '\x01' + '\x01');
    CHECK_THROWS_AS(c2df::load_image(badmax.string()), c2df::Error);

    const auto badmagic = temp_path("c2df_t6.pgm");
    write_bytes(badmagic, "P3\n1 1\n255\n0\n");
    CHECK_THROWS_AS(c2df::load_image(badmagic.string()), c2df::Error);

    CHECK_THROWS_AS(c2df::load_image("/nonexistent/file.pgm"), c2df::Error);
}

TEST_CASE("save clamps and rounds to bytes", "[imgio]") {
    Image img(1, 3, 1);
    img.data = {259.7, -3.0, 127.5};
    const auto p = temp_path("c2df_t7.pgm");
    c2df::save_image(img, p.string());

    std::ifstream in(p, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(content.substr(0, 9) == "P5\n3 1\n25");
    const std::string raster = content.substr(content.size() - 3);
    CHECK(static_cast<unsigned char>(raster[0]) == 255);
    CHECK(static_cast<unsigned char>(raster[1]) == 0);
    CHECK(static_cast<unsigned char>(raster[2]) == 128);
}

TEST_CASE("round-trip is bit-exact for integer images", "[imgio]") {
    Image ramp(8, 8, 1);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) ramp.at(0, r, c) = r * 8 + c;
    const auto p = temp_path("c2df_t8.pgm");
    c2df::save_image(ramp, p.string());
    const Image back = c2df::load_image(p.string());
    CHECK(back.data == ramp.data);

    // Color: interleaved on disk, planar in memory.
    Image color(2, 2, 3);
    for (size_t i = 0; i < color.size(); ++i) color.data[i] = static_cast<double>(i * 9 % 256);
    const auto pc = temp_path("c2df_t9.ppm");
    c2df::save_image(color, pc.string());
    const Image back_c = c2df::load_image(pc.string());
    CHECK(back_c.data == color.data);
}

TEST_CASE("awgn is seed-deterministic and calibrated", "[imgio]") {
    Image img(256, 256, 1, 100.0);
    c2df::NoiseSpec spec;
    spec.sigma = 33.0;
    spec.seed = 42;

    const Image a = c2df::add_awgn(img, spec);
    const Image b = c2df::add_awgn(img, spec);
    CHECK(a.data == b.data);

    spec.seed = 43;
    const Image c = c2df::add_awgn(img, spec);
    CHECK(a.data != c.data);

    // Sample variance of the injected noise within 3% of sigma^2.
    double mean = 0.0;
    for (size_t i = 0; i < a.size(); ++i) mean += a.data[i] - img.data[i];
    mean /= static_cast<double>(a.size());
    double var = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - img.data[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(a.size());
    CHECK(var == Catch::Approx(33.0 * 33.0).epsilon(0.03));

    // Unclamped reals survive internally.
    Image dark(16, 16, 1, 0.0);
    spec.sigma = 30.0;
    const Image noisy_dark = c2df::add_awgn(dark, spec);
    CHECK(*std::min_element(noisy_dark.data.begin(), noisy_dark.data.end()) < 0.0);

    spec.sigma = 0.0;
    CHECK(c2df::add_awgn(img, spec).data == img.data);
}

TEST_CASE("snr-driven sigma matches the std mapping", "[imgio]") {
    // Two-value image with std exactly 58: values 100 +/- 58.
    Image img(2, 2, 1);
    img.data = {42.0, 158.0, 42.0, 158.0};
    REQUIRE(c2df::image_std(img) == Catch::Approx(58.0).margin(1e-12));

    c2df::NoiseSpec spec;
    spec.sigma = -1.0;
    spec.snr_db = 0.0;
    CHECK(spec.resolve_sigma(img) == Catch::Approx(58.0).margin(1e-9));

    spec.snr_db = 5.0;
    CHECK(spec.resolve_sigma(img) == Catch::Approx(58.0 * std::pow(10.0, -0.25)).margin(1e-9));

    Image flat(4, 4, 1, 7.0);
    CHECK_THROWS_AS(spec.resolve_sigma(flat), c2df::Error);
}

TEST_CASE("psnr matches closed forms", "[imgio]") {
    Image a(4, 4, 1, 50.0);
    CHECK(std::isinf(c2df::psnr(a, a)));

    Image b = a;
    for (double& v : b.data) v += 10.0;
    CHECK(c2df::psnr(a, b) == Catch::Approx(28.13).margin(0.01));
    CHECK(c2df::psnr(a, b) == c2df::psnr(b, a));

    Image zero(2, 2, 1, 0.0), full(2, 2, 1, 255.0);
    CHECK(c2df::psnr(zero, full) == Catch::Approx(0.0).margin(1e-12));

    // Strictly decreasing in the uniform difference.
    Image c = a;
    for (double& v : c.data) v += 11.0;
    CHECK(c2df::psnr(a, c) < c2df::psnr(a, b));

    Image wrong(4, 5, 1);
    CHECK_THROWS_AS(c2df::psnr(a, wrong), c2df::Error);
}

TEST_CASE("ssim basic identities", "[imgio]") {
    Image ramp(16, 16, 1);
    c2df::Rng rng(3);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) ramp.at(0, r, c) = 5.0 * r + 3.0 * c + 10.0;

    CHECK(c2df::ssim(ramp, ramp) == Catch::Approx(1.0).margin(1e-12));

    Image inverted = ramp;
    for (double& v : inverted.data) v = 255.0 - v;
    CHECK(c2df::ssim(ramp, inverted) < 0.0);

    Image noisy = ramp;
    for (double& v : noisy.data) v += 10.0 * rng.normal();
    CHECK(c2df::ssim(ramp, noisy) == c2df::ssim(noisy, ramp));

    Image small(4, 4, 1, 0.0);
    CHECK_THROWS_AS(c2df::ssim(small, small), c2df::Error);
}

TEST_CASE("ssim agrees with an independent scalar evaluation", "[imgio]") {
    Image ramp(16, 16, 1);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) ramp.at(0, r, c) = 5.0 * r + 3.0 * c + 10.0;
    Image noisy = ramp;
    c2df::Rng rng(7);
    for (double& v : noisy.data) v += 10.0 * rng.normal();

    const double expected = oracles::scalar_ssim(ramp.data, noisy.data, 16, 16);
    CHECK(c2df::ssim(ramp, noisy) == Catch::Approx(expected).margin(1e-9));

    // Channel average: replicating the planes leaves the score unchanged.
    const Image ramp3 = c2df::merge_channels({ramp, ramp, ramp});
    const Image noisy3 = c2df::merge_channels({noisy, noisy, noisy});
    CHECK(c2df::ssim(ramp3, noisy3) == Catch::Approx(c2df::ssim(ramp, noisy)).margin(1e-12));
}

TEST_CASE("committed corpus images load with expected shapes", "[imgio]") {
    const std::string dir = C2DF_TEST_DATA_DIR;
    const Image cam = c2df::load_image(dir + "/cameraman_crop64.pgm");
    CHECK(cam.rows == 64);
    CHECK(cam.cols == 64);
    CHECK(cam.channels == 1);
    CHECK(c2df::image_std(cam) > 40.0);  // textured crop, not a flat region

    const Image color = c2df::load_image(dir + "/color_crop32.ppm");
    CHECK(color.rows == 32);
    CHECK(color.cols == 32);
    CHECK(color.channels == 3);
}
