#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "c2df/core.hpp"

namespace c2df {

namespace detail {

// Reads one header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (!std::isspace(ch)) {
            tok.push_back(static_cast<char>(ch));
            break;
        }
    }
    if (tok.empty()) throw Error("truncated header");
    while ((ch = in.get()) != EOF && !std::isspace(ch) && ch != '#') {
        tok.push_back(static_cast<char>(ch));
    }
    if (ch == '#' || ch != EOF) in.unget();
    return tok;
}

inline int pnm_int(std::istream& in, const std::string& what) {
    std::string tok = pnm_token(in);
    try {
        size_t pos = 0;
        int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw Error("");
        return v;
    } catch (...) {
        throw Error("malformed " + what + " in header: '" + tok + "'");
    }
}

}  // namespace detail

// Binary PGM (P5) and PPM (P6), maxval 255 only. PPM samples are interleaved
// on disk and split into planes in memory.
inline Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open image file: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw Error("unsupported image format in " + path + " (want binary PGM/PPM)");
    const int channels = (m1 == '5') ? 1 : 3;

    int cols = detail::pnm_int(in, "width");
    int rows = detail::pnm_int(in, "height");
    int maxval = detail::pnm_int(in, "maxval");
    if (cols <= 0 || rows <= 0) throw Error("bad image dimensions in " + path);
    if (maxval != 255) throw Error("unsupported maxval " + std::to_string(maxval) + " in " + path);

    // Exactly one whitespace byte separates the header from the raster.
    int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) throw Error("missing raster separator in " + path);

    const size_t count = static_cast<size_t>(rows) * cols * channels;
    std::vector<uint8_t> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(in.gcount()) != count) throw Error("truncated raster in " + path);

    Image img(rows, cols, channels);
    if (channels == 1) {
        for (size_t i = 0; i < count; ++i) img.data[i] = raw[i];
    } else {
        const size_t ps = img.plane_size();
        for (size_t p = 0; p < ps; ++p)
            for (int c = 0; c < 3; ++c)
                img.data[c * ps + p] = raw[p * 3 + c];
    }
    return img;
}

inline void save_image(const Image& img, const std::string& path) {
    require(img.channels == 1 || img.channels == 3, "save_image: bad channel count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write image file: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.cols << " " << img.rows << "\n255\n";
    const size_t ps = img.plane_size();
    std::vector<uint8_t> raw(ps * img.channels);
    if (img.channels == 1) {
        for (size_t i = 0; i < ps; ++i) raw[i] = to_byte(img.data[i]);
    } else {
        for (size_t p = 0; p < ps; ++p)
            for (int c = 0; c < 3; ++c)
                raw[p * 3 + c] = to_byte(img.data[c * ps + p]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw Error("short write: " + path);
}

inline double image_mean(const Image& img) {
    double s = 0.0;
    for (double v : img.data) s += v;
    return s / static_cast<double>(img.size());
}

// Population standard deviation over all samples of all channels.
inline double image_std(const Image& img) {
    const double m = image_mean(img);
    double s = 0.0;
    for (double v : img.data) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(img.size()));
}

// Noise level requested either directly (sigma) or as an SNR in dB relative
// to the clean image's own standard deviation.
struct NoiseSpec {
    double sigma = -1.0;   // gray levels; takes precedence when >= 0
    double snr_db = 0.0;   // used when sigma < 0
    uint64_t seed = 0;

    double resolve_sigma(const Image& clean) const {
        if (sigma >= 0.0) return sigma;
        double s = image_std(clean);
        require(s > 0.0, "SNR is undefined for a constant image");
        return s * std::pow(10.0, -snr_db / 20.0);
    }
};

// i.i.d. Gaussian noise, added in deterministic channel-plane order. The
// result keeps unclamped real values; quantization happens only on save.
inline Image add_awgn(const Image& clean, const NoiseSpec& spec) {
    const double sigma = spec.resolve_sigma(clean);
    require(sigma >= 0.0, "sigma must be nonnegative");
    Rng rng(spec.seed);
    Image noisy = clean;
    for (double& v : noisy.data) v += sigma * rng.normal();
    return noisy;
}

// Peak SNR against an 8-bit peak of 255; identical images give +infinity.
inline double psnr(const Image& ref, const Image& test) {
    require(ref.same_shape(test), "psnr: shape mismatch");
    double se = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        double d = ref.data[i] - test.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(ref.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

inline double ssim_plane(const double* a, const double* b, int rows, int cols) {
    constexpr int W = 8;
    constexpr double C1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double C2 = (0.03 * 255.0) * (0.03 * 255.0);
    const int nr = rows - W + 1, nc = cols - W + 1;
    require(nr >= 1 && nc >= 1, "ssim: image smaller than 8x8 window");
    double acc = 0.0;
    for (int r = 0; r < nr; ++r) {
        for (int c = 0; c < nc; ++c) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < W; ++i) {
                const double* pa = a + static_cast<size_t>(r + i) * cols + c;
                const double* pb = b + static_cast<size_t>(r + i) * cols + c;
                for (int j = 0; j < W; ++j) {
                    sa += pa[j];
                    sb += pb[j];
                    saa += pa[j] * pa[j];
                    sbb += pb[j] * pb[j];
                    sab += pa[j] * pb[j];
                }
            }
            constexpr double n = W * W;
            const double ma = sa / n, mb = sb / n;
            const double va = saa / n - ma * ma;
            const double vb = sbb / n - mb * mb;
            const double cov = sab / n - ma * mb;
            acc += ((2 * ma * mb + C1) * (2 * cov + C2)) /
                   ((ma * ma + mb * mb + C1) * (va + vb + C2));
        }
    }
    return acc / (static_cast<double>(nr) * nc);
}

}  // namespace detail

// Mean SSIM over a sliding 8x8 window with uniform weights and population
// statistics; channels are scored independently and averaged.
inline double ssim(const Image& ref, const Image& test) {
    require(ref.same_shape(test), "ssim: shape mismatch");
    double acc = 0.0;
    for (int c = 0; c < ref.channels; ++c)
        acc += detail::ssim_plane(ref.plane(c), test.plane(c), ref.rows, ref.cols);
    return acc / ref.channels;
}

}  // namespace c2df
