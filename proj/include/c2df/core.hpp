#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace c2df {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

// Planar image: channels stored as consecutive row-major planes of doubles.
// Values are nominally in [0, 255] but are not clamped here; clamping happens
// only when encoding to 8-bit files.
struct Image {
    int rows = 0;
    int cols = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int r, int c, int ch = 1, double fill = 0.0)
        : rows(r), cols(c), channels(ch),
          data(static_cast<size_t>(r) * c * ch, fill) {
        require(r > 0 && c > 0 && (ch == 1 || ch == 3), "image dims invalid");
    }

    size_t plane_size() const { return static_cast<size_t>(rows) * cols; }
    size_t size() const { return data.size(); }

    double& at(int ch, int r, int c) {
        return data[static_cast<size_t>(ch) * plane_size() + static_cast<size_t>(r) * cols + c];
    }
    double at(int ch, int r, int c) const {
        return data[static_cast<size_t>(ch) * plane_size() + static_cast<size_t>(r) * cols + c];
    }
    double* plane(int ch) { return data.data() + static_cast<size_t>(ch) * plane_size(); }
    const double* plane(int ch) const { return data.data() + static_cast<size_t>(ch) * plane_size(); }

    bool same_shape(const Image& o) const {
        return rows == o.rows && cols == o.cols && channels == o.channels;
    }
};

inline Image extract_channel(const Image& img, int ch) {
    require(ch >= 0 && ch < img.channels, "channel out of range");
    Image out(img.rows, img.cols, 1);
    const double* src = img.plane(ch);
    std::copy(src, src + img.plane_size(), out.data.begin());
    return out;
}

inline Image merge_channels(const std::vector<Image>& planes) {
    require(!planes.empty(), "no planes");
    Image out(planes[0].rows, planes[0].cols, static_cast<int>(planes.size()));
    for (size_t c = 0; c < planes.size(); ++c) {
        require(planes[c].channels == 1 && planes[c].rows == out.rows && planes[c].cols == out.cols,
                "plane shape mismatch");
        std::copy(planes[c].data.begin(), planes[c].data.end(),
                  out.data.begin() + c * out.plane_size());
    }
    return out;
}

// Symmetric boundary extension that repeats the edge sample:
// ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...
// Valid for |t| < 2n, which covers every half-patch overhang used here.
inline int mirror_index(int t, int n) {
    if (t < 0) t = -1 - t;
    if (t >= n) t = 2 * n - 1 - t;
    return t;
}

inline double clamp255(double v) {
    if (v < 0.0) return 0.0;
    if (v > 255.0) return 255.0;
    return v;
}

inline uint8_t to_byte(double v) {
    return static_cast<uint8_t>(std::llround(clamp255(v)));
}

// Deterministic Gaussian source. std::normal_distribution is not portable
// across standard libraries, so the transform is done by hand.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        double mag = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        spare_ = mag * std::sin(ang);
        has_spare_ = true;
        return mag * std::cos(ang);
    }

private:
    uint64_t next() { return state_(); }
    std::mt19937_64 state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace c2df
