#pragma once

// Shared synthetic-scene builders for the test suites.

#include "micc/augment.hpp"
#include "micc/color.hpp"
#include "micc/image.hpp"
#include "micc/rng.hpp"
#include "micc/segment.hpp"

#include <cmath>
#include <filesystem>
#include <string>

namespace micc::testutil {

inline LinearImage uniform_image(int w, int h, double r, double g, double b) {
    LinearImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.set_pixel(x, y, r, g, b);
    return img;
}

inline LinearImage random_image(int w, int h, uint64_t seed, double lo = 0.05,
                                double hi = 0.95) {
    LinearImage img(w, h);
    Rng rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.set_pixel(x, y, lo + (hi - lo) * rng.next_double(),
                          lo + (hi - lo) * rng.next_double(),
                          lo + (hi - lo) * rng.next_double());
    return img;
}

// Gray-reflectance image (per-pixel luminance noise, neutral chroma).
inline LinearImage gray_image(int w, int h, uint64_t seed, double lo = 0.3,
                              double hi = 0.8) {
    LinearImage img(w, h);
    Rng rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = lo + (hi - lo) * rng.next_double();
            img.set_pixel(x, y, v, v, v);
        }
    return img;
}

inline Illuminant float_exact(const Illuminant &c) {
    return {double(float(c.r)), double(float(c.g)), double(float(c.b))};
}

// Unit illuminant rotated theta degrees from neutral within the plane
// spanned by neutral and (1,-1,0)/sqrt(2).
inline Illuminant rotated_from_neutral(double theta_deg) {
    const double t = theta_deg * 3.14159265358979323846 / 180.0;
    const double n = 1.0 / std::sqrt(3.0);
    const double u = 1.0 / std::sqrt(2.0);
    return Illuminant{std::cos(t) * n + std::sin(t) * u,
                      std::cos(t) * n - std::sin(t) * u, std::cos(t) * n};
}

// Left/right split segment map.
inline SegmentMap split_segments(int w, int h) {
    SegmentMap seg;
    seg.width = w;
    seg.height = h;
    seg.n_labels = 2;
    seg.label.resize(size_t(w) * size_t(h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            seg.label[size_t(y) * w + x] = x < w / 2 ? 0 : 1;
    return seg;
}

inline IlluminationMap hard_map(const SegmentMap &seg,
                                const std::vector<Illuminant> &colors) {
    IlluminationMap map(seg.width, seg.height);
    for (int y = 0; y < seg.height; ++y)
        for (int x = 0; x < seg.width; ++x) {
            const Illuminant &c = colors[size_t(seg.at(x, y))];
            map.set_pixel(x, y, c.r, c.g, c.b);
        }
    return map;
}

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("micc_" + tag + "_" + std::to_string(++counter));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path &path() const { return path_; }
    std::string str(const std::string &leaf) const {
        return (path_ / leaf).string();
    }

  private:
    std::filesystem::path path_;
};

} // namespace micc::testutil
