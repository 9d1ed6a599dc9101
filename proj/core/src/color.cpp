#include "micc/color.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace micc {

// See IEC 61966-2-1, the piecewise sRGB transfer.
double srgb_to_linear(double s) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0)
        throw ValueRangeError("sRGB sample outside [0,1]");
    if (s <= 0.04045)
        return s / 12.92;
    return std::pow((s + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    v = std::clamp(v, 0.0, 1.0);
    if (v <= 0.0031308)
        return v * 12.92;
    return 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

LinearImage srgb_to_linear(const LinearImage &gamma_encoded) {
    LinearImage out(gamma_encoded.width(), gamma_encoded.height());
    const auto &src = gamma_encoded.data();
    auto &dst = out.data();
    for (size_t i = 0; i < src.size(); ++i)
        dst[i] = float(srgb_to_linear(double(src[i])));
    if (gamma_encoded.has_mask())
        out.set_mask(gamma_encoded.mask());
    return out;
}

LinearImage linear_to_srgb(const LinearImage &linear, bool *clipped) {
    LinearImage out(linear.width(), linear.height());
    const auto &src = linear.data();
    auto &dst = out.data();
    bool any_clip = false;
    for (size_t i = 0; i < src.size(); ++i) {
        double v = double(src[i]);
        any_clip |= (v < 0.0 || v > 1.0);
        dst[i] = float(linear_to_srgb(v));
    }
    if (linear.has_mask())
        out.set_mask(linear.mask());
    if (clipped)
        *clipped = any_clip;
    return out;
}

LinearImage apply_illumination(const LinearImage &white,
                               const IlluminationMap &illum) {
    if (!white.same_shape(illum))
        throw ShapeError("apply_illumination: image and map dimensions differ");
    LinearImage out(white.width(), white.height());
    const auto &w = white.data();
    const auto &l = illum.data();
    auto &dst = out.data();
    for (size_t i = 0; i < w.size(); ++i)
        dst[i] = float(double(w[i]) * double(l[i]));
    if (white.has_mask())
        out.set_mask(white.mask());
    return out;
}

LinearImage von_kries_correct(const LinearImage &biased,
                              const IlluminationMap &illum) {
    if (!biased.same_shape(illum))
        throw ShapeError("von_kries_correct: image and map dimensions differ");
    LinearImage out(biased.width(), biased.height());
    for (int y = 0; y < biased.height(); ++y) {
        for (int x = 0; x < biased.width(); ++x) {
            auto b = biased.pixel(x, y);
            auto l = illum.pixel(x, y);
            if (biased.valid(x, y)) {
                for (int c = 0; c < 3; ++c)
                    if (l[c] <= kSingularEps)
                        throw SingularIlluminantError(
                            x, y,
                            "von_kries_correct: illuminant channel <= eps at pixel (" +
                                std::to_string(x) + "," + std::to_string(y) + ")");
            }
            out.set_pixel(x, y, l[0] > 0 ? b[0] / l[0] : 0.0,
                          l[1] > 0 ? b[1] / l[1] : 0.0,
                          l[2] > 0 ? b[2] / l[2] : 0.0);
        }
    }
    if (biased.has_mask())
        out.set_mask(biased.mask());
    return out;
}

LinearImage von_kries_correct(const LinearImage &biased,
                              const Illuminant &illum) {
    IlluminationMap map(biased.width(), biased.height(), illum);
    return von_kries_correct(biased, map);
}

namespace {

double median_inplace(std::vector<double> &v) {
    size_t n = v.size();
    auto mid = v.begin() + n / 2;
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (n % 2 == 1)
        return hi;
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

} // namespace

Illuminant apparent_illumination(const LinearImage &biased,
                                 const LinearImage &corrected) {
    if (!biased.same_shape(corrected))
        throw ShapeError("apparent_illumination: image dimensions differ");
    std::vector<double> ratios[3];
    for (int y = 0; y < biased.height(); ++y) {
        for (int x = 0; x < biased.width(); ++x) {
            if (!biased.valid(x, y) || !corrected.valid(x, y))
                continue;
            auto i = biased.pixel(x, y);
            auto w = corrected.pixel(x, y);
            if (w[0] <= kSingularEps || w[1] <= kSingularEps ||
                w[2] <= kSingularEps)
                continue;
            for (int c = 0; c < 3; ++c)
                ratios[c].push_back(i[c] / w[c]);
        }
    }
    if (ratios[0].empty())
        throw EmptyDomainError(
            "apparent_illumination: no valid pixels with usable denominator");
    Illuminant e{median_inplace(ratios[0]), median_inplace(ratios[1]),
                 median_inplace(ratios[2])};
    return e.normalized();
}

} // namespace micc
