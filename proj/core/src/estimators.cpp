#include "micc/estimators.hpp"

#include "filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace micc {

void EstimatorConfig::validate() const {
    bool p_ok = std::isinf(minkowski_p) ? minkowski_p > 0
                                        : minkowski_p >= 1.0;
    if (!p_ok)
        throw ConfigError("minkowski_p must be >= 1 or infinity");
    if (derivative_order < 0 || derivative_order > 2)
        throw ConfigError("derivative_order must be 0, 1 or 2");
    if (!(smoothing_sigma >= 0.0))
        throw ConfigError("smoothing_sigma must be >= 0");
    if (!(saturation_threshold > 0.0 && saturation_threshold <= 1.0))
        throw ConfigError("saturation_threshold must be in (0,1]");
}

namespace {

// Valid = image mask AND no channel at/above the saturation level.
// Saturation is relative to full scale 1.0 (ingested images are normalized).
std::vector<uint8_t> usable_mask(const LinearImage &img, double sat) {
    std::vector<uint8_t> mask(img.pixel_count(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            size_t i = size_t(y) * img.width() + x;
            if (!img.valid(x, y)) {
                mask[i] = 0;
                continue;
            }
            auto p = img.pixel(x, y);
            if (p[0] >= sat || p[1] >= sat || p[2] >= sat)
                mask[i] = 0;
        }
    }
    return mask;
}

// Per-channel derivative magnitude planes for the requested order.
std::vector<double> derivative_magnitude(std::vector<double> plane, int w,
                                         int h, int order) {
    if (order == 0)
        return plane;
    std::vector<double> mag(plane.size());
    auto v = [&](int x, int y) {
        return plane[size_t(detail::reflect(y, h)) * w + detail::reflect(x, w)];
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m;
            if (order == 1) {
                double dx = 0.5 * (v(x + 1, y) - v(x - 1, y));
                double dy = 0.5 * (v(x, y + 1) - v(x, y - 1));
                m = std::sqrt(dx * dx + dy * dy);
            } else {
                double dxx = v(x + 1, y) - 2.0 * v(x, y) + v(x - 1, y);
                double dyy = v(x, y + 1) - 2.0 * v(x, y) + v(x, y - 1);
                double dxy = 0.25 * (v(x + 1, y + 1) + v(x - 1, y - 1) -
                                     v(x + 1, y - 1) - v(x - 1, y + 1));
                // Frobenius norm of the Hessian
                m = std::sqrt(dxx * dxx + 2.0 * dxy * dxy + dyy * dyy);
            }
            mag[size_t(y) * w + x] = m;
        }
    }
    return mag;
}

} // namespace

Illuminant grey_world_family(const LinearImage &img,
                             const EstimatorConfig &cfg) {
    cfg.validate();
    const int w = img.width();
    const int h = img.height();
    auto mask = usable_mask(img, cfg.saturation_threshold);
    size_t n_valid = size_t(std::count(mask.begin(), mask.end(), uint8_t(1)));
    if (n_valid == 0)
        throw EmptyDomainError("grey_world_family: all pixels masked");

    std::array<std::vector<double>, 3> mag;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> plane(img.pixel_count());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                plane[size_t(y) * w + x] = img.pixel(x, y)[c];
        detail::gaussian_smooth(plane, w, h, cfg.smoothing_sigma);
        mag[c] = derivative_magnitude(std::move(plane), w, h,
                                      cfg.derivative_order);
    }

    // Scale by the global peak before raising to p, so large p stays in range.
    double peak = 0.0;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < mag[c].size(); ++i)
            if (mask[i])
                peak = std::max(peak, mag[c][i]);
    if (peak <= 0.0)
        throw EmptyDomainError(
            "grey_world_family: derivative magnitude identically zero");

    Illuminant e;
    if (std::isinf(cfg.minkowski_p)) {
        double mx[3] = {0, 0, 0};
        for (int c = 0; c < 3; ++c)
            for (size_t i = 0; i < mag[c].size(); ++i)
                if (mask[i])
                    mx[c] = std::max(mx[c], mag[c][i]);
        e = {mx[0], mx[1], mx[2]};
    } else {
        double acc[3];
        for (int c = 0; c < 3; ++c) {
            detail::CompensatedSum sum;
            for (size_t i = 0; i < mag[c].size(); ++i)
                if (mask[i])
                    sum.add(std::pow(mag[c][i] / peak, cfg.minkowski_p));
            acc[c] = std::pow(sum.value(), 1.0 / cfg.minkowski_p);
        }
        e = {acc[0], acc[1], acc[2]};
    }
    return e.normalized();
}

Illuminant white_patch(const LinearImage &img, const EstimatorConfig &cfg) {
    EstimatorConfig wp = cfg;
    wp.minkowski_p = std::numeric_limits<double>::infinity();
    wp.derivative_order = 0;
    wp.smoothing_sigma = 0.0;
    return grey_world_family(img, wp);
}

IlluminationMap doing_nothing(const LinearImage &img) {
    const double v = 1.0 / std::sqrt(3.0);
    return IlluminationMap(img.width(), img.height(), Illuminant{v, v, v});
}

EstimatorConfig estimator_preset(const std::string &name) {
    const double inf = std::numeric_limits<double>::infinity();
    if (name == "grey-world")
        return {1.0, 0, 0.0, 0.98};
    if (name == "white-patch")
        return {inf, 0, 0.0, 0.98};
    if (name == "shades-of-grey")
        return {4.0, 0, 0.0, 0.98};
    if (name == "general-grey-world")
        return {4.0, 0, 1.0, 0.98};
    if (name == "grey-edge")
        return {5.0, 1, 1.0, 0.98};
    if (name == "grey-edge2")
        return {5.0, 2, 1.0, 0.98};
    throw ConfigError("unknown estimator name: " + name);
}

std::vector<std::string> classical_estimator_names() {
    return {"grey-world",         "white-patch", "shades-of-grey",
            "general-grey-world", "grey-edge",   "grey-edge2"};
}

Illuminant estimate_by_name(const std::string &name, const LinearImage &img) {
    return grey_world_family(img, estimator_preset(name));
}

} // namespace micc
