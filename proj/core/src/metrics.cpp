#include "micc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace micc {

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

double sorted_median(const std::vector<double> &v, size_t lo, size_t hi) {
    // median of v[lo..hi), v sorted
    size_t n = hi - lo;
    size_t mid = lo + n / 2;
    if (n % 2 == 1)
        return v[mid];
    return 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace

double angular_error(const Illuminant &e, const Illuminant &e_hat) {
    if (!e.is_finite() || !e_hat.is_finite())
        throw ValueRangeError("angular_error: non-finite illuminant");
    double na = e.norm();
    double nb = e_hat.norm();
    if (na <= 0.0 || nb <= 0.0)
        throw ValueRangeError("angular_error: zero vector has no direction");
    double cosv = (e.r * e_hat.r + e.g * e_hat.g + e.b * e_hat.b) / (na * nb);
    cosv = std::clamp(cosv, -1.0, 1.0);
    return std::acos(cosv) * kRadToDeg;
}

MapAngularError map_angular_error(const IlluminationMap &gt,
                                  const IlluminationMap &pred,
                                  const std::vector<uint8_t> &mask) {
    if (!gt.same_shape(pred))
        throw ShapeError("map_angular_error: map dimensions differ");
    if (!mask.empty() && mask.size() != gt.pixel_count())
        throw ShapeError("map_angular_error: mask size does not match maps");

    MapAngularError out;
    out.width = gt.width();
    out.height = gt.height();
    out.degrees.assign(gt.pixel_count(),
                       std::numeric_limits<float>::quiet_NaN());

    std::vector<double> errors;
    errors.reserve(gt.pixel_count());
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            size_t i = size_t(y) * gt.width() + x;
            if (!mask.empty() && mask[i] == 0)
                continue;
            double d = angular_error(gt.pixel_illuminant(x, y),
                                     pred.pixel_illuminant(x, y));
            out.degrees[i] = float(d);
            errors.push_back(d);
        }
    }
    if (errors.empty())
        throw EmptyDomainError("map_angular_error: no valid pixels");

    detail::CompensatedSum sum;
    for (double d : errors)
        sum.add(d);
    out.mean = sum.value() / double(errors.size());
    std::sort(errors.begin(), errors.end());
    out.median = sorted_median(errors, 0, errors.size());
    out.valid_count = errors.size();
    return out;
}

ErrorStats summarize(const std::vector<double> &errors_deg) {
    if (errors_deg.empty())
        throw EmptyDomainError("summarize: empty error list");

    std::vector<double> v = errors_deg;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();

    ErrorStats s;
    s.count = n;
    detail::CompensatedSum total;
    for (double d : v)
        total.add(d);
    s.mean = total.value() / double(n);
    s.median = sorted_median(v, 0, n);

    // Tukey hinges: halves share the middle element when n is odd.
    size_t lower_end = (n + 1) / 2;
    size_t upper_begin = n / 2;
    double q1 = sorted_median(v, 0, lower_end);
    double q3 = sorted_median(v, upper_begin, n);
    s.trimean = (q1 + 2.0 * s.median + q3) / 4.0;

    size_t quartile = (n + 3) / 4; // ceil(n/4)
    detail::CompensatedSum lo, hi;
    for (size_t i = 0; i < quartile; ++i) {
        lo.add(v[i]);
        hi.add(v[n - 1 - i]);
    }
    s.best25 = lo.value() / double(quartile);
    s.worst25 = hi.value() / double(quartile);
    s.max = v.back();
    return s;
}

} // namespace micc
