#pragma once

#include "micc/image.hpp"

#include <vector>

namespace micc {

// Six-statistic summary of a set of angular errors, all in degrees.
struct ErrorStats {
    double mean = 0.0;
    double median = 0.0;
    double trimean = 0.0;
    double best25 = 0.0;  // mean of the ceil(n/4) lowest errors
    double worst25 = 0.0; // mean of the ceil(n/4) highest errors
    double max = 0.0;
    size_t count = 0;
};

// Per-pixel angular error raster plus its mean/median summary.
struct MapAngularError {
    int width = 0;
    int height = 0;
    std::vector<float> degrees; // w*h, NaN at pixels excluded by the mask
    double mean = 0.0;
    double median = 0.0;
    size_t valid_count = 0;
};

// Angle between two illuminant directions in degrees: arccos of the
// cosine similarity, clamped to [-1,1] before arccos. Symmetric and
// scale-invariant. Zero vectors are rejected with ValueRangeError.
double angular_error(const Illuminant &e, const Illuminant &e_hat);

// Pixel-wise angular error between two maps. `mask` (when non-empty, w*h,
// 0 = excluded) restricts the summary; EmptyDomainError if nothing is left.
MapAngularError map_angular_error(const IlluminationMap &gt,
                                  const IlluminationMap &pred,
                                  const std::vector<uint8_t> &mask = {});

// Six statistics over a non-empty error list. Quartiles for the trimean are
// Tukey hinges: medians of the lower/upper halves of the sorted sample, the
// middle element included in both halves when the count is odd.
ErrorStats summarize(const std::vector<double> &errors_deg);

} // namespace micc
