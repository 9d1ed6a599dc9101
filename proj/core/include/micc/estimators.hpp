#pragma once

#include "micc/image.hpp"

#include <string>
#include <vector>

namespace micc {

// Parameters of the Minkowski/derivative estimator family. Values land in
// the run metadata so every emitted result is self-describing.
struct EstimatorConfig {
    double minkowski_p = 1.0; // >= 1, or +infinity for the max norm
    int derivative_order = 0; // 0, 1 (gradient) or 2 (Hessian norm)
    double smoothing_sigma = 0.0;      // Gaussian pre-smoothing, pixels
    double saturation_threshold = 0.98; // fraction of full scale (1.0)

    void validate() const;
};

// Per-channel Minkowski-p norm of the order-k derivative magnitude of the
// Gaussian-smoothed image, over valid non-saturated pixels (order 0 = raw
// pixel values). Output is L2-normalized.
Illuminant grey_world_family(const LinearImage &img,
                             const EstimatorConfig &cfg);

// Per-channel maximum over valid non-saturated pixels; equals the family
// with order 0 and p = infinity.
Illuminant white_patch(const LinearImage &img,
                       const EstimatorConfig &cfg = {});

// The no-op baseline: a uniform neutral map (1,1,1)/sqrt(3).
IlluminationMap doing_nothing(const LinearImage &img);

// Named presets for the classical baselines. Known names:
//   grey-world, white-patch, shades-of-grey, general-grey-world,
//   grey-edge, grey-edge2
// Unknown names raise ConfigError.
EstimatorConfig estimator_preset(const std::string &name);
std::vector<std::string> classical_estimator_names();
Illuminant estimate_by_name(const std::string &name, const LinearImage &img);

} // namespace micc
