#pragma once

#include "micc/grayness.hpp"
#include "micc/image.hpp"

#include <vector>

namespace micc {

// Per-pixel simplex weights over N illuminants. Layout: w*h*n, pixel-major,
// the N weights of a pixel contiguous.
struct ProbabilityMap {
    int width = 0;
    int height = 0;
    int n = 0;
    std::vector<float> data;

    ProbabilityMap() = default;
    ProbabilityMap(int w, int h, int n_illum, float fill = 0.0f)
        : width(w), height(h), n(n_illum),
          data(size_t(w) * size_t(h) * size_t(n_illum), fill) {
        if (w <= 0 || h <= 0 || n_illum <= 0)
            throw ShapeError("probability map dimensions must be positive");
    }

    float at(int x, int y, int i) const {
        return data[(size_t(y) * width + x) * n + i];
    }
    float &at(int x, int y, int i) {
        return data[(size_t(y) * width + x) * n + i];
    }
    size_t pixel_count() const { return size_t(width) * size_t(height); }

    // Invariants: every weight in [0,1], per-pixel sums within 1 +/- 1e-6.
    void validate() const;
};

// Clamps small negative weights to zero and renormalizes rows whose sum is
// within `tol` of 1. Throws FormatError (with pixel location) for weights
// below -tol or sums outside 1 +/- tol. Returns the number of pixels that
// needed renormalization beyond 1e-6.
size_t repair_simplex(ProbabilityMap &p, double tol = 1e-3);

// Supervised loss components. The adversarial term is out of scope here and
// is reported as absent, never as zero.
struct LossReport {
    double illum = 0.0; // L1 on the reconstructed illumination map
    double rgb = 0.0;   // L1 on the corrected image
    double masks = 0.0; // seed-consistency loss
    double lambda = 100.0;
    double total_supervised = 0.0; // lambda * (illum + rgb + masks)
};

// Per-pixel convex combination of the seed colors: L[p] = sum_i P_i[p] * I_i.
IlluminationMap reconstruct_illumination(const ProbabilityMap &p,
                                         const SeedSet &seeds);

// Mean over pixels of the per-pixel L1 channel difference.
double l1_image_distance(const Raster3 &a, const Raster3 &b);

// Sum over illuminants of the mean L1 difference between the predicted map
// and the seed color at that illuminant's seed pixels. Each illuminant's
// term is divided by its seed count, so the loss is invariant to how many
// seeds were sampled.
double mask_loss(const IlluminationMap &pred, const SeedSet &seeds);

// Assembles the full supervised objective: the illumination loss on
// reconstruct_illumination(pred_p, seeds) vs gt_illum, the corrected-image
// loss on von_kries_correct(biased, reconstruction) vs gt_white, and the
// seed mask loss.
LossReport total_loss(const IlluminationMap &gt_illum,
                      const ProbabilityMap &pred_p, const LinearImage &biased,
                      const LinearImage &gt_white, const SeedSet &seeds,
                      double lambda = 100.0);

struct OracleResult {
    ProbabilityMap probabilities;
    std::vector<float> residual; // w*h, per-pixel L2 residual
    bool degenerate = false;     // seed colors affinely rank-deficient
};

// Inverts the reconstruction: per pixel, the simplex-constrained least
// squares weights minimizing ||sum_i p_i I_i - L[pixel]||_2. Solved exactly
// by active-set support enumeration (non-negative fast path first, then the
// sum-constrained solve); intended for the small-N regime. Rank-deficient
// seed colors are flagged and solved minimal-norm.
OracleResult oracle_probabilities(const IlluminationMap &gt,
                                  const SeedSet &seeds);

struct DiffusionConfig {
    double sigma_chroma = 0.05;       // kernel width in (r,g) chromaticity
    double sigma_spatial_frac = 0.25; // kernel width as fraction of diagonal
};

// Non-learned seed diffusion: per pixel and illuminant, the best score over
// that illuminant's seeds of a separable Gaussian affinity in chromaticity
// and image space, normalized to the simplex (softmax over log scores).
// At a seed pixel the argmax is its own illuminant.
ProbabilityMap seed_diffusion_estimate(const LinearImage &biased,
                                       const SeedSet &seeds,
                                       const DiffusionConfig &cfg = {});

} // namespace micc
