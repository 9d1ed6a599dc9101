#pragma once

#include "micc/image.hpp"
#include "micc/segment.hpp"

#include <cstdint>
#include <vector>

namespace micc {

// Score assigned to pixels with a zero channel (no usable log-chromaticity).
inline constexpr float kZeroPixelGrayness = 1e9f;

// Per-pixel grayness score; lower = more likely an achromatic surface.
struct GraynessMap {
    int width = 0;
    int height = 0;
    std::vector<float> score; // w*h, finite, >= 0

    float at(int x, int y) const { return score[size_t(y) * width + x]; }
};

// One illuminant's seed pixels and color.
struct SeedGroup {
    Illuminant color;               // normalized
    std::vector<PixelCoord> points; // sorted by (y,x), unique
};

struct SeedSet {
    int width = 0;
    int height = 0;
    std::vector<SeedGroup> groups;

    int n_illuminants() const { return int(groups.size()); }

    // Binary raster for illuminant i: 1 exactly at its seed points.
    std::vector<uint8_t> mask(int i) const;

    // Invariants: >= 1 point per group, pairwise disjoint points inside the
    // raster, normalized colors.
    void validate() const;
};

struct GraySeedConfig {
    // Fraction of grayest pixels entering clustering. Pixels scoring below
    // gray_threshold always enter, whatever the fraction cut.
    double top_fraction = 0.005;
    double gray_threshold = 1e-6;
    uint64_t rng_seed = 17; // k-means++ stream; fixed so runs reproduce
    int max_iterations = 100;
};

// Grayness score from local log-chromaticity contrast: the norm of the
// 3x3-Laplacian responses of (log R - log G) and (log B - log G), computed
// with reflect padding. Achromatic pixels under locally uniform illumination
// score ~0; the score is exactly invariant to exposure scaling. Pixels with
// a zero channel receive kZeroPixelGrayness.
GraynessMap grayness_map(const LinearImage &img);

// Clusters the grayest pixels' (r,g) chromaticities into m groups with
// deterministic k-means++. Cluster centroids become seed colors, members
// become candidate seed points. Clusters are ordered by centroid (r,g).
// Throws DegenerateClusteringError when fewer candidates than m remain.
SeedSet cluster_gray_pixels(const LinearImage &img, const GraynessMap &gmap,
                            int m, const GraySeedConfig &cfg = {});

// Uniformly samples k seed points (without replacement) from every
// illuminant's segment; deterministic per rng_seed. Seed colors are the
// per-segment channel medians of the ground-truth map, normalized.
SeedSet sample_seeds_from_gt(const IlluminationMap &gt,
                             const SegmentMap &segments, int k,
                             uint64_t rng_seed);

} // namespace micc
