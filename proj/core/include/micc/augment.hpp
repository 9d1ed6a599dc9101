#pragma once

#include "micc/color.hpp"
#include "micc/grayness.hpp"
#include "micc/image.hpp"
#include "micc/mixture.hpp"
#include "micc/segment.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace micc {

// One synthesized multi-illumination training sample. For N illuminants the
// sample carries N*2+2 artifacts: N illuminant colors, N seed masks, the
// biased image and the corrected image; the full illumination map and the
// provenance record ride along.
struct AugmentedSample {
    LinearImage biased;
    LinearImage corrected;
    IlluminationMap illum_map;
    ProbabilityMap mixture_weights;
    std::vector<Illuminant> illuminant_colors;
    SeedSet seeds;

    // provenance
    std::string source_id;
    uint64_t rng_seed = 0;
    std::vector<int> pool_ids;
    double feather_sigma = 0.0;
    int seeds_per_illuminant = 0;

    int n_illuminants() const { return int(illuminant_colors.size()); }
    int artifact_count() const { return n_illuminants() * 2 + 2; }
};

// Uniformly chosen permutation of the three channels, deterministic per seed.
Illuminant shuffle_illuminant(const Illuminant &base, uint64_t rng_seed);

struct IlluminationMixture {
    IlluminationMap map;
    ProbabilityMap weights; // Gaussian-feathered partition of unity
};

// Per-pixel illuminant from Gaussian-feathered segment indicators:
// L[p] = sum_i w_i(p) * color_i with the w_i a partition of unity.
// feather_sigma = 0 keeps hard segment boundaries.
IlluminationMixture build_illumination_map(const SegmentMap &segments,
                                           const std::vector<Illuminant> &colors,
                                           double feather_sigma);

// Full augmentation of one image: draws n pool illuminants, channel-shuffles
// each, builds the feathered map, applies the image formation product, and
// samples k seed points per illuminant from the unfeathered labels.
// Deterministic per rng_seed.
AugmentedSample augment(const LinearImage &corrected,
                        const SegmentMap &segments,
                        const std::vector<Illuminant> &pool, int n, int k,
                        uint64_t rng_seed, double feather_sigma = 8.0);

// Deterministic shuffled split: floor(train_fraction * n) ids for training,
// the rest for testing; outputs sorted.
std::pair<std::vector<std::string>, std::vector<std::string>>
split_dataset(const std::vector<std::string> &ids, double train_fraction,
              uint64_t rng_seed);

// Synthetic segmentation for self-contained runs: Voronoi partition with n
// random sites (nearest site, ties to the lowest site index).
SegmentMap voronoi_segments(int width, int height, int n, uint64_t rng_seed);

// Per-segment normalized channel medians of a ground-truth map; used to
// build illuminant pools from MIMO-style data.
std::vector<Illuminant> segment_median_colors(const IlluminationMap &map,
                                              const SegmentMap &segments);

} // namespace micc
