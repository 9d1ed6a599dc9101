#pragma once

#include "micc/grayness.hpp"
#include "micc/image.hpp"
#include "micc/mixture.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace micc::io {

// --- PNG -------------------------------------------------------------
// 8- and 16-bit PNGs are assumed sRGB-encoded and are linearized on load;
// gray and alpha variants are expanded/stripped to RGB.
LinearImage load_png_linear(const std::string &path);

// Writes sRGB-encoded PNG; linear values are clipped to [0,1] first.
void save_png16_srgb(const std::string &path, const LinearImage &linear);
void save_png8_srgb(const std::string &path, const LinearImage &linear);

// Single-channel validity/seed masks, 0 = invalid.
std::vector<uint8_t> load_mask_png(const std::string &path, int &width,
                                   int &height);
void save_mask_png(const std::string &path, const std::vector<uint8_t> &mask,
                   int width, int height);

// Grayscale 8-bit dump of a float plane clipped to [0,1] (inspection aid).
void save_gray_png8(const std::string &path, const std::vector<float> &plane,
                    int width, int height);

// Grayscale PNG whose sample values are segment labels.
SegmentMap load_segments_png(const std::string &path, int n_labels);
void save_segments_png(const std::string &path, const SegmentMap &segments);

// --- PFM -------------------------------------------------------------
// Color portable float maps ('PF'), little-endian (negative scale),
// bottom-up row order. Values are taken as already linear.
LinearImage load_pfm(const std::string &path);
IlluminationMap load_pfm_map(const std::string &path);
void save_pfm(const std::string &path, const Raster3 &img);

// --- Probability map container (.pmap) --------------------------------
// Layout, all little-endian:
//   bytes 0..3   magic "PMAP"
//   u32          version (1)
//   u32 u32 u32  width, height, n
//   f32 * w*h*n  weights, row-major pixels, per-pixel n weights contiguous
// On load the simplex is repaired within 1e-3 (see repair_simplex); the
// number of renormalized pixels is reported through `repaired`.
ProbabilityMap load_probability_map(const std::string &path,
                                    size_t *repaired = nullptr);
void save_probability_map(const std::string &path, const ProbabilityMap &p);

// --- Seed sets ---------------------------------------------------------
// JSON document: {schema, width, height, illuminants:[{color:[r,g,b],
// points:[[x,y],...]}]}. Mask PNGs are emitted separately per illuminant.
void save_seed_set_json(const std::string &path, const SeedSet &seeds);
SeedSet load_seed_set_json(const std::string &path);

// --- Illuminant pools ----------------------------------------------------
// JSON list of RGB triples; normalized on load.
std::vector<Illuminant> load_pool_json(const std::string &path);
void save_pool_json(const std::string &path,
                    const std::vector<Illuminant> &pool);

} // namespace micc::io
