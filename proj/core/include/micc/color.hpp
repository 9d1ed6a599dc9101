#pragma once

#include "micc/image.hpp"

namespace micc {

// Floor below which an illuminant channel is treated as singular for
// per-channel division. Far below meaningful signal but keeps dark pixels
// from blowing up.
inline constexpr double kSingularEps = 1e-4;

// sRGB electro-optical transfer (IEC 61966-2-1), scalar forms.
// srgb_to_linear expects samples in [0,1]; linear_to_srgb clips to [0,1].
double srgb_to_linear(double s);
double linear_to_srgb(double v);

// Per-channel transfer over a raster. The validity mask is carried over.
// srgb_to_linear rejects samples outside [0,1] with ValueRangeError.
// linear_to_srgb clips; when `clipped` is non-null it is set to whether
// any sample needed clipping.
LinearImage srgb_to_linear(const LinearImage &gamma_encoded);
LinearImage linear_to_srgb(const LinearImage &linear, bool *clipped = nullptr);

// Pixel-wise image formation: out = white * illum, per channel.
LinearImage apply_illumination(const LinearImage &white,
                               const IlluminationMap &illum);

// Von Kries diagonal correction: out = biased / illum, per channel.
// Throws SingularIlluminantError if an illuminant channel <= kSingularEps
// at a valid pixel.
LinearImage von_kries_correct(const LinearImage &biased,
                              const IlluminationMap &illum);
LinearImage von_kries_correct(const LinearImage &biased,
                              const Illuminant &illum);

// Apparent illuminant of a biased/corrected pair: per-pixel channel ratios
// biased/corrected, aggregated by the per-channel median over valid pixels,
// then L2-normalized. Pixels with any corrected channel <= kSingularEps are
// dropped; EmptyDomainError if none remain.
Illuminant apparent_illumination(const LinearImage &biased,
                                 const LinearImage &corrected);

} // namespace micc
