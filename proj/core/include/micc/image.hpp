#pragma once

#include "micc/errors.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace micc {

struct PixelCoord {
    int x = 0;
    int y = 0;
    friend bool operator==(const PixelCoord &, const PixelCoord &) = default;
    friend auto operator<=>(const PixelCoord &, const PixelCoord &) = default;
};

// A single light source color. Channels are linear RGB, non-negative.
// Directions are compared after L2 normalization; absolute intensity is
// never interpreted by the toolkit.
struct Illuminant {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }

    double norm() const { return std::sqrt(r * r + g * g + b * b); }

    bool is_finite() const {
        return std::isfinite(r) && std::isfinite(g) && std::isfinite(b);
    }

    Illuminant normalized() const {
        if (!is_finite())
            throw ValueRangeError("illuminant has non-finite channel");
        double n = norm();
        if (n <= 0.0)
            throw ValueRangeError("cannot normalize all-zero illuminant");
        return {r / n, g / n, b / n};
    }

    friend bool operator==(const Illuminant &, const Illuminant &) = default;
};

namespace detail {

// Neumaier-compensated accumulator. Aggregates are always accumulated in a
// fixed pixel order with compensation, so results do not depend on how the
// raster was produced or partitioned upstream.
class CompensatedSum {
  public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace detail

// Shared storage for H x W x 3 float rasters; interleaved RGB, row-major.
// Arithmetic on pixels is done in double, storage is 32-bit.
class Raster3 {
  public:
    int width() const { return width_; }
    int height() const { return height_; }
    size_t pixel_count() const { return size_t(width_) * size_t(height_); }

    float at(int x, int y, int c) const {
        return data_[(size_t(y) * width_ + x) * 3 + c];
    }
    float &at(int x, int y, int c) {
        return data_[(size_t(y) * width_ + x) * 3 + c];
    }

    std::array<double, 3> pixel(int x, int y) const {
        size_t i = (size_t(y) * width_ + x) * 3;
        return {double(data_[i]), double(data_[i + 1]), double(data_[i + 2])};
    }
    void set_pixel(int x, int y, double r, double g, double b) {
        size_t i = (size_t(y) * width_ + x) * 3;
        data_[i] = float(r);
        data_[i + 1] = float(g);
        data_[i + 2] = float(b);
    }

    const std::vector<float> &data() const { return data_; }
    std::vector<float> &data() { return data_; }

    bool same_shape(const Raster3 &o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

  protected:
    Raster3(int w, int h, float fill) : width_(w), height_(h) {
        if (w <= 0 || h <= 0)
            throw ShapeError("raster dimensions must be positive");
        data_.assign(size_t(w) * size_t(h) * 3, fill);
    }
    ~Raster3() = default;

    int width_;
    int height_;
    std::vector<float> data_;
};

// Linear-RGB image. Optional validity mask: pixels with mask 0 are excluded
// from every statistic (masked reference objects, saturated regions).
class LinearImage : public Raster3 {
  public:
    LinearImage(int w, int h, float fill = 0.0f) : Raster3(w, h, fill) {}

    bool has_mask() const { return !mask_.empty(); }
    bool valid(int x, int y) const {
        return mask_.empty() || mask_[size_t(y) * width_ + x] != 0;
    }
    void set_mask(std::vector<uint8_t> mask) {
        if (mask.size() != pixel_count())
            throw ShapeError("validity mask size does not match image");
        mask_ = std::move(mask);
    }
    void clear_mask() { mask_.clear(); }
    const std::vector<uint8_t> &mask() const { return mask_; }

    size_t valid_count() const {
        if (mask_.empty())
            return pixel_count();
        size_t n = 0;
        for (uint8_t m : mask_)
            n += (m != 0);
        return n;
    }

    // Invariants: all channels finite and >= 0; mask (if any) sized w*h.
    void validate() const {
        for (float v : data_)
            if (!(std::isfinite(v) && v >= 0.0f))
                throw ValueRangeError("linear image channel negative or non-finite");
        if (!mask_.empty() && mask_.size() != pixel_count())
            throw ShapeError("validity mask size does not match image");
    }

  private:
    std::vector<uint8_t> mask_;
};

// Per-pixel illuminant color field. Same storage layout as LinearImage but
// with the stronger invariant that no pixel is all-zero.
class IlluminationMap : public Raster3 {
  public:
    IlluminationMap(int w, int h, Illuminant fill = {1.0, 1.0, 1.0})
        : Raster3(w, h, 0.0f) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                set_pixel(x, y, fill.r, fill.g, fill.b);
    }

    Illuminant pixel_illuminant(int x, int y) const {
        auto p = pixel(x, y);
        return {p[0], p[1], p[2]};
    }

    void validate() const {
        for (size_t i = 0; i < data_.size(); i += 3) {
            for (int c = 0; c < 3; ++c) {
                float v = data_[i + c];
                if (!(std::isfinite(v) && v >= 0.0f))
                    throw ValueRangeError("illumination channel negative or non-finite");
            }
            if (data_[i] == 0.0f && data_[i + 1] == 0.0f && data_[i + 2] == 0.0f)
                throw ValueRangeError("illumination map has all-zero pixel");
        }
    }
};

} // namespace micc
