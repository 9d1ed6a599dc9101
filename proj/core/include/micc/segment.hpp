#pragma once

#include "micc/errors.hpp"

#include <cstdint>
#include <vector>

namespace micc {

// Per-pixel illuminant index in [0, n_labels). Every label must occupy at
// least one pixel.
struct SegmentMap {
    int width = 0;
    int height = 0;
    int n_labels = 0;
    std::vector<int32_t> label; // w*h, row-major

    int32_t at(int x, int y) const {
        return label[size_t(y) * width + x];
    }

    void validate() const {
        if (width <= 0 || height <= 0 || n_labels <= 0)
            throw ShapeError("segment map dimensions/label count must be positive");
        if (label.size() != size_t(width) * size_t(height))
            throw ShapeError("segment map label buffer size mismatch");
        std::vector<size_t> counts(size_t(n_labels), 0);
        for (int32_t l : label) {
            if (l < 0 || l >= n_labels)
                throw ValueRangeError("segment label out of range");
            ++counts[size_t(l)];
        }
        for (size_t c : counts)
            if (c == 0)
                throw ValueRangeError("segment map has an empty label");
    }
};

} // namespace micc
