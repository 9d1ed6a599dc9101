#pragma once

// Internal reflect-padded separable filtering on single-channel planes.

#include <cmath>
#include <cstddef>
#include <vector>

namespace micc::detail {

// Reflect index into [0, n) (border pixel mirrored, abcb-style).
inline int reflect(int i, int n) {
    if (n == 1)
        return 0;
    int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double &v : k)
        v /= sum;
    return k;
}

inline void convolve_rows(std::vector<double> &plane, int w, int h,
                          const std::vector<double> &kernel) {
    int radius = int(kernel.size() / 2);
    std::vector<double> row(w);
    for (int y = 0; y < h; ++y) {
        double *p = plane.data() + size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * p[reflect(x + i, w)];
            row[x] = acc;
        }
        for (int x = 0; x < w; ++x)
            p[x] = row[x];
    }
}

inline void convolve_cols(std::vector<double> &plane, int w, int h,
                          const std::vector<double> &kernel) {
    int radius = int(kernel.size() / 2);
    std::vector<double> col(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * plane[size_t(reflect(y + i, h)) * w + x];
            col[y] = acc;
        }
        for (int y = 0; y < h; ++y)
            plane[size_t(y) * w + x] = col[y];
    }
}

inline void gaussian_smooth(std::vector<double> &plane, int w, int h,
                            double sigma) {
    if (sigma <= 0.0)
        return;
    auto k = gaussian_kernel(sigma);
    convolve_rows(plane, w, h, k);
    convolve_cols(plane, w, h, k);
}

} // namespace micc::detail
