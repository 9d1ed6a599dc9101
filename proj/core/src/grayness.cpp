#include "micc/grayness.hpp"

#include "filters.hpp"
#include "micc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace micc {

std::vector<uint8_t> SeedSet::mask(int i) const {
    std::vector<uint8_t> m(size_t(width) * size_t(height), 0);
    for (const auto &p : groups[size_t(i)].points)
        m[size_t(p.y) * width + p.x] = 1;
    return m;
}

void SeedSet::validate() const {
    if (groups.empty())
        throw ValueRangeError("seed set has no illuminants");
    std::vector<uint8_t> seen(size_t(width) * size_t(height), 0);
    for (const auto &g : groups) {
        if (g.points.empty())
            throw ValueRangeError("seed group has no points");
        double n = g.color.norm();
        if (!g.color.is_finite() || std::abs(n - 1.0) > 1e-6)
            throw ValueRangeError("seed color is not normalized");
        for (const auto &p : g.points) {
            if (p.x < 0 || p.x >= width || p.y < 0 || p.y >= height)
                throw ValueRangeError("seed point outside raster");
            uint8_t &s = seen[size_t(p.y) * width + p.x];
            if (s)
                throw ValueRangeError("seed masks overlap");
            s = 1;
        }
    }
}

GraynessMap grayness_map(const LinearImage &img) {
    const int w = img.width();
    const int h = img.height();
    const double floor_val = 1e-12;

    // log-chromaticity planes; green is the reference channel
    std::vector<double> u(img.pixel_count()), v(img.pixel_count());
    std::vector<uint8_t> zero(img.pixel_count(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto p = img.pixel(x, y);
            size_t i = size_t(y) * w + x;
            if (p[0] == 0.0 || p[1] == 0.0 || p[2] == 0.0)
                zero[i] = 1;
            double lr = std::log(std::max(p[0], floor_val));
            double lg = std::log(std::max(p[1], floor_val));
            double lb = std::log(std::max(p[2], floor_val));
            u[i] = lr - lg;
            v[i] = lb - lg;
        }
    }

    auto laplacian_at = [&](const std::vector<double> &plane, int x, int y) {
        auto at = [&](int xx, int yy) {
            return plane[size_t(detail::reflect(yy, h)) * w +
                         detail::reflect(xx, w)];
        };
        return at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) -
               4.0 * at(x, y);
    };

    GraynessMap out;
    out.width = w;
    out.height = h;
    out.score.resize(img.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * w + x;
            if (zero[i]) {
                out.score[i] = kZeroPixelGrayness;
                continue;
            }
            double du = laplacian_at(u, x, y);
            double dv = laplacian_at(v, x, y);
            out.score[i] = float(std::sqrt(du * du + dv * dv));
        }
    }
    return out;
}

namespace {

struct Chroma {
    double r, g;
};

double chroma_dist2(const Chroma &a, const Chroma &b) {
    double dr = a.r - b.r;
    double dg = a.g - b.g;
    return dr * dr + dg * dg;
}

// Deterministic k-means with k-means++ seeding. Empty clusters are refilled
// with the point farthest from its assigned center (ties: lowest index).
std::vector<int> kmeans(const std::vector<Chroma> &pts, int k, Rng &rng,
                        int max_iter, std::vector<Chroma> &centers) {
    const size_t n = pts.size();
    centers.clear();
    centers.push_back(pts[size_t(rng.next_below(n))]);
    std::vector<double> d2(n);
    while (int(centers.size()) < k) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto &c : centers)
                best = std::min(best, chroma_dist2(pts[i], c));
            d2[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total > 0.0) {
            double target = rng.next_double() * total;
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = size_t(rng.next_below(n));
        }
        centers.push_back(pts[pick]);
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double bestd = chroma_dist2(pts[i], centers[0]);
            for (int c = 1; c < k; ++c) {
                double d = chroma_dist2(pts[i], centers[size_t(c)]);
                if (d < bestd) {
                    bestd = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        std::vector<Chroma> sums(size_t(k), {0.0, 0.0});
        std::vector<size_t> counts(size_t(k), 0);
        for (size_t i = 0; i < n; ++i) {
            sums[size_t(assign[i])].r += pts[i].r;
            sums[size_t(assign[i])].g += pts[i].g;
            ++counts[size_t(assign[i])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[size_t(c)] == 0) {
                size_t far_i = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    double d = chroma_dist2(pts[i], centers[size_t(assign[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                assign[far_i] = c;
                centers[size_t(c)] = pts[far_i];
                changed = true;
                continue;
            }
            centers[size_t(c)] = {sums[size_t(c)].r / double(counts[size_t(c)]),
                                  sums[size_t(c)].g / double(counts[size_t(c)])};
        }
        if (!changed)
            break;
    }
    return assign;
}

} // namespace

SeedSet cluster_gray_pixels(const LinearImage &img, const GraynessMap &gmap,
                            int m, const GraySeedConfig &cfg) {
    if (img.width() != gmap.width || img.height() != gmap.height)
        throw ShapeError("cluster_gray_pixels: image/grayness dimensions differ");
    if (m < 1)
        throw ConfigError("cluster count must be >= 1");

    // Candidates: valid pixels with positive channels, ordered grayest first.
    std::vector<size_t> idx;
    idx.reserve(img.pixel_count());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            size_t i = size_t(y) * img.width() + x;
            if (!img.valid(x, y))
                continue;
            auto p = img.pixel(x, y);
            if (p[0] <= 0.0 || p[1] <= 0.0 || p[2] <= 0.0)
                continue;
            idx.push_back(i);
        }
    }
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (gmap.score[a] != gmap.score[b])
            return gmap.score[a] < gmap.score[b];
        return a < b;
    });
    size_t take = size_t(std::ceil(cfg.top_fraction * double(img.pixel_count())));
    size_t n_cand = std::min(take, idx.size());
    while (n_cand < idx.size() &&
           gmap.score[idx[n_cand]] < float(cfg.gray_threshold))
        ++n_cand;
    idx.resize(n_cand);

    if (idx.size() < size_t(m))
        throw DegenerateClusteringError(
            "cluster_gray_pixels: only " + std::to_string(idx.size()) +
            " gray candidates for m=" + std::to_string(m) +
            "; use a smaller m or a larger top fraction");

    std::vector<Chroma> chroma(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        int x = int(idx[i] % size_t(img.width()));
        int y = int(idx[i] / size_t(img.width()));
        auto p = img.pixel(x, y);
        double s = p[0] + p[1] + p[2];
        chroma[i] = {p[0] / s, p[1] / s};
    }

    Rng rng(cfg.rng_seed);
    std::vector<Chroma> centers;
    std::vector<int> assign = kmeans(chroma, m, rng, cfg.max_iterations, centers);

    // Canonical cluster order: by centroid chromaticity.
    std::vector<int> order(static_cast<size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto &ca = centers[size_t(a)];
        const auto &cb = centers[size_t(b)];
        if (ca.r != cb.r)
            return ca.r < cb.r;
        return ca.g < cb.g;
    });
    std::vector<int> rank(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i)
        rank[size_t(order[size_t(i)])] = i;

    SeedSet set;
    set.width = img.width();
    set.height = img.height();
    set.groups.resize(size_t(m));
    for (int i = 0; i < m; ++i) {
        const auto &c = centers[size_t(order[size_t(i)])];
        Illuminant col{c.r, c.g, 1.0 - c.r - c.g};
        set.groups[size_t(i)].color = col.normalized();
    }
    for (size_t i = 0; i < idx.size(); ++i) {
        int g = rank[size_t(assign[i])];
        set.groups[size_t(g)].points.push_back(
            {int(idx[i] % size_t(img.width())),
             int(idx[i] / size_t(img.width()))});
    }
    for (auto &g : set.groups)
        std::sort(g.points.begin(), g.points.end(),
                  [](const PixelCoord &a, const PixelCoord &b) {
                      return a.y != b.y ? a.y < b.y : a.x < b.x;
                  });
    set.validate();
    return set;
}

SeedSet sample_seeds_from_gt(const IlluminationMap &gt,
                             const SegmentMap &segments, int k,
                             uint64_t rng_seed) {
    if (gt.width() != segments.width || gt.height() != segments.height)
        throw ShapeError("sample_seeds_from_gt: map/segment dimensions differ");
    if (k < 1)
        throw ConfigError("seeds per illuminant must be >= 1");
    segments.validate();

    std::vector<std::vector<PixelCoord>> region(static_cast<size_t>(segments.n_labels));
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            region[size_t(segments.at(x, y))].push_back({x, y});

    Rng root(rng_seed);
    SeedSet set;
    set.width = gt.width();
    set.height = gt.height();
    set.groups.resize(region.size());
    for (size_t i = 0; i < region.size(); ++i) {
        if (region[i].size() < size_t(k))
            throw InsufficientRegionError(
                "segment " + std::to_string(i) + " has " +
                std::to_string(region[i].size()) + " pixels, need " +
                std::to_string(k));
        Rng sub = root.fork(uint64_t(i));
        auto pts = sub.sample_without_replacement(region[i], size_t(k));
        std::sort(pts.begin(), pts.end(),
                  [](const PixelCoord &a, const PixelCoord &b) {
                      return a.y != b.y ? a.y < b.y : a.x < b.x;
                  });

        std::vector<double> ch[3];
        for (const auto &p : region[i]) {
            auto px = gt.pixel(p.x, p.y);
            for (int c = 0; c < 3; ++c)
                ch[c].push_back(px[c]);
        }
        Illuminant med;
        double *fields[3] = {&med.r, &med.g, &med.b};
        for (int c = 0; c < 3; ++c) {
            auto mid = ch[c].begin() + ch[c].size() / 2;
            std::nth_element(ch[c].begin(), mid, ch[c].end());
            double hi = *mid;
            *fields[c] = ch[c].size() % 2 == 1
                             ? hi
                             : 0.5 * (*std::max_element(ch[c].begin(), mid) + hi);
        }
        set.groups[i].color = med.normalized();
        set.groups[i].points = std::move(pts);
    }
    set.validate();
    return set;
}

} // namespace micc
