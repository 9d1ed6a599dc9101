#include "micc/augment.hpp"

#include "filters.hpp"
#include "micc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace micc {

Illuminant shuffle_illuminant(const Illuminant &base, uint64_t rng_seed) {
    static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    if (!base.is_finite())
        throw ValueRangeError("shuffle_illuminant: non-finite illuminant");
    Rng rng(rng_seed);
    const int *p = kPerms[rng.next_below(6)];
    return {base[p[0]], base[p[1]], base[p[2]]};
}

IlluminationMixture build_illumination_map(const SegmentMap &segments,
                                           const std::vector<Illuminant> &colors,
                                           double feather_sigma) {
    segments.validate();
    if (int(colors.size()) != segments.n_labels)
        throw ShapeError("build_illumination_map: color count != label count");
    const int w = segments.width;
    const int h = segments.height;
    const int n = segments.n_labels;

    std::vector<std::vector<double>> weight(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto &plane = weight[size_t(i)];
        plane.assign(size_t(w) * size_t(h), 0.0);
        for (size_t p = 0; p < plane.size(); ++p)
            plane[p] = segments.label[p] == i ? 1.0 : 0.0;
        detail::gaussian_smooth(plane, w, h, feather_sigma);
    }

    IlluminationMixture out{IlluminationMap(w, h), ProbabilityMap(w, h, n)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            size_t p = size_t(y) * w + x;
            double total = 0.0;
            for (int i = 0; i < n; ++i)
                total += weight[size_t(i)][p];
            double r = 0.0, g = 0.0, b = 0.0;
            for (int i = 0; i < n; ++i) {
                double wi = weight[size_t(i)][p] / total;
                out.weights.data[p * n + i] = float(wi);
                r += wi * colors[size_t(i)].r;
                g += wi * colors[size_t(i)].g;
                b += wi * colors[size_t(i)].b;
            }
            out.map.set_pixel(x, y, r, g, b);
        }
    }
    repair_simplex(out.weights, 1e-3);
    return out;
}

AugmentedSample augment(const LinearImage &corrected,
                        const SegmentMap &segments,
                        const std::vector<Illuminant> &pool, int n, int k,
                        uint64_t rng_seed, double feather_sigma) {
    segments.validate();
    if (segments.n_labels != n)
        throw ConfigError("augment: segment map has " +
                          std::to_string(segments.n_labels) +
                          " labels, expected " + std::to_string(n));
    if (corrected.width() != segments.width ||
        corrected.height() != segments.height)
        throw ShapeError("augment: image/segment dimensions differ");
    if (pool.empty())
        throw ConfigError("augment: empty illuminant pool");

    Rng rng(rng_seed);

    // Draw pool entries (without replacement while the pool lasts).
    std::vector<int> ids(pool.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<int> chosen;
    if (pool.size() >= size_t(n)) {
        chosen = rng.fork(1).sample_without_replacement(ids, size_t(n));
    } else {
        Rng draw = rng.fork(1);
        for (int i = 0; i < n; ++i)
            chosen.push_back(int(draw.next_below(pool.size())));
    }

    std::vector<Illuminant> colors;
    Rng shuf = rng.fork(2);
    for (int i = 0; i < n; ++i)
        colors.push_back(
            shuffle_illuminant(pool[size_t(chosen[size_t(i)])], shuf.next())
                .normalized());

    IlluminationMixture mix =
        build_illumination_map(segments, colors, feather_sigma);

    AugmentedSample sample{apply_illumination(corrected, mix.map),
                           corrected,
                           std::move(mix.map),
                           std::move(mix.weights),
                           colors,
                           SeedSet{},
                           std::string{},
                           0,
                           {},
                           0.0,
                           0};

    // Seeds come from the unfeathered labels so their colors are unambiguous.
    IlluminationMap hard(segments.width, segments.height);
    for (int y = 0; y < segments.height; ++y)
        for (int x = 0; x < segments.width; ++x) {
            const Illuminant &c = colors[size_t(segments.at(x, y))];
            hard.set_pixel(x, y, c.r, c.g, c.b);
        }
    sample.seeds =
        sample_seeds_from_gt(hard, segments, k, rng.fork(3).next());
    for (int i = 0; i < n; ++i)
        sample.seeds.groups[size_t(i)].color = colors[size_t(i)];

    sample.rng_seed = rng_seed;
    sample.pool_ids = chosen;
    sample.feather_sigma = feather_sigma;
    sample.seeds_per_illuminant = k;
    return sample;
}

std::pair<std::vector<std::string>, std::vector<std::string>>
split_dataset(const std::vector<std::string> &ids, double train_fraction,
              uint64_t rng_seed) {
    if (ids.empty())
        throw EmptyDomainError("split_dataset: empty id list");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0,1)");
    std::vector<std::string> shuffled = ids;
    Rng rng(rng_seed);
    rng.shuffle(shuffled);
    size_t n_train = size_t(std::floor(train_fraction * double(ids.size())));
    std::vector<std::string> train(shuffled.begin(),
                                   shuffled.begin() + n_train);
    std::vector<std::string> test(shuffled.begin() + n_train, shuffled.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

SegmentMap voronoi_segments(int width, int height, int n, uint64_t rng_seed) {
    if (n < 1 || size_t(n) > size_t(width) * size_t(height))
        throw ConfigError("voronoi_segments: invalid cell count");
    Rng rng(rng_seed);
    std::vector<size_t> all(size_t(width) * size_t(height));
    std::iota(all.begin(), all.end(), size_t(0));
    auto sites = rng.sample_without_replacement(all, size_t(n));

    SegmentMap seg;
    seg.width = width;
    seg.height = height;
    seg.n_labels = n;
    seg.label.resize(size_t(width) * size_t(height));
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            int best = 0;
            int64_t bestd = INT64_MAX;
            for (int i = 0; i < n; ++i) {
                int64_t sx = int64_t(sites[size_t(i)] % size_t(width));
                int64_t sy = int64_t(sites[size_t(i)] / size_t(width));
                int64_t d = (sx - x) * (sx - x) + (sy - y) * (sy - y);
                if (d < bestd) {
                    bestd = d;
                    best = i;
                }
            }
            seg.label[size_t(y) * width + x] = best;
        }
    }
    return seg;
}

std::vector<Illuminant> segment_median_colors(const IlluminationMap &map,
                                              const SegmentMap &segments) {
    if (map.width() != segments.width || map.height() != segments.height)
        throw ShapeError("segment_median_colors: dimensions differ");
    segments.validate();
    std::vector<std::array<std::vector<double>, 3>> ch(
        static_cast<size_t>(segments.n_labels));
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            auto p = map.pixel(x, y);
            auto &dst = ch[size_t(segments.at(x, y))];
            for (int c = 0; c < 3; ++c)
                dst[size_t(c)].push_back(p[c]);
        }
    std::vector<Illuminant> out;
    for (auto &bucket : ch) {
        Illuminant med;
        double *fields[3] = {&med.r, &med.g, &med.b};
        for (int c = 0; c < 3; ++c) {
            auto &v = bucket[size_t(c)];
            auto mid = v.begin() + v.size() / 2;
            std::nth_element(v.begin(), mid, v.end());
            double hi = *mid;
            *fields[c] = v.size() % 2 == 1
                             ? hi
                             : 0.5 * (*std::max_element(v.begin(), mid) + hi);
        }
        out.push_back(med.normalized());
    }
    return out;
}

} // namespace micc
