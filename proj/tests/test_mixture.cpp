#include "micc/mixture.hpp"
#include "micc/color.hpp"
#include "micc/metrics.hpp"
#include "micc/rng.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace micc;
using namespace micc::testutil;

namespace {

SeedSet seeds_with_colors(int w, int h, const std::vector<Illuminant> &colors,
                          const std::vector<std::vector<PixelCoord>> &pts) {
    SeedSet s;
    s.width = w;
    s.height = h;
    for (size_t i = 0; i < colors.size(); ++i) {
        SeedGroup g;
        g.color = colors[i];
        g.points = i < pts.size() ? pts[i] : std::vector<PixelCoord>{};
        s.groups.push_back(std::move(g));
    }
    return s;
}

ProbabilityMap one_hot(int w, int h, int n, const SegmentMap &seg) {
    ProbabilityMap p(w, h, n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            p.at(x, y, int(seg.at(x, y))) = 1.0f;
    return p;
}

// Independent N=2 inverse: exhaustive grid over the simplex, step 1e-4.
double brute_force_weight(const Illuminant &i1, const Illuminant &i2,
                          const std::array<double, 3> &b) {
    double best_p = 0.0, best_r = 1e300;
    for (int k = 0; k <= 10000; ++k) {
        double p = 1e-4 * k;
        double r = 0.0;
        for (int c = 0; c < 3; ++c) {
            double d = p * i1[c] + (1.0 - p) * i2[c] - b[size_t(c)];
            r += d * d;
        }
        if (r < best_r) {
            best_r = r;
            best_p = p;
        }
    }
    return best_p;
}

} // namespace

TEST_CASE("reconstruct_illumination is the per-pixel convex combination") {
    SUBCASE("one-hot weights copy the seed color") {
        auto seeds = seeds_with_colors(
            2, 2,
            {Illuminant{1, 0, 0}, Illuminant{0, 1, 0},
             Illuminant{0.8, 0.1, 0.1}},
            {});
        ProbabilityMap p(2, 2, 3);
        for (size_t px = 0; px < 4; ++px)
            p.data[px * 3 + 2] = 1.0f;
        IlluminationMap map = reconstruct_illumination(p, seeds);
        CHECK(map.at(1, 1, 0) == doctest::Approx(0.8));
        CHECK(map.at(1, 1, 1) == doctest::Approx(0.1));
    }
    SUBCASE("even blend of two pure colors") {
        auto seeds = seeds_with_colors(
            1, 1, {Illuminant{1, 0, 0}, Illuminant{0, 1, 0}}, {});
        ProbabilityMap p(1, 1, 2, 0.5f);
        IlluminationMap map = reconstruct_illumination(p, seeds);
        CHECK(map.at(0, 0, 0) == doctest::Approx(0.5));
        CHECK(map.at(0, 0, 1) == doctest::Approx(0.5));
        CHECK(map.at(0, 0, 2) == doctest::Approx(0.0));
    }
    SUBCASE("uniform weights over four illuminants average them") {
        std::vector<Illuminant> colors = {{0.8, 0.2, 0.1},
                                          {0.1, 0.8, 0.2},
                                          {0.2, 0.1, 0.8},
                                          {0.5, 0.5, 0.5}};
        auto seeds = seeds_with_colors(1, 1, colors, {});
        ProbabilityMap p(1, 1, 4, 0.25f);
        IlluminationMap map = reconstruct_illumination(p, seeds);
        CHECK(map.at(0, 0, 0) == doctest::Approx(0.4));
        CHECK(map.at(0, 0, 1) == doctest::Approx(0.4));
        CHECK(map.at(0, 0, 2) == doctest::Approx(0.4));
    }
    SUBCASE("count mismatch is a shape error") {
        auto seeds =
            seeds_with_colors(1, 1, {Illuminant{1, 0, 0}}, {});
        ProbabilityMap p(1, 1, 2, 0.5f);
        CHECK_THROWS_AS(reconstruct_illumination(p, seeds), ShapeError);
    }
}

TEST_CASE("reconstruction stays inside the seed color hull per channel") {
    std::vector<Illuminant> colors = {Illuminant{0.9, 0.3, 0.2}.normalized(),
                                      Illuminant{0.2, 0.9, 0.4}.normalized(),
                                      Illuminant{0.3, 0.4, 0.9}.normalized()};
    auto seeds = seeds_with_colors(8, 8, colors, {});
    Rng rng(5);
    ProbabilityMap p(8, 8, 3);
    for (size_t px = 0; px < 64; ++px) {
        double a = rng.next_double(), b = rng.next_double(),
               c = rng.next_double();
        double s = a + b + c;
        p.data[px * 3] = float(a / s);
        p.data[px * 3 + 1] = float(b / s);
        p.data[px * 3 + 2] = float(c / s);
    }
    IlluminationMap map = reconstruct_illumination(p, seeds);
    for (int ch = 0; ch < 3; ++ch) {
        double lo = std::min({colors[0][ch], colors[1][ch], colors[2][ch]});
        double hi = std::max({colors[0][ch], colors[1][ch], colors[2][ch]});
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                CHECK(map.at(x, y, ch) >= lo - 1e-6);
                CHECK(map.at(x, y, ch) <= hi + 1e-6);
            }
    }
}

TEST_CASE("l1_image_distance fixtures") {
    LinearImage a(1, 1), b(1, 1);
    a.set_pixel(0, 0, 1, 0, 0);
    b.set_pixel(0, 0, 1, 0, 0);
    CHECK(l1_image_distance(a, b) == 0.0);
    b.set_pixel(0, 0, 0, 1, 0);
    CHECK(l1_image_distance(a, b) == 2.0);

    LinearImage c(2, 1), d(2, 1);
    c.set_pixel(0, 0, 0.1, 0.1, 0.1);
    CHECK(l1_image_distance(c, d) == doctest::Approx(0.15).epsilon(1e-6));

    LinearImage e(3, 1);
    CHECK_THROWS_AS(l1_image_distance(c, e), ShapeError);
}

TEST_CASE("mask_loss is zero iff seed pixels carry their colors") {
    auto seeds = seeds_with_colors(
        4, 4, {Illuminant{1, 0, 0}, Illuminant{0, 1, 0}},
        {{{0, 0}, {1, 1}}, {{3, 3}}});
    IlluminationMap pred(4, 4);
    pred.set_pixel(0, 0, 1, 0, 0);
    pred.set_pixel(1, 1, 1, 0, 0);
    pred.set_pixel(3, 3, 0, 1, 0);
    CHECK(mask_loss(pred, seeds) == 0.0);

    // adding more correct seed pixels keeps the loss at zero
    auto more = seeds_with_colors(
        4, 4, {Illuminant{1, 0, 0}, Illuminant{0, 1, 0}},
        {{{0, 0}, {1, 1}, {2, 0}, {0, 2}}, {{3, 3}}});
    pred.set_pixel(2, 0, 1, 0, 0);
    pred.set_pixel(0, 2, 1, 0, 0);
    CHECK(mask_loss(pred, more) == 0.0);

    // a single wrong seed pixel with an all-zero prediction costs 1
    auto single =
        seeds_with_colors(1, 1, {Illuminant{1, 0, 0}}, {{{0, 0}}});
    IlluminationMap zero(1, 1);
    zero.set_pixel(0, 0, 0, 0, 0);
    CHECK(mask_loss(zero, single) == 1.0);
}

TEST_CASE("total_loss: perfect prediction drives all terms to zero") {
    const int w = 16, h = 16;
    SegmentMap seg = split_segments(w, h);
    std::vector<Illuminant> colors = {
        float_exact(Illuminant{0.9, 0.6, 0.4}.normalized()),
        float_exact(Illuminant{0.4, 0.6, 0.9}.normalized())};
    IlluminationMap gt = hard_map(seg, colors);
    SeedSet seeds = sample_seeds_from_gt(gt, seg, 8, 42);
    for (size_t i = 0; i < colors.size(); ++i)
        seeds.groups[i].color = colors[i];

    LinearImage source = random_image(w, h, 31, 0.1, 0.9);
    LinearImage biased = apply_illumination(source, gt);
    LinearImage gt_white = von_kries_correct(biased, gt);

    ProbabilityMap p = one_hot(w, h, 2, seg);
    LossReport r = total_loss(gt, p, biased, gt_white, seeds, 100.0);
    CHECK(r.illum == 0.0);
    CHECK(r.rgb == 0.0);
    CHECK(r.masks == 0.0);
    CHECK(r.total_supervised == 0.0);
}

TEST_CASE("total_loss lambda scaling is exactly linear") {
    const int w = 8, h = 8;
    SegmentMap seg = split_segments(w, h);
    std::vector<Illuminant> colors = {Illuminant{0.9, 0.6, 0.4}.normalized(),
                                      Illuminant{0.4, 0.6, 0.9}.normalized()};
    IlluminationMap gt = hard_map(seg, colors);
    SeedSet seeds = sample_seeds_from_gt(gt, seg, 4, 7);
    LinearImage source = random_image(w, h, 3, 0.1, 0.9);
    LinearImage biased = apply_illumination(source, gt);

    ProbabilityMap uniform(w, h, 2, 0.5f);
    LossReport a = total_loss(gt, uniform, biased, source, seeds, 100.0);
    LossReport b = total_loss(gt, uniform, biased, source, seeds, 50.0);
    CHECK(a.illum == b.illum);
    CHECK(a.total_supervised == 2.0 * b.total_supervised);
    CHECK(a.total_supervised ==
          doctest::Approx(100.0 * (a.illum + a.rgb + a.masks)));
    CHECK_THROWS_AS(total_loss(gt, uniform, biased, source, seeds, 0.0),
                    ConfigError);
}

TEST_CASE("uniform probabilities on a two-illuminant scene: closed form") {
    const int w = 12, h = 12;
    SegmentMap seg = split_segments(w, h);
    std::vector<Illuminant> colors = {Illuminant{0.9, 0.6, 0.4}.normalized(),
                                      Illuminant{0.4, 0.6, 0.9}.normalized()};
    IlluminationMap gt = hard_map(seg, colors);
    SeedSet seeds = sample_seeds_from_gt(gt, seg, 4, 7);
    ProbabilityMap uniform(w, h, 2, 0.5f);
    IlluminationMap recon = reconstruct_illumination(uniform, seeds);
    double illum = l1_image_distance(recon, gt);
    double closed = 0.5 * (std::abs(colors[0].r - colors[1].r) +
                           std::abs(colors[0].g - colors[1].g) +
                           std::abs(colors[0].b - colors[1].b));
    CHECK(illum == doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("oracle_probabilities fixtures") {
    std::vector<Illuminant> colors = {Illuminant{0.9, 0.3, 0.2}.normalized(),
                                      Illuminant{0.2, 0.8, 0.3}.normalized()};
    auto seeds = seeds_with_colors(2, 1, colors, {});

    SUBCASE("exact seed color gives a one-hot row") {
        IlluminationMap gt(2, 1);
        gt.set_pixel(0, 0, colors[1].r, colors[1].g, colors[1].b);
        gt.set_pixel(1, 0, colors[0].r, colors[0].g, colors[0].b);
        OracleResult r = oracle_probabilities(gt, seeds);
        CHECK(r.probabilities.at(0, 0, 1) == doctest::Approx(1.0));
        CHECK(r.probabilities.at(0, 0, 0) == doctest::Approx(0.0));
        CHECK(r.probabilities.at(1, 0, 0) == doctest::Approx(1.0));
        CHECK_FALSE(r.degenerate);
        CHECK(r.residual[0] < 1e-6f);
    }

    SUBCASE("exact midpoint gives (0.5, 0.5)") {
        IlluminationMap gt(1, 1);
        gt.set_pixel(0, 0, 0.5 * (colors[0].r + colors[1].r),
                     0.5 * (colors[0].g + colors[1].g),
                     0.5 * (colors[0].b + colors[1].b));
        OracleResult r = oracle_probabilities(gt, seeds);
        CHECK(r.probabilities.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-5));
        CHECK(r.probabilities.at(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-5));
    }

    SUBCASE("random pixels match the brute-force grid within 1e-3") {
        Rng rng(71);
        IlluminationMap gt(5, 4);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x)
                gt.set_pixel(x, y, 0.05 + rng.next_double(),
                             0.05 + rng.next_double(),
                             0.05 + rng.next_double());
        auto big_seeds = seeds_with_colors(5, 4, colors, {});
        OracleResult r = oracle_probabilities(gt, big_seeds);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x) {
                double want =
                    brute_force_weight(colors[0], colors[1], gt.pixel(x, y));
                CHECK(std::abs(double(r.probabilities.at(x, y, 0)) - want) <
                      1e-3);
            }
    }
}

TEST_CASE("oracle inverts reconstruction on convex-combination scenes") {
    const int w = 16, h = 16;
    std::vector<Illuminant> colors = {Illuminant{0.9, 0.35, 0.25}.normalized(),
                                      Illuminant{0.25, 0.9, 0.35}.normalized(),
                                      Illuminant{0.35, 0.25, 0.9}.normalized(),
                                      Illuminant{0.6, 0.6, 0.52}.normalized()};
    auto seeds = seeds_with_colors(w, h, colors, {});
    Rng rng(13);
    IlluminationMap gt(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double wgt[4], s = 0;
            for (double &v : wgt) {
                v = -std::log(1.0 - rng.next_double());
                s += v;
            }
            double r = 0, g = 0, b = 0;
            for (int i = 0; i < 4; ++i) {
                r += wgt[i] / s * colors[size_t(i)].r;
                g += wgt[i] / s * colors[size_t(i)].g;
                b += wgt[i] / s * colors[size_t(i)].b;
            }
            gt.set_pixel(x, y, r, g, b);
        }
    OracleResult r = oracle_probabilities(gt, seeds);
    IlluminationMap recon = reconstruct_illumination(r.probabilities, seeds);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto a = recon.pixel(x, y);
            auto b = gt.pixel(x, y);
            double l1 = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) +
                        std::abs(a[2] - b[2]);
            CHECK(l1 < 1e-5);
        }
}

TEST_CASE("oracle flags degenerate seed colors and still answers") {
    Illuminant c = Illuminant{0.5, 0.5, 0.5}.normalized();
    auto seeds = seeds_with_colors(1, 1, {c, c}, {});
    IlluminationMap gt(1, 1);
    gt.set_pixel(0, 0, c.r, c.g, c.b);
    OracleResult r = oracle_probabilities(gt, seeds);
    CHECK(r.degenerate);
    r.probabilities.validate();
    CHECK(r.residual[0] < 1e-6f);
}

TEST_CASE("seed diffusion simplex and seed-pixel contracts") {
    SUBCASE("single illuminant gets probability one everywhere") {
        LinearImage img = random_image(8, 6, 3);
        auto seeds = seeds_with_colors(
            8, 6, {Illuminant{0.7, 0.6, 0.4}.normalized()}, {{{2, 2}}});
        ProbabilityMap p = seed_diffusion_estimate(img, seeds);
        for (float v : p.data)
            CHECK(v == 1.0f);
    }

    SUBCASE("argmax at a seed pixel is its own illuminant") {
        const int w = 32, h = 24;
        LinearImage img = random_image(w, h, 9, 0.1, 0.9);
        auto seeds = seeds_with_colors(
            w, h,
            {Illuminant{0.8, 0.5, 0.3}.normalized(),
             Illuminant{0.3, 0.5, 0.8}.normalized(),
             Illuminant{0.5, 0.8, 0.3}.normalized()},
            {{{1, 1}, {10, 5}, {30, 20}},
             {{5, 12}, {20, 3}},
             {{15, 15}, {2, 20}, {28, 8}}});
        ProbabilityMap p = seed_diffusion_estimate(img, seeds);
        p.validate();
        for (int i = 0; i < seeds.n_illuminants(); ++i)
            for (const auto &pt : seeds.groups[size_t(i)].points) {
                int best = 0;
                for (int j = 1; j < p.n; ++j)
                    if (p.at(pt.x, pt.y, j) > p.at(pt.x, pt.y, best))
                        best = j;
                CHECK(best == i);
            }
    }

    SUBCASE("two separated regions diffuse to their local illuminant") {
        const int w = 64, h = 32;
        SegmentMap seg = split_segments(w, h);
        Illuminant A = rotated_from_neutral(10.0);
        Illuminant B = rotated_from_neutral(-10.0);
        LinearImage white = gray_image(w, h, 21);
        LinearImage biased =
            apply_illumination(white, hard_map(seg, {A, B}));
        auto seeds = seeds_with_colors(
            w, h, {A, B},
            {{{8, 8}, {16, 16}, {8, 24}, {24, 8}},
             {{40, 8}, {48, 16}, {56, 24}, {40, 24}}});
        DiffusionConfig cfg;
        cfg.sigma_spatial_frac = 0.1;
        ProbabilityMap p = seed_diffusion_estimate(biased, seeds, cfg);
        p.validate();
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (x >= w / 2 - 2 && x < w / 2 + 2)
                    continue; // boundary band may blend
                int best = p.at(x, y, 0) >= p.at(x, y, 1) ? 0 : 1;
                CHECK(best == (x < w / 2 ? 0 : 1));
            }
    }
}

TEST_CASE("repair_simplex tolerances") {
    ProbabilityMap p(1, 1, 2);
    p.data = {0.75f, 0.25f};
    CHECK(repair_simplex(p) == 0);

    p.data = {1.0f, 0.5f}; // sums to 1.5
    CHECK_THROWS_AS(repair_simplex(p), FormatError);

    p.data = {0.7f, 0.3004f}; // within 1e-3: renormalized with a warning count
    CHECK(repair_simplex(p) == 1);
    p.validate();

    p.data = {1.0002f, -0.0002f}; // small negative clamps to zero
    CHECK(repair_simplex(p) == 1);
    CHECK(p.data[1] == 0.0f);

    p.data = {1.01f, -0.01f}; // beyond tolerance
    CHECK_THROWS_AS(repair_simplex(p), FormatError);
}
