#include "micc/io.hpp"
#include "micc/augment.hpp"
#include "micc/rng.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace micc;
using namespace micc::testutil;

TEST_CASE("png16 roundtrip stays within quantization error") {
    TempDir tmp("png16");
    LinearImage img = random_image(17, 13, 3, 0.0, 1.0);
    io::save_png16_srgb(tmp.str("img.png"), img);
    LinearImage back = io::load_png_linear(tmp.str("img.png"));
    REQUIRE(back.width() == 17);
    REQUIRE(back.height() == 13);
    for (size_t i = 0; i < img.data().size(); ++i)
        CHECK(std::abs(double(back.data()[i]) - double(img.data()[i])) <
              1e-4);
}

TEST_CASE("png8 write produces a loadable file") {
    TempDir tmp("png8");
    LinearImage img = random_image(9, 9, 4);
    io::save_png8_srgb(tmp.str("v.png"), img);
    LinearImage back = io::load_png_linear(tmp.str("v.png"));
    CHECK(back.width() == 9);
}

TEST_CASE("mask png roundtrip is exact") {
    TempDir tmp("mask");
    std::vector<uint8_t> mask(20 * 10, 0);
    Rng rng(5);
    for (auto &m : mask)
        m = rng.next_below(2) ? 1 : 0;
    io::save_mask_png(tmp.str("m.png"), mask, 20, 10);
    int w, h;
    auto back = io::load_mask_png(tmp.str("m.png"), w, h);
    CHECK(w == 20);
    CHECK(h == 10);
    CHECK(back == mask);
}

TEST_CASE("segment png roundtrip is exact") {
    TempDir tmp("seg");
    SegmentMap seg = voronoi_segments(21, 14, 4, 8);
    io::save_segments_png(tmp.str("s.png"), seg);
    SegmentMap back = io::load_segments_png(tmp.str("s.png"), 4);
    CHECK(back.label == seg.label);
}

TEST_CASE("pfm roundtrip is bit exact") {
    TempDir tmp("pfm");
    LinearImage img = random_image(15, 11, 6, 0.0, 3.0);
    io::save_pfm(tmp.str("x.pfm"), img);
    LinearImage back = io::load_pfm(tmp.str("x.pfm"));
    CHECK(back.data() == img.data());

    IlluminationMap map(7, 5, Illuminant{0.9, 0.6, 0.4}.normalized());
    io::save_pfm(tmp.str("m.pfm"), map);
    IlluminationMap mback = io::load_pfm_map(tmp.str("m.pfm"));
    CHECK(mback.data() == map.data());
}

TEST_CASE("probability map container roundtrip and validation") {
    TempDir tmp("pmap");
    ProbabilityMap p(6, 4, 3);
    Rng rng(11);
    for (size_t px = 0; px < p.pixel_count(); ++px) {
        double a = rng.next_double() + 0.01, b = rng.next_double() + 0.01,
               c = rng.next_double() + 0.01;
        double s = a + b + c;
        p.data[px * 3] = float(a / s);
        p.data[px * 3 + 1] = float(b / s);
        p.data[px * 3 + 2] = float(c / s);
    }
    repair_simplex(p);
    io::save_probability_map(tmp.str("p.pmap"), p);
    size_t repaired = 123;
    ProbabilityMap back = io::load_probability_map(tmp.str("p.pmap"), &repaired);
    CHECK(back.width == 6);
    CHECK(back.n == 3);
    CHECK(repaired == 0);
    CHECK(back.data == p.data);

    SUBCASE("bad magic is rejected") {
        std::ofstream f(tmp.str("junk.pmap"), std::ios::binary);
        f << "NOPE" << std::string(16, '\0');
        f.close();
        CHECK_THROWS_AS(io::load_probability_map(tmp.str("junk.pmap")),
                        FormatError);
    }

    SUBCASE("rows far off the simplex are rejected with a location") {
        ProbabilityMap bad = p;
        bad.data[0] = 1.0f;
        bad.data[1] = 0.5f;
        bad.data[2] = 0.5f; // sums to 2
        io::save_probability_map(tmp.str("bad.pmap"), bad);
        CHECK_THROWS_AS(io::load_probability_map(tmp.str("bad.pmap")),
                        FormatError);
    }

    SUBCASE("slightly off rows are renormalized and counted") {
        ProbabilityMap off = p;
        off.data[0] = 0.7f;
        off.data[1] = 0.2f;
        off.data[2] = 0.1004f; // 1 + 4e-4
        io::save_probability_map(tmp.str("off.pmap"), off);
        size_t fixed = 0;
        ProbabilityMap ok = io::load_probability_map(tmp.str("off.pmap"),
                                                     &fixed);
        CHECK(fixed == 1);
        ok.validate();
    }
}

TEST_CASE("seed set json roundtrip") {
    TempDir tmp("seeds");
    SeedSet s;
    s.width = 12;
    s.height = 9;
    s.groups.resize(2);
    s.groups[0].color = Illuminant{0.9, 0.5, 0.3}.normalized();
    s.groups[0].points = {{0, 0}, {3, 4}, {11, 8}};
    s.groups[1].color = Illuminant{0.3, 0.5, 0.9}.normalized();
    s.groups[1].points = {{5, 5}};
    s.validate();
    io::save_seed_set_json(tmp.str("s.json"), s);
    SeedSet back = io::load_seed_set_json(tmp.str("s.json"));
    CHECK(back.width == 12);
    REQUIRE(back.groups.size() == 2);
    CHECK(back.groups[0].points == s.groups[0].points);
    CHECK(back.groups[1].color.r == doctest::Approx(s.groups[1].color.r));

    std::ofstream f(tmp.str("broken.json"));
    f << "{\"width\": 2}";
    f.close();
    CHECK_THROWS_AS(io::load_seed_set_json(tmp.str("broken.json")),
                    FormatError);
}

TEST_CASE("pool json roundtrip normalizes colors") {
    TempDir tmp("pool");
    std::ofstream f(tmp.str("pool.json"));
    f << "[[0.8, 0.6, 0.4], [2.0, 2.0, 2.0]]";
    f.close();
    auto pool = io::load_pool_json(tmp.str("pool.json"));
    REQUIRE(pool.size() == 2);
    CHECK(pool[0].norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pool[1].r == doctest::Approx(1.0 / std::sqrt(3.0)));

    io::save_pool_json(tmp.str("out.json"), pool);
    auto back = io::load_pool_json(tmp.str("out.json"));
    CHECK(back[0].r == doctest::Approx(pool[0].r).epsilon(1e-12));

    std::ofstream g(tmp.str("empty.json"));
    g << "[]";
    g.close();
    CHECK_THROWS_AS(io::load_pool_json(tmp.str("empty.json")), FormatError);
}
