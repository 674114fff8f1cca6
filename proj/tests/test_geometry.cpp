#include <doctest.h>

#include <cmath>

#include "sigate/errors.hpp"
#include "sigate/geometry.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"

using namespace sigate;
using namespace sigate::geometry;
using units::pi;

namespace {

bool in_ball(const Vec3& p, const Vec3& c, double r) { return norm2(p - c) <= r * r; }

Box cube_around(int dim, const Vec3& c, double r) {
    Box b{dim, c - Vec3{r, r, r}, c + Vec3{r, r, r}};
    if (dim == 2) b.lo.z = b.hi.z = 0.0;
    return b;
}

// Randomized corpora: every draw must sit within 5 sigma and at least 98%
// within 3 sigma (a perfect 3-sigma record over hundreds of draws would be
// statistically unlikely). Sigma gets a one-hit floor so that an empty
// sample does not claim zero error.
struct Agreement {
    int draws = 0;
    int within3 = 0;

    void add(const RegionMeasure& analytic, const RegionMeasure& sampled, double resolution) {
        const double sigma =
            std::max(std::hypot(sampled.statistical_error, analytic.statistical_error), resolution);
        const double z = std::abs(analytic.value - sampled.value) / sigma;
        CHECK(z <= 5.0);
        ++draws;
        if (z <= 3.0) ++within3;
    }

    ~Agreement() {
        if (draws > 0) CHECK(within3 >= 0.98 * draws);
    }
};

void check_within(const RegionMeasure& analytic, const RegionMeasure& sampled) {
    const double sigma = std::hypot(sampled.statistical_error, analytic.statistical_error);
    CHECK(std::abs(analytic.value - sampled.value) <= 3.0 * sigma + 1e-9);
}

}  // namespace

TEST_CASE("ball measures") {
    CHECK(ball_measures(2, 0.0).volume == 0.0);
    CHECK(ball_measures(3, 0.0).surface == 0.0);
    CHECK(ball_volume(2, 42.2) == doctest::Approx(5594.2).epsilon(1e-4));
    CHECK(ball_volume(3, 42.2) == doctest::Approx(3.148e5).epsilon(1e-3));
    CHECK(ball_surface(2, 1.0) == doctest::Approx(2.0 * pi));
    CHECK(ball_surface(3, 2.0) == doctest::Approx(16.0 * pi));
    CHECK_THROWS_AS(ball_measures(4, 1.0), UnsupportedDimensionError);
}

TEST_CASE("exclusion angle") {
    CHECK(exclusion_angle(11.0, 11.0, 11.0) == doctest::Approx(pi / 3.0));
    CHECK(exclusion_angle(5.0, 6.0, 11.0) == doctest::Approx(pi));
    CHECK(exclusion_angle(3.0, 2.0, 11.0) == doctest::Approx(pi));
    CHECK(exclusion_angle(4.0, 15.0, 11.0) == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("restricted surface") {
    CHECK(restricted_surface(2, 3.0, 0.0) == doctest::Approx(ball_surface(2, 3.0)));
    CHECK(restricted_surface(3, 3.0, 0.0) == doctest::Approx(ball_surface(3, 3.0)));
    CHECK(restricted_surface(2, 3.0, pi) == doctest::Approx(0.0));
    CHECK(restricted_surface(3, 3.0, pi) == doctest::Approx(0.0));
    CHECK(restricted_surface(2, 1.0, pi / 2.0) == doctest::Approx(pi));
    for (int dim : {2, 3}) {
        double last = restricted_surface(dim, 2.5, 0.0);
        for (int k = 1; k <= 200; ++k) {
            const double s = restricted_surface(dim, 2.5, pi * k / 200.0);
            CHECK(s <= last + 1e-12);
            last = s;
        }
    }
}

TEST_CASE("lens measure closed cases") {
    for (int dim : {2, 3}) {
        CHECK(lens_measure(dim, 1.0, 2.0, 3.0).value == 0.0);
        CHECK(lens_measure(dim, 1.5, 1.5, 0.0).value == doctest::Approx(ball_volume(dim, 1.5)));
        CHECK(lens_measure(dim, 1.0, 5.0, 2.0).value == doctest::Approx(ball_volume(dim, 1.0)));
    }
    const double r = 3.0;
    CHECK(lens_measure(2, r, r, r).value ==
          doctest::Approx(r * r * (2.0 * pi / 3.0 - std::sqrt(3.0) / 2.0)));
}

TEST_CASE("lens measure equal-radius half-lens against sampling") {
    const double r = 1.0;
    auto inside = [&](const Vec3& p) { return in_ball(p, {0, 0, 0}, r) && in_ball(p, {r, 0, 0}, r); };
    const auto s = sampled_region_measure(inside, cube_around(2, {0, 0, 0}, r), 1000000, 3);
    CHECK(std::abs(1.2284 - s.value) <= 3.0 * s.statistical_error);
}

TEST_CASE("lens measure symmetric and continuous") {
    for (int dim : {2, 3}) {
        const double ra = 4.0, rb = 2.5;
        double last = lens_measure(dim, ra, rb, 0.0).value;
        const double scale = ball_volume(dim, rb);
        for (int k = 1; k <= 200000; ++k) {
            const double d = 7.0 * k / 200000.0;
            const double v = lens_measure(dim, ra, rb, d).value;
            CHECK(v == doctest::Approx(lens_measure(dim, rb, ra, d).value).epsilon(1e-12));
            // consecutive step is tiny, so a discontinuity shows up as a large jump
            REQUIRE(std::abs(v - last) <= 1e-3 * scale);
            last = v;
        }
    }
}

TEST_CASE("lens measure matches sampling on random draws") {
    Agreement agree;
    Rng rng(11);
    for (int dim : {2, 3}) {
        for (int k = 0; k < 50; ++k) {
            const double ra = 0.5 + 3.0 * uniform01(rng);
            const double rb = 0.5 + 3.0 * uniform01(rng);
            const double d = (ra + rb) * 1.1 * uniform01(rng);
            const Vec3 cb{d, 0, 0};
            auto inside = [&](const Vec3& p) { return in_ball(p, {0, 0, 0}, ra) && in_ball(p, cb, rb); };
            const Box box = cube_around(dim, {0, 0, 0}, ra);
            const auto s = sampled_region_measure(inside, box, 40000, derive_seed(5, k + 100 * dim));
            agree.add(lens_measure(dim, ra, rb, d), s, box.measure() / 40000);
        }
    }
}

TEST_CASE("triple overlap closed cases") {
    CHECK(triple_overlap_area({0, 0, 1}, {5, 0, 1}, {0.5, 0, 1}).value == 0.0);
    const auto same = triple_overlap_area({1, 1, 2}, {1, 1, 2}, {1, 1, 2});
    CHECK(same.value == doctest::Approx(4.0 * pi));
    CHECK(same.method == MeasureMethod::Analytic);
    // two identical circles reduce to a lens
    CHECK(triple_overlap_area({0, 0, 1}, {0, 0, 1}, {1, 0, 1}).value ==
          doctest::Approx(lens_measure(2, 1, 1, 1).value));
    // a small disc inside both others
    CHECK(triple_overlap_area({0, 0, 0.2}, {0.1, 0, 3}, {-0.1, 0, 3}).value ==
          doctest::Approx(pi * 0.04));
}

TEST_CASE("triple overlap on equilateral unit arrangement") {
    const double h = std::sqrt(3.0) / 2.0;
    const Circle a{0, 0, 1}, b{1, 0, 1}, c{0.5, h, 1};
    const auto exact = triple_overlap_area(a, b, c);
    CHECK(exact.method == MeasureMethod::Analytic);
    // Reuleaux-triangle area for unit side
    CHECK(exact.value == doctest::Approx((pi - std::sqrt(3.0)) / 2.0));
    auto inside = [&](const Vec3& p) {
        return in_ball(p, {0, 0, 0}, 1) && in_ball(p, {1, 0, 0}, 1) && in_ball(p, {0.5, h, 0}, 1);
    };
    check_within(exact, sampled_region_measure(inside, cube_around(2, {0.5, 0.3, 0}, 1.0), 1000000, 9));
}

TEST_CASE("triple overlap matches sampling on random draws") {
    Agreement agree;
    Rng rng(23);
    for (int k = 0; k < 60; ++k) {
        Circle cs[3];
        for (auto& c : cs) c = {4.0 * uniform01(rng), 4.0 * uniform01(rng), 1.0 + 3.0 * uniform01(rng)};
        const auto exact = triple_overlap_area(cs[0], cs[1], cs[2]);
        auto inside = [&](const Vec3& p) {
            for (const auto& c : cs)
                if (!in_ball(p, {c.x, c.y, 0}, c.r)) return false;
            return true;
        };
        const Box box = cube_around(2, {cs[0].x, cs[0].y, 0}, cs[0].r);
        const auto s = sampled_region_measure(inside, box, 40000, derive_seed(17, k));
        agree.add(exact, s, box.measure() / 40000);
    }
}

TEST_CASE("near-coincident circles fall back to sampling") {
    const auto m = triple_overlap_area({0, 0, 1}, {1e-11, 0, 1}, {0.5, 0, 1});
    CHECK(m.method == MeasureMethod::Sampled);
    CHECK(m.value == doctest::Approx(lens_measure(2, 1, 1, 0.5).value).epsilon(0.01));
}

TEST_CASE("delta outside") {
    CHECK(delta_outside(2, 0.0, 11.0, 17.9) == 0.0);
    CHECK(delta_outside(3, 2.0, 11.0, 17.9) == 0.0);
    // half-space limit
    for (int dim : {2, 3}) {
        const double v = ball_volume(dim, 0.01);
        CHECK(delta_outside(dim, 1000.0, 0.01, 1000.0) == doctest::Approx(v / 2.0).epsilon(1e-3));
    }
    auto inside = [](const Vec3& p) { return in_ball(p, {14, 0, 0}, 11.0) && !in_ball(p, {0, 0, 0}, 17.9); };
    const auto s = sampled_region_measure(inside, cube_around(2, {14, 0, 0}, 11.0), 1000000, 4);
    CHECK(std::abs(delta_outside(2, 14.0, 11.0, 17.9) - s.value) <= 3.0 * s.statistical_error);
    CHECK_THROWS_AS(delta_outside(2, 20.0, 11.0, 17.9), PreconditionError);
}

TEST_CASE("delta outside matches sampling on random draws") {
    Agreement agree;
    Rng rng(31);
    for (int dim : {2, 3}) {
        for (int k = 0; k < 50; ++k) {
            const double zone = 5.0 + 20.0 * uniform01(rng);
            const double iso = 2.0 + 20.0 * uniform01(rng);
            const double r1 = zone * uniform01(rng);
            const Vec3 c{r1, 0, 0};
            auto inside = [&](const Vec3& p) { return in_ball(p, c, iso) && !in_ball(p, {0, 0, 0}, zone); };
            const Box box = cube_around(dim, c, iso);
            const auto s = sampled_region_measure(inside, box, 40000, derive_seed(41, k + 100 * dim));
            agree.add({delta_outside(dim, r1, iso, zone)}, s, box.measure() / 40000);
        }
    }
}

TEST_CASE("delta overlap") {
    for (int dim : {2, 3}) {
        CHECK(delta_overlap(dim, 15.0, 15.0, pi, 11.0, 17.9).value == 0.0);
        CHECK(delta_overlap(dim, 14.0, 14.0, 0.0, 11.0, 17.9).value ==
              doctest::Approx(delta_outside(dim, 14.0, 11.0, 17.9)));
    }
    const Vec3 p1{12, 0, 0}, p2{0, 16, 0};
    for (int dim : {2, 3}) {
        auto inside = [&](const Vec3& p) {
            return in_ball(p, p1, 11.0) && in_ball(p, p2, 11.0) && !in_ball(p, {0, 0, 0}, 17.9);
        };
        const auto s = sampled_region_measure(inside, cube_around(dim, p1, 11.0), 1000000, 8 + dim);
        check_within(delta_overlap(dim, 12.0, 16.0, pi / 2.0, 11.0, 17.9), s);
    }
}

TEST_CASE("delta overlap bounds and sampling on random draws") {
    Agreement agree;
    Rng rng(53);
    for (int dim : {2, 3}) {
        for (int k = 0; k < 50; ++k) {
            const double zone = 10.0 + 10.0 * uniform01(rng);
            const double iso = 5.0 + 10.0 * uniform01(rng);
            const double r1 = zone * uniform01(rng);
            const double r2 = zone * uniform01(rng);
            const double theta = pi * uniform01(rng);
            const Vec3 p1{r1, 0, 0};
            const Vec3 p2{r2 * std::cos(theta), r2 * std::sin(theta), 0};
            const auto ov = delta_overlap(dim, r1, r2, theta, iso, zone);
            const double d1 = delta_outside(dim, r1, iso, zone);
            const double d2 = delta_outside(dim, r2, iso, zone);
            CHECK(ov.value >= 0.0);
            CHECK(ov.value <= std::min(d1, d2) + 1e-9 * ball_volume(dim, iso));
            CHECK(std::min(d1, d2) <= ball_volume(dim, iso));
            auto inside = [&](const Vec3& p) {
                return in_ball(p, p1, iso) && in_ball(p, p2, iso) && !in_ball(p, {0, 0, 0}, zone);
            };
            const Box box = cube_around(dim, p1, iso);
            const auto s = sampled_region_measure(inside, box, 40000, derive_seed(61, k + 100 * dim));
            agree.add(ov, s, box.measure() / 40000);
        }
    }
}

TEST_CASE("sampled region measure") {
    const auto none = sampled_region_measure([](const Vec3&) { return false; },
                                             cube_around(2, {0, 0, 0}, 1.0), 1000, 1);
    CHECK(none.value == 0.0);
    const auto disc = sampled_region_measure([](const Vec3& p) { return norm2(p) <= 1.0; },
                                             cube_around(2, {0, 0, 0}, 1.0), 1000000, 2);
    CHECK(std::abs(disc.value - pi) <= 3.0 * disc.statistical_error);
    CHECK_THROWS_AS(sampled_region_measure([](const Vec3&) { return true; },
                                           cube_around(2, {0, 0, 0}, 1.0), 0, 1),
                    PreconditionError);
}

TEST_CASE("gate geometry validation") {
    GateGeometry g;
    CHECK_NOTHROW(g.validate());
    g.r_min = 20.0;
    CHECK_THROWS_AS(g.validate(), PreconditionError);
    GateGeometry b;
    b.bilayer_separation = 13.2;
    CHECK_THROWS_AS(b.validate(), PreconditionError);
    b.r_min = 0.0;
    CHECK_NOTHROW(b.validate());
}
