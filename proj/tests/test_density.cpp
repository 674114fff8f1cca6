#include <doctest.h>

#include <cmath>

#include "sigate/density.hpp"
#include "sigate/errors.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"

using namespace sigate;
using namespace sigate::density;
using geometry::GateGeometry;
using geometry::preset_geometry;

TEST_CASE("isolated density") {
    CHECK(isolated_density(0.0, 42.2, 2).value == 0.0);
    CHECK(isolated_density(3.18e15, 42.2, 3).value == doctest::Approx(1.17e15).epsilon(0.01));
    CHECK(isolated_density(3.91e10, 28.5, 2).value == doctest::Approx(1.44e10).epsilon(0.01));
}

TEST_CASE("isolation optimum") {
    const auto two = optimal_isolation_density(42.2, 2);
    CHECK(two.total_density == doctest::Approx(1.79e10).epsilon(0.005));
    CHECK(optimal_isolation_density(28.5, 2).total_density == doctest::Approx(3.91e10).epsilon(0.005));
    CHECK(optimal_isolation_density(42.2, 3).total_density == doctest::Approx(3.18e15).epsilon(0.005));
    CHECK(two.isolated_fraction == doctest::Approx(std::exp(-1.0)));
    CHECK(two.isolated_density == doctest::Approx(two.total_density / std::exp(1.0)));
}

TEST_CASE("isolated density has a single maximum at 1/V") {
    for (int dim : {2, 3}) {
        const double opt = optimal_isolation_density(20.0, dim).total_density;
        double last = 0.0;
        for (int k = 1; k <= 400; ++k) {
            const double d = opt * k / 200.0;
            const double v = isolated_density(d, 20.0, dim).value;
            if (k <= 200) CHECK(v > last);
            else CHECK(v < last);
            last = v;
        }
    }
}

TEST_CASE("radius scaling moves the optimum by s^-dim") {
    for (int dim : {2, 3}) {
        const auto a = optimal_isolation_density(10.0, dim);
        const auto b = optimal_isolation_density(25.0, dim);
        CHECK(b.total_density == doctest::Approx(a.total_density * std::pow(2.5, -dim)));
        CHECK(b.isolated_fraction == doctest::Approx(a.isolated_fraction));
    }
}

TEST_CASE("gate densities vanish at zero readout density") {
    const auto g = preset_geometry("monolayer-inplane");
    CHECK(sfg_density(1.79e10, 0.0, g).value == 0.0);
    CHECK(heis_ex_gd_density(1.79e10, 0.0, g).value == 0.0);
    CHECK(heis_ex_ex_density(0.0, g).value == 0.0);
}

TEST_CASE("gate densities are suppressed at high density and bounded") {
    const auto g = preset_geometry("monolayer-inplane");
    const double dc = optimal_isolation_density(g.r_cc, 2).total_density;
    for (double dr : {1e9, 1e10, 1e11, 1e12}) {
        CHECK(2.0 * sfg_density(dc, dr, g).value <= dr);
        CHECK(sfg_density(dc, dr, g).value <= dc);
        CHECK(heis_ex_gd_density(dc, dr, g).value <= std::min(dc, dr));
        CHECK(heis_ex_ex_density(dr, g).value <= dr);
    }
    CHECK(heis_ex_gd_density(dc, 1e14, g).value < 1e-20);
    CHECK(sfg_density(dc, 1e14, g).value < 1e-20);
    CHECK(heis_ex_ex_density(1e13, g).value < 1e-20);
}

TEST_CASE("low-density limit of the single-readout gate") {
    // with no exclusion cost the shell holds one readout with probability D_r * area
    const auto g = preset_geometry("monolayer-inplane");
    const double dc = 1.0e9;
    const double dr = 1.0e6;
    const double shell = units::pi * (g.r_max * g.r_max - g.r_min * g.r_min);
    const double expect = units::per_nm_to_per_cm(
        units::per_cm_to_per_nm(isolated_density(dc, g.r_cc, 2).value, 2) *
            units::per_cm_to_per_nm(dr, 2) * shell, 2);
    CHECK(heis_ex_gd_density(dc, dr, g).value == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("SFG low-density limit matches the pair count without overlap") {
    // D_r -> 0: gates ~ D_r^2 / 2 times the measure of readout pairs in the
    // shell whose mutual distance exceeds R_rr, counted by direct sampling
    const auto g = preset_geometry("monolayer-inplane");
    const double dc = 1.0e9;
    const double dr = 1.0e5;
    const double value = sfg_density(dc, dr, g).value;
    Rng rng(5);
    const int n = 400000;
    int hits = 0;
    for (int k = 0; k < n; ++k) {
        auto draw = [&] {
            for (;;) {
                const double x = (2.0 * uniform01(rng) - 1.0) * g.r_max;
                const double y = (2.0 * uniform01(rng) - 1.0) * g.r_max;
                const double r = std::hypot(x, y);
                if (r >= g.r_min && r <= g.r_max) return Vec3{x, y, 0};
            }
        };
        if (norm(draw() - draw()) > g.r_rr) ++hits;
    }
    const double shell = units::pi * (g.r_max * g.r_max - g.r_min * g.r_min);
    const double f = static_cast<double>(hits) / n;
    const double drn = units::per_cm_to_per_nm(dr, 2);
    const double iso = units::per_cm_to_per_nm(isolated_density(dc, g.r_cc, 2).value, 2);
    const double expect = units::per_nm_to_per_cm(iso * 0.5 * drn * drn * shell * shell * f, 2);
    const double sigma = expect * std::sqrt((1.0 - f) / (f * n));
    CHECK(std::abs(value - expect) <= 3.0 * sigma + 1e-3 * expect);
}

TEST_CASE("halving the quadrature tolerance changes results by under 0.2%") {
    const auto g = preset_geometry("monolayer-inplane");
    const QuadratureSettings loose{1e-3, 12};
    const QuadratureSettings tight{5e-4, 12};
    for (auto kind : {GateKind::SFG, GateKind::HeisExGd, GateKind::HeisExEx}) {
        for (double d : {3e10, 1.5e11}) {
            const double a = active_density(kind, d, g, loose);
            const double b = active_density(kind, d, g, tight);
            CHECK(std::abs(a - b) <= 2e-3 * std::abs(b));
        }
    }
}

TEST_CASE("density scan") {
    const auto g = preset_geometry("monolayer-inplane");
    const auto curve = density_scan(GateKind::HeisExGd, g, 1e9, 1e12, 40);
    REQUIRE(curve.points.size() == 40);
    CHECK(curve.control_density == doctest::Approx(1.79e10).epsilon(0.005));
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        CHECK(p.active.value >= 0.0);
        CHECK(p.active_percent <= 100.0);
        if (i > 0) CHECK(p.readout_density > curve.points[i - 1].readout_density);
    }
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
        const auto& p = curve.points[static_cast<std::size_t>(uniform01(rng) * 40)];
        CHECK(p.active.value == active_density(GateKind::HeisExGd, p.readout_density, g));
    }
    // parallel and serial scans agree exactly
    const auto par = density_scan(GateKind::SFG, g, 1e10, 1e12, 6, {}, 3);
    const auto ser = density_scan(GateKind::SFG, g, 1e10, 1e12, 6, {}, 1);
    for (std::size_t i = 0; i < 6; ++i) CHECK(par.points[i].active.value == ser.points[i].active.value);
    CHECK_THROWS_AS(density_scan(GateKind::SFG, g, 1e10, 1e9, 6), PreconditionError);
}

TEST_CASE("monolayer excited-ground peak location") {
    const auto p = find_peak(GateKind::HeisExGd, preset_geometry("monolayer-inplane"), 1e9, 1e13);
    CHECK(p.readout_density == doctest::Approx(8e10).epsilon(0.1));
    CHECK(p.active_density == doctest::Approx(1.2e9).epsilon(0.1));
}

TEST_CASE("bilayer projection") {
    CHECK(bilayer_projection(7.0, 0.0) == 7.0);
    CHECK(bilayer_projection(7.0, 7.0) == 0.0);
    CHECK(bilayer_projection(5.0, 3.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(bilayer_projection(5.0, 6.0), PreconditionError);
}

TEST_CASE("gate kind names round-trip") {
    for (auto k : {GateKind::SFG, GateKind::HeisExGd, GateKind::HeisExEx})
        CHECK(parse_gate_kind(gate_kind_name(k)) == k);
    CHECK(readouts_per_gate(GateKind::SFG) == 2);
    CHECK(readouts_per_gate(GateKind::HeisExGd) == 1);
}
