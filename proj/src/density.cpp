#include "sigate/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "sigate/errors.hpp"
#include "sigate/parallel.hpp"
#include "sigate/units.hpp"

namespace sigate::density {

using geometry::ball_surface;
using geometry::ball_volume;
using geometry::delta_outside;
using geometry::GateGeometry;
using units::pi;

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;

template <class F>
double integrate(F&& f, double a, double b, double tol, unsigned depth) {
    if (!(b > a)) return 0.0;
    return Quad::integrate(f, a, b, depth, tol);
}

double to_nm(double density, int dim) { return units::per_cm_to_per_nm(density, dim); }
double to_cm(double density, int dim) { return units::per_nm_to_per_cm(density, dim); }

double isolated_controls_nm(double dc, const GateGeometry& g) {
    return dc * std::exp(-ball_volume(g.dimension, g.r_cc) * dc);
}

double control_density_for(const GateGeometry& g) {
    return optimal_isolation_density(g.r_cc, g.dimension).total_density;
}

// Weight of the second readout's position at radius r2 given the first at
// r1, integrated over the relative angle with the overlap correction.
double angular_weight(const GateGeometry& g, double r1, double r2, double dr, double tol,
                      unsigned depth) {
    const int dim = g.dimension;
    const double alpha = geometry::exclusion_angle(r1, r2, g.r_rr);
    if (alpha >= pi) return 0.0;
    auto f = [&](double theta) {
        const double ov =
            geometry::delta_overlap(dim, r1, r2, theta, g.r_rr, g.r_max).value;
        const double w = std::exp(ov * dr);
        return dim == 2 ? 2.0 * r2 * w : 2.0 * pi * r2 * r2 * std::sin(theta) * w;
    };
    // overlap vanishes once the readouts are 2 R_rr apart
    const double c = (r1 * r1 + r2 * r2 - 4.0 * g.r_rr * g.r_rr) / (2.0 * r1 * r2);
    const double kink = c >= 1.0 ? 0.0 : c <= -1.0 ? pi : std::acos(c);
    if (kink <= alpha) {
        // beyond the kink the integrand is the bare shell weight
        return dim == 2 ? 2.0 * r2 * (pi - alpha) : 2.0 * pi * r2 * r2 * (1.0 + std::cos(alpha));
    }
    double tail = 0.0;
    if (kink < pi) {
        tail = dim == 2 ? 2.0 * r2 * (pi - kink) : 2.0 * pi * r2 * r2 * (1.0 + std::cos(kink));
    }
    return integrate(f, alpha, kink, tol, depth) + tail;
}

}  // namespace

GateKind parse_gate_kind(std::string_view name) {
    if (name == "SFG" || name == "sfg") return GateKind::SFG;
    if (name == "HeisExGd" || name == "heis-ex-gd") return GateKind::HeisExGd;
    if (name == "HeisExEx" || name == "heis-ex-ex") return GateKind::HeisExEx;
    throw PreconditionError("unknown gate kind '" + std::string(name) + "'");
}

std::string_view gate_kind_name(GateKind kind) {
    switch (kind) {
        case GateKind::SFG: return "SFG";
        case GateKind::HeisExGd: return "HeisExGd";
        case GateKind::HeisExEx: return "HeisExEx";
    }
    return "?";
}

int readouts_per_gate(GateKind kind) {
    switch (kind) {
        case GateKind::SFG: return 2;
        case GateKind::HeisExGd: return 1;
        case GateKind::HeisExEx: return 2;
    }
    return 0;
}

DensityValue isolated_density(double total_density, double radius, int dim) {
    require(total_density >= 0.0 && radius > 0.0, "isolated_density: bad arguments");
    const double d = to_nm(total_density, dim);
    const double v = ball_volume(dim, radius);
    return {to_cm(d * std::exp(-v * d), dim), DensityKind::Isolated, std::nullopt};
}

IsolationOptimum optimal_isolation_density(double radius, int dim) {
    require(radius > 0.0, "optimal_isolation_density: radius must be positive");
    const double total = to_cm(1.0 / ball_volume(dim, radius), dim);
    return {total, total * std::exp(-1.0), std::exp(-1.0)};
}

DensityValue sfg_density(double control_density, double readout_density,
                         const GateGeometry& geom, const QuadratureSettings& q) {
    geom.validate();
    require(control_density >= 0.0 && readout_density >= 0.0, "sfg_density: negative density");
    const int dim = geom.dimension;
    const double dc = to_nm(control_density, dim);
    const double dr = to_nm(readout_density, dim);
    DensityValue out{0.0, DensityKind::Gate, GateKind::SFG};
    if (dc == 0.0 || dr == 0.0) return out;

    const double inner_tol = q.relative_tolerance * 0.1;
    const double vmax = ball_volume(dim, geom.r_max);
    auto over_r2 = [&](double r1) {
        const double d1 = delta_outside(dim, r1, geom.r_rr, geom.r_max);
        auto f = [&](double r2) {
            const double d2 = delta_outside(dim, r2, geom.r_rr, geom.r_max);
            const double base = std::exp(-(vmax + d1 + d2) * dr);
            if (base == 0.0) return 0.0;
            return base * angular_weight(geom, r1, r2, dr, inner_tol, q.max_depth);
        };
        return ball_surface(dim, r1) * integrate(f, r1, geom.r_max, inner_tol, q.max_depth);
    };
    const double pairs = integrate(over_r2, geom.r_min, geom.r_max, q.relative_tolerance, q.max_depth);
    out.value = to_cm(isolated_controls_nm(dc, geom) * dr * dr * pairs, dim);
    return out;
}

DensityValue heis_ex_gd_density(double control_density, double readout_density,
                                const GateGeometry& geom, const QuadratureSettings& q) {
    geom.validate();
    require(control_density >= 0.0 && readout_density >= 0.0,
            "heis_ex_gd_density: negative density");
    const int dim = geom.dimension;
    const double dc = to_nm(control_density, dim);
    const double dr = to_nm(readout_density, dim);
    DensityValue out{0.0, DensityKind::Gate, GateKind::HeisExGd};
    if (dc == 0.0 || dr == 0.0) return out;
    const double vmax = ball_volume(dim, geom.r_max);
    auto f = [&](double r) {
        const double d1 = delta_outside(dim, r, geom.r_rr, geom.r_max);
        return ball_surface(dim, r) * std::exp(-(vmax + d1) * dr);
    };
    const double shell = integrate(f, geom.r_min, geom.r_max, q.relative_tolerance, q.max_depth);
    out.value = to_cm(isolated_controls_nm(dc, geom) * dr * shell, dim);
    return out;
}

DensityValue heis_ex_ex_density(double total_density, const GateGeometry& geom,
                                const QuadratureSettings& q) {
    geom.validate();
    require(total_density >= 0.0, "heis_ex_ex_density: negative density");
    const int dim = geom.dimension;
    const double d = to_nm(total_density, dim);
    DensityValue out{0.0, DensityKind::ActiveReadout, GateKind::HeisExEx};
    if (d == 0.0) return out;
    const double vcc = ball_volume(dim, geom.r_cc);
    auto f = [&](double r) {
        const double d1 = delta_outside(dim, r, geom.r_cc, geom.r_cc);
        return ball_surface(dim, r) * std::exp(-(vcc + d1) * d);
    };
    const double shell = integrate(f, geom.r_min_prime, geom.r_cc, q.relative_tolerance, q.max_depth);
    out.value = to_cm(d * d * shell, dim);
    return out;
}

double active_density(GateKind kind, double readout_density, const GateGeometry& geom,
                      const QuadratureSettings& q) {
    switch (kind) {
        case GateKind::SFG:
            return 2.0 * sfg_density(control_density_for(geom), readout_density, geom, q).value;
        case GateKind::HeisExGd:
            return heis_ex_gd_density(control_density_for(geom), readout_density, geom, q).value;
        case GateKind::HeisExEx:
            return heis_ex_ex_density(readout_density, geom, q).value;
    }
    return 0.0;
}

double active_percentage(GateKind kind, double readout_density, const GateGeometry& geom,
                         const QuadratureSettings& q) {
    if (readout_density <= 0.0) return 0.0;
    return 100.0 * active_density(kind, readout_density, geom, q) / readout_density;
}

DensityCurve density_scan(GateKind kind, const GateGeometry& geom, double lo, double hi,
                          int points, const QuadratureSettings& q, int threads) {
    geom.validate();
    require(lo > 0.0 && hi > lo, "density_scan: need 0 < lo < hi");
    require(points >= 2, "density_scan: need at least two points");
    DensityCurve curve;
    curve.gate_kind = kind;
    curve.dimension = geom.dimension;
    curve.control_density = kind == GateKind::HeisExEx ? 0.0 : control_density_for(geom);
    curve.points.resize(static_cast<std::size_t>(points));
    const double step = std::log(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
        curve.points[i].readout_density = i + 1 == points ? hi : lo * std::exp(step * i);
    }
    parallel_for(curve.points.size(), threads, [&](std::size_t i) {
        auto& p = curve.points[i];
        const double a = active_density(kind, p.readout_density, geom, q);
        p.active = {a, DensityKind::ActiveReadout, kind};
        p.active_percent = 100.0 * a / p.readout_density;
    });
    return curve;
}

Peak find_peak(GateKind kind, const GateGeometry& geom, double lo, double hi,
               bool maximize_percentage, const QuadratureSettings& q) {
    auto objective = [&](double x) {
        const double d = lo * std::exp(x);
        const double a = active_density(kind, d, geom, q);
        return maximize_percentage ? a / d : a;
    };
    const int coarse = 40;
    const double span = std::log(hi / lo);
    int best = 0;
    double best_value = -1.0;
    for (int i = 0; i < coarse; ++i) {
        const double v = objective(span * i / (coarse - 1));
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    const double a = span * std::max(0, best - 1) / (coarse - 1);
    const double b = span * std::min(coarse - 1, best + 1) / (coarse - 1);
    const auto [x, neg] = boost::math::tools::brent_find_minima(
        [&](double t) { return -objective(t); }, a, b, 30);
    (void)neg;
    const double d = lo * std::exp(x);
    const double act = active_density(kind, d, geom, q);
    return {d, act, 100.0 * act / d};
}

double bilayer_projection(double zone_radius, double separation) {
    require(separation >= 0.0 && zone_radius >= 0.0, "bilayer_projection: negative length");
    require(separation <= zone_radius, "bilayer_projection: separation exceeds zone radius");
    return std::sqrt(zone_radius * zone_radius - separation * separation);
}

}  // namespace sigate::density
