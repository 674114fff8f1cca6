#include "sigate/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sigate/errors.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"

namespace sigate::geometry {

using units::pi;

namespace {

void check_dimension(int dim) {
    if (dim != 2 && dim != 3) throw UnsupportedDimensionError(dim);
}

double clamp_unit(double c) { return std::clamp(c, -1.0, 1.0); }

double lens_area(double ra, double rb, double d) {
    if (ra <= 0.0 || rb <= 0.0 || d >= ra + rb) return 0.0;
    if (d <= std::abs(ra - rb)) {
        const double r = std::min(ra, rb);
        return pi * r * r;
    }
    const double a = ra * ra * std::acos(clamp_unit((d * d + ra * ra - rb * rb) / (2.0 * d * ra)));
    const double b = rb * rb * std::acos(clamp_unit((d * d + rb * rb - ra * ra) / (2.0 * d * rb)));
    const double k = (-d + ra + rb) * (d + ra - rb) * (d - ra + rb) * (d + ra + rb);
    return a + b - 0.5 * std::sqrt(std::max(0.0, k));
}

double lens_volume(double ra, double rb, double d) {
    if (ra <= 0.0 || rb <= 0.0 || d >= ra + rb) return 0.0;
    if (d <= std::abs(ra - rb)) {
        const double r = std::min(ra, rb);
        return 4.0 / 3.0 * pi * r * r * r;
    }
    const double s = ra + rb - d;
    const double diff = ra - rb;
    return pi * s * s * (d * d + 2.0 * d * (ra + rb) - 3.0 * diff * diff) / (12.0 * d);
}

bool same_circle(const Circle& a, const Circle& b) {
    const double scale = std::max({a.r, b.r, 1.0});
    return std::abs(a.x - b.x) <= 1e-12 * scale && std::abs(a.y - b.y) <= 1e-12 * scale &&
           std::abs(a.r - b.r) <= 1e-12 * scale;
}

double distance(const Circle& a, const Circle& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Boundary of the common intersection, integrated arc by arc with Green's
// theorem. Returns nullopt when an arc sits on another circle's boundary.
std::optional<double> arc_area(const std::vector<Circle>& cs) {
    const double scale = std::max({cs[0].r, cs.back().r, 1.0});
    const double tol = 1e-9 * scale;
    double area = 0.0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const Circle& ci = cs[i];
        std::vector<double> angles;
        for (std::size_t j = 0; j < cs.size(); ++j) {
            if (j == i) continue;
            const Circle& cj = cs[j];
            const double d = distance(ci, cj);
            if (d >= ci.r + cj.r || d <= std::abs(ci.r - cj.r)) continue;
            const double base = std::atan2(cj.y - ci.y, cj.x - ci.x);
            const double half =
                std::acos(clamp_unit((d * d + ci.r * ci.r - cj.r * cj.r) / (2.0 * d * ci.r)));
            angles.push_back(base - half);
            angles.push_back(base + half);
        }
        for (double& a : angles) {
            a = std::fmod(a, 2.0 * pi);
            if (a < 0.0) a += 2.0 * pi;
        }
        std::sort(angles.begin(), angles.end());
        if (angles.empty()) angles.push_back(0.0);
        const std::size_t n = angles.size();
        for (std::size_t k = 0; k < n; ++k) {
            const double t1 = angles[k];
            const double t2 = k + 1 < n ? angles[k + 1] : angles[0] + 2.0 * pi;
            if (t2 - t1 < 1e-12) continue;
            const double tm = 0.5 * (t1 + t2);
            const double px = ci.x + ci.r * std::cos(tm);
            const double py = ci.y + ci.r * std::sin(tm);
            bool inside = true;
            for (std::size_t j = 0; j < cs.size(); ++j) {
                if (j == i) continue;
                const double margin = cs[j].r - std::hypot(px - cs[j].x, py - cs[j].y);
                if (std::abs(margin) < tol && t2 - t1 > 1e-9) return std::nullopt;
                if (margin <= 0.0) inside = false;
            }
            if (!inside) continue;
            area += 0.5 * (ci.r * ci.r * (t2 - t1) +
                           ci.r * ci.x * (std::sin(t2) - std::sin(t1)) -
                           ci.r * ci.y * (std::cos(t2) - std::cos(t1)));
        }
    }
    return std::max(0.0, area);
}

}  // namespace

void GateGeometry::validate() const {
    if (dimension != 2 && dimension != 3) throw UnsupportedDimensionError(dimension);
    require(r_min >= 0.0 && r_min < r_max, "geometry: need 0 <= R_min < R_max");
    require(r_rr > 0.0, "geometry: R_rr must be positive");
    require(r_cc >= r_max, "geometry: R_cc must be at least R_max");
    require(r_min_prime >= 0.0 && r_min_prime < r_cc, "geometry: need 0 <= R'_min < R_cc");
    if (bilayer_separation) {
        require(*bilayer_separation > 0.0, "geometry: bilayer separation must be positive");
        require(r_min == 0.0, "geometry: bilayer geometry has R_min = 0 in-plane");
    }
}

GateGeometry preset_geometry(std::string_view name) {
    GateGeometry g;
    if (name == "monolayer-inplane") return g;
    if (name == "bulk-3d") {
        g.dimension = 3;
        return g;
    }
    if (name == "bilayer-outofplane") {
        g.r_min = 0.0;
        g.r_max = 10.2;
        g.r_cc = 28.5;
        g.bilayer_separation = 13.2;
        return g;
    }
    throw PreconditionError("unknown geometry preset '" + std::string(name) + "'");
}

BallMeasures ball_measures(int dim, double r) {
    check_dimension(dim);
    require(r >= 0.0, "ball_measures: radius must be non-negative");
    if (dim == 2) return {pi * r * r, 2.0 * pi * r};
    return {4.0 / 3.0 * pi * r * r * r, 4.0 * pi * r * r};
}

double ball_volume(int dim, double r) { return ball_measures(dim, r).volume; }
double ball_surface(int dim, double r) { return ball_measures(dim, r).surface; }

double exclusion_angle(double r1, double r2, double r_rr) {
    require(r1 > 0.0 && r2 > 0.0, "exclusion_angle: radii must be positive");
    return std::acos(clamp_unit((r1 * r1 + r2 * r2 - r_rr * r_rr) / (2.0 * r1 * r2)));
}

double restricted_surface(int dim, double r2, double alpha) {
    check_dimension(dim);
    require(r2 >= 0.0 && alpha >= 0.0 && alpha <= pi, "restricted_surface: bad arguments");
    if (dim == 2) return 2.0 * (pi - alpha) * r2;
    return 2.0 * pi * r2 * r2 * (1.0 + std::cos(alpha));
}

RegionMeasure lens_measure(int dim, double ra, double rb, double centre_distance) {
    check_dimension(dim);
    require(ra >= 0.0 && rb >= 0.0 && centre_distance >= 0.0, "lens_measure: bad arguments");
    const double v = dim == 2 ? lens_area(ra, rb, centre_distance)
                              : lens_volume(ra, rb, centre_distance);
    return {v, MeasureMethod::Analytic, 0.0};
}

RegionMeasure triple_overlap_area(const Circle& a, const Circle& b, const Circle& c,
                                  std::size_t fallback_samples, std::uint64_t seed) {
    std::vector<Circle> cs;
    for (const Circle& k : {a, b, c}) {
        require(k.r >= 0.0, "triple_overlap_area: negative radius");
        if (k.r == 0.0) return {};
        if (std::none_of(cs.begin(), cs.end(), [&](const Circle& o) { return same_circle(o, k); }))
            cs.push_back(k);
    }
    for (std::size_t i = 0; i < cs.size(); ++i)
        for (std::size_t j = i + 1; j < cs.size(); ++j)
            if (distance(cs[i], cs[j]) >= cs[i].r + cs[j].r) return {};
    if (cs.size() == 1) return {pi * cs[0].r * cs[0].r, MeasureMethod::Analytic, 0.0};
    if (cs.size() == 2) return {lens_area(cs[0].r, cs[1].r, distance(cs[0], cs[1])),
                                MeasureMethod::Analytic, 0.0};
    std::sort(cs.begin(), cs.end(), [](const Circle& p, const Circle& q) { return p.r < q.r; });
    if (auto area = arc_area(cs)) return {*area, MeasureMethod::Analytic, 0.0};

    const Circle& s = cs.front();
    Box box{2, {s.x - s.r, s.y - s.r, 0.0}, {s.x + s.r, s.y + s.r, 0.0}};
    auto inside = [&](const Vec3& p) {
        return std::all_of(cs.begin(), cs.end(), [&](const Circle& k) {
            return std::hypot(p.x - k.x, p.y - k.y) <= k.r;
        });
    };
    return sampled_region_measure(inside, box, fallback_samples, seed);
}

double delta_outside(int dim, double r1, double isolation_radius, double zone_radius) {
    check_dimension(dim);
    require(r1 >= 0.0 && r1 <= zone_radius * (1.0 + 1e-12) && isolation_radius >= 0.0,
            "delta_outside: need 0 <= r1 <= zone radius");
    const double v = ball_volume(dim, isolation_radius);
    const double lens = lens_measure(dim, isolation_radius, zone_radius, r1).value;
    return std::max(0.0, v - lens);
}

namespace {

// Balls of equal radius iso around p1 and p2 intersected, minus the zone
// ball at the origin. Sliced perpendicular to p2 - p1: each slice of the
// lens is a disc centred on that axis, and the zone slice is a disc at a
// fixed in-plane offset, so every slice reduces to one disc-disc lens.
double overlap_volume_sliced(const Vec3& p1, const Vec3& p2, double iso, double zone) {
    const Vec3 axis = p2 - p1;
    const double d = norm(axis);
    const Vec3 e = axis * (1.0 / d);
    const double along = dot(p1, e);
    const double offset = norm(p1 - along * e);
    auto slice = [&](double t) {
        const double rho2 = std::min(iso * iso - t * t, iso * iso - (t - d) * (t - d));
        if (rho2 <= 0.0) return 0.0;
        const double h = along + t;
        const double zone2 = zone * zone - h * h;
        const double cut = zone2 > 0.0 ? lens_area(std::sqrt(rho2), std::sqrt(zone2), offset) : 0.0;
        return std::max(0.0, pi * rho2 - cut);
    };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double lo = d - iso;
    const double mid = 0.5 * d;
    const double hi = iso;
    std::vector<double> cuts{lo, mid, hi};
    for (double s : {-1.0, 1.0}) {
        const double t = s * zone - along;
        if (t > lo && t < hi) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] <= cuts[k]) continue;
        total += Quad::integrate(slice, cuts[k], cuts[k + 1], 12, 1e-10);
    }
    return total;
}

}  // namespace

RegionMeasure delta_overlap(int dim, double r1, double r2, double theta, double isolation_radius,
                            double zone_radius) {
    check_dimension(dim);
    const double hi = zone_radius * (1.0 + 1e-12);
    require(r1 >= 0.0 && r1 <= hi && r2 >= 0.0 && r2 <= hi, "delta_overlap: radii outside zone");
    require(theta >= 0.0 && theta <= pi * (1.0 + 1e-12), "delta_overlap: theta outside [0, pi]");
    const Vec3 p1{r1, 0.0, 0.0};
    const Vec3 p2{r2 * std::cos(theta), r2 * std::sin(theta), 0.0};
    const double sep = norm(p2 - p1);
    if (sep >= 2.0 * isolation_radius) return {};
    if (sep <= 1e-12 * std::max(1.0, zone_radius)) {
        return {delta_outside(dim, r1, isolation_radius, zone_radius), MeasureMethod::Analytic, 0.0};
    }
    if (dim == 3) {
        return {overlap_volume_sliced(p1, p2, isolation_radius, zone_radius),
                MeasureMethod::Analytic, 0.0};
    }
    const double pair = lens_area(isolation_radius, isolation_radius, sep);
    const RegionMeasure triple =
        triple_overlap_area({p1.x, p1.y, isolation_radius}, {p2.x, p2.y, isolation_radius},
                            {0.0, 0.0, zone_radius});
    return {std::max(0.0, pair - triple.value), triple.method, triple.statistical_error};
}

double Box::measure() const {
    double m = 1.0;
    for (int k = 0; k < dim; ++k) m *= hi[k] - lo[k];
    return m;
}

RegionMeasure sampled_region_measure(const std::function<bool(const Vec3&)>& inside,
                                     const Box& box, std::size_t samples, std::uint64_t seed) {
    require(samples > 0, "sampled_region_measure: need at least one sample");
    check_dimension(box.dim);
    Rng rng(seed);
    std::size_t hits = 0;
    Vec3 p;
    for (std::size_t s = 0; s < samples; ++s) {
        for (int k = 0; k < box.dim; ++k) p[k] = box.lo[k] + uniform01(rng) * (box.hi[k] - box.lo[k]);
        if (inside(p)) ++hits;
    }
    const double n = static_cast<double>(samples);
    const double f = static_cast<double>(hits) / n;
    const double m = box.measure();
    return {f * m, MeasureMethod::Sampled, m * std::sqrt(f * (1.0 - f) / n)};
}

}  // namespace sigate::geometry
