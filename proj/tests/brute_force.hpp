#pragma once

#include <cmath>
#include <vector>

#include "sigate/geometry.hpp"
#include "sigate/montecarlo.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"

namespace sigate::reference {

using montecarlo::Boundary;
using montecarlo::ControlRecord;
using montecarlo::SimRegion;
using montecarlo::make_region;
using geometry::GateGeometry;

// Independent O(n^2) references with explicit minimum-image distances.
inline double dist_ref(const SimRegion& reg, const Vec3& a, const Vec3& b) {
    double s = 0.0;
    for (int k = 0; k < reg.dimension; ++k) {
        double d = b[k] - a[k];
        if (reg.boundary == Boundary::Periodic) {
            const double L = reg.sides[k];
            while (d > L / 2) d -= L;
            while (d < -L / 2) d += L;
        }
        s += d * d;
    }
    return std::sqrt(s);
}

inline std::vector<char> isolated_ref(const SimRegion& reg, const std::vector<Vec3>& pts, double r) {
    std::vector<char> out(pts.size(), 1);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (i != j && dist_ref(reg, pts[i], pts[j]) < r) out[i] = 0;
    return out;
}

inline std::vector<ControlRecord> haystack_ref(const SimRegion& reg, const std::vector<Vec3>& controls,
                                        const std::vector<char>& viable,
                                        const std::vector<Vec3>& readouts, const GateGeometry& g) {
    std::vector<ControlRecord> out(controls.size());
    for (std::size_t c = 0; c < controls.size(); ++c) {
        auto& rec = out[c];
        rec.viable = viable[c];
        if (!rec.viable) continue;
        for (const auto& r : readouts)
            if (dist_ref(reg, controls[c], r) < g.r_min) rec.killed = true;
        if (rec.killed) continue;
        for (std::size_t i = 0; i < readouts.size(); ++i) {
            const double d = dist_ref(reg, controls[c], readouts[i]);
            if (d < g.r_min || d > g.r_max) continue;
            ++rec.shell_readouts;
            bool iso = true;
            for (std::size_t j = 0; j < readouts.size(); ++j)
                if (j != i && dist_ref(reg, readouts[i], readouts[j]) < g.r_rr) iso = false;
            if (iso) ++rec.active_readouts;
        }
    }
    return out;
}

inline std::vector<long> pairs_ref(const SimRegion& reg, const std::vector<Vec3>& pts, const GateGeometry& g) {
    std::vector<long> out(pts.size(), -1);
    auto neighbours = [&](std::size_t i) {
        std::vector<std::size_t> n;
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i && dist_ref(reg, pts[i], pts[j]) < g.r_cc) n.push_back(j);
        return n;
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto ni = neighbours(i);
        if (ni.size() != 1) continue;
        const auto nj = neighbours(ni[0]);
        if (nj.size() == 1 && nj[0] == i && dist_ref(reg, pts[i], pts[ni[0]]) > g.r_min_prime)
            out[i] = static_cast<long>(ni[0]);
    }
    return out;
}

inline GateGeometry random_geometry(Rng& rng, int dim) {
    GateGeometry g;
    g.dimension = dim;
    g.r_min = 5.0 + 10.0 * uniform01(rng);
    g.r_max = g.r_min + 2.0 + 10.0 * uniform01(rng);
    g.r_rr = 4.0 + 12.0 * uniform01(rng);
    g.r_cc = g.r_max + 20.0 * uniform01(rng);
    g.r_min_prime = g.r_cc * uniform01(rng);
    return g;
}

inline SimRegion random_region(Rng& rng, int dim, double largest) {
    SimRegion reg = make_region(dim, 2.2 * largest + 80.0 * uniform01(rng),
                                uniform01(rng) < 0.5 ? Boundary::Periodic : Boundary::OpenWithMargin);
    if (reg.boundary == Boundary::OpenWithMargin) reg.margin = largest;
    return reg;
}

inline double count_density(const SimRegion& reg, double n) {
    return units::per_nm_to_per_cm(n / reg.measure(), reg.dimension);
}

}  // namespace sigate::reference
