#pragma once

// Measures of discs, balls and their overlaps used by the gate-density
// formulas. Lengths in nm; "measure" is area in 2D and volume in 3D.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "sigate/vec.hpp"

namespace sigate::geometry {

/// Radii that decide whether a control/readout configuration is a gate.
struct GateGeometry {
    int dimension = 2;
    double r_min = 11.4;        // closest allowed control-readout distance
    double r_max = 17.9;        // farthest allowed control-readout distance
    double r_rr = 11.0;         // readout-readout isolation
    double r_cc = 42.2;         // control isolation
    double r_min_prime = 11.8;  // closest allowed excited-excited distance
    std::optional<double> bilayer_separation;

    /// Throws PreconditionError when an invariant is violated.
    void validate() const;
};

/// Named radius sets: "monolayer-inplane", "bilayer-outofplane", "bulk-3d".
GateGeometry preset_geometry(std::string_view name);

struct BallMeasures {
    double volume = 0.0;
    double surface = 0.0;
};

BallMeasures ball_measures(int dim, double r);
double ball_volume(int dim, double r);
double ball_surface(int dim, double r);

/// Angle at the control between two readouts at r1, r2 that are exactly
/// r_rr apart. Out-of-range cosines are clamped, so the result is pi when
/// no triangle exists with r1 + r2 < r_rr.
double exclusion_angle(double r1, double r2, double r_rr);

/// Shell measure left at radius r2 once a cone of half-angle alpha is removed.
double restricted_surface(int dim, double r2, double alpha);

enum class MeasureMethod { Analytic, Sampled };

struct RegionMeasure {
    double value = 0.0;
    MeasureMethod method = MeasureMethod::Analytic;
    double statistical_error = 0.0;
};

/// Intersection of two discs (2D) or balls (3D).
RegionMeasure lens_measure(int dim, double ra, double rb, double centre_distance);

struct Circle {
    double x = 0.0;
    double y = 0.0;
    double r = 0.0;
};

/// Area common to three discs. Near-degenerate arrangements, where arc
/// membership cannot be decided reliably, fall back to sampling.
RegionMeasure triple_overlap_area(const Circle& a, const Circle& b, const Circle& c,
                                  std::size_t fallback_samples = 400000,
                                  std::uint64_t seed = 7);

/// Part of the isolation ball around a readout at distance r1 that lies
/// outside the zone ball around the control.
double delta_outside(int dim, double r1, double isolation_radius, double zone_radius);

/// Part of the intersection of two readout isolation balls lying outside
/// the zone ball. Readouts sit at r1 and r2 from the control with angle
/// theta between them.
RegionMeasure delta_overlap(int dim, double r1, double r2, double theta, double isolation_radius,
                            double zone_radius);

/// Axis-aligned box; only the first `dim` coordinates are used.
struct Box {
    int dim = 2;
    Vec3 lo;
    Vec3 hi;

    double measure() const;
};

/// Hit-or-miss estimate with binomial standard error.
RegionMeasure sampled_region_measure(const std::function<bool(const Vec3&)>& inside,
                                     const Box& box, std::size_t samples, std::uint64_t seed);

}  // namespace sigate::geometry
