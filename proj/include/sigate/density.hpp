#pragma once

// Densities of isolated controls and of viable gate configurations in a
// Poisson pattern of dopants. Public densities are per cm^dim.

#include <optional>
#include <string_view>
#include <vector>

#include "sigate/geometry.hpp"

namespace sigate::density {

enum class GateKind { SFG, HeisExGd, HeisExEx };

GateKind parse_gate_kind(std::string_view name);
std::string_view gate_kind_name(GateKind kind);

/// Active dopants per gate: two readouts for SFG, one for excited-ground.
/// Excited-excited pairs are reported directly as active-dopant density.
int readouts_per_gate(GateKind kind);

enum class DensityKind { Total, Isolated, Gate, ActiveReadout };

struct DensityValue {
    double value = 0.0;
    DensityKind kind = DensityKind::Total;
    std::optional<GateKind> gate_kind;
};

/// D_t exp(-V(R) D_t): points with no neighbour within R.
DensityValue isolated_density(double total_density, double radius, int dim);

struct IsolationOptimum {
    double total_density = 0.0;
    double isolated_density = 0.0;
    double isolated_fraction = 0.0;
};

IsolationOptimum optimal_isolation_density(double radius, int dim);

struct QuadratureSettings {
    double relative_tolerance = 1e-3;
    unsigned max_depth = 12;
};

/// Density of controls with exactly two viable, mutually isolated readouts.
DensityValue sfg_density(double control_density, double readout_density,
                         const geometry::GateGeometry& geom, const QuadratureSettings& q = {});

/// Density of controls with exactly one viable readout.
DensityValue heis_ex_gd_density(double control_density, double readout_density,
                                const geometry::GateGeometry& geom,
                                const QuadratureSettings& q = {});

/// Density of dopants that belong to an isolated excited-excited pair.
DensityValue heis_ex_ex_density(double total_density, const geometry::GateGeometry& geom,
                                const QuadratureSettings& q = {});

/// Active-dopant density for one gate kind at the given readout (or total)
/// density; controls sit at 1/V(R_cc) except for excited-excited gates.
double active_density(GateKind kind, double readout_density, const geometry::GateGeometry& geom,
                      const QuadratureSettings& q = {});

double active_percentage(GateKind kind, double readout_density,
                         const geometry::GateGeometry& geom, const QuadratureSettings& q = {});

struct CurvePoint {
    double readout_density = 0.0;
    DensityValue active;
    double active_percent = 0.0;
};

struct DensityCurve {
    GateKind gate_kind = GateKind::SFG;
    int dimension = 2;
    double control_density = 0.0;
    std::vector<CurvePoint> points;
};

/// Curve of active density against readout density, logarithmically spaced
/// between lo and hi (inclusive).
DensityCurve density_scan(GateKind kind, const geometry::GateGeometry& geom, double lo, double hi,
                          int points, const QuadratureSettings& q = {}, int threads = 1);

struct Peak {
    double readout_density = 0.0;
    double active_density = 0.0;
    double active_percent = 0.0;
};

/// Maximum of the active density (or of the active percentage) over [lo, hi].
Peak find_peak(GateKind kind, const geometry::GateGeometry& geom, double lo, double hi,
               bool maximize_percentage = false, const QuadratureSettings& q = {});

/// In-plane radius of a 3D zone cut by a plane at distance d.
double bilayer_projection(double zone_radius, double separation);

}  // namespace sigate::density
