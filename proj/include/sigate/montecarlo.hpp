#pragma once

// Monte Carlo counting of gate configurations in Poisson dopant patterns,
// accelerated by a uniform cell grid so that work grows linearly with the
// number of points.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigate/errors.hpp"
#include "sigate/geometry.hpp"
#include "sigate/vec.hpp"

namespace sigate::montecarlo {

enum class Boundary { Periodic, OpenWithMargin };

Boundary parse_boundary(std::string_view name);
std::string_view boundary_name(Boundary b);

/// Axis-aligned simulation box with its lower corner at the origin.
/// Bilayer patterns are simulated in the readout plane: the control plane
/// is projected onto it and the in-plane radii already account for d.
struct SimRegion {
    int dimension = 2;
    std::array<double, 3> sides{10000.0, 10000.0, 0.0};  // nm
    Boundary boundary = Boundary::Periodic;
    double margin = 0.0;  // nm, open boundaries only

    double measure() const;
    /// Measure of the interior in which points are counted.
    double counted_measure() const;
    bool counted(const Vec3& p) const;
    /// Throws PreconditionError unless sides and margin suit the radius.
    void validate(double largest_radius) const;
};

/// Square (2D) or cubic (3D) region of the given side.
SimRegion make_region(int dimension, double side, Boundary boundary = Boundary::Periodic);

/// Poisson number of points at `density` (per cm^dim), uniform in the box.
std::vector<Vec3> sample_points(const SimRegion& region, double density, std::uint64_t seed);

/// Uniform cells holding point indices in compressed buckets.
class SpatialGrid {
public:
    SpatialGrid(const SimRegion& region, std::span<const Vec3> points, double cell_size);

    /// Cell size from the mean nearest-neighbour spacing, clamped to [r/4, r].
    static double suggested_cell(const SimRegion& region, std::size_t n_points, double radius);

    /// Largest per-axis cell edge after tiling the box exactly.
    double cell_size() const;
    int dimension() const { return region_.dimension; }
    std::size_t size() const { return points_.size(); }

    /// Calls visit(index, displacement) for every point whose cell meets the
    /// box of half-side `radius` around p; displacement is q - p, minimum
    /// image under periodic boundaries. Stops once visit returns false.
    template <class Visit>
    void for_each_near(const Vec3& p, double radius, Visit&& visit) const;

private:
    int cell_coord(double x, int axis) const;
    Vec3 displacement(const Vec3& p, const Vec3& q) const;

    SimRegion region_;
    std::span<const Vec3> points_;
    std::array<double, 3> cell_{1.0, 1.0, 1.0};
    std::array<int, 3> counts_{1, 1, 1};
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> items_;
};

/// Flags points with no other point closer than `radius`.
std::vector<char> mark_isolated(std::span<const Vec3> points, double radius,
                                const SpatialGrid& grid);

/// Per-control outcome of the haystack search.
struct ControlRecord {
    bool viable = false;
    bool killed = false;       // a readout sits inside R_min
    int shell_readouts = 0;    // readouts with R_min <= r <= R_max
    int active_readouts = 0;   // shell readouts isolated from all other readouts by R_rr
};

struct GateTally {
    std::size_t controls = 0;
    std::size_t viable_controls = 0;
    std::size_t killed_controls = 0;
    /// Viable controls with k = 1, 2, 3, 4+ active readouts.
    std::array<std::size_t, 4> active{};
    /// Viable controls whose shell holds exactly k readouts, all active.
    std::array<std::size_t, 4> clean{};
    std::size_t active_readouts = 0;
    std::size_t readouts = 0;
    std::size_t excited_pairs = 0;
    double measure = 0.0;  // nm^dim of the counted region
};

/// Classifies readouts around every viable control. `viable` comes from
/// mark_isolated with R_cc. Records are indexed like `controls`.
std::vector<ControlRecord> haystack_classify(std::span<const Vec3> controls,
                                             std::span<const char> viable,
                                             std::span<const Vec3> readouts,
                                             const geometry::GateGeometry& geom,
                                             const SpatialGrid& readout_grid);

/// Tallies records of controls inside the counted region.
GateTally tally_controls(const SimRegion& region, std::span<const Vec3> controls,
                         std::span<const ControlRecord> records);

/// Unordered pairs closer than R_cc but farther than R'_min with no third
/// point within R_cc of either member. Returns, per point, the partner
/// index or -1.
std::vector<long> pair_gates(std::span<const Vec3> points, const geometry::GateGeometry& geom,
                             const SpatialGrid& grid);

enum class TrialMode { ControlReadout, ExcitedPairs };

struct TrialConfig {
    SimRegion region;
    geometry::GateGeometry geometry;
    TrialMode mode = TrialMode::ControlReadout;
    double control_density = 0.0;  // per cm^dim
    double readout_density = 0.0;  // per cm^dim; total density for ExcitedPairs
    int trials = 50;
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const;
};

struct Statistic {
    std::string name;
    double mean = 0.0;
    double std = 0.0;      // sample standard deviation over trials
    bool has_std = false;  // false for a single trial
};

struct TrialStats {
    int trials = 0;
    std::vector<GateTally> tallies;
    std::vector<Statistic> stats;

    const Statistic& get(std::string_view name) const;
};

/// One trial with the given seed.
GateTally run_trial(const TrialConfig& config, std::uint64_t seed);

/// Independent trials with derived sub-seeds, summarised per quantity.
/// Densities are per cm^dim, percentages in percent.
TrialStats run_trials(const TrialConfig& config);

template <class Visit>
void SpatialGrid::for_each_near(const Vec3& p, double radius, Visit&& visit) const {
    const int dim = region_.dimension;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        lo[a] = static_cast<int>(std::floor((p[a] - radius) / cell_[a]));
        hi[a] = static_cast<int>(std::floor((p[a] + radius) / cell_[a]));
        if (region_.boundary == Boundary::OpenWithMargin) {
            lo[a] = std::max(lo[a], 0);
            hi[a] = std::min(hi[a], counts_[a] - 1);
        } else if (hi[a] - lo[a] + 1 > counts_[a]) {
            lo[a] = 0;
            hi[a] = counts_[a] - 1;
        }
    }
    auto wrap = [&](int c, int a) {
        const int n = counts_[a];
        return ((c % n) + n) % n;
    };
    for (int cz = lo[2]; cz <= hi[2]; ++cz) {
        const int wz = dim == 3 ? wrap(cz, 2) : 0;
        for (int cy = lo[1]; cy <= hi[1]; ++cy) {
            const int wy = wrap(cy, 1);
            for (int cx = lo[0]; cx <= hi[0]; ++cx) {
                const int wx = wrap(cx, 0);
                const std::size_t cell =
                    (static_cast<std::size_t>(wz) * counts_[1] + wy) * counts_[0] + wx;
                for (std::uint32_t k = start_[cell]; k < start_[cell + 1]; ++k) {
                    const std::uint32_t idx = items_[k];
                    if (!visit(static_cast<std::size_t>(idx), displacement(p, points_[idx])))
                        return;
                }
            }
        }
    }
}

}  // namespace sigate::montecarlo
