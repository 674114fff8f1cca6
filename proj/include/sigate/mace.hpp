#pragma once

// Spin dynamics of dilute donor ensembles: Heisenberg couplings over a
// sampled dopant pattern, exact cluster evolution and cluster averaging.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "sigate/exchange.hpp"
#include "sigate/montecarlo.hpp"
#include "sigate/vec.hpp"

namespace sigate::mace {

/// Controls are P donors, readouts As donors.
struct SpinSystem {
    montecarlo::SimRegion region;
    std::vector<Vec3> positions;  // nm
    std::vector<exchange::Species> species;
    exchange::OrbitalKind control_state = exchange::OrbitalKind::Ground1sA1;
    exchange::Polarization polarization{Vec3{1.0, 0.0, 0.0}};
    std::vector<char> spin_up;  // readouts up, controls down

    std::size_t size() const { return positions.size(); }
    bool is_readout(std::size_t i) const { return species[i] == exchange::Species::As; }
    exchange::Donor donor(std::size_t i) const;
    /// Minimum-image separation positions[j] - positions[i].
    Vec3 separation(std::size_t i, std::size_t j) const;
    void validate() const;
};

struct SystemConfig {
    double side = 3000.0;             // nm, square periodic box
    double control_density = 7.0e9;  // per cm^2
    double readout_density = 7.0e9;  // per cm^2
    std::uint64_t seed = 1;
};

/// Poisson patterns of both species; positions depend only on the seed.
SpinSystem make_spin_system(const SystemConfig& config, exchange::OrbitalKind control_state);

/// Same positions with the controls in another orbital.
SpinSystem with_control_state(SpinSystem system, exchange::OrbitalKind state);

struct TableSettings {
    double r_start = 0.5;        // nm, first radial row
    double r_step = 1.0;         // nm
    int phi_intervals = 48;      // over [0, pi]
    double negligible = 1.0e-6;  // ueV, rows stop once every weighted component is below
    double r_limit = 200.0;      // nm
    exchange::IntegratorSettings integrator{100000, 0.0, 8, 2, 1};
    int threads = 1;
};

/// Valley integrals of one donor pair on a polar grid in the z = 0 plane.
/// Separations are folded into phi in [0, pi] by inversion symmetry; the
/// valley phase factors are applied exactly at lookup.
class CouplingTable {
public:
    CouplingTable(const exchange::Donor& first, const exchange::Donor& second,
                  const exchange::Polarization& polarization, const TableSettings& settings);

    /// Exchange for second - first = separation (z must vanish); zero past the last row.
    double value(const Vec3& separation) const;
    double extent() const;
    std::size_t rows() const { return rows_; }
    std::size_t nodes() const { return rows_ * (settings_.phi_intervals + 1); }
    const TableSettings& settings() const { return settings_; }

private:
    double component(std::size_t slot, double r, double phi) const;

    TableSettings settings_;
    std::vector<std::pair<int, int>> pairs_;  // present valley-axis pairs
    std::size_t rows_ = 0;
    std::vector<double> data_;  // [row][phi][slot]
};

/// Tables keyed by the donor pair so that ground and excited runs share the
/// readout-readout table.
class TableCache {
public:
    explicit TableCache(TableSettings settings = {}) : settings_(settings) {}

    const CouplingTable& get(const exchange::Donor& first, const exchange::Donor& second,
                             const exchange::Polarization& polarization);
    const TableSettings& settings() const { return settings_; }

private:
    using Key = std::tuple<int, int, int, int, double, double, double>;
    TableSettings settings_;
    std::map<Key, std::unique_ptr<CouplingTable>> tables_;
};

enum class CouplingSource { Direct, Tabulated };

CouplingSource parse_coupling_source(std::string_view name);
std::string_view coupling_source_name(CouplingSource source);

struct Coupling {
    std::size_t site = 0;
    double value = 0.0;  // ueV
};

/// Sparse symmetric couplings; each neighbour list is sorted by site.
class CouplingMatrix {
public:
    explicit CouplingMatrix(std::size_t sites = 0) : neighbours_(sites) {}

    std::size_t size() const { return neighbours_.size(); }
    double operator()(std::size_t i, std::size_t j) const;
    std::span<const Coupling> neighbours(std::size_t i) const { return neighbours_[i]; }
    std::size_t pair_count() const;
    /// Inserts J_ij = J_ji. Call finalize() once all pairs are in.
    void add(std::size_t i, std::size_t j, double value);
    void finalize();

private:
    std::vector<std::vector<Coupling>> neighbours_;
};

struct CouplingOptions {
    CouplingSource source = CouplingSource::Tabulated;
    double cutoff = 150.0;  // nm
    exchange::IntegratorSettings direct{};
    int threads = 1;
};

/// Exchange between every pair of sites closer than the cutoff.
CouplingMatrix build_couplings(const SpinSystem& system, const CouplingOptions& options,
                               TableCache* cache = nullptr);

/// Exchange of one pair of sites with the chosen source.
double pair_coupling(const SpinSystem& system, std::size_t i, std::size_t j,
                     const CouplingOptions& options, TableCache* cache = nullptr);

enum class ClusterCriterion { LargestCoupling, Nearest };

ClusterCriterion parse_cluster_criterion(std::string_view name);
std::string_view cluster_criterion_name(ClusterCriterion c);

struct Cluster {
    std::size_t focal = 0;
    std::vector<std::size_t> members;  // members[0] == focal
    ClusterCriterion criterion = ClusterCriterion::LargestCoupling;
};

/// Focal site plus the g - 1 sites with largest |J| to it (or the nearest).
/// Equal couplings are ordered by distance, then by index.
Cluster select_cluster(const SpinSystem& system, const CouplingMatrix& couplings,
                       std::size_t focal, int g, ClusterCriterion criterion);

inline constexpr int max_cluster_size = 12;

enum class Propagation { Sector, Full };

struct SpinEvolution {
    /// magnetization(t, i): <S^z_i> at t_grid[t].
    Eigen::MatrixXd magnetization;
    std::vector<double> norm;
    std::vector<double> energy;  // ueV
};

/// Exact evolution of a product state under H = sum_{i<j} J_ij S_i.S_j,
/// with J symmetric and in ueV, times in ps.
SpinEvolution evolve_spins(const Eigen::MatrixXd& couplings, const std::vector<char>& spin_up,
                           std::span<const double> t_grid,
                           Propagation propagation = Propagation::Sector,
                           bool diagnostics = false);

/// Focal-site <S^z(t)> for a cluster of the system.
std::vector<double> evolve_cluster(const Cluster& cluster, const SpinSystem& system,
                                   const CouplingMatrix& couplings, std::span<const double> t_grid,
                                   Propagation propagation = Propagation::Sector);

/// Uniform grid of `points` times from t0 to t1.
std::vector<double> time_grid(double t0 = 0.0, double t1 = 200.0, int points = 201);

struct JackknifeResult {
    double mean = 0.0;
    double error = 0.0;
};

/// Leave-one-out error of the mean.
JackknifeResult jackknife(std::span<const double> samples);

struct MaceSettings {
    int g = 8;
    int n_clusters = 400;
    std::vector<double> t_grid = time_grid();
    std::uint64_t seed = 1;
    ClusterCriterion criterion = ClusterCriterion::LargestCoupling;
    Propagation propagation = Propagation::Sector;
    int threads = 1;
};

struct Trajectory {
    std::vector<double> t;  // ps
    std::vector<double> p_sf;
    std::vector<double> error;
    int g = 0;
    int n_clusters = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> focal_sites;
    /// per_cluster(c, t): flip probability of cluster c.
    Eigen::MatrixXd per_cluster;
};

/// Readout sites used as focal sites, sampled without replacement.
std::vector<std::size_t> sample_focal_sites(const SpinSystem& system, int n_clusters,
                                            std::uint64_t seed);

/// Flip probability P_sf = 1/2 - <S^z> of readouts, averaged over clusters.
Trajectory mace_average(const SpinSystem& system, const CouplingMatrix& couplings,
                        const MaceSettings& settings);

struct PhaseGateReport {
    Eigen::Matrix4cd unitary;
    std::complex<double> global_phase;
    double unitarity_error = 0.0;  // max |U^dag U - 1|
    double distance = 0.0;         // max |U - phase * diag(1, 1, 1, -1)|
};

/// S^z rotation exp(-i theta S^z) on spin 1 or 2; basis |uu>, |ud>, |du>, |dd>.
Eigen::Matrix4cd z_rotation(int spin, double theta);
/// exp(-i theta S_1.S_2).
Eigen::Matrix4cd exchange_pulse(double theta);

PhaseGateReport phase_gate_sequence();

}  // namespace sigate::mace
