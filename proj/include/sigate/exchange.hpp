#pragma once

// Heitler-London exchange between two substitutional donors in silicon
// with multivalley effective-mass wavefunctions.
//
// The plane-wave expansion of the Bloch functions never appears here: once
// the fast-oscillating cross terms are dropped, sum_G |c_G|^2 = 1 removes
// it, leaving envelope integrals j_ab times valley phase factors.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sigate/vec.hpp"

namespace sigate::exchange {

namespace silicon {
inline constexpr double lattice_constant = 0.543;  // nm
inline constexpr double valley_wavenumber = 0.84 * 2.0 * 3.14159265358979323846 / lattice_constant;
inline constexpr double relative_permittivity = 11.4;
}  // namespace silicon

/// Excited-state radiative lifetime used for the decoherence threshold (ps).
inline constexpr double default_decoherence_time = 200.0;

enum class Species { P, As };

struct DonorSpecies {
    Species kind = Species::P;
    double binding_energy = 45.58;        // meV
    double single_valley_energy = 29.7;   // meV

    std::string_view name() const { return kind == Species::P ? "P" : "As"; }
};

DonorSpecies donor_species(Species kind);
Species parse_species(std::string_view name);

enum class OrbitalKind { Ground1sA1, Excited2p0, Excited2pPM };

struct OrbitalState {
    OrbitalKind kind = OrbitalKind::Ground1sA1;
    double a = 2.42;  // transverse envelope radius, nm
    double b = 1.39;  // longitudinal envelope radius, nm
};

OrbitalState orbital_state(OrbitalKind kind);
OrbitalKind parse_orbital(std::string_view name);
std::string_view orbital_name(OrbitalKind kind);

/// Unit polarization vector of the exciting light field.
class Polarization {
public:
    /// Throws PreconditionError unless |v| = 1 within 1e-12.
    explicit Polarization(const Vec3& v);
    static Polarization normalized(const Vec3& v);

    const Vec3& vector() const { return v_; }

private:
    Vec3 v_;
};

enum class Valley { PlusX, MinusX, PlusY, MinusY, PlusZ, MinusZ };

/// Crystal axis (0 = x, 1 = y, 2 = z) of a valley.
constexpr int valley_axis(Valley v) { return static_cast<int>(v) / 2; }

/// sqrt(E_SV / E_B): ground-state contraction from the central-cell correction.
double contraction_factor(const DonorSpecies& species);

struct Donor {
    DonorSpecies species;
    OrbitalState state;
};

Donor make_donor(Species species, OrbitalKind kind);

/// Envelope F_mu(r) in nm^(-3/2) for a donor at the origin.
double envelope(const OrbitalState& state, const DonorSpecies& species,
                const Polarization& polarization, Valley valley, const Vec3& r);

struct IntegratorSettings {
    std::size_t evaluations = 200000;
    double target_relative_error = 0.05;
    int iterations = 8;
    int warmup_iterations = 2;
    std::uint64_t seed = 1;
};

struct ExchangeResult {
    double value = 0.0;              // ueV
    double statistical_error = 0.0;  // ueV
    std::size_t samples_used = 0;
};

/// Axis-resolved envelope integrals j_ab (a, b = x, y, z) for one separation.
/// By F_mu = F_-mu every valley pair maps onto one of these nine.
struct ValleyIntegrals {
    std::array<std::array<double, 3>, 3> value{};
    std::array<std::array<double, 3>, 3> error{};
    std::array<std::array<bool, 3>, 3> present{};
    std::size_t samples_used = 0;
};

/// Coulomb exchange integral j_mu,nu between donor 1 at the origin and donor 2 at R.
ExchangeResult exchange_component(const Donor& first, const Donor& second, Valley mu, Valley nu,
                                  const Vec3& separation, const Polarization& polarization,
                                  const IntegratorSettings& settings = {});

/// All non-vanishing j_ab from a single shared-sample integration.
ValleyIntegrals valley_integrals(const Donor& first, const Donor& second, const Vec3& separation,
                                 const Polarization& polarization,
                                 const IntegratorSettings& settings = {});

/// Summed valley phase weight 2 * sum_{mu in +-a, nu in +-b} cos(k_mu.R) cos(k_nu.R).
double valley_weight(int axis_a, int axis_b, const Vec3& separation);

/// J = 2 sum_{mu,nu} j_mu,nu cos(k_mu.R) cos(k_nu.R) assembled from axis integrals.
double assemble_exchange(const ValleyIntegrals& integrals, const Vec3& separation);

/// Total exchange J between the two donors, with the statistical error of
/// the combined estimator.
ExchangeResult exchange_total(const Donor& first, const Donor& second, const Vec3& separation,
                              const Polarization& polarization,
                              const IntegratorSettings& settings = {});

/// Minimum exchange h / (4 T_dec) for a pi/2 exchange step within T_dec (ps -> ueV).
double j_dec(double decoherence_time);

/// A named donor pair and light polarization.
struct PairConfiguration {
    std::string name;
    Donor first;
    Donor second;
    Polarization polarization{Vec3{1.0, 0.0, 0.0}};
};

/// Map plane: two in-plane crystal axes and an offset along the remaining axis.
struct MapPlane {
    int axis_u = 0;
    int axis_v = 1;
    double offset = 0.0;  // nm along the normal

    int normal_axis() const { return 3 - axis_u - axis_v; }
    Vec3 point(double u, double v) const;
};

struct MapNode {
    double u = 0.0;  // nm
    double v = 0.0;  // nm
    double value = 0.0;  // ueV
    double error = 0.0;  // ueV
};

struct InteractionMap {
    PairConfiguration pair;
    MapPlane plane;
    double spacing = 1.0;  // nm
    int half_nodes = 0;    // nodes run from -half_nodes to +half_nodes along both axes
    bool origin_excluded = false;
    std::string orientation = "u=[100], v=[010]";
    std::vector<MapNode> nodes;
};

/// Evaluates J on a square grid of the given plane. When the plane passes
/// through donor 1 the origin node is left out.
InteractionMap interaction_map(const PairConfiguration& pair, const MapPlane& plane,
                               double spacing, double half_extent,
                               const IntegratorSettings& settings = {}, int threads = 1);

/// sqrt(A / pi) for the zone {J > threshold}, measured by node counting.
/// An excluded origin node counts as inside the zone.
double equivalent_radius(const InteractionMap& map, double threshold);

/// Thresholded zone area in nm^2 (node count times cell area).
double zone_area(const InteractionMap& map, double threshold);

}  // namespace sigate::exchange
