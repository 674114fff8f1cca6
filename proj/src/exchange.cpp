#include "sigate/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "sigate/errors.hpp"
#include "sigate/parallel.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"
#include "sigate/vegas.hpp"

namespace sigate::exchange {

using units::pi;

DonorSpecies donor_species(Species kind) {
    DonorSpecies s;
    s.kind = kind;
    s.binding_energy = kind == Species::P ? 45.58 : 53.77;
    return s;
}

Species parse_species(std::string_view name) {
    if (name == "P") return Species::P;
    if (name == "As") return Species::As;
    throw PreconditionError("unknown donor species '" + std::string(name) + "'");
}

OrbitalState orbital_state(OrbitalKind kind) {
    switch (kind) {
        case OrbitalKind::Ground1sA1: return {kind, 2.42, 1.39};
        case OrbitalKind::Excited2p0: return {kind, 3.68, 2.23};
        case OrbitalKind::Excited2pPM: return {kind, 5.45, 3.35};
    }
    throw PreconditionError("unknown orbital kind");
}

OrbitalKind parse_orbital(std::string_view name) {
    if (name == "1s" || name == "1sA1") return OrbitalKind::Ground1sA1;
    if (name == "2p0") return OrbitalKind::Excited2p0;
    if (name == "2p" || name == "2p+-" || name == "2pPM") return OrbitalKind::Excited2pPM;
    throw PreconditionError("unknown orbital state '" + std::string(name) + "'");
}

std::string_view orbital_name(OrbitalKind kind) {
    switch (kind) {
        case OrbitalKind::Ground1sA1: return "1s";
        case OrbitalKind::Excited2p0: return "2p0";
        case OrbitalKind::Excited2pPM: return "2p+-";
    }
    return "?";
}

Polarization::Polarization(const Vec3& v) : v_(v) {
    require(std::abs(norm(v) - 1.0) <= 1e-12, "polarization must be a unit vector");
}

Polarization Polarization::normalized(const Vec3& v) {
    const double n = norm(v);
    require(n > 0.0, "polarization must be non-zero");
    return Polarization(v * (1.0 / n));
}

double contraction_factor(const DonorSpecies& species) {
    return std::sqrt(species.single_valley_energy / species.binding_energy);
}

Donor make_donor(Species species, OrbitalKind kind) {
    return {donor_species(species), orbital_state(kind)};
}

namespace {

Vec3 unit_axis(int axis) {
    Vec3 e;
    e[axis] = 1.0;
    return e;
}

// One valley envelope with the crystal-axis permutation folded in:
// F(r) = norm * poly(r) * exp(-sqrt((|r|^2 - r_l^2)/a^2 + r_l^2/b^2)).
struct EnvelopeTerm {
    int axis = 2;
    double inv_a2 = 0.0;
    double inv_b2 = 0.0;
    double scale = 0.0;
    bool polynomial = false;
    Vec3 coeff;
    bool vanishes = false;

    double exponent(const Vec3& r) const {
        const double l = r[axis];
        const double l2 = l * l;
        return std::sqrt((norm2(r) - l2) * inv_a2 + l2 * inv_b2);
    }
    double prefactor(const Vec3& r) const {
        return polynomial ? scale * dot(coeff, r) : scale;
    }
    double operator()(const Vec3& r) const {
        if (vanishes) return 0.0;
        return prefactor(r) * std::exp(-exponent(r));
    }
};

EnvelopeTerm make_term(const OrbitalState& state, const DonorSpecies& species,
                       const Polarization& polarization, int axis) {
    EnvelopeTerm t;
    t.axis = axis;
    const Vec3& eps = polarization.vector();
    double a = state.a;
    double b = state.b;
    switch (state.kind) {
        case OrbitalKind::Ground1sA1: {
            const double alpha = contraction_factor(species);
            a *= alpha;
            b *= alpha;
            t.scale = 1.0 / std::sqrt(6.0 * pi * a * a * b);
            break;
        }
        case OrbitalKind::Excited2p0:
            t.scale = 1.0 / std::sqrt(2.0 * pi * a * a * b * b * b);
            t.polynomial = true;
            t.coeff = unit_axis(axis) * eps[axis];
            break;
        case OrbitalKind::Excited2pPM:
            t.scale = 1.0 / std::sqrt(4.0 * pi * a * a * a * a * b);
            t.polynomial = true;
            t.coeff = eps - unit_axis(axis) * eps[axis];
            break;
    }
    t.inv_a2 = 1.0 / (a * a);
    t.inv_b2 = 1.0 / (b * b);
    t.vanishes = t.polynomial && norm2(t.coeff) == 0.0;
    return t;
}

double largest_radius(const Donor& d) {
    // Polynomial prefactors push the 2p weight outward.
    const double a = std::max(d.state.a, d.state.b);
    if (d.state.kind == OrbitalKind::Ground1sA1) return a * contraction_factor(d.species);
    return 1.5 * a;
}

// Maps the unit 6-cube onto (r1, r2). The centre of mass c = (r1 + r2)/2
// lives in prolate spheroidal coordinates with foci at the two donors; the
// relative vector s = r1 - r2 uses spherical coordinates with |s| drawn with
// density proportional to |s|, i.e. a 3-D density proportional to 1/|s|,
// which cancels the Coulomb singularity exactly.
class PairSampler {
public:
    PairSampler(const Donor& first, const Donor& second, const Vec3& separation) {
        const double dist = norm(separation);
        half_focal_ = dist / 2.0;
        centre_ = separation * 0.5;
        e3_ = separation * (1.0 / dist);
        const Vec3 trial = std::abs(e3_.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        e1_ = cross(e3_, trial);
        e1_ *= 1.0 / norm(e1_);
        e2_ = cross(e3_, e1_);
        const double l1 = largest_radius(first);
        const double l2 = largest_radius(second);
        // rho^2 ~ exp(-xi |R| (1/l1 + 1/l2)); keep the proposal tail heavier.
        xi_scale_ = 2.0 / (dist * (1.0 / l1 + 1.0 / l2));
        s_max_ = dist + 16.0 * std::max(l1, l2);
    }

    // Returns the Jacobian (including the 1/|s| Coulomb factor).
    double map(std::span<const double> u, Vec3& r1, Vec3& r2) const {
        const double u0 = std::min(u[0], 1.0 - 1e-16);
        const double xi = 1.0 - xi_scale_ * std::log1p(-u0);
        const double eta = 2.0 * u[1] - 1.0;
        const double phi = 2.0 * pi * u[2];
        const double rho = half_focal_ * std::sqrt((xi * xi - 1.0) * (1.0 - eta * eta));
        const Vec3 c = centre_ + (e1_ * std::cos(phi) + e2_ * std::sin(phi)) * rho +
                       e3_ * (half_focal_ * xi * eta);
        const double jac_c = half_focal_ * half_focal_ * half_focal_ * (xi * xi - eta * eta) *
                             (xi_scale_ / (1.0 - u0)) * 2.0 * 2.0 * pi;

        const double s = s_max_ * std::sqrt(u[3]);
        const double cos_t = 2.0 * u[4] - 1.0;
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        const double phi_s = 2.0 * pi * u[5];
        const Vec3 dir = e1_ * (sin_t * std::cos(phi_s)) + e2_ * (sin_t * std::sin(phi_s)) +
                         e3_ * cos_t;
        const Vec3 half = dir * (0.5 * s);
        r1 = c + half;
        r2 = c - half;
        // s^2 ds dOmega / s with ds = s_max^2 / (2 s) du.
        const double jac_s = 0.5 * s_max_ * s_max_ * 4.0 * pi;
        return jac_c * jac_s;
    }

private:
    double half_focal_ = 0.0;
    Vec3 centre_, e1_, e2_, e3_;
    double xi_scale_ = 1.0;
    double s_max_ = 1.0;
};

struct DonorTerms {
    std::array<EnvelopeTerm, 3> axis;
};

DonorTerms make_terms(const Donor& d, const Polarization& polarization) {
    DonorTerms t;
    for (int a = 0; a < 3; ++a) t.axis[a] = make_term(d.state, d.species, polarization, a);
    return t;
}

constexpr double coulomb_prefactor = units::coulomb_constant / silicon::relative_permittivity;

integrate::VegasSettings vegas_settings(const IntegratorSettings& s) {
    integrate::VegasSettings v;
    v.max_evaluations = s.evaluations;
    v.iterations = s.iterations;
    v.warmup_iterations = s.warmup_iterations;
    v.target_relative_error = s.target_relative_error;
    v.seed = s.seed;
    return v;
}

void check_separation(const Vec3& separation) {
    if (!(norm(separation) > 0.0)) {
        throw SingularConfigurationError("exchange integral undefined for coincident donors");
    }
}

struct ComponentPlan {
    std::vector<std::pair<int, int>> pairs;
};

// Integrates the listed axis pairs with shared samples; when `weights` is
// given an extra component carries sum_k w_k f_k so that its error includes
// the correlations between components.
integrate::VegasResult integrate_pairs(const Donor& first, const Donor& second,
                                       const Vec3& separation, const Polarization& polarization,
                                       const ComponentPlan& plan, const std::vector<double>* weights,
                                       const IntegratorSettings& settings) {
    const DonorTerms t1 = make_terms(first, polarization);
    const DonorTerms t2 = make_terms(second, polarization);
    const PairSampler sampler(first, second, separation);
    const int npairs = static_cast<int>(plan.pairs.size());
    const int ncomp = npairs + (weights ? 1 : 0);

    std::array<bool, 3> need1{}, need2{};
    for (auto [a, b] : plan.pairs) {
        need1[a] = true;
        need2[b] = true;
    }

    auto integrand = [&](std::span<const double> u, std::span<double> out) {
        Vec3 r1, r2;
        const double jac = sampler.map(u, r1, r2);
        const Vec3 q1 = r1 - separation;
        const Vec3 q2 = r2 - separation;
        std::array<double, 3> f1r1{}, f1r2{}, f2r1{}, f2r2{};
        for (int a = 0; a < 3; ++a) {
            if (need1[a]) {
                f1r1[a] = t1.axis[a](r1);
                f1r2[a] = t1.axis[a](r2);
            }
            if (need2[a]) {
                f2r1[a] = t2.axis[a](q1);
                f2r2[a] = t2.axis[a](q2);
            }
        }
        double total = 0.0;
        for (int k = 0; k < npairs; ++k) {
            const auto [a, b] = plan.pairs[k];
            const double v = coulomb_prefactor * jac * f1r1[a] * f2r1[b] * f1r2[a] * f2r2[b];
            out[k] = v;
            if (weights) total += (*weights)[k] * v;
        }
        if (weights) out[npairs] = total;
    };
    return integrate::vegas(6, ncomp, integrand, vegas_settings(settings));
}

ComponentPlan nonvanishing_pairs(const Donor& first, const Donor& second,
                                 const Polarization& polarization) {
    const DonorTerms t1 = make_terms(first, polarization);
    const DonorTerms t2 = make_terms(second, polarization);
    ComponentPlan plan;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            if (!t1.axis[a].vanishes && !t2.axis[b].vanishes) plan.pairs.emplace_back(a, b);
        }
    }
    return plan;
}

}  // namespace

double envelope(const OrbitalState& state, const DonorSpecies& species,
                const Polarization& polarization, Valley valley, const Vec3& r) {
    return make_term(state, species, polarization, valley_axis(valley))(r);
}

ExchangeResult exchange_component(const Donor& first, const Donor& second, Valley mu, Valley nu,
                                  const Vec3& separation, const Polarization& polarization,
                                  const IntegratorSettings& settings) {
    check_separation(separation);
    const int a = valley_axis(mu);
    const int b = valley_axis(nu);
    if (make_term(first.state, first.species, polarization, a).vanishes ||
        make_term(second.state, second.species, polarization, b).vanishes) {
        return {};
    }
    ComponentPlan plan;
    plan.pairs.emplace_back(a, b);
    const auto res = integrate_pairs(first, second, separation, polarization, plan, nullptr, settings);
    return {res.components[0].value, res.components[0].error, res.evaluations};
}

ValleyIntegrals valley_integrals(const Donor& first, const Donor& second, const Vec3& separation,
                                 const Polarization& polarization,
                                 const IntegratorSettings& settings) {
    check_separation(separation);
    const ComponentPlan plan = nonvanishing_pairs(first, second, polarization);
    ValleyIntegrals out;
    if (plan.pairs.empty()) return out;
    const auto res = integrate_pairs(first, second, separation, polarization, plan, nullptr, settings);
    for (std::size_t k = 0; k < plan.pairs.size(); ++k) {
        const auto [a, b] = plan.pairs[k];
        out.value[a][b] = res.components[k].value;
        out.error[a][b] = res.components[k].error;
        out.present[a][b] = true;
    }
    out.samples_used = res.evaluations;
    return out;
}

double valley_weight(int axis_a, int axis_b, const Vec3& separation) {
    const double k = silicon::valley_wavenumber;
    return 8.0 * std::cos(k * separation[axis_a]) * std::cos(k * separation[axis_b]);
}

double assemble_exchange(const ValleyIntegrals& integrals, const Vec3& separation) {
    double j = 0.0;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            if (integrals.present[a][b]) j += valley_weight(a, b, separation) * integrals.value[a][b];
        }
    }
    return j;
}

ExchangeResult exchange_total(const Donor& first, const Donor& second, const Vec3& separation,
                              const Polarization& polarization,
                              const IntegratorSettings& settings) {
    check_separation(separation);
    const ComponentPlan plan = nonvanishing_pairs(first, second, polarization);
    if (plan.pairs.empty()) return {};
    std::vector<double> weights;
    weights.reserve(plan.pairs.size());
    for (auto [a, b] : plan.pairs) weights.push_back(valley_weight(a, b, separation));
    const auto res = integrate_pairs(first, second, separation, polarization, plan, &weights, settings);
    const auto& total = res.components.back();
    return {total.value, total.error, res.evaluations};
}

double j_dec(double decoherence_time) {
    if (!(decoherence_time > 0.0)) {
        throw PreconditionError("decoherence time must be positive");
    }
    return units::planck / (4.0 * decoherence_time);
}

Vec3 MapPlane::point(double u, double v) const {
    Vec3 p;
    p[axis_u] = u;
    p[axis_v] = v;
    p[normal_axis()] = offset;
    return p;
}

InteractionMap interaction_map(const PairConfiguration& pair, const MapPlane& plane,
                               double spacing, double half_extent,
                               const IntegratorSettings& settings, int threads) {
    require(spacing > 0.0, "map spacing must be positive");
    require(half_extent >= spacing, "map extent must cover at least one node");
    require(plane.axis_u != plane.axis_v && plane.axis_u >= 0 && plane.axis_u < 3 &&
                plane.axis_v >= 0 && plane.axis_v < 3,
            "map plane needs two distinct crystal axes");

    InteractionMap map;
    map.pair = pair;
    map.plane = plane;
    map.spacing = spacing;
    map.half_nodes = static_cast<int>(std::floor(half_extent / spacing + 1e-9));
    map.origin_excluded = plane.offset == 0.0;
    const char* names[] = {"[100]", "[010]", "[001]"};
    map.orientation = std::string("u=") + names[plane.axis_u] + ", v=" + names[plane.axis_v];

    const int n = map.half_nodes;
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            if (map.origin_excluded && i == 0 && j == 0) continue;
            map.nodes.push_back({i * spacing, j * spacing, 0.0, 0.0});
        }
    }
    parallel_for(map.nodes.size(), threads, [&](std::size_t k) {
        auto& node = map.nodes[k];
        IntegratorSettings s = settings;
        s.seed = derive_seed(settings.seed, k);
        const auto r = exchange_total(pair.first, pair.second, plane.point(node.u, node.v),
                                      pair.polarization, s);
        node.value = r.value;
        node.error = r.statistical_error;
    });
    return map;
}

double zone_area(const InteractionMap& map, double threshold) {
    std::size_t count = 0;
    for (const auto& node : map.nodes) {
        if (node.value > threshold) ++count;
    }
    if (map.origin_excluded && count > 0) ++count;
    return static_cast<double>(count) * map.spacing * map.spacing;
}

double equivalent_radius(const InteractionMap& map, double threshold) {
    require(!map.nodes.empty(), "interaction map is empty");
    require(threshold > 0.0, "threshold must be positive");
    const double area = zone_area(map, threshold);
    if (area <= 0.0) throw EmptyZoneError("no map node exceeds the threshold");
    return std::sqrt(area / pi);
}

}  // namespace sigate::exchange
