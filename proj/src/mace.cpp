#include "sigate/mace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "sigate/errors.hpp"
#include "sigate/parallel.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"

namespace sigate::mace {

using exchange::Donor;
using exchange::OrbitalKind;
using exchange::Species;
using units::pi;

Donor SpinSystem::donor(std::size_t i) const {
    return exchange::make_donor(species[i], is_readout(i) ? OrbitalKind::Ground1sA1 : control_state);
}

Vec3 SpinSystem::separation(std::size_t i, std::size_t j) const {
    Vec3 d = positions[j] - positions[i];
    if (region.boundary == montecarlo::Boundary::Periodic) {
        for (int a = 0; a < region.dimension; ++a) {
            const double L = region.sides[a];
            d[a] -= L * std::round(d[a] / L);
        }
    }
    return d;
}

void SpinSystem::validate() const {
    require(species.size() == positions.size() && spin_up.size() == positions.size(),
            "spin system: positions, species and spins differ in length");
    require(control_state != OrbitalKind::Excited2p0, "spin system: controls are 1s or 2p+-");
    for (std::size_t i = 0; i < size(); ++i) {
        require(static_cast<bool>(spin_up[i]) == is_readout(i),
                "spin system: readouts start up and controls down");
    }
}

SpinSystem make_spin_system(const SystemConfig& config, OrbitalKind control_state) {
    require(config.side > 0.0, "spin system: side must be positive");
    require(config.control_density >= 0.0 && config.readout_density >= 0.0,
            "spin system: densities must be non-negative");
    SpinSystem s;
    s.region = montecarlo::make_region(2, config.side, montecarlo::Boundary::Periodic);
    s.control_state = control_state;
    const auto controls = montecarlo::sample_points(s.region, config.control_density, derive_seed(config.seed, 0));
    const auto readouts = montecarlo::sample_points(s.region, config.readout_density, derive_seed(config.seed, 1));
    for (const auto& p : controls) {
        s.positions.push_back(p);
        s.species.push_back(Species::P);
        s.spin_up.push_back(0);
    }
    for (const auto& p : readouts) {
        s.positions.push_back(p);
        s.species.push_back(Species::As);
        s.spin_up.push_back(1);
    }
    return s;
}

SpinSystem with_control_state(SpinSystem system, OrbitalKind state) {
    system.control_state = state;
    return system;
}

CouplingTable::CouplingTable(const Donor& first, const Donor& second,
                             const exchange::Polarization& polarization,
                             const TableSettings& settings)
    : settings_(settings) {
    require(settings.r_start > 0.0 && settings.r_step > 0.0, "coupling table: radial grid must be positive");
    require(settings.phi_intervals >= 1, "coupling table: need at least one angular interval");
    require(settings.negligible > 0.0, "coupling table: negligible level must be positive");
    require(settings.r_limit >= settings.r_start, "coupling table: limit below first row");

    const std::size_t nphi = settings.phi_intervals + 1;
    const double dphi = pi / settings.phi_intervals;
    auto node_seed = [&](std::size_t row, std::size_t k) {
        return derive_seed(settings.integrator.seed, row * nphi + k);
    };
    auto evaluate = [&](std::size_t row, std::size_t k) {
        const double r = settings.r_start + row * settings.r_step;
        const double phi = k * dphi;
        auto s = settings.integrator;
        s.seed = node_seed(row, k);
        return exchange::valley_integrals(first, second, {r * std::cos(phi), r * std::sin(phi), 0.0},
                                          polarization, s);
    };

    const auto probe = evaluate(0, 0);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (probe.present[a][b]) pairs_.emplace_back(a, b);
    const std::size_t slots = pairs_.size();
    if (slots == 0) return;

    const auto max_rows = static_cast<std::size_t>(
        std::floor((settings.r_limit - settings.r_start) / settings.r_step + 1e-9)) + 1;
    const std::size_t batch = 8;
    bool done = false;
    while (!done && rows_ < max_rows) {
        const std::size_t count = std::min(batch, max_rows - rows_);
        std::vector<double> block(count * nphi * slots);
        parallel_for(count * nphi, settings.threads, [&](std::size_t n) {
            const std::size_t row = rows_ + n / nphi, k = n % nphi;
            const auto v = evaluate(row, k);
            for (std::size_t s = 0; s < slots; ++s)
                block[n * slots + s] = v.value[pairs_[s].first][pairs_[s].second];
        });
        for (std::size_t r = 0; r < count && !done; ++r) {
            const auto first_it = block.begin() + r * nphi * slots;
            data_.insert(data_.end(), first_it, first_it + nphi * slots);
            ++rows_;
            // |valley weight| <= 8
            done = std::all_of(first_it, first_it + nphi * slots,
                               [&](double v) { return 8.0 * std::abs(v) < settings.negligible; });
        }
    }
}

double CouplingTable::extent() const {
    return rows_ == 0 ? 0.0 : settings_.r_start + (rows_ - 1) * settings_.r_step;
}

double CouplingTable::component(std::size_t slot, double r, double phi) const {
    const std::size_t nphi = settings_.phi_intervals + 1;
    const std::size_t slots = pairs_.size();
    double x = (std::max(r, settings_.r_start) - settings_.r_start) / settings_.r_step;
    auto i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 >= rows_) i = rows_ >= 2 ? rows_ - 2 : 0;
    const double tr = rows_ >= 2 ? std::clamp(x - i, 0.0, 1.0) : 0.0;
    const double y = phi / (pi / settings_.phi_intervals);
    auto k = std::min(static_cast<std::size_t>(std::floor(y)), nphi - 2);
    const double tp = std::clamp(y - k, 0.0, 1.0);
    const std::size_t i1 = std::min(i + 1, rows_ - 1);
    auto at = [&](std::size_t row, std::size_t col) { return data_[(row * nphi + col) * slots + slot]; };
    const double v[4] = {at(i, k), at(i1, k), at(i, k + 1), at(i1, k + 1)};
    const double w[4] = {(1 - tr) * (1 - tp), tr * (1 - tp), (1 - tr) * tp, tr * tp};
    // log-linear in r follows the exponential decay; fall back when a node is not positive
    if (std::all_of(v, v + 4, [](double q) { return q > 0.0; })) {
        double l = 0.0;
        for (int q = 0; q < 4; ++q) l += w[q] * std::log(v[q]);
        return std::exp(l);
    }
    double s = 0.0;
    for (int q = 0; q < 4; ++q) s += w[q] * v[q];
    return s;
}

double CouplingTable::value(const Vec3& separation) const {
    require(std::abs(separation.z) <= 1e-9, "coupling table: separation must lie in the z = 0 plane");
    const double r = std::hypot(separation.x, separation.y);
    if (rows_ == 0 || pairs_.empty() || r > extent()) return 0.0;
    double phi = std::atan2(separation.y, separation.x);
    if (phi < 0.0) phi += pi;
    double j = 0.0;
    for (std::size_t s = 0; s < pairs_.size(); ++s)
        j += exchange::valley_weight(pairs_[s].first, pairs_[s].second, separation) * component(s, r, phi);
    return j;
}

const CouplingTable& TableCache::get(const Donor& first, const Donor& second,
                                     const exchange::Polarization& polarization) {
    const Vec3& e = polarization.vector();
    const Key key{static_cast<int>(first.species.kind), static_cast<int>(first.state.kind),
                  static_cast<int>(second.species.kind), static_cast<int>(second.state.kind),
                  e.x, e.y, e.z};
    auto& slot = tables_[key];
    if (!slot) slot = std::make_unique<CouplingTable>(first, second, polarization, settings_);
    return *slot;
}

CouplingSource parse_coupling_source(std::string_view name) {
    if (name == "direct") return CouplingSource::Direct;
    if (name == "tabulated") return CouplingSource::Tabulated;
    throw PreconditionError("unknown coupling source: " + std::string(name));
}

std::string_view coupling_source_name(CouplingSource source) {
    return source == CouplingSource::Direct ? "direct" : "tabulated";
}

double CouplingMatrix::operator()(std::size_t i, std::size_t j) const {
    const auto& list = neighbours_.at(i);
    auto it = std::lower_bound(list.begin(), list.end(), j,
                               [](const Coupling& c, std::size_t s) { return c.site < s; });
    return it != list.end() && it->site == j ? it->value : 0.0;
}

std::size_t CouplingMatrix::pair_count() const {
    std::size_t n = 0;
    for (const auto& l : neighbours_) n += l.size();
    return n / 2;
}

void CouplingMatrix::add(std::size_t i, std::size_t j, double value) {
    require(i != j, "couplings: no self coupling");
    neighbours_.at(i).push_back({j, value});
    neighbours_.at(j).push_back({i, value});
}

void CouplingMatrix::finalize() {
    for (auto& l : neighbours_)
        std::sort(l.begin(), l.end(), [](const Coupling& a, const Coupling& b) { return a.site < b.site; });
}

namespace {

// Controls go first so that one table serves both orders.
std::pair<std::size_t, std::size_t> oriented(const SpinSystem& s, std::size_t i, std::size_t j) {
    if (s.is_readout(i) && !s.is_readout(j)) return {j, i};
    return {i, j};
}

}  // namespace

double pair_coupling(const SpinSystem& system, std::size_t i, std::size_t j,
                     const CouplingOptions& options, TableCache* cache) {
    const auto [a, b] = oriented(system, i, j);
    const Vec3 R = system.separation(a, b);
    if (norm(R) > options.cutoff) return 0.0;
    const Donor first = system.donor(a), second = system.donor(b);
    if (options.source == CouplingSource::Direct) {
        auto s = options.direct;
        s.seed = derive_seed(options.direct.seed, std::min(i, j) * system.size() + std::max(i, j));
        return exchange::exchange_total(first, second, R, system.polarization, s).value;
    }
    require(cache != nullptr, "couplings: tabulated source needs a table cache");
    return cache->get(first, second, system.polarization).value(R);
}

CouplingMatrix build_couplings(const SpinSystem& system, const CouplingOptions& options,
                               TableCache* cache) {
    require(options.cutoff > 0.0, "couplings: cutoff must be positive");
    system.validate();
    const std::size_t n = system.size();
    CouplingMatrix m(n);
    if (n < 2) return m;

    TableCache local;
    if (options.source == CouplingSource::Tabulated) {
        if (cache == nullptr) cache = &local;
        // build every table up front; lookups below are read-only
        bool has[2] = {false, false};
        for (std::size_t i = 0; i < n; ++i) has[system.is_readout(i)] = true;
        const Donor c = exchange::make_donor(Species::P, system.control_state);
        const Donor r = exchange::make_donor(Species::As, OrbitalKind::Ground1sA1);
        if (has[0]) cache->get(c, c, system.polarization);
        if (has[1]) cache->get(r, r, system.polarization);
        if (has[0] && has[1]) cache->get(c, r, system.polarization);
    }

    const double cell = montecarlo::SpatialGrid::suggested_cell(system.region, n, options.cutoff);
    const montecarlo::SpatialGrid grid(system.region, system.positions, cell);
    std::vector<std::vector<Coupling>> found(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
        std::vector<std::size_t> near;
        grid.for_each_near(system.positions[i], options.cutoff, [&](std::size_t j, const Vec3& d) {
            if (j > i && norm(d) <= options.cutoff) near.push_back(j);
            return true;
        });
        std::sort(near.begin(), near.end());
        near.erase(std::unique(near.begin(), near.end()), near.end());
        for (std::size_t j : near) {
            const double v = pair_coupling(system, i, j, options, cache);
            if (v != 0.0) found[i].push_back({j, v});
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& c : found[i]) m.add(i, c.site, c.value);
    m.finalize();
    return m;
}

ClusterCriterion parse_cluster_criterion(std::string_view name) {
    if (name == "largest-coupling" || name == "largest") return ClusterCriterion::LargestCoupling;
    if (name == "nearest") return ClusterCriterion::Nearest;
    throw PreconditionError("unknown cluster criterion: " + std::string(name));
}

std::string_view cluster_criterion_name(ClusterCriterion c) {
    return c == ClusterCriterion::LargestCoupling ? "largest-coupling" : "nearest";
}

Cluster select_cluster(const SpinSystem& system, const CouplingMatrix& couplings, std::size_t focal,
                       int g, ClusterCriterion criterion) {
    require(g >= 1, "cluster: size must be at least 1");
    require(static_cast<std::size_t>(g) <= system.size(), "cluster: size exceeds the system");
    require(focal < system.size(), "cluster: focal site out of range");
    require(couplings.size() == system.size(), "cluster: couplings do not match the system");

    struct Candidate {
        double strength;
        double distance;
        std::size_t site;
    };
    std::vector<Candidate> cand;
    cand.reserve(system.size() - 1);
    for (std::size_t j = 0; j < system.size(); ++j) {
        if (j == focal) continue;
        cand.push_back({0.0, norm(system.separation(focal, j)), j});
    }
    if (criterion == ClusterCriterion::LargestCoupling) {
        for (const auto& c : couplings.neighbours(focal)) {
            const std::size_t pos = c.site < focal ? c.site : c.site - 1;
            cand[pos].strength = std::abs(c.value);
        }
    }
    const auto k = static_cast<std::ptrdiff_t>(g - 1);
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [](const Candidate& a, const Candidate& b) {
        if (a.strength != b.strength) return a.strength > b.strength;
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.site < b.site;
    });
    Cluster cl{focal, {focal}, criterion};
    for (std::ptrdiff_t q = 0; q < k; ++q) cl.members.push_back(cand[q].site);
    return cl;
}

SpinEvolution evolve_spins(const Eigen::MatrixXd& couplings, const std::vector<char>& spin_up,
                           std::span<const double> t_grid, Propagation propagation, bool diagnostics) {
    const auto g = static_cast<int>(couplings.rows());
    if (g > max_cluster_size) {
        throw ClusterTooLargeError("cluster of " + std::to_string(g) + " spins exceeds the limit of " +
                                   std::to_string(max_cluster_size));
    }
    require(g >= 1 && couplings.cols() == g, "evolve: coupling matrix must be square and non-empty");
    require(static_cast<int>(spin_up.size()) == g, "evolve: one initial spin per site");
    require((couplings - couplings.transpose()).cwiseAbs().maxCoeff() <= 0.0,
            "evolve: couplings must be symmetric");
    require(std::is_sorted(t_grid.begin(), t_grid.end()), "evolve: time grid must be ascending");

    unsigned initial = 0;
    for (int i = 0; i < g; ++i)
        if (spin_up[i]) initial |= 1u << i;

    std::vector<unsigned> basis;
    for (unsigned s = 0; s < (1u << g); ++s) {
        if (propagation == Propagation::Full || std::popcount(s) == std::popcount(initial)) basis.push_back(s);
    }
    const auto dim = static_cast<Eigen::Index>(basis.size());
    std::vector<int> index(1u << g, -1);
    for (Eigen::Index n = 0; n < dim; ++n) index[basis[n]] = static_cast<int>(n);

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index n = 0; n < dim; ++n) {
        const unsigned s = basis[n];
        for (int i = 0; i < g; ++i) {
            for (int j = i + 1; j < g; ++j) {
                const double J = couplings(i, j);
                if (J == 0.0) continue;
                const bool same = ((s >> i) & 1u) == ((s >> j) & 1u);
                h(n, n) += same ? 0.25 * J : -0.25 * J;
                if (!same) h(index[s ^ ((1u << i) | (1u << j))], n) += 0.5 * J;
            }
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    const Eigen::VectorXd& energies = eig.eigenvalues();
    const Eigen::MatrixXd& vecs = eig.eigenvectors();
    const Eigen::VectorXd overlap = vecs.row(index[initial]).transpose();

    Eigen::MatrixXd sz(dim, g);
    for (Eigen::Index n = 0; n < dim; ++n)
        for (int i = 0; i < g; ++i) sz(n, i) = ((basis[n] >> i) & 1u) ? 0.5 : -0.5;

    SpinEvolution out;
    out.magnetization.resize(static_cast<Eigen::Index>(t_grid.size()), g);
    Eigen::VectorXcd amp(dim);
    for (std::size_t t = 0; t < t_grid.size(); ++t) {
        for (Eigen::Index m = 0; m < dim; ++m)
            amp[m] = overlap[m] * std::polar(1.0, -energies[m] * t_grid[t] / units::hbar);
        const Eigen::VectorXcd psi = vecs.cast<std::complex<double>>() * amp;
        const Eigen::VectorXd prob = psi.cwiseAbs2();
        out.magnetization.row(static_cast<Eigen::Index>(t)) = (sz.transpose() * prob).transpose();
        if (diagnostics) {
            out.norm.push_back(prob.sum());
            out.energy.push_back((psi.adjoint() * (h.cast<std::complex<double>>() * psi))(0).real());
        }
    }
    return out;
}

std::vector<double> evolve_cluster(const Cluster& cluster, const SpinSystem& system,
                                   const CouplingMatrix& couplings, std::span<const double> t_grid,
                                   Propagation propagation) {
    require(!cluster.members.empty() && cluster.members.front() == cluster.focal,
            "evolve: the focal site must lead the cluster");
    const auto g = static_cast<Eigen::Index>(cluster.members.size());
    if (g > max_cluster_size) {
        throw ClusterTooLargeError("cluster of " + std::to_string(g) + " spins exceeds the limit of " +
                                   std::to_string(max_cluster_size));
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(g, g);
    std::vector<char> up(g);
    for (Eigen::Index a = 0; a < g; ++a) {
        up[a] = system.spin_up[cluster.members[a]];
        for (Eigen::Index b = a + 1; b < g; ++b) {
            J(a, b) = J(b, a) = couplings(cluster.members[a], cluster.members[b]);
        }
    }
    const auto ev = evolve_spins(J, up, t_grid, propagation);
    const Eigen::VectorXd focal = ev.magnetization.col(0);
    return {focal.data(), focal.data() + focal.size()};
}

std::vector<double> time_grid(double t0, double t1, int points) {
    require(points >= 1, "time grid: need at least one point");
    require(t1 >= t0, "time grid: end before start");
    std::vector<double> t(points);
    for (int k = 0; k < points; ++k) t[k] = points == 1 ? t0 : t0 + (t1 - t0) * k / (points - 1);
    return t;
}

JackknifeResult jackknife(std::span<const double> samples) {
    const std::size_t n = samples.size();
    require(n >= 2, "jackknife: need at least two samples");
    const double sum = std::accumulate(samples.begin(), samples.end(), 0.0);
    const double mean = sum / n;
    double ss = 0.0;
    for (double x : samples) {
        const double loo = (sum - x) / (n - 1);
        ss += (loo - mean) * (loo - mean);
    }
    return {mean, std::sqrt((n - 1.0) / n * ss)};
}

std::vector<std::size_t> sample_focal_sites(const SpinSystem& system, int n_clusters, std::uint64_t seed) {
    std::vector<std::size_t> readouts;
    for (std::size_t i = 0; i < system.size(); ++i)
        if (system.is_readout(i)) readouts.push_back(i);
    require(n_clusters >= 1, "mace: need at least one cluster");
    require(static_cast<std::size_t>(n_clusters) <= readouts.size(),
            "mace: more clusters than readout sites");
    Rng rng(seed);
    // partial Fisher-Yates with the portable uniform01
    for (std::size_t k = 0; k < static_cast<std::size_t>(n_clusters); ++k) {
        const auto pick = k + static_cast<std::size_t>(uniform01(rng) * (readouts.size() - k));
        std::swap(readouts[k], readouts[pick]);
    }
    readouts.resize(n_clusters);
    std::sort(readouts.begin(), readouts.end());
    return readouts;
}

Trajectory mace_average(const SpinSystem& system, const CouplingMatrix& couplings,
                        const MaceSettings& settings) {
    system.validate();
    require(!settings.t_grid.empty(), "mace: empty time grid");
    require(settings.g >= 1, "mace: cluster size must be at least 1");
    if (settings.g > max_cluster_size) {
        throw ClusterTooLargeError("cluster of " + std::to_string(settings.g) +
                                   " spins exceeds the limit of " + std::to_string(max_cluster_size));
    }
    Trajectory tr;
    tr.t = settings.t_grid;
    tr.g = settings.g;
    tr.n_clusters = settings.n_clusters;
    tr.seed = settings.seed;
    tr.focal_sites = sample_focal_sites(system, settings.n_clusters, settings.seed);

    const auto nc = static_cast<Eigen::Index>(tr.focal_sites.size());
    const auto nt = static_cast<Eigen::Index>(tr.t.size());
    tr.per_cluster.resize(nc, nt);
    parallel_for(tr.focal_sites.size(), settings.threads, [&](std::size_t c) {
        const auto cl = select_cluster(system, couplings, tr.focal_sites[c], settings.g, settings.criterion);
        const auto sz = evolve_cluster(cl, system, couplings, tr.t, settings.propagation);
        for (Eigen::Index t = 0; t < nt; ++t)
            tr.per_cluster(static_cast<Eigen::Index>(c), t) = std::clamp(0.5 - sz[t], 0.0, 1.0);
    });
    tr.p_sf.resize(nt);
    tr.error.resize(nt);
    for (Eigen::Index t = 0; t < nt; ++t) {
        const Eigen::VectorXd col = tr.per_cluster.col(t);
        if (nc >= 2) {
            const auto jk = jackknife({col.data(), static_cast<std::size_t>(nc)});
            tr.p_sf[t] = jk.mean;
            tr.error[t] = jk.error;
        } else {
            tr.p_sf[t] = col[0];
            tr.error[t] = 0.0;
        }
    }
    return tr;
}

Eigen::Matrix4cd z_rotation(int spin, double theta) {
    require(spin == 1 || spin == 2, "z rotation: spin must be 1 or 2");
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
    for (int b = 0; b < 4; ++b) {
        const int bit = spin == 1 ? (b >> 1) & 1 : b & 1;
        const double m = bit == 0 ? 0.5 : -0.5;
        u(b, b) = std::polar(1.0, -theta * m);
    }
    return u;
}

Eigen::Matrix4cd exchange_pulse(double theta) {
    // S1.S2 is 1/4 on the triplet and -3/4 on the singlet
    Eigen::Vector4cd singlet(0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0);
    const Eigen::Matrix4cd ps = singlet * singlet.adjoint();
    const Eigen::Matrix4cd id = Eigen::Matrix4cd::Identity();
    return std::polar(1.0, -0.25 * theta) * (id - ps) + std::polar(1.0, 0.75 * theta) * ps;
}

PhaseGateReport phase_gate_sequence() {
    PhaseGateReport rep;
    rep.unitary = z_rotation(2, -pi / 2) * z_rotation(1, pi / 2) * exchange_pulse(pi / 2) *
                  z_rotation(1, pi) * exchange_pulse(pi / 2);
    rep.unitarity_error =
        (rep.unitary.adjoint() * rep.unitary - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff();
    Eigen::Matrix4cd cz = Eigen::Matrix4cd::Identity();
    cz(3, 3) = -1.0;
    const std::complex<double> tr = (cz.adjoint() * rep.unitary).trace();
    rep.global_phase = std::abs(tr) > 0.0 ? tr / std::abs(tr) : 1.0;
    rep.distance = (rep.unitary - rep.global_phase * cz).cwiseAbs().maxCoeff();
    return rep;
}

}  // namespace sigate::mace
