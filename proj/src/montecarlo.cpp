#include "sigate/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sigate/parallel.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"

namespace sigate::montecarlo {

namespace {

// Shrinks inscribed squares so that rounding can never admit a corner
// point that the exact distance test would reject.
constexpr double inner_safety = 1.0 - 1e-12;

double inscribed_half_side(int dim, double r) {
    return r / std::sqrt(static_cast<double>(dim)) * inner_safety;
}

bool inside_box(const Vec3& d, double half, int dim) {
    for (int a = 0; a < dim; ++a)
        if (std::abs(d[a]) > half) return false;
    return true;
}

bool inside_box_strict(const Vec3& d, double half, int dim) {
    for (int a = 0; a < dim; ++a)
        if (!(std::abs(d[a]) < half)) return false;
    return true;
}

double dist2(const Vec3& d, int dim) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += d[a] * d[a];
    return s;
}

struct Neighbour {
    std::size_t index;
    Vec3 d;
};

}  // namespace

Boundary parse_boundary(std::string_view name) {
    if (name == "periodic") return Boundary::Periodic;
    if (name == "open" || name == "open-with-margin") return Boundary::OpenWithMargin;
    throw PreconditionError("unknown boundary policy '" + std::string(name) + "'");
}

std::string_view boundary_name(Boundary b) {
    return b == Boundary::Periodic ? "periodic" : "open-with-margin";
}

double SimRegion::measure() const {
    double m = 1.0;
    for (int a = 0; a < dimension; ++a) m *= sides[a];
    return m;
}

double SimRegion::counted_measure() const {
    if (boundary == Boundary::Periodic) return measure();
    double m = 1.0;
    for (int a = 0; a < dimension; ++a) m *= std::max(0.0, sides[a] - 2.0 * margin);
    return m;
}

bool SimRegion::counted(const Vec3& p) const {
    if (boundary == Boundary::Periodic) return true;
    for (int a = 0; a < dimension; ++a)
        if (p[a] < margin || p[a] >= sides[a] - margin) return false;
    return true;
}

void SimRegion::validate(double largest_radius) const {
    if (dimension != 2 && dimension != 3) throw UnsupportedDimensionError(dimension);
    for (int a = 0; a < dimension; ++a) {
        require(sides[a] > 0.0, "region: sides must be positive");
        if (boundary == Boundary::Periodic) {
            require(sides[a] > 2.0 * largest_radius,
                    "region: periodic box must exceed twice the largest radius");
        } else {
            require(sides[a] > 2.0 * margin, "region: margin leaves no counted interior");
        }
    }
    if (boundary == Boundary::OpenWithMargin)
        require(margin >= largest_radius, "region: margin must cover the largest radius");
}

SimRegion make_region(int dimension, double side, Boundary boundary) {
    SimRegion r;
    r.dimension = dimension;
    r.sides = {side, side, dimension == 3 ? side : 0.0};
    r.boundary = boundary;
    return r;
}

std::vector<Vec3> sample_points(const SimRegion& region, double density, std::uint64_t seed) {
    require(density >= 0.0, "sample_points: density must be non-negative");
    std::vector<Vec3> pts;
    if (density == 0.0) return pts;
    Rng rng(seed);
    const int dim = region.dimension;
    const double mean = units::per_cm_to_per_nm(density, dim) * region.measure();
    // Independent Poisson counts on row-major tiles of ~32 expected points;
    // neighbours then sit close in memory, which keeps grid scans linear.
    const int per_axis = std::max(1, static_cast<int>(std::floor(std::pow(mean / 32.0, 1.0 / dim))));
    const int tiles_z = dim == 3 ? per_axis : 1;
    std::poisson_distribution<long long> count(mean / std::pow(per_axis, dim));
    pts.reserve(static_cast<std::size_t>(mean + 6.0 * std::sqrt(mean) + 16.0));
    std::array<double, 3> edge{};
    for (int a = 0; a < dim; ++a) edge[a] = region.sides[a] / per_axis;
    for (int k = 0; k < tiles_z; ++k) {
        for (int j = 0; j < per_axis; ++j) {
            for (int i = 0; i < per_axis; ++i) {
                const std::array<int, 3> tile{i, j, k};
                for (long long n = count(rng); n > 0; --n) {
                    Vec3 p{};
                    for (int a = 0; a < dim; ++a) p[a] = (tile[a] + uniform01(rng)) * edge[a];
                    pts.push_back(p);
                }
            }
        }
    }
    return pts;
}

SpatialGrid::SpatialGrid(const SimRegion& region, std::span<const Vec3> points, double cell_size)
    : region_(region), points_(points) {
    require(cell_size > 0.0, "grid: cell size must be positive");
    const int dim = region.dimension;
    // keep the table linear in the point count
    const double cap = 4.0 * static_cast<double>(points.size()) + 64.0;
    double cell = cell_size;
    for (;;) {
        double cells = 1.0;
        for (int a = 0; a < dim; ++a) cells *= std::max(1.0, std::floor(region.sides[a] / cell));
        if (cells <= cap) break;
        cell *= 1.25;
    }
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) {
        counts_[a] = std::max(1, static_cast<int>(std::floor(region.sides[a] / cell)));
        total *= static_cast<std::size_t>(counts_[a]);
    }
    // cells tile the box exactly so that periodic wrapping stays aligned
    for (int a = 0; a < dim; ++a) cell_[a] = region.sides[a] / counts_[a];

    std::vector<std::uint32_t> cell_of(points.size());
    start_.assign(total + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::size_t c = 0;
        for (int a = dim - 1; a >= 0; --a) c = c * counts_[a] + cell_coord(points[i][a], a);
        cell_of[i] = static_cast<std::uint32_t>(c);
        ++start_[c + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    items_.resize(points.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
}

double SpatialGrid::cell_size() const {
    double c = cell_[0];
    for (int a = 1; a < region_.dimension; ++a) c = std::max(c, cell_[a]);
    return c;
}

int SpatialGrid::cell_coord(double x, int axis) const {
    const int c = static_cast<int>(std::floor(x / cell_[axis]));
    return std::clamp(c, 0, counts_[axis] - 1);
}

Vec3 SpatialGrid::displacement(const Vec3& p, const Vec3& q) const {
    Vec3 d = q - p;
    if (region_.boundary == Boundary::Periodic) {
        for (int a = 0; a < region_.dimension; ++a) {
            const double L = region_.sides[a];
            d[a] -= L * std::round(d[a] / L);
        }
    }
    return d;
}

double SpatialGrid::suggested_cell(const SimRegion& region, std::size_t n_points, double radius) {
    const double lambda = static_cast<double>(std::max<std::size_t>(n_points, 1)) / region.measure();
    const double nn = region.dimension == 2 ? 0.5 / std::sqrt(lambda)
                                            : 0.5539602 * std::cbrt(1.0 / lambda);
    return std::clamp(nn, radius / 4.0, radius);
}

std::vector<char> mark_isolated(std::span<const Vec3> points, double radius,
                                const SpatialGrid& grid) {
    require(radius > 0.0, "mark_isolated: radius must be positive");
    require(grid.size() == points.size(), "mark_isolated: grid built over a different point set");
    const int d = grid.dimension();
    std::vector<char> viable(points.size(), 1);
    const double inner = inscribed_half_side(d, radius);
    const double r2 = radius * radius;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!viable[i]) continue;
        grid.for_each_near(points[i], radius, [&](std::size_t j, const Vec3& delta) {
            if (j == i) return true;
            bool close = inside_box_strict(delta, inner, d);
            if (!close && inside_box(delta, radius, d)) close = dist2(delta, d) < r2;
            if (!close) return true;
            viable[i] = 0;
            viable[j] = 0;
            return false;
        });
    }
    return viable;
}

std::vector<ControlRecord> haystack_classify(std::span<const Vec3> controls,
                                             std::span<const char> viable,
                                             std::span<const Vec3> readouts,
                                             const geometry::GateGeometry& geom,
                                             const SpatialGrid& readout_grid) {
    geom.validate();
    require(viable.size() == controls.size(), "haystack_classify: flag count mismatch");
    require(readout_grid.size() == readouts.size(), "haystack_classify: grid/readout mismatch");
    const int dim = geom.dimension;
    const double square1 = geom.r_max + geom.r_rr;
    const double square2 = inscribed_half_side(dim, geom.r_min);
    const double square3 = geom.r_max;
    const double square4 = geom.r_min;
    const double square5 = inscribed_half_side(dim, geom.r_max);
    const double iso_inner = inscribed_half_side(dim, geom.r_rr);
    const double rmin2 = geom.r_min * geom.r_min;
    const double rmax2 = geom.r_max * geom.r_max;
    const double rrr2 = geom.r_rr * geom.r_rr;

    std::vector<ControlRecord> records(controls.size());
    std::vector<Neighbour> hay;
    std::vector<std::size_t> shell;
    for (std::size_t c = 0; c < controls.size(); ++c) {
        ControlRecord& rec = records[c];
        rec.viable = viable[c] != 0;
        if (!rec.viable) continue;

        hay.clear();
        readout_grid.for_each_near(controls[c], square1, [&](std::size_t j, const Vec3& d) {
            if (inside_box(d, square1, dim)) hay.push_back({j, d});
            return true;
        });

        for (const auto& h : hay) {
            if (inside_box_strict(h.d, square2, dim) ||
                (inside_box(h.d, square4, dim) && dist2(h.d, dim) < rmin2)) {
                rec.killed = true;
                break;
            }
        }
        if (rec.killed) continue;

        shell.clear();
        for (std::size_t k = 0; k < hay.size(); ++k) {
            const Vec3& d = hay[k].d;
            if (!inside_box(d, square3, dim)) continue;
            const bool certain = inside_box_strict(d, square5, dim) && !inside_box(d, square4, dim);
            if (certain) {
                shell.push_back(k);
                continue;
            }
            const double s = dist2(d, dim);
            if (s >= rmin2 && s <= rmax2) shell.push_back(k);
        }
        rec.shell_readouts = static_cast<int>(shell.size());

        for (std::size_t k : shell) {
            const Vec3& p = hay[k].d;
            bool isolated = true;
            for (std::size_t m = 0; m < hay.size() && isolated; ++m) {
                if (m == k) continue;
                const Vec3 d = hay[m].d - p;
                if (inside_box_strict(d, iso_inner, dim) ||
                    (inside_box(d, geom.r_rr, dim) && dist2(d, dim) < rrr2)) {
                    isolated = false;
                }
            }
            if (isolated) ++rec.active_readouts;
        }
    }
    return records;
}

GateTally tally_controls(const SimRegion& region, std::span<const Vec3> controls,
                         std::span<const ControlRecord> records) {
    require(records.size() == controls.size(), "tally_controls: record count mismatch");
    GateTally t;
    t.measure = region.counted_measure();
    for (std::size_t c = 0; c < controls.size(); ++c) {
        if (!region.counted(controls[c])) continue;
        ++t.controls;
        const auto& r = records[c];
        if (!r.viable) continue;
        ++t.viable_controls;
        if (r.killed) {
            ++t.killed_controls;
            continue;
        }
        const int k = r.active_readouts;
        if (k > 0) {
            ++t.active[std::min(k, 4) - 1];
            t.active_readouts += static_cast<std::size_t>(k);
        }
        if (k > 0 && r.shell_readouts == k) ++t.clean[std::min(k, 4) - 1];
    }
    return t;
}

std::vector<long> pair_gates(std::span<const Vec3> points, const geometry::GateGeometry& geom,
                             const SpatialGrid& grid) {
    geom.validate();
    require(grid.size() == points.size(), "pair_gates: grid built over a different point set");
    const int dim = geom.dimension;
    const double rcc = geom.r_cc;
    const double rcc2 = rcc * rcc;
    const double inner = inscribed_half_side(dim, rcc);
    // -1: no neighbour within R_cc, -2: two or more, otherwise the neighbour
    std::vector<long> only(points.size(), -1);
    std::vector<double> gap2(points.size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        grid.for_each_near(points[i], rcc, [&](std::size_t j, const Vec3& d) {
            if (j == i) return true;
            const bool close = inside_box_strict(d, inner, dim) ||
                               (inside_box(d, rcc, dim) && dist2(d, dim) < rcc2);
            if (!close) return true;
            if (only[i] != -1) {
                only[i] = -2;
                return false;
            }
            only[i] = static_cast<long>(j);
            gap2[i] = dist2(d, dim);
            return true;
        });
    }
    std::vector<long> partner(points.size(), -1);
    const double rmin2 = geom.r_min_prime * geom.r_min_prime;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const long j = only[i];
        if (j < 0 || only[static_cast<std::size_t>(j)] != static_cast<long>(i)) continue;
        if (gap2[i] > rmin2) partner[i] = j;
    }
    return partner;
}

void TrialConfig::validate() const {
    geometry.validate();
    require(region.dimension == geometry.dimension, "trials: region and geometry dimensions differ");
    require(trials >= 1, "trials: need at least one trial");
    require(control_density >= 0.0 && readout_density >= 0.0, "trials: densities must be non-negative");
    const double largest = mode == TrialMode::ExcitedPairs
                               ? 2.0 * geometry.r_cc
                               : std::max(geometry.r_cc, geometry.r_max + geometry.r_rr);
    region.validate(largest);
}

GateTally run_trial(const TrialConfig& config, std::uint64_t seed) {
    const SimRegion& region = config.region;
    const auto& geom = config.geometry;
    if (config.mode == TrialMode::ExcitedPairs) {
        const auto pts = sample_points(region, config.readout_density, derive_seed(seed, 1));
        const SpatialGrid grid(region, pts, SpatialGrid::suggested_cell(region, pts.size(), geom.r_cc));
        const auto partner = pair_gates(pts, geom, grid);
        GateTally t;
        t.measure = region.counted_measure();
        std::size_t active = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!region.counted(pts[i])) continue;
            ++t.readouts;
            if (partner[i] >= 0) ++active;
        }
        t.active_readouts = active;
        // pairs counted through their members, so a pair straddling the
        // counted border contributes one half
        t.excited_pairs = active / 2;
        return t;
    }
    const auto controls = sample_points(region, config.control_density, derive_seed(seed, 1));
    const auto readouts = sample_points(region, config.readout_density, derive_seed(seed, 2));
    const SpatialGrid cgrid(region, controls,
                            SpatialGrid::suggested_cell(region, controls.size(), geom.r_cc));
    const auto viable = mark_isolated(controls, geom.r_cc, cgrid);
    const SpatialGrid rgrid(region, readouts,
                            SpatialGrid::suggested_cell(region, readouts.size(), geom.r_rr));
    const auto records = haystack_classify(controls, viable, readouts, geom, rgrid);
    GateTally t = tally_controls(region, controls, records);
    for (const auto& p : readouts)
        if (region.counted(p)) ++t.readouts;
    return t;
}

const Statistic& TrialStats::get(std::string_view name) const {
    for (const auto& s : stats)
        if (s.name == name) return s;
    throw PreconditionError("no statistic named '" + std::string(name) + "'");
}

TrialStats run_trials(const TrialConfig& config) {
    config.validate();
    TrialStats out;
    out.trials = config.trials;
    out.tallies.resize(static_cast<std::size_t>(config.trials));
    parallel_for(out.tallies.size(), config.threads, [&](std::size_t k) {
        out.tallies[k] = run_trial(config, derive_seed(config.seed, k));
    });

    const int dim = config.region.dimension;
    std::vector<std::pair<std::string, std::vector<double>>> series;
    auto add = [&](std::string name, auto f) {
        std::vector<double> v;
        for (const auto& t : out.tallies) v.push_back(f(t));
        series.emplace_back(std::move(name), std::move(v));
    };
    auto per_cm = [dim](double count, const GateTally& t) {
        return units::per_nm_to_per_cm(count / t.measure, dim);
    };
    auto pct = [](double num, double den) { return den > 0.0 ? 100.0 * num / den : 0.0; };

    if (config.mode == TrialMode::ExcitedPairs) {
        add("total_density", [&](const GateTally& t) { return per_cm(t.readouts, t); });
        add("pair_density", [&](const GateTally& t) { return per_cm(t.active_readouts / 2.0, t); });
        add("heis_ex_ex_active_density", [&](const GateTally& t) { return per_cm(t.active_readouts, t); });
        add("heis_ex_ex_active_percent",
            [&](const GateTally& t) { return pct(t.active_readouts, t.readouts); });
    } else {
        add("control_density", [&](const GateTally& t) { return per_cm(t.controls, t); });
        add("readout_density", [&](const GateTally& t) { return per_cm(t.readouts, t); });
        add("viable_control_density", [&](const GateTally& t) { return per_cm(t.viable_controls, t); });
        add("viable_fraction",
            [&](const GateTally& t) { return t.controls ? double(t.viable_controls) / t.controls : 0.0; });
        for (int k = 0; k < 4; ++k) {
            const std::string label = k < 3 ? std::to_string(k + 1) : "4plus";
            add("controls_active_" + label,
                [&, k](const GateTally& t) { return per_cm(t.active[k], t); });
            add("controls_clean_" + label,
                [&, k](const GateTally& t) { return per_cm(t.clean[k], t); });
        }
        add("active_readout_density", [&](const GateTally& t) { return per_cm(t.active_readouts, t); });
        add("active_percent", [&](const GateTally& t) { return pct(t.active_readouts, t.readouts); });
        add("sfg_active_density", [&](const GateTally& t) { return per_cm(2.0 * t.clean[1], t); });
        add("heis_ex_gd_active_density", [&](const GateTally& t) { return per_cm(t.clean[0], t); });
        add("three_readout_active_density",
            [&](const GateTally& t) { return per_cm(3.0 * t.active[2], t); });
    }
    for (auto& [name, v] : series) {
        Statistic s;
        s.name = name;
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / v.size();
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - s.mean) * (x - s.mean);
            s.std = std::sqrt(ss / (v.size() - 1));
            s.has_std = true;
        }
        out.stats.push_back(std::move(s));
    }
    return out;
}

}  // namespace sigate::montecarlo
