#include "cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "config.hpp"
#include "output.hpp"
#include "sigate/density.hpp"
#include "sigate/errors.hpp"
#include "sigate/exchange.hpp"
#include "sigate/geometry.hpp"
#include "sigate/mace.hpp"
#include "sigate/montecarlo.hpp"
#include "sigate/rng.hpp"
#include "sigate/units.hpp"

namespace sigate::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<std::string> preset;
    std::optional<int> threads;
};

struct Context {
    Common flags;
    fs::path out;
    std::ostream& log;
    std::uint64_t seed = 1;
    int threads = 1;
    json artifacts = json::array();

    fs::path artifact(const std::string& name) {
        artifacts.push_back(name);
        log << "wrote " << (out / name).string() << '\n';
        return out / name;
    }
};

void resolve_common(ConfigReader& cfg, Context& ctx) {
    ctx.seed = cfg.get<std::uint64_t>("seed", 1);
    if (ctx.flags.seed) ctx.seed = *ctx.flags.seed;
    cfg.put("seed", ctx.seed);
    ctx.threads = cfg.get<int>("threads", 1);
    if (ctx.flags.threads) ctx.threads = *ctx.flags.threads;
    if (ctx.threads < 1) throw ValidationError("threads must be at least 1");
    cfg.put("threads", ctx.threads);
}

std::string resolve_preset(ConfigReader& cfg, const Context& ctx) {
    std::string preset = cfg.get<std::string>("preset", "monolayer-inplane");
    if (ctx.flags.preset) preset = *ctx.flags.preset;
    cfg.put("preset", preset);
    return preset;
}

json geometry_json(const geometry::GateGeometry& g) {
    json j{{"dimension", g.dimension}, {"r_min", g.r_min},   {"r_max", g.r_max},
           {"r_rr", g.r_rr},           {"r_cc", g.r_cc},     {"r_min_prime", g.r_min_prime}};
    if (g.bilayer_separation) j["bilayer_separation"] = *g.bilayer_separation;
    return j;
}

geometry::GateGeometry resolve_geometry(ConfigReader& cfg, const Context& ctx) {
    const std::string preset = resolve_preset(cfg, ctx);
    auto g = geometry::preset_geometry(preset);
    auto r = cfg.child("radii");
    g.dimension = r.get("dimension", g.dimension);
    g.r_min = r.get("r_min", g.r_min);
    g.r_max = r.get("r_max", g.r_max);
    g.r_rr = r.get("r_rr", g.r_rr);
    g.r_cc = r.get("r_cc", g.r_cc);
    g.r_min_prime = r.get("r_min_prime", g.r_min_prime);
    if (auto d = r.optional<double>("bilayer_separation")) g.bilayer_separation = *d;
    r.finish();
    g.validate();
    cfg.put("radii", geometry_json(g));
    return g;
}

exchange::Donor parse_donor_label(const std::string& label) {
    for (const auto* prefix : {"As", "P"}) {
        const std::string p = prefix;
        if (label.rfind(p, 0) == 0 && label.size() > p.size()) {
            return exchange::make_donor(exchange::parse_species(p), exchange::parse_orbital(label.substr(p.size())));
        }
    }
    throw ValidationError("cannot read donor label '" + label + "' (expected e.g. P2p, As1s)");
}

std::pair<exchange::Donor, exchange::Donor> parse_pair(const std::string& name) {
    const auto bare = name.substr(name.find(':') == std::string::npos ? 0 : name.find(':') + 1);
    const auto dash = bare.find('-');
    if (dash == std::string::npos) throw ValidationError("pair '" + name + "' must look like P2p-As1s");
    return {parse_donor_label(bare.substr(0, dash)), parse_donor_label(bare.substr(dash + 1))};
}

exchange::Polarization read_polarization(ConfigReader& cfg, const std::array<double, 3>& fallback) {
    const auto v = cfg.get<std::array<double, 3>>("polarization", fallback);
    const Vec3 e{v[0], v[1], v[2]};
    if (!(norm(e) > 0.0)) throw ValidationError("polarization must be a non-zero vector");
    const auto pol = exchange::Polarization::normalized(e);
    cfg.put("polarization", std::array<double, 3>{pol.vector().x, pol.vector().y, pol.vector().z});
    return pol;
}

exchange::MapPlane read_plane(ConfigReader& cfg, double default_offset) {
    auto p = cfg.child("plane");
    const auto axes = p.get<std::string>("axes", "xy");
    exchange::MapPlane plane;
    auto axis = [&](char c) {
        if (c < 'x' || c > 'z') throw ValidationError("plane axes must be two of x, y, z");
        return c - 'x';
    };
    if (axes.size() != 2 || axes[0] == axes[1]) throw ValidationError("plane axes must be two of x, y, z");
    plane.axis_u = axis(axes[0]);
    plane.axis_v = axis(axes[1]);
    plane.offset = p.get("offset_nm", default_offset);
    p.finish();
    cfg.put("plane", p.resolved());
    return plane;
}

exchange::IntegratorSettings read_integrator(ConfigReader& cfg, std::size_t evaluations, std::uint64_t seed) {
    exchange::IntegratorSettings s;
    s.evaluations = cfg.get<std::size_t>("evaluations", evaluations);
    s.target_relative_error = cfg.get("target_relative_error", 0.0);
    s.seed = seed;
    if (s.evaluations < 1000) throw ValidationError("evaluations must be at least 1000");
    return s;
}

// Reference radii and map settings per named configuration.
struct PairReference {
    std::string symbol;
    double table_nm;
    std::array<double, 3> polarization;
    double offset;
    double half_extent;
};

const std::map<std::string, PairReference>& pair_references() {
    static const std::map<std::string, PairReference> refs{
        {"As1s-As1s", {"R_rr", 11.0, {1, 0, 0}, 0.0, 20.0}},
        {"P1s-As1s", {"R_min", 11.4, {1, 0, 0}, 0.0, 20.0}},
        {"P2p-As1s", {"R_max", 17.9, {1, 0, 0}, 0.0, 40.0}},
        {"P2p-P2p", {"R_cc", 42.2, {1, 0, 0}, 0.0, 60.0}},
        {"P1s-P1s", {"R_min_prime", 11.8, {1, 0, 0}, 0.0, 20.0}},
        {"bilayer:P2p-As1s", {"R_max_bilayer", 10.2, {0, 0, 1}, 13.2, 30.0}},
        {"bilayer:P2p-P2p", {"R_cc_bilayer", 28.5, {0, 0, 1}, 0.0, 45.0}},
    };
    return refs;
}

json map_summary(const exchange::InteractionMap& map, double threshold) {
    json j{{"orientation", map.orientation},
           {"origin_excluded", map.origin_excluded},
           {"nodes", map.nodes.size()},
           {"threshold_ueV", threshold}};
    double max_err = 0.0;
    bool clipped = false;
    const double edge = map.half_nodes * map.spacing;
    for (const auto& n : map.nodes) {
        max_err = std::max(max_err, n.error);
        const bool on_edge = std::abs(std::abs(n.u) - edge) < 1e-9 || std::abs(std::abs(n.v) - edge) < 1e-9;
        if (on_edge && n.value > threshold) clipped = true;
    }
    j["max_error_ueV"] = max_err;
    j["zone_clipped"] = clipped;
    try {
        j["equivalent_radius_nm"] = exchange::equivalent_radius(map, threshold);
    } catch (const EmptyZoneError&) {
        j["equivalent_radius_nm"] = 0.0;
        j["empty_zone"] = true;
    }
    return j;
}

json cmd_jmap(ConfigReader& cfg, Context& ctx) {
    const auto preset = resolve_preset(cfg, ctx);
    const bool bilayer = preset == "bilayer-outofplane";
    const std::string name = cfg.get<std::string>("pair", bilayer ? "bilayer:P2p-As1s" : "P2p-As1s");
    const auto ref = pair_references().find(name);
    const auto [first, second] = parse_pair(name);
    const auto pol = read_polarization(cfg, ref != pair_references().end() ? ref->second.polarization
                                            : bilayer ? std::array<double, 3>{0, 0, 1}
                                                      : std::array<double, 3>{1, 0, 0});
    const auto plane = read_plane(cfg, ref != pair_references().end() ? ref->second.offset : 0.0);
    const double spacing = cfg.get("spacing_nm", 1.0);
    const double half = cfg.get("half_extent_nm", ref != pair_references().end() ? ref->second.half_extent : 40.0);
    const auto settings = read_integrator(cfg, 20000, ctx.seed);
    const double tdec = cfg.get("decoherence_time_ps", exchange::default_decoherence_time);
    cfg.finish();

    const exchange::PairConfiguration pair{name, first, second, pol};
    const auto map = exchange::interaction_map(pair, plane, spacing, half, settings, ctx.threads);
    std::vector<std::vector<double>> rows;
    rows.reserve(map.nodes.size());
    for (const auto& n : map.nodes) rows.push_back({n.u, n.v, n.value});
    write_csv(ctx.artifact("jmap.csv"), {"x_nm", "y_nm", "J_ueV"}, rows);
    return map_summary(map, exchange::j_dec(tdec));
}

json cmd_radii(ConfigReader& cfg, Context& ctx) {
    const auto preset = resolve_preset(cfg, ctx);
    const std::vector<std::string> fallback =
        preset == "bilayer-outofplane"
            ? std::vector<std::string>{"bilayer:P2p-As1s", "bilayer:P2p-P2p"}
            : std::vector<std::string>{"As1s-As1s", "P1s-As1s", "P2p-As1s", "P2p-P2p", "P1s-P1s"};
    const auto names = cfg.get("pairs", fallback);
    const double spacing = cfg.get("spacing_nm", 1.0);
    const auto settings = read_integrator(cfg, 20000, ctx.seed);
    const double tdec = cfg.get("decoherence_time_ps", exchange::default_decoherence_time);
    const double tolerance = cfg.get("tolerance", 0.15);
    cfg.finish();
    for (const auto& n : names) parse_pair(n);

    const double threshold = exchange::j_dec(tdec);
    json report = json::object();
    for (const auto& name : names) {
        const auto [first, second] = parse_pair(name);
        const auto ref = pair_references().find(name);
        const bool known = ref != pair_references().end();
        const auto e = known ? ref->second.polarization : std::array<double, 3>{1, 0, 0};
        exchange::MapPlane plane;
        plane.offset = known ? ref->second.offset : 0.0;
        const exchange::PairConfiguration pair{name, first, second,
                                               exchange::Polarization::normalized({e[0], e[1], e[2]})};
        const double half = known ? ref->second.half_extent : 40.0;
        ctx.log << "radii: " << name << '\n';
        const auto map = exchange::interaction_map(pair, plane, spacing, half, settings, ctx.threads);
        json entry = map_summary(map, threshold);
        const double r = entry["equivalent_radius_nm"];
        json out{{"radius_nm", r},
                 {"tolerance", tolerance},
                 {"zone_clipped", entry["zone_clipped"]},
                 {"half_extent_nm", half},
                 {"spacing_nm", spacing},
                 {"polarization", e},
                 {"plane_offset_nm", plane.offset}};
        if (known) {
            out["symbol"] = ref->second.symbol;
            out["table_nm"] = ref->second.table_nm;
            out["relative_deviation"] = r / ref->second.table_nm - 1.0;
            out["within_tolerance"] = std::abs(r / ref->second.table_nm - 1.0) <= tolerance;
        }
        report[name] = out;
    }
    write_json(ctx.artifact("radii.json"), report);
    return {{"threshold_ueV", threshold}, {"pairs", names.size()}};
}

std::pair<double, double> default_range(int dim) {
    return dim == 3 ? std::pair{1e15, 1e18} : std::pair{1e9, 1e12};
}

std::vector<std::string> curve_header(int dim) {
    return {dim == 3 ? "D_r_per_cm3" : "D_r_per_cm2", "active_density", "active_percent"};
}

json peak_json(const density::Peak& p) {
    return {{"readout_density", p.readout_density},
            {"active_density", p.active_density},
            {"active_percent", p.active_percent}};
}

double default_control_density(const geometry::GateGeometry& g) {
    return units::per_nm_to_per_cm(1.0 / geometry::ball_volume(g.dimension, g.r_cc), g.dimension);
}

json cmd_density(ConfigReader& cfg, Context& ctx) {
    const auto geom = resolve_geometry(cfg, ctx);
    const auto kind = density::parse_gate_kind(cfg.get<std::string>("gate", "HeisExGd"));
    const auto [lo0, hi0] = default_range(geom.dimension);
    const double lo = cfg.get("lo", lo0);
    const double hi = cfg.get("hi", hi0);
    const int points = cfg.get("points", 60);
    density::QuadratureSettings q;
    q.relative_tolerance = cfg.get("relative_tolerance", q.relative_tolerance);
    q.max_depth = cfg.get("max_depth", q.max_depth);
    const bool peak = cfg.get("peak", true);
    cfg.finish();
    if (!(lo > 0.0 && hi >= lo)) throw ValidationError("density range needs 0 < lo <= hi");
    if (points < 0) throw ValidationError("points must be non-negative");

    std::vector<std::vector<double>> rows;
    if (points > 0) {
        const auto curve = density::density_scan(kind, geom, lo, hi, points, q, ctx.threads);
        for (const auto& p : curve.points) rows.push_back({p.readout_density, p.active.value, p.active_percent});
    }
    write_csv(ctx.artifact("density.csv"), curve_header(geom.dimension), rows);
    json res{{"gate", density::gate_kind_name(kind)}, {"dimension", geom.dimension}};
    if (kind != density::GateKind::HeisExEx) res["control_density"] = default_control_density(geom);
    if (peak) {
        res["peak"] = peak_json(density::find_peak(kind, geom, lo, hi, false, q));
        if (kind == density::GateKind::HeisExEx)
            res["max_percent"] = peak_json(density::find_peak(kind, geom, lo, hi, true, q));
    }
    return res;
}

std::vector<double> log_points(double lo, double hi, int n) {
    std::vector<double> v;
    for (int k = 0; k < n; ++k)
        v.push_back(n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (n - 1)));
    return v;
}

json cmd_mc(ConfigReader& cfg, Context& ctx) {
    const auto geom = resolve_geometry(cfg, ctx);
    const auto kind = density::parse_gate_kind(cfg.get<std::string>("gate", "HeisExGd"));
    auto rc = cfg.child("region");
    const double side = rc.get("side_nm", geom.dimension == 3 ? 2000.0 : 10000.0);
    const auto boundary = montecarlo::parse_boundary(rc.get<std::string>("boundary", "periodic"));
    auto region = montecarlo::make_region(geom.dimension, side, boundary);
    if (boundary == montecarlo::Boundary::OpenWithMargin) {
        const double need = kind == density::GateKind::HeisExEx ? 2.0 * geom.r_cc
                                                                 : std::max(geom.r_cc, geom.r_max + geom.r_rr);
        region.margin = rc.get("margin_nm", need);
    }
    rc.finish();
    cfg.put("region", rc.resolved());

    std::vector<double> densities;
    if (auto list = cfg.optional<std::vector<double>>("densities")) {
        densities = *list;
    } else {
        auto sc = cfg.child("scan");
        const auto [lo0, hi0] = default_range(geom.dimension);
        const double lo = sc.get("lo", lo0), hi = sc.get("hi", hi0);
        const int n = sc.get("points", 6);
        sc.finish();
        cfg.put("scan", sc.resolved());
        if (!(lo > 0.0 && hi >= lo) || n < 0) throw ValidationError("scan needs 0 < lo <= hi and points >= 0");
        densities = log_points(lo, hi, n);
    }
    const double controls = cfg.get("control_density", default_control_density(geom));
    const int trials = cfg.get("trials", 50);
    const bool overlay = cfg.get("overlay", true);
    cfg.finish();
    for (double d : densities)
        if (!(d >= 0.0)) throw ValidationError("densities must be non-negative");

    montecarlo::TrialConfig tc;
    tc.region = region;
    tc.geometry = geom;
    tc.mode = kind == density::GateKind::HeisExEx ? montecarlo::TrialMode::ExcitedPairs
                                                   : montecarlo::TrialMode::ControlReadout;
    tc.control_density = kind == density::GateKind::HeisExEx ? 0.0 : controls;
    tc.trials = trials;
    tc.threads = ctx.threads;
    const std::string stat = kind == density::GateKind::SFG        ? "sfg_active_density"
                             : kind == density::GateKind::HeisExGd ? "heis_ex_gd_active_density"
                                                                    : "heis_ex_ex_active_density";

    std::vector<std::vector<double>> mc_rows, an_rows;
    json points = json::array();
    for (std::size_t k = 0; k < densities.size(); ++k) {
        tc.readout_density = densities[k];
        tc.seed = derive_seed(ctx.seed, k);
        tc.validate();
        const auto st = montecarlo::run_trials(tc);
        const auto& s = st.get(stat);
        const double pct = densities[k] > 0.0 ? 100.0 * s.mean / densities[k] : 0.0;
        mc_rows.push_back({densities[k], s.mean, pct});
        json p{{"density", densities[k]}, {"mean", s.mean}, {"std", s.std}, {"trials", st.trials},
               {"sem", s.has_std ? s.std / std::sqrt(static_cast<double>(st.trials)) : 0.0},
               {"viable_fraction", kind == density::GateKind::HeisExEx ? 0.0 : st.get("viable_fraction").mean}};
        if (overlay && densities[k] > 0.0) {
            const double a = density::active_density(kind, densities[k], geom);
            an_rows.push_back({densities[k], a, 100.0 * a / densities[k]});
            p["analytic"] = a;
            if (s.has_std && s.std > 0.0) p["z_scatter"] = (s.mean - a) / s.std;
        }
        points.push_back(p);
        ctx.log << "mc: density " << format_number(densities[k]) << " done\n";
    }
    write_csv(ctx.artifact("mc.csv"), curve_header(geom.dimension), mc_rows);
    if (overlay) write_csv(ctx.artifact("mc_analytic.csv"), curve_header(geom.dimension), an_rows);
    return {{"gate", density::gate_kind_name(kind)},
            {"statistic", stat},
            {"control_density", tc.control_density},
            {"points", points}};
}

json cmd_mace(ConfigReader& cfg, Context& ctx) {
    using exchange::OrbitalKind;
    auto rc = cfg.child("region");
    mace::SystemConfig sc;
    sc.side = rc.get("side_nm", sc.side);
    rc.finish();
    cfg.put("region", rc.resolved());
    sc.control_density = cfg.get("control_density", sc.control_density);
    sc.readout_density = cfg.get("readout_density", sc.readout_density);
    sc.seed = ctx.seed;

    mace::MaceSettings ms;
    ms.g = cfg.get("g", ms.g);
    ms.n_clusters = cfg.get("n_clusters", ms.n_clusters);
    const double t_max = cfg.get("t_max_ps", 200.0);
    const int t_points = cfg.get("t_points", 201);
    ms.criterion = mace::parse_cluster_criterion(cfg.get<std::string>("criterion", "largest-coupling"));
    ms.seed = ctx.seed;
    ms.threads = ctx.threads;

    mace::CouplingOptions co;
    co.source = mace::parse_coupling_source(cfg.get<std::string>("coupling_source", "tabulated"));
    co.cutoff = cfg.get("cutoff_nm", co.cutoff);
    co.threads = ctx.threads;
    co.direct.evaluations = cfg.get<std::size_t>("direct_evaluations", 200000);
    co.direct.target_relative_error = 0.0;
    co.direct.seed = ctx.seed;
    const auto pol = read_polarization(cfg, {1, 0, 0});

    mace::TableSettings ts;
    auto tc = cfg.child("table");
    ts.r_step = tc.get("r_step_nm", ts.r_step);
    ts.r_start = tc.get("r_start_nm", ts.r_start);
    ts.phi_intervals = tc.get("phi_intervals", ts.phi_intervals);
    ts.negligible = tc.get("negligible_ueV", ts.negligible);
    ts.r_limit = tc.get("r_limit_nm", ts.r_limit);
    ts.integrator.evaluations = tc.get<std::size_t>("evaluations", ts.integrator.evaluations);
    tc.finish();
    cfg.put("table", tc.resolved());
    ts.integrator.seed = ctx.seed;
    ts.threads = ctx.threads;
    cfg.finish();

    if (ms.g < 1 || ms.g > mace::max_cluster_size)
        throw ValidationError("g must lie in [1, " + std::to_string(mace::max_cluster_size) + "]");
    if (t_points < 1 || !(t_max >= 0.0)) throw ValidationError("time grid needs t_points >= 1 and t_max_ps >= 0");
    if (!(co.cutoff > 0.0)) throw ValidationError("cutoff_nm must be positive");
    ms.t_grid = mace::time_grid(0.0, t_max, t_points);

    auto ground = mace::make_spin_system(sc, OrbitalKind::Ground1sA1);
    ground.polarization = pol;
    std::size_t readouts = 0;
    for (std::size_t i = 0; i < ground.size(); ++i) readouts += ground.is_readout(i);
    if (static_cast<std::size_t>(ms.n_clusters) > readouts || ms.n_clusters < 1) {
        throw ValidationError("n_clusters must lie in [1, " + std::to_string(readouts) +
                              "] for this pattern");
    }
    const auto excited = mace::with_control_state(ground, OrbitalKind::Excited2pPM);

    mace::TableCache cache(ts);
    ctx.log << "mace: couplings for 1s controls\n";
    const auto c1 = mace::build_couplings(ground, co, &cache);
    ctx.log << "mace: couplings for 2p controls\n";
    const auto c2 = mace::build_couplings(excited, co, &cache);
    const auto t1 = mace::mace_average(ground, c1, ms);
    const auto t2 = mace::mace_average(excited, c2, ms);

    std::vector<std::vector<double>> rows;
    double peak = 0.0, peak_t = 0.0;
    for (std::size_t k = 0; k < t1.t.size(); ++k) {
        const double d = std::abs(t2.p_sf[k] - t1.p_sf[k]);
        if (d > peak) {
            peak = d;
            peak_t = t1.t[k];
        }
        rows.push_back({t1.t[k], t1.p_sf[k], t1.error[k], t2.p_sf[k], t2.error[k], d});
    }
    write_csv(ctx.artifact("mace.csv"), {"t_ps", "P_sf", "err", "P_sf_excited", "err_excited", "abs_diff"}, rows);
    return {{"sites", ground.size()},
            {"readouts", readouts},
            {"controls", ground.size() - readouts},
            {"coupled_pairs_1s", c1.pair_count()},
            {"coupled_pairs_2p", c2.pair_count()},
            {"g", ms.g},
            {"n_clusters", ms.n_clusters},
            {"peak_abs_diff", peak},
            {"peak_time_ps", peak_t}};
}

json cmd_gatecheck(ConfigReader& cfg, Context& ctx) {
    const double tol = cfg.get("tolerance", 1e-10);
    cfg.finish();
    const auto rep = mace::phase_gate_sequence();
    json m = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int j = 0; j < 4; ++j) row.push_back({rep.unitary(i, j).real(), rep.unitary(i, j).imag()});
        m.push_back(row);
    }
    json report{{"basis", {"uu", "ud", "du", "dd"}},
                {"unitary", m},
                {"global_phase", {rep.global_phase.real(), rep.global_phase.imag()}},
                {"unitarity_error", rep.unitarity_error},
                {"distance_to_controlled_phase", rep.distance},
                {"tolerance", tol},
                {"pass", rep.distance <= tol && rep.unitarity_error <= tol}};
    write_json(ctx.artifact("gatecheck.json"), report);
    return {{"distance_to_controlled_phase", rep.distance}, {"pass", report["pass"]}};
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
    err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gate-density and exchange toolkit for optically controlled donor qubits", "sigate"};
    Common flags;
    app.add_option("--config", flags.config, "JSON run config");
    app.add_option("--seed", flags.seed, "Random seed (overrides the config)");
    app.add_option("--out", flags.out, "Output directory")->capture_default_str();
    app.add_option("--preset", flags.preset, "Geometry preset: monolayer-inplane, bilayer-outofplane, bulk-3d");
    app.add_option("--threads", flags.threads, "Worker threads");
    app.require_subcommand(1, 1);
    app.fallthrough();

    using Command = std::function<json(ConfigReader&, Context&)>;
    const std::vector<std::tuple<std::string, std::string, Command>> commands{
        {"jmap", "Exchange map of a donor pair", cmd_jmap},
        {"radii", "Equivalent radii of the J_dec zones", cmd_radii},
        {"density", "Analytic gate-density curve and peak", cmd_density},
        {"mc", "Monte Carlo gate densities with analytic overlay", cmd_mc},
        {"mace", "Spin-flip trajectories with controls in 1s and 2p", cmd_mace},
        {"gatecheck", "Phase-gate pulse sequence report", cmd_gatecheck},
    };
    for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        print_error(err, "validation", e.what(), exit_validation);
        return exit_validation;
    }

    const auto* sub = app.get_subcommands().front();
    try {
        Context ctx{flags, fs::path(flags.out), out};
        ConfigReader cfg(load_config(flags.config));
        resolve_common(cfg, ctx);
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec) throw IoError("cannot create output directory '" + ctx.out.string() + "': " + ec.message());
        for (const auto& [name, help, fn] : commands) {
            if (name != sub->get_name()) continue;
            json results = fn(cfg, ctx);
            json sidecar{{"subcommand", name},
                         {"seed", ctx.seed},
                         {"config", cfg.resolved()},
                         {"artifacts", ctx.artifacts},
                         {"results", results}};
            write_json(ctx.out / (name + ".run.json"), sidecar);
            out << "wrote " << (ctx.out / (name + ".run.json")).string() << '\n';
        }
        return exit_ok;
    } catch (const ValidationError& e) {
        print_error(err, "validation", e.what(), exit_validation);
        return exit_validation;
    } catch (const PreconditionError& e) {
        print_error(err, "validation", e.what(), exit_validation);
        return exit_validation;
    } catch (const UnsupportedDimensionError& e) {
        print_error(err, "validation", e.what(), exit_validation);
        return exit_validation;
    } catch (const IoError& e) {
        print_error(err, "io", e.what(), exit_runtime);
        return exit_runtime;
    } catch (const std::exception& e) {
        print_error(err, "runtime", e.what(), exit_runtime);
        return exit_runtime;
    }
}

}  // namespace sigate::cli
