#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"
#include "config.hpp"
#include "output.hpp"

namespace fs = std::filesystem;
using namespace sigate::cli;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("sigate_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path operator/(const std::string& leaf) const { return dir / leaf; }
};

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("format_number round-trips doubles") {
    for (double x : {0.0, 1.0, -2.5, 1e-300, 3.141592653589793, 6.02214076e23, 0.1}) {
        CHECK(std::stod(format_number(x)) == x);
    }
}

TEST_CASE("csv with no rows is header only and reads back empty") {
    Scratch s("csv_empty");
    write_csv(s / "a.csv", {"t_ps", "P_sf"}, {});
    CHECK(slurp(s / "a.csv") == "t_ps,P_sf\n");
    std::vector<std::string> header;
    CHECK(read_csv(s / "a.csv", &header).empty());
    CHECK(header == std::vector<std::string>{"t_ps", "P_sf"});
}

TEST_CASE("csv round-trips exactly") {
    Scratch s("csv_rt");
    const std::vector<std::vector<double>> rows{{1.0, 1.0 / 3.0}, {-1e-17, 12345.678}};
    write_csv(s / "a.csv", {"x", "y"}, rows);
    CHECK(read_csv(s / "a.csv") == rows);
    CHECK_THROWS_AS(write_csv(s / "b.csv", {"x"}, rows), IoError);
}

TEST_CASE("json round-trips") {
    Scratch s("json_rt");
    const nlohmann::json j{{"a", 1.0 / 3.0}, {"b", {1, 2, 3}}, {"c", {{"d", "text"}}}};
    write_json(s / "a.json", j);
    CHECK(read_json(s / "a.json") == j);
}

TEST_CASE("config reader rejects unknown fields and records resolved values") {
    ConfigReader cfg(nlohmann::json{{"g", 6}, {"extra", true}, {"table", {{"evaluations", 10}}}});
    CHECK(cfg.get("g", 8) == 6);
    CHECK(cfg.get("n_clusters", 400) == 400);
    auto t = cfg.child("table");
    CHECK(t.get<std::size_t>("evaluations", 5) == 10);
    CHECK_NOTHROW(t.finish());
    CHECK_THROWS_AS(cfg.finish(), ValidationError);
    CHECK(cfg.resolved().at("n_clusters") == 400);
    CHECK_THROWS_AS(ConfigReader(nlohmann::json::array()), ValidationError);
}

TEST_CASE("unknown config field exits with validation code") {
    Scratch s("unknown");
    write_text(s / "c.json", R"({"tolerance": 1e-9, "not_a_field": 3})");
    const auto r = invoke({"--config", (s / "c.json").string(), "--out", s.dir.string(), "gatecheck"});
    CHECK(r.code == exit_validation);
    const auto err = nlohmann::json::parse(r.err);
    CHECK(err.at("error").at("exit_code") == exit_validation);
    CHECK(err.at("error").at("message").get<std::string>().find("not_a_field") != std::string::npos);
    CHECK_FALSE(fs::exists(s / "gatecheck.json"));
}

TEST_CASE("bad command lines exit with validation code") {
    Scratch s("badargs");
    CHECK(invoke({}).code == exit_validation);
    CHECK(invoke({"nonsense"}).code == exit_validation);
    CHECK(invoke({"--preset", "nope", "--out", s.dir.string(), "density"}).code == exit_validation);
    CHECK(invoke({"--threads", "0", "--out", s.dir.string(), "gatecheck"}).code == exit_validation);
    CHECK(invoke({"--config", (s / "missing.json").string(), "gatecheck"}).code == exit_validation);
    write_text(s / "g.json", R"({"g": 13})");
    CHECK(invoke({"--config", (s / "g.json").string(), "--out", s.dir.string(), "mace"}).code == exit_validation);
    write_text(s / "p.json", R"({"radii": {"r_min": 20.0, "r_max": 10.0}})");
    CHECK(invoke({"--config", (s / "p.json").string(), "--out", s.dir.string(), "density"}).code ==
          exit_validation);
}

TEST_CASE("help exits cleanly") {
    const auto r = invoke({"--help"});
    CHECK(r.code == exit_ok);
    CHECK(r.out.find("gatecheck") != std::string::npos);
}

TEST_CASE("gatecheck writes a passing report") {
    Scratch s("gatecheck");
    REQUIRE(invoke({"--out", s.dir.string(), "gatecheck"}).code == exit_ok);
    const auto rep = read_json(s / "gatecheck.json");
    CHECK(rep.at("pass") == true);
    CHECK(rep.at("unitary").size() == 4);
    const auto side = read_json(s / "gatecheck.run.json");
    CHECK(side.at("subcommand") == "gatecheck");
    CHECK(side.at("artifacts") == nlohmann::json::array({"gatecheck.json"}));
}

TEST_CASE("mc with zero readout density gives zero gate densities") {
    Scratch s("mc_zero");
    for (const auto* gate : {"SFG", "HeisExGd", "HeisExEx"}) {
        write_text(s / "c.json", std::string(R"({"densities": [0], "trials": 4, "region": {"side_nm": 2000}, "gate": ")") +
                                     gate + "\"}");
        REQUIRE(invoke({"--config", (s / "c.json").string(), "--out", s.dir.string(), "mc"}).code == exit_ok);
        std::vector<std::string> header;
        const auto rows = read_csv(s / "mc.csv", &header);
        REQUIRE(rows.size() == 1);
        CHECK(header.size() == 3);
        for (double v : rows[0]) CHECK(v == 0.0);
        CHECK(read_csv(s / "mc_analytic.csv").empty());
    }
}

TEST_CASE("artifact schemas have the documented columns") {
    Scratch s("schemas");
    write_text(s / "d.json", R"({"points": 3, "peak": false})");
    REQUIRE(invoke({"--config", (s / "d.json").string(), "--out", s.dir.string(), "density"}).code == exit_ok);
    std::vector<std::string> header;
    auto rows = read_csv(s / "density.csv", &header);
    CHECK(header == std::vector<std::string>{"D_r_per_cm2", "active_density", "active_percent"});
    CHECK(rows.size() == 3);
    for (const auto& r : rows) CHECK(r.size() == 3);

    write_text(s / "d3.json", R"({"points": 2, "peak": false, "gate": "HeisExEx"})");
    REQUIRE(invoke({"--config", (s / "d3.json").string(), "--preset", "bulk-3d", "--out", s.dir.string(),
                    "density"})
                .code == exit_ok);
    read_csv(s / "density.csv", &header);
    CHECK(header.front() == "D_r_per_cm3");

    write_text(s / "j.json", R"({"pair": "As1s-As1s", "half_extent_nm": 4, "evaluations": 2000})");
    REQUIRE(invoke({"--config", (s / "j.json").string(), "--out", s.dir.string(), "jmap"}).code == exit_ok);
    rows = read_csv(s / "jmap.csv", &header);
    CHECK(header == std::vector<std::string>{"x_nm", "y_nm", "J_ueV"});
    CHECK(rows.size() == 9 * 9 - 1);

    write_text(s / "m.json", R"({"region": {"side_nm": 600}, "n_clusters": 2, "g": 3, "t_points": 5,
        "table": {"evaluations": 2000, "phi_intervals": 8, "r_limit_nm": 20}})");
    REQUIRE(invoke({"--config", (s / "m.json").string(), "--out", s.dir.string(), "mace"}).code == exit_ok);
    rows = read_csv(s / "mace.csv", &header);
    CHECK(header == std::vector<std::string>{"t_ps", "P_sf", "err", "P_sf_excited", "err_excited", "abs_diff"});
    CHECK(rows.size() == 5);
    for (const auto& r : rows) {
        CHECK(r.size() == 6);
        CHECK(r[5] == doctest::Approx(std::abs(r[3] - r[1])));
    }
}

TEST_CASE("runs are byte-identical and the resolved config reproduces them") {
    Scratch s("determinism");
    write_text(s / "c.json", R"({"densities": [1e10, 3e10], "trials": 3, "region": {"side_nm": 1500}})");
    const auto cfg = (s / "c.json").string();
    REQUIRE(invoke({"--config", cfg, "--seed", "7", "--out", (s / "a").string(), "mc"}).code == exit_ok);
    REQUIRE(invoke({"--config", cfg, "--seed", "7", "--out", (s / "b").string(), "mc"}).code == exit_ok);
    for (const auto* f : {"mc.csv", "mc_analytic.csv", "mc.run.json"}) {
        CHECK(slurp(s / "a" / f) == slurp(s / "b" / f));
    }

    const auto side = read_json(s / "a" / "mc.run.json");
    CHECK(side.at("seed") == 7);
    write_json(s / "resolved.json", side.at("config"));
    REQUIRE(invoke({"--config", (s / "resolved.json").string(), "--out", (s / "c").string(), "mc"}).code == exit_ok);
    CHECK(slurp(s / "a" / "mc.csv") == slurp(s / "c" / "mc.csv"));

    REQUIRE(invoke({"--config", cfg, "--seed", "8", "--out", (s / "d").string(), "mc"}).code == exit_ok);
    CHECK(slurp(s / "a" / "mc.csv") != slurp(s / "d" / "mc.csv"));
}
