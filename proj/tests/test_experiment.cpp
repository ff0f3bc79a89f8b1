#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "scopt/experiment.hpp"

using namespace scopt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path d = fs::temp_directory_path() / ("scopt_test_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

ExperimentSpec tiny_spec(const fs::path& out) {
    ExperimentSpec spec;
    spec.base.num_sbs = 2;
    spec.base.num_users = 4;
    spec.base.num_rbs = 4;
    spec.base.tx_power_dbm.assign(2, 35.0);
    spec.base.backhaul_capacity_bps.assign(2, 60e6);
    spec.base.rng_seed = 3;
    spec.methods = {"greedy"};
    spec.sweep_backhaul_mbps = {60.0};
    spec.trials = 1;
    spec.out_dir = out.string();
    spec.record_wall_time = false;
    return spec;
}

}  // namespace

TEST_CASE("load_config") {
    const fs::path dir = temp_dir("cfg");
    const fs::path file = dir / "scenario.cfg";

    SUBCASE("full key set with comments") {
        std::ofstream f(file);
        f << "# scenario\n"
          << "num_sbs = 2\n"
          << "num_users = 8\n"
          << "num_rbs = 10  # RBs\n"
          << "rb_bandwidth_hz = 200e3\n"
          << "noise_psd_dbm_hz = -170\n"
          << "tx_power_dbm = 30, 32\n"
          << "backhaul_capacity_bps = 50e6\n"
          << "cluster_diameter_m = 800\n"
          << "rng_seed = 77\n"
          << "iters.zeta = 5\n"
          << "steps.gamma = 0.2\n";
        f.close();
        const ScenarioConfig cfg = load_config(file.string());
        CHECK(cfg.num_sbs == 2);
        CHECK(cfg.num_users == 8);
        CHECK(cfg.num_rbs == 10);
        CHECK(cfg.rb_bandwidth_hz == doctest::Approx(200e3));
        CHECK(cfg.noise_psd_dbm_hz == doctest::Approx(-170.0));
        CHECK(cfg.tx_power_dbm == std::vector<double>{30.0, 32.0});
        // single backhaul value broadcasts to both SBSs
        CHECK(cfg.backhaul_capacity_bps == std::vector<double>{50e6, 50e6});
        CHECK(cfg.rng_seed == 77);
        CHECK(cfg.iters.zeta == 5);
        CHECK(cfg.steps.gamma == doctest::Approx(0.2));
    }

    SUBCASE("unset per-SBS vectors resize with the defaults") {
        std::ofstream f(file);
        f << "num_sbs = 3\n";
        f.close();
        const ScenarioConfig cfg = load_config(file.string());
        CHECK(cfg.tx_power_dbm.size() == 3);
        CHECK(cfg.backhaul_capacity_bps.size() == 3);
    }

    SUBCASE("unknown key is an error") {
        std::ofstream f(file);
        f << "bandwidth = 1\n";
        f.close();
        CHECK_THROWS_AS(load_config(file.string()), std::runtime_error);
    }

    SUBCASE("malformed line is an error") {
        std::ofstream f(file);
        f << "num_sbs 2\n";
        f.close();
        CHECK_THROWS_AS(load_config(file.string()), std::runtime_error);
    }

    SUBCASE("missing file is an error") {
        CHECK_THROWS_AS(load_config((dir / "nope.cfg").string()), std::runtime_error);
    }
}

TEST_CASE("apply_preset") {
    ScenarioConfig cfg;
    apply_preset(cfg, "high");
    CHECK(cfg.iters.zeta == 10);
    CHECK(cfg.iters.nu == 400);
    CHECK(cfg.iters.power == 2000);
    apply_preset(cfg, "low");
    CHECK(cfg.iters.zeta == 1);
    CHECK(cfg.iters.nu == 40);
    CHECK(cfg.iters.power == 10);
    CHECK_THROWS_AS(apply_preset(cfg, "medium"), std::invalid_argument);
}

TEST_CASE("spec validation") {
    ExperimentSpec spec = tiny_spec(temp_dir("val"));
    CHECK_NOTHROW(spec.validate());

    ExperimentSpec bad = spec;
    bad.trials = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = spec;
    bad.sweep_backhaul_mbps = {40.0, 20.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = spec;
    bad.methods = {"simulated_annealing"};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("run_experiment accounting and schema") {
    const fs::path out = temp_dir("acct");
    run_experiment(tiny_spec(out));

    const std::string csv = slurp(out / "summary.csv");
    std::istringstream is(csv);
    std::string header, row, extra;
    REQUIRE(std::getline(is, header));
    CHECK(header == "method,backhaul_mbps,seed,utility_nats,feasible,min_slack_mbps,wall_ms");
    REQUIRE(std::getline(is, row));
    CHECK(row.substr(0, 10) == "greedy,60,");
    CHECK_FALSE(std::getline(is, extra));  // exactly one data row

    CHECK(fs::exists(out / "convergence.csv"));
    const std::string conv = slurp(out / "convergence.csv");
    CHECK(conv.rfind("method,backhaul_mbps,phase,iteration,utility_nats", 0) == 0);

    const auto echoed = nlohmann::json::parse(slurp(out / "spec.json"));
    CHECK(echoed["num_users"] == 4);
    CHECK(echoed["trials"] == 1);
}

TEST_CASE("byte-identical reruns") {
    const fs::path out1 = temp_dir("det1");
    const fs::path out2 = temp_dir("det2");
    ExperimentSpec spec = tiny_spec(out1);
    spec.methods = {"greedy", "proposed_low", "ga", "brute"};
    spec.sweep_backhaul_mbps = {40.0, 60.0};
    spec.trials = 2;
    spec.threads = 2;
    run_experiment(spec);
    spec.out_dir = out2.string();
    run_experiment(spec);
    CHECK(slurp(out1 / "summary.csv") == slurp(out2 / "summary.csv"));
    CHECK(slurp(out1 / "convergence.csv") == slurp(out2 / "convergence.csv"));
}

TEST_CASE("seed derivation and row ordering") {
    const fs::path out = temp_dir("seed");
    ExperimentSpec spec = tiny_spec(out);
    spec.base.rng_seed = 100;
    spec.trials = 3;
    spec.sweep_backhaul_mbps = {40.0, 60.0};
    run_experiment(spec);

    std::istringstream is(slurp(out / "summary.csv"));
    std::string line;
    std::getline(is, line);  // header
    std::vector<std::pair<double, long>> rows;  // (backhaul, seed)
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, ',');  // method
        std::getline(ls, field, ',');
        const double z = std::stod(field);
        std::getline(ls, field, ',');
        rows.push_back({z, std::stol(field)});
    }
    REQUIRE(rows.size() == 6);
    for (int k = 0; k < 3; ++k) {
        CHECK(rows[k].first == 40.0);
        CHECK(rows[k].second == 100 + k);
        CHECK(rows[3 + k].first == 60.0);
        CHECK(rows[3 + k].second == 100 + k);
    }
}

TEST_CASE("json serialization of diagnostics") {
    KktReport rep;
    rep.satisfied = true;
    rep.slack_gradient = {1.0, 2.0};
    rep.comp_slackness = {0.0, 0.0};
    rep.stationarity = {0.0};
    rep.theorem_sum = 1.5;
    rep.theorem_condition = true;
    const nlohmann::json j = kkt_to_json(rep);
    CHECK(j["satisfied"] == true);
    CHECK(j["slack_gradient"].size() == 2);
    CHECK(j["theorem_sum"] == doctest::Approx(1.5));
}
