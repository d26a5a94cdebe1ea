#include "doctest.h"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"
#include "climrisk/fixtures.hpp"
#include "climrisk/pipeline.hpp"

#include <cmath>
#include <filesystem>

using namespace climrisk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("climrisk_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

FixtureSpec small_spec() {
    FixtureSpec s;
    s.firms_per_cluster = 6;
    s.n_paths = 600;
    s.seed = 99;
    return s;
}

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error");
    return ErrorKind::Io;
}

}  // namespace

TEST_CASE("fixture structure and determinism") {
    FixtureSpec spec;
    const auto fx = generate_fixture(spec);
    CHECK(fx.truth.firms.size() == 200);
    CHECK(fx.truth.clusters.size() == 8);
    for (const auto& c : fx.truth.clusters) {
        CHECK(c.jumps.has_value());
        CHECK(c.firm_count == 25);
    }
    // tier means line up with the generative targets
    CHECK(fx.truth.clusters[0].mean_vulnerability == doctest::Approx(0.212).epsilon(1e-12));
    CHECK(fx.truth.clusters[4].mean_vulnerability == doctest::Approx(0.534).epsilon(1e-12));

    TempDir a("fixture_a"), b("fixture_b");
    write_fixture(fx, a.path);
    write_fixture(generate_fixture(spec), b.path);
    for (const char* f : {"firms.csv", "ebitda.csv", "vulnerability.csv", "market_returns.csv", "truth.json", "run.json"})
        CHECK(csv::read_file(a.path / f) == csv::read_file(b.path / f));

    const auto truth = load_truth(a.path / "truth.json");
    REQUIRE(truth.firms.size() == fx.truth.firms.size());
    CHECK(truth.firms[17].stressed_equity == fx.truth.firms[17].stressed_equity);
    CHECK(truth.clusters[7].jumps->theta == fx.truth.clusters[7].jumps->theta);

    // planted EBITDA growth is what the regression sees
    for (std::size_t i = 0; i < fx.firms.size(); i += 13)
        CHECK(estimate_growth(fx.firms[i].ebitda_series) ==
              doctest::Approx(fx.truth.firms[i].growth).epsilon(1e-12));

    spec.firms_per_cluster = 1;
    CHECK(kind_of([&] { generate_fixture(spec); }) == ErrorKind::SpecInvalid);
}

TEST_CASE("gordon fixture shocks are reproduced by the shock stage") {
    auto spec = small_spec();
    spec.shocks = FixtureShocks::Gordon;
    const auto fx = generate_fixture(spec);
    TempDir dir("gordon");
    write_fixture(fx, dir.path);
    auto config = load_run_config(dir.path / "run.json");
    REQUIRE(config.alpha_table.has_value());
    for (auto s : {Stage::Ingest, Stage::Cluster, Stage::Shock}) run_stage(s, config);
    const auto shocks = load_shocks(config.output_dir / artifact::kShocks);
    const auto truth = load_truth(dir.path / "truth.json");
    REQUIRE(shocks.size() == truth.firms.size());
    for (std::size_t i = 0; i < shocks.size(); ++i) {
        const auto& t = truth.firms[i];
        CHECK(shocks[i].firm_id == t.firm_id);
        const double expected = gordon_shock({t.growth, t.required_return, t.alpha});
        CHECK(std::abs(shocks[i].shock - expected) < 1e-12);
        CHECK(shocks[i].alpha == spec.gordon_alphas[static_cast<std::size_t>(t.cluster.index())]);
    }
}

TEST_CASE("end to end on a small fixture") {
    const auto fx = generate_fixture(small_spec());
    TempDir dir("e2e");
    write_fixture(fx, dir.path);
    auto config = load_run_config(dir.path / "run.json");

    SUBCASE("stage order is enforced") {
        CHECK(kind_of([&] { run_stage(Stage::Simulate, config); }) == ErrorKind::MissingUpstream);
        CHECK(kind_of([&] { run_stage(Stage::Report, config); }) == ErrorKind::MissingUpstream);
        CHECK(exit_code(ErrorKind::MissingUpstream) == 3);
    }
    SUBCASE("full run recovers the planted parameters and is reproducible") {
        const auto written = run_stage(Stage::All, config);
        CHECK(written.size() >= 19);
        const auto fvm = load_fvm_params(config.output_dir / artifact::kFvm, config.rho);
        REQUIRE(fvm.size() == fx.truth.firms.size());
        for (std::size_t i = 0; i < fvm.size(); ++i) {
            const auto& t = fx.truth.firms[i];
            CHECK(std::abs(fvm[i].asset_value / t.asset_value - 1) < 1e-8);
            CHECK(std::abs(fvm[i].asset_vol / t.asset_vol - 1) < 1e-8);
        }
        const auto params = load_cluster_params(config.output_dir / artifact::kClusterParams);
        REQUIRE(params.size() == 8);
        for (std::size_t k = 0; k < 8; ++k) {
            const auto& planted = *fx.truth.clusters[k].jumps;
            CHECK(std::abs(params[k].jumps.lambda / planted.lambda - 1) < 0.05);
            CHECK(std::abs(params[k].jumps.theta / planted.theta - 1) < 0.05);
        }
        const auto report = csv::read(config.output_dir / artifact::kReport);
        CHECK(report.rows.size() == 3 * 4);
        for (const auto& row : report.rows) CHECK(csv::parse_number(row[2], "report") >= 0.0);

        const auto first = csv::read_file(config.output_dir / artifact::kReport);
        const auto manifest = csv::read_file(config.output_dir / artifact::kManifest);
        config.threads = 3;
        run_stage(Stage::Simulate, config);
        run_stage(Stage::Report, config);
        CHECK(csv::read_file(config.output_dir / artifact::kReport) == first);
        CHECK(csv::read_file(config.output_dir / artifact::kManifest) == manifest);
        CHECK(manifest.find("\"config_sha256\"") != std::string::npos);
        CHECK(manifest.find("input:firms") != std::string::npos);

        config.simulation.seed += 1;
        run_stage(Stage::Simulate, config);
        run_stage(Stage::Report, config);
        CHECK(csv::read_file(config.output_dir / artifact::kReport) != first);
    }
}

TEST_CASE("run config validation") {
    TempDir dir("config");
    write_fixture(generate_fixture(small_spec()), dir.path);
    const auto text = csv::read_file(dir.path / "run.json");
    CHECK_NOTHROW(parse_run_config(text, dir.path).validate());
    CHECK(kind_of([&] { parse_run_config("{", dir.path); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([&] { parse_run_config(R"({"inputs": {}})", dir.path); }) == ErrorKind::ConfigInvalid);
    CHECK(kind_of([&] { parse_run_config(text.substr(0, text.size() - 2) + R"(, "bogus": 1})", dir.path); }) ==
          ErrorKind::ConfigInvalid);
    auto c = parse_run_config(text, dir.path);
    c.rho = 1.5;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ConfigInvalid);
    c = parse_run_config(text, dir.path);
    c.report.addon_horizon = 3;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ConfigInvalid);
    c = parse_run_config(text, dir.path / "elsewhere");
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ConfigInvalid);
    // serialisation round trip
    const auto again = parse_run_config(run_config_to_json(parse_run_config(text, dir.path), dir.path), dir.path);
    CHECK(again.firms == dir.path / "firms.csv");
    CHECK(again.simulation.n_paths == 600);
    CHECK(parse_stage("calibrate") == Stage::Calibrate);
    CHECK(kind_of([] { parse_stage("nope"); }) == ErrorKind::ConfigInvalid);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
