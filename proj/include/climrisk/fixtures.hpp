#pragma once

#include "climrisk/pipeline.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace climrisk {

// How the stressed equities are planted.
//   PlantedJumps: targets are Lewis prices under per-cluster (lambda, theta);
//     EBITDA growth is backed out so the Gordon shock reproduces them.
//   Gordon: every firm has the same (g, q) and alphas come from a fixed
//     table passed to the pipeline as an override.
enum class FixtureShocks { PlantedJumps, Gordon };

std::string_view to_string(FixtureShocks s) noexcept;
FixtureShocks parse_fixture_shocks(std::string_view text);

struct FixtureSpec {
    std::size_t firms_per_cluster = 25;
    std::uint64_t seed = 2024;
    double asset_value_min = 200.0, asset_value_max = 5000.0;
    double asset_vol_min = 0.15, asset_vol_max = 0.45;
    double leverage_min = 0.2, leverage_max = 0.8;  // D / V(0)
    double maturity_min = 1.0, maturity_max = 10.0;
    double rate_min = 0.01, rate_max = 0.04;
    double beta_min = 0.8, beta_max = 1.4;
    double market_return = 0.08;
    std::array<JumpParams, ClusterKey::kCount> jumps{{{0.10, 0.05},
                                                      {0.20, 0.08},
                                                      {0.30, 0.12},
                                                      {0.40, 0.20},
                                                      {0.15, 0.06},
                                                      {0.30, 0.10},
                                                      {0.60, 0.25},
                                                      {1.00, 0.50}}};
    FixtureShocks shocks = FixtureShocks::PlantedJumps;
    double gordon_growth = 0.05, gordon_required = 0.10;
    AlphaTable gordon_alphas{0.006, 0.018, 0.042, 0.073, 0.015, 0.046, 0.107, 0.183};
    int first_year = 2014;
    int years = 10;
    double ebitda_noise = 0.05;  // max |noise| relative to the EBITDA level
    double rho = kDefaultRho;
    std::size_t n_paths = 10000;  // written into run.json

    // Throws SpecInvalid.
    void validate() const;
};

struct FirmTruth {
    std::string firm_id;
    ClusterKey cluster;
    std::string country, nace;
    double asset_value = 0, asset_vol = 0, debt = 0, maturity = 0, rate = 0;
    double equity = 0, equity_vol = 0;
    double beta = 0, required_return = 0, growth = 0, alpha = 0, shock = 0, stressed_equity = 0;
};

struct ClusterTruth {
    ClusterKey key;
    std::optional<JumpParams> jumps;  // absent for Gordon fixtures
    double alpha = 0.0;
    double mean_vulnerability = 0.0, mean_intensity = 0.0;
    std::size_t firm_count = 0;
};

struct FixtureTruth {
    std::uint64_t seed = 0;
    FixtureShocks shocks = FixtureShocks::PlantedJumps;
    double rho = kDefaultRho;
    double market_return = 0.0;
    std::vector<ClusterTruth> clusters;
    std::vector<FirmTruth> firms;  // sorted by firm_id
};

struct Fixture {
    std::vector<FirmRecord> firms;
    std::vector<CountryClimate> climate;
    std::map<std::string, double> market_returns;
    FixtureTruth truth;
    RunConfig run;  // paths relative to the fixture directory
};

Fixture generate_fixture(const FixtureSpec& spec);

// firms.csv, ebitda.csv, vulnerability.csv, market_returns.csv, truth.json
// and run.json.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

std::string truth_to_json(const FixtureTruth& truth);
FixtureTruth load_truth(const std::filesystem::path& path);

}  // namespace climrisk
