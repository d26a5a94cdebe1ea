#pragma once

#include "climrisk/clustering.hpp"
#include "climrisk/ingestion.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace climrisk {

// OLS slope of EBITDA on year, divided by the mean |EBITDA| of the window,
// giving a dimensionless annual growth rate.
double estimate_growth(std::span<const EbitdaPoint> series);

// CAPM-style required return: beta times the reference market return.
double required_return(double beta, double market_return);

// alpha_k = mean vulnerability x mean intensity of the cluster's tiers.
double cluster_alpha(double mean_vulnerability, double mean_intensity);

using AlphaTable = std::array<double, ClusterKey::kCount>;

// All eight alphas from company-level tier means.
AlphaTable cluster_alphas(const ClusterAssignment& assignment);
AlphaTable cluster_alphas(const std::map<std::pair<std::string, std::string>, double>& tier_means);

struct ShockInputs {
    double growth = 0.0;           // g
    double required_return = 0.0;  // q
    double alpha = 0.0;            // haircut on the growth rate
};

// Gordon growth equity D0 (1 + g) / (q - g).
double gordon_equity(double dividend, double growth, double required_return);

// Relative equity change when growth is cut to (1 - alpha) g.
double gordon_shock(const ShockInputs& inputs);

struct StressedEquity {
    std::string firm_id;
    ClusterKey cluster;
    double alpha = 0.0;
    double growth = 0.0;
    double required_return = 0.0;
    double shock = 0.0;
    double stressed_value = 0.0;  // (1 + shock) E
};

// Market return of the firm's reference index: the first membership (by
// index_id) that has a configured return.
std::optional<double> reference_market_return(const FirmRecord& firm,
                                              const std::map<std::string, double>& market_returns);

struct ShockResult {
    std::vector<StressedEquity> targets;  // sorted by firm_id
    ExclusionLedger ledger;
};

// Per-firm Gordon shocks with the firm's cluster alpha. Firms whose inputs
// fail (no cluster, no market return, invalid Gordon inputs) are ledgered
// at the shock_computation stage rather than raising.
ShockResult stressed_equity_targets(const std::vector<FirmRecord>& firms,
                                    const std::map<std::string, ClusterKey>& clusters, const AlphaTable& alphas,
                                    const std::map<std::string, double>& market_returns);

std::string shocks_to_csv(const std::vector<StressedEquity>& targets);
std::vector<StressedEquity> load_shocks(const std::filesystem::path& path);

}  // namespace climrisk
