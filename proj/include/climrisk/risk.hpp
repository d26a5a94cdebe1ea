#pragma once

#include "climrisk/simulation.hpp"

#include <span>
#include <string>
#include <vector>

namespace climrisk {

// Percentage portfolio losses at one horizon, one value per path.
struct LossSample {
    std::string portfolio_id;
    double horizon = 0.0;
    std::vector<double> baseline;  // L(t)
    std::vector<double> stressed;  // L~(t)
};

// Equities are laid out [path][firm] with weights.size() firms per path.
// Both panels are measured against the same initial equities.
// Throws WeightMismatch when weights do not sum to one or sizes disagree.
LossSample portfolio_losses(std::string portfolio_id, double horizon, std::span<const double> baseline_equity,
                            std::span<const double> stressed_equity, std::span<const double> weights,
                            std::span<const double> initial_equity);

// Per-horizon samples of one portfolio out of a simulated panel.
std::vector<LossSample> loss_samples(const LossPanel& panel, std::size_t portfolio);

// Empirical quantile with linear interpolation between order statistics
// (h = (n - 1) * level). Throws EmptyLosses.
double var(std::span<const double> losses, double level);

// Mean of losses strictly above VaR; when nothing exceeds it, the mean of
// the top ceil((1 - level) n) order statistics.
double expected_shortfall(std::span<const double> losses, double level);

struct TailMeasures {
    double var = 0.0;
    double es = 0.0;
};

// VaR and ES at several levels from one sort.
std::vector<TailMeasures> tail_measures(std::span<const double> losses, std::span<const double> levels);

struct HorizonRisk {
    double horizon = 0.0;
    double mean_baseline = 0.0;
    double mean_stressed = 0.0;
    double delta_mean = 0.0;
    std::vector<TailMeasures> baseline;  // one per level
    std::vector<TailMeasures> stressed;
};

struct RiskReport {
    std::string portfolio_id;
    std::vector<double> levels;
    std::vector<HorizonRisk> horizons;
    double addon_level = 0.95;
    double addon_horizon = 5.0;
    double addon_pct = 0.0;  // (VaR L~ / VaR L - 1) * 100
};

struct RiskOptions {
    std::vector<double> levels{0.90, 0.95, 0.99};
    double addon_level = 0.95;
    double addon_horizon = 5.0;
};

// Throws HorizonMissing when no sample is at the add-on horizon and
// InvalidInputs when the add-on level is not among the levels.
RiskReport risk_report(const std::vector<LossSample>& samples, const RiskOptions& options = {});

std::vector<RiskReport> risk_reports(const LossPanel& panel, const RiskOptions& options = {}, int threads = 1);

// index,horizon,delta_L,delta_var90,...,delta_es90,...
std::string report_to_csv(const std::vector<RiskReport>& reports);
// index,level,horizon,var_baseline,var_stressed,addon_pct
std::string addons_to_csv(const std::vector<RiskReport>& reports);
// index,horizon,level,var_baseline,var_stressed,es_baseline,es_stressed
std::string vars_by_horizon_to_csv(const std::vector<RiskReport>& reports);

}  // namespace climrisk
