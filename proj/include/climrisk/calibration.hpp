#pragma once

#include "climrisk/clustering.hpp"
#include "climrisk/ingestion.hpp"
#include "climrisk/pricing.hpp"
#include "climrisk/shock.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace climrisk {

inline constexpr double kDefaultRho = 0.12;

struct FvmSolution {
    double asset_value = 0.0;  // V(0)
    double asset_vol = 0.0;    // sigma-hat
    double price_residual = 0.0;  // (C_BS - E) / E
    double vol_residual = 0.0;    // (N(d1) V sigma - E sigma_E) / (E sigma_E)
    int iterations = 0;
};

// Root of { E = C_BS(V, D, s, T, r); E sigma_E = N(d1) V s } by damped
// Newton in (log V, log s), with multi-start and a nested bisection
// fallback. Throws InvalidInputs or NoConvergence.
FvmSolution solve_fvm(double equity, double equity_vol, double debt, double maturity, double rate);

// (sigma, omega) = (s sqrt(1 - rho), s sqrt(rho)).
std::pair<double, double> split_correlation(double sigma_hat, double rho);

struct FvmFirmParams {
    std::string firm_id;
    double asset_value = 0.0;
    double asset_vol = 0.0;
    double rho = kDefaultRho;
    double sigma_idio = 0.0;
    double omega_sys = 0.0;
};

FvmFirmParams make_fvm_params(std::string firm_id, double asset_value, double asset_vol, double rho);

struct FvmEstimate {
    std::vector<FvmFirmParams> params;  // sorted by firm_id
    ExclusionLedger ledger;             // solver failures at fvm_estimation
};

// Runs solve_fvm for every firm (which must carry the FVM inputs).
FvmEstimate estimate_fvm(const std::vector<FirmRecord>& firms, double rho, int threads = 1);

struct ClusterParams {
    ClusterKey key;
    JumpParams jumps;
    double alpha = 0.0;
    double rmspe = 0.0;
    double model_mean_loss = 0.0;   // mean (1 - C_LW / E) in percent
    double target_mean_loss = 0.0;  // mean (1 - E~ / E) in percent
    std::size_t firm_count = 0;
};

// One firm's inputs to the jump calibration.
struct CalibrationFirm {
    std::string firm_id;
    double asset_value = 0.0;
    double asset_vol = 0.0;
    double debt = 0.0;
    double maturity = 0.0;
    double rate = 0.0;
    double equity = 0.0;  // E(0)
    double target = 0.0;  // stressed E~(0)
};

struct JumpCalibrationOptions {
    double lambda_min = 1e-3, lambda_max = 5.0;
    double theta_min = 1e-3, theta_max = 1.5;
    int grid = 8;    // log-spaced seed grid per axis
    int starts = 3;  // best grid points refined by Nelder-Mead
    int max_evaluations = 1500;
};

struct JumpCalibration {
    ClusterParams params;
    std::vector<double> trace;  // best objective per optimiser iteration
    ExclusionLedger ledger;     // firms the pricer could not handle
    int evaluations = 0;
};

// Sum over firms of ((E~ - C_LW) / E~)^2.
double jump_objective(const std::vector<CalibrationFirm>& firms, const JumpParams& jumps);

// (lambda, theta) minimising the rMSPE sqrt(sum ((E~ - C_LW) / E~)^2).
// Throws EmptyCluster, OptimizerFailed.
JumpCalibration calibrate_cluster_jumps(const ClusterKey& key, double alpha, std::vector<CalibrationFirm> firms,
                                        const JumpCalibrationOptions& options = {});

// Firms of one cluster assembled from FVM estimates, shocks and records.
std::map<ClusterKey, std::vector<CalibrationFirm>> calibration_sets(const std::vector<FirmRecord>& firms,
                                                                   const std::vector<FvmFirmParams>& fvm,
                                                                   const std::vector<StressedEquity>& shocks);

std::string fvm_params_to_csv(const std::vector<FvmFirmParams>& params);
std::vector<FvmFirmParams> load_fvm_params(const std::filesystem::path& path, double rho);
std::string cluster_params_to_csv(const std::vector<ClusterParams>& params);
std::vector<ClusterParams> load_cluster_params(const std::filesystem::path& path);

}  // namespace climrisk
