#pragma once

#include "climrisk/calibration.hpp"
#include "climrisk/risk.hpp"
#include "climrisk/shock.hpp"
#include "climrisk/simulation.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace climrisk {

enum class Stage { Ingest, Cluster, Shock, Calibrate, Simulate, Report, All };

std::string_view to_string(Stage stage) noexcept;
Stage parse_stage(std::string_view text);

struct RunConfig {
    // Raw inputs, resolved against the config file's directory.
    std::filesystem::path firms, ebitda, vulnerability, market_returns;
    double rho = kDefaultRho;
    double winsor_lower = 1.0, winsor_upper = 99.0;
    // Replaces the data-derived shock factors when present.
    std::optional<AlphaTable> alpha_table;
    JumpCalibrationOptions calibration;
    SimulationConfig simulation;
    RiskOptions report;
    std::filesystem::path output_dir = "out";
    std::string log_level = "info";
    int threads = 1;
    bool write_slices = false;

    // Throws ConfigInvalid, including for inputs that do not exist.
    void validate() const;
};

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
// Paths are written relative to `base_dir` when they live under it.
std::string run_config_to_json(const RunConfig& config, const std::filesystem::path& base_dir = {});

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kFirms = "firms_clean.csv";
inline constexpr const char* kEbitda = "ebitda_clean.csv";
inline constexpr const char* kLedgerIngest = "ledger_ingest.csv";
inline constexpr const char* kClusters = "clusters.csv";
inline constexpr const char* kClusterStats = "cluster_stats.csv";
inline constexpr const char* kClusterCells = "cluster_cells.csv";
inline constexpr const char* kAlphas = "alphas.csv";
inline constexpr const char* kShocks = "shocks.csv";
inline constexpr const char* kLedgerShock = "ledger_shock.csv";
inline constexpr const char* kFvm = "fvm_params.csv";
inline constexpr const char* kClusterParams = "cluster_params.csv";
inline constexpr const char* kTrace = "calibration_trace.csv";
inline constexpr const char* kLedgerCalibrate = "ledger_calibrate.csv";
inline constexpr const char* kPortfolios = "portfolios.csv";
inline constexpr const char* kLosses = "losses.bin";
inline constexpr const char* kSlices = "slices.bin";
inline constexpr const char* kReport = "report.csv";
inline constexpr const char* kAddons = "addons.csv";
inline constexpr const char* kVarsByHorizon = "vars_by_horizon.csv";
inline constexpr const char* kExclusions = "exclusions.csv";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace artifact

// Runs one stage (or all of them in order), writing its artifacts
// atomically and updating manifest.json. Returns the artifacts written.
// Throws MissingUpstream when an earlier stage's outputs are absent.
std::vector<std::filesystem::path> run_stage(Stage stage, const RunConfig& config);

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace climrisk
