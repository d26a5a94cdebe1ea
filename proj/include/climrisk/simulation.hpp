#pragma once

#include "climrisk/calibration.hpp"
#include "climrisk/clustering.hpp"
#include "climrisk/ingestion.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace climrisk {

enum class JumpMode { Independent, Correlated };
enum class Repricing { Neglect, Aware };
// Per-step Poisson increments, or explicit jump times as in the event
// driven formulation. Equal in law.
enum class JumpSampling { PerStep, EventTimes };

std::string_view to_string(JumpMode m) noexcept;
std::string_view to_string(Repricing m) noexcept;
std::string_view to_string(JumpSampling m) noexcept;
JumpMode parse_jump_mode(std::string_view text);
Repricing parse_repricing(std::string_view text);
JumpSampling parse_jump_sampling(std::string_view text);

struct SimulationConfig {
    std::size_t n_paths = 100000;
    double step = 1.0 / 12.0;
    std::vector<double> horizons{1, 5, 10, 20};
    std::uint64_t seed = 0;
    JumpMode jump_mode = JumpMode::Independent;
    Repricing repricing = Repricing::Neglect;
    JumpSampling jump_sampling = JumpSampling::PerStep;
    std::size_t memory_budget_mb = 2048;
    // Paths per work unit. Fixed independently of the thread count.
    std::size_t chunk_paths = 1024;

    // Throws ConfigInvalid.
    void validate() const;
    // Grid index of horizon h (h / step, which must be an integer).
    std::size_t steps_to(double horizon) const;
    std::size_t total_steps() const;
};

SimulationConfig simulation_config_from_json(std::string_view json_text);
std::string simulation_config_to_json(const SimulationConfig& config);

// A firm as the engine sees it.
struct SimFirm {
    std::string firm_id;
    double asset_value = 0.0;
    double asset_vol = 0.0;   // sigma-hat
    double sigma_idio = 0.0;  // sigma
    double omega_sys = 0.0;   // omega
    double debt = 0.0;
    double maturity = 0.0;
    double rate = 0.0;
    int cluster = -1;  // index into SimulationModel::clusters, -1 for none
};

struct SimulationModel {
    std::vector<SimFirm> firms;           // sorted by firm_id
    std::vector<ClusterParams> clusters;  // sorted by key
};

// Joins FVM estimates, records and cluster assignments. Firms lacking any
// piece are skipped.
SimulationModel build_model(const std::vector<FirmRecord>& firms, const std::vector<FvmFirmParams>& fvm,
                            const std::map<std::string, ClusterKey>& keys, const std::vector<ClusterParams>& clusters);

// Horizon slices of the simulated log-asset panel for paths
// [path_begin, path_begin + n_paths).
struct PathBlock {
    std::size_t path_begin = 0;
    std::size_t n_paths = 0;
    std::size_t n_horizons = 0;
    std::size_t n_firms = 0;
    std::size_t n_clusters = 0;
    std::vector<double> log_baseline;        // [path][horizon][firm]
    std::vector<double> log_stressed;        // [path][horizon][firm]
    std::vector<std::uint32_t> jump_counts;  // [path][horizon][cluster]

    std::size_t index(std::size_t path, std::size_t horizon, std::size_t firm) const noexcept {
        return (path * n_horizons + horizon) * n_firms + firm;
    }
    std::size_t jump_index(std::size_t path, std::size_t horizon, std::size_t cluster) const noexcept {
        return (path * n_horizons + horizon) * n_clusters + cluster;
    }
};

// Bytes a block of n_paths would need.
std::size_t path_block_bytes(std::size_t n_paths, std::size_t n_horizons, std::size_t n_firms,
                             std::size_t n_clusters) noexcept;

// Pure work unit: simulates the given path range. Results for a path do
// not depend on the range it was simulated in.
PathBlock simulate_chunk(const SimulationModel& model, const SimulationConfig& config, std::size_t path_begin,
                         std::size_t path_end);

// All config.n_paths paths in one block. Throws BudgetExceeded when the
// block does not fit the configured memory budget.
PathBlock simulate_paths(const SimulationModel& model, const SimulationConfig& config, int threads = 1);

// Counters N_k at each horizon for maximally correlated clusters, built
// from incremental streams: N_k = N_{k-1} + Poisson((lambda_k - lambda_{k-1}) t).
// Result is [path][horizon][k]. Throws UnsortedLambdas.
std::vector<std::uint32_t> correlated_jump_counters(const std::vector<double>& lambdas_sorted,
                                                    const SimulationConfig& config);

// Lewis prices of one firm as a function of log(V / D), tabulated as a
// ratio to Black-Scholes and interpolated; points off the table are
// priced directly.
class LewisRepricer {
public:
    LewisRepricer(const SimFirm& firm, const JumpParams& jumps, double log_lo, double log_hi,
                  std::size_t nodes = 1025);
    ~LewisRepricer();
    LewisRepricer(LewisRepricer&&) noexcept;
    LewisRepricer& operator=(LewisRepricer&&) noexcept;

    double price(double asset_value) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One repricer per firm (null for firms without a jump cluster), sized to
// cover the log-asset range the configured horizons can reach.
std::vector<std::unique_ptr<LewisRepricer>> build_repricers(const SimulationModel& model,
                                                            const SimulationConfig& config, int threads = 1);

struct EquityBlock {
    std::size_t n_paths = 0, n_horizons = 0, n_firms = 0;
    std::vector<double> baseline;  // E_j(t), [path][horizon][firm]
    std::vector<double> stressed;  // E~_j(t)
};

// Rolling-debt repricing with constant residual maturity. Neglect mode
// prices both panels with Black-Scholes; aware mode prices the stressed
// panel with the firm's Lewis repricer.
EquityBlock equity_along_paths(const PathBlock& block, const SimulationModel& model, const SimulationConfig& config,
                               const std::vector<std::unique_ptr<LewisRepricer>>* repricers = nullptr);

// E_j(0) implied by the model, C_BS(V_j(0)).
std::vector<double> initial_equity(const SimulationModel& model);

struct Portfolio {
    std::string id;
    std::vector<std::pair<std::size_t, double>> members;  // (firm index, weight)
};

// Portfolios over model firms from index weights, renormalised over the
// firms that survived the pipeline.
std::vector<Portfolio> build_portfolios(const SimulationModel& model, const std::vector<FirmRecord>& firms);

// Percentage loss panels for every portfolio.
struct LossPanel {
    std::vector<std::string> portfolios;
    std::vector<double> horizons;
    std::size_t n_paths = 0;
    std::vector<double> baseline;  // [portfolio][horizon][path]
    std::vector<double> stressed;

    std::size_t index(std::size_t p, std::size_t h, std::size_t path) const noexcept {
        return (p * horizons.size() + h) * n_paths + path;
    }
};

// Streams chunks through simulate_chunk, equity_along_paths and the loss
// formula; only losses are kept.
LossPanel simulate_losses(const SimulationModel& model, const SimulationConfig& config,
                          const std::vector<Portfolio>& portfolios, int threads = 1);

// Little-endian dump: "CRLS", u32 version, u64 portfolios, horizons, paths;
// per portfolio a u32 length and id bytes; horizons as f64; then baseline
// and stressed losses as f64 in [portfolio][horizon][path] order.
std::string encode_losses(const LossPanel& panel);
LossPanel decode_losses(std::string_view bytes);

// Little-endian horizon-slice dump: "CRSL", u32 version, u64 paths,
// horizons, firms; then per firm a u32 length and id bytes; horizons as
// f64; then log baseline and log stressed values in [path][horizon][firm].
std::string encode_slices(const PathBlock& block, const SimulationModel& model, const SimulationConfig& config);

}  // namespace climrisk
