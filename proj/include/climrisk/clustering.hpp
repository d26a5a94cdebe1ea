#pragma once

#include "climrisk/ingestion.hpp"

#include <array>
#include <compare>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace climrisk {

enum class VulnerabilityTier { Low = 0, MidHigh = 1 };
enum class IntensityTier { Low = 0, Medium = 1, High = 2, Extreme = 3 };

std::string_view to_string(VulnerabilityTier tier) noexcept;
std::string_view to_string(IntensityTier tier) noexcept;
VulnerabilityTier parse_vulnerability_tier(std::string_view text);
IntensityTier parse_intensity_tier(std::string_view text);

// Climate cluster k = (vulnerability tier, intensity tier); 8 keys in total.
struct ClusterKey {
    VulnerabilityTier vulnerability = VulnerabilityTier::Low;
    IntensityTier intensity = IntensityTier::Low;

    static constexpr int kCount = 8;
    constexpr int index() const noexcept {
        return static_cast<int>(vulnerability) * 4 + static_cast<int>(intensity);
    }
    static constexpr ClusterKey from_index(int i) noexcept {
        return {static_cast<VulnerabilityTier>(i / 4), static_cast<IntensityTier>(i % 4)};
    }
    static std::array<ClusterKey, kCount> all() noexcept;

    // "Low/Extreme" style label.
    std::string label() const;

    friend constexpr auto operator<=>(const ClusterKey& a, const ClusterKey& b) noexcept {
        return a.index() <=> b.index();
    }
    friend constexpr bool operator==(const ClusterKey& a, const ClusterKey& b) noexcept {
        return a.index() == b.index();
    }
};

struct ClusterStats {
    ClusterKey key;
    std::size_t firm_count = 0;
    double mean_vulnerability = 0.0;
    double mean_intensity = 0.0;  // post-scaling
    double sd_vulnerability = 0.0;
    double sd_intensity = 0.0;
};

// Summary statistics for one tier at a given aggregation level
// ("company", "country" or "sector").
struct TierStats {
    std::string dimension;  // "vulnerability" or "intensity"
    std::string tier;
    std::string level;
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;  // population standard deviation
};

// Empirical percentile (0..100) of sorted data, linear interpolation
// between order statistics.
double empirical_percentile(std::span<const double> sorted, double percent);

// Clips to the [p_lo, p_hi] empirical percentiles then maps min -> 0 and
// max -> 1. A constant input maps to all zeros.
std::vector<double> winsorize_minmax(std::span<const double> values, double p_lo, double p_hi);

// Ward agglomerative clustering of 1-D points cut at `n_clusters` groups.
// Returned indices are ordered by ascending cluster mean.
std::map<std::string, int> hierarchical_cluster(const std::vector<std::pair<std::string, double>>& values,
                                                int n_clusters);

// Three vulnerability clusters with the upper two merged into MidHigh.
std::map<std::string, VulnerabilityTier> assign_vulnerability_tiers(const std::vector<CountryClimate>& climate);

// NACE -> mean ppe/revenue over member firms, before scaling.
std::map<std::string, double> sector_raw_intensity(const std::vector<FirmRecord>& firms);
// NACE -> winsorised (p_lo, p_hi) and min-max scaled sector intensity.
std::map<std::string, double> sector_intensity(const std::vector<FirmRecord>& firms, double p_lo = 1.0,
                                               double p_hi = 99.0);

std::map<std::string, IntensityTier> assign_intensity_tiers(const std::map<std::string, double>& sector_values);

struct ClusterAssignment {
    std::map<std::string, ClusterKey> firm_keys;
    std::map<std::string, VulnerabilityTier> country_tiers;
    std::map<std::string, IntensityTier> sector_tiers;
    std::map<std::string, double> sector_values;  // scaled
    std::array<ClusterStats, ClusterKey::kCount> cells{};
    std::vector<TierStats> tiers;

    // Company-level tier means used for shock factors.
    double vulnerability_mean(VulnerabilityTier t) const;
    double intensity_mean(IntensityTier t) const;
};

// Full clustering of firms that passed the climate-clustering filter.
ClusterAssignment assign_clusters(const std::vector<FirmRecord>& firms, const std::vector<CountryClimate>& climate,
                                  double p_lo = 1.0, double p_hi = 99.0);

std::string clusters_to_csv(const ClusterAssignment& assignment);
std::string cluster_stats_to_csv(const ClusterAssignment& assignment);
std::string cluster_cells_to_csv(const ClusterAssignment& assignment);

// firm_id -> key, read back from clusters.csv.
std::map<std::string, ClusterKey> load_cluster_keys(const std::filesystem::path& path);
// (dimension, tier) -> company-level mean read back from cluster_stats.csv.
std::map<std::pair<std::string, std::string>, double> load_tier_means(const std::filesystem::path& path);

}  // namespace climrisk
