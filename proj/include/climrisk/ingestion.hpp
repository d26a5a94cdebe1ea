#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace climrisk {

struct IndexMembership {
    std::string index_id;
    double weight = 0.0;  // x_j in [0, 1]

    friend bool operator==(const IndexMembership&, const IndexMembership&) = default;
};

struct EbitdaPoint {
    int year = 0;
    double value = 0.0;

    friend bool operator==(const EbitdaPoint&, const EbitdaPoint&) = default;
};

// One firm's market, balance-sheet and classification data. Monetary
// amounts are USD. Numeric fields left empty in the input are nullopt; the
// filter pipeline decides what is required at which stage.
struct FirmRecord {
    std::string firm_id;
    std::string country;  // ISO-3166 alpha-2
    std::string nace;     // NACE Rev. 2 two-digit code
    std::optional<double> equity_value;
    std::optional<double> equity_vol;
    std::optional<double> total_debt;
    std::optional<double> debt_maturity;
    std::optional<double> risk_free;
    std::optional<double> ppe;
    std::optional<double> revenue;
    std::optional<double> capm_beta;
    std::vector<EbitdaPoint> ebitda_series;          // ascending year
    std::vector<IndexMembership> index_memberships;  // ascending index_id

    friend bool operator==(const FirmRecord&, const FirmRecord&) = default;
};

struct CountryClimate {
    std::string country;
    double vulnerability = 0.0;  // ND-GAIN vulnerability in [0, 1]

    friend bool operator==(const CountryClimate&, const CountryClimate&) = default;
};

enum class ExclusionStage { ClimateClustering, ShockComputation, FvmEstimation };

std::string_view to_string(ExclusionStage stage) noexcept;
ExclusionStage parse_exclusion_stage(std::string_view text);

struct Exclusion {
    ExclusionStage stage;
    std::string firm_id;
    std::string reason;

    friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

// Record of every firm dropped from the pipeline. A firm appears at most
// once per stage; entries are kept sorted by (stage, firm_id).
class ExclusionLedger {
public:
    // Returns false (and records nothing) if the firm is already ledgered
    // at this stage.
    bool add(ExclusionStage stage, std::string firm_id, std::string reason);
    void merge(const ExclusionLedger& other);

    const std::vector<Exclusion>& entries() const noexcept { return entries_; }
    std::size_t count(ExclusionStage stage) const;
    std::set<std::string> excluded_firms() const;
    bool contains(ExclusionStage stage, std::string_view firm_id) const;
    bool empty() const noexcept { return entries_.empty(); }

    std::string to_csv() const;
    static ExclusionLedger from_csv(const std::filesystem::path& path);

    friend bool operator==(const ExclusionLedger&, const ExclusionLedger&) = default;

private:
    std::vector<Exclusion> entries_;
};

// firms.csv holds one row per (firm, index) membership. When `ebitda_path`
// is given, the long-format EBITDA file is attached to the records.
std::vector<FirmRecord> load_firms(const std::filesystem::path& firms_path,
                                   const std::optional<std::filesystem::path>& ebitda_path = std::nullopt);
std::vector<FirmRecord> parse_firms(std::string_view csv_text, std::string_view origin = "firms.csv");
void attach_ebitda(std::vector<FirmRecord>& firms, std::string_view ebitda_csv_text,
                   std::string_view origin = "ebitda.csv");

std::vector<CountryClimate> load_vulnerability(const std::filesystem::path& path);
std::vector<CountryClimate> parse_vulnerability(std::string_view csv_text,
                                                std::string_view origin = "vulnerability.csv");

struct VulnerabilitySummary {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation
};
VulnerabilitySummary summarize(const std::vector<CountryClimate>& climate);

// index_id -> annual market return of the reference index.
std::map<std::string, double> load_market_returns(const std::filesystem::path& path);
std::map<std::string, double> parse_market_returns(std::string_view csv_text,
                                                   std::string_view origin = "market_returns.csv");

struct FilterResult {
    std::vector<FirmRecord> kept;  // sorted by firm_id
    ExclusionLedger ledger;
};

// Three sequential data-availability stages:
//   1. climate clustering: country vulnerability, NACE code, PPE, revenue;
//   2. shock computation: >= 2 distinct EBITDA years, CAPM beta;
//   3. FVM estimation: equity value, equity vol, debt, maturity, risk-free
//      rate (missing rates are imputed with the mean of same-index firms).
FilterResult filter_pipeline(std::vector<FirmRecord> firms, const std::vector<CountryClimate>& climate);

// Serialises records in the firms.csv schema (EBITDA is not included).
std::string firms_to_csv(const std::vector<FirmRecord>& firms);
// Long-format EBITDA: firm_id,year,ebitda.
std::string ebitda_to_csv(const std::vector<FirmRecord>& firms);

// index_id -> (firm_id, weight) with weights renormalised to sum to 1 over
// the given firms. Indexes whose raw weights sum to zero are dropped.
std::map<std::string, std::vector<std::pair<std::string, double>>> portfolio_weights(
    const std::vector<FirmRecord>& firms);

}  // namespace climrisk
