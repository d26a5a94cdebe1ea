#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace climrisk {

enum class ErrorKind {
    // ingestion
    MissingColumn,
    NumericParse,
    DuplicateFirmId,
    OutOfRangeScore,
    DuplicateCountry,
    // clustering
    EmptyInput,
    TooFewPoints,
    ZeroRevenue,
    // shocks
    DegenerateSeries,
    GordonInvalid,
    DegenerateGrowth,
    // pricing
    DomainError,
    QuadratureNotConverged,
    // calibration
    NoConvergence,
    InvalidInputs,
    EmptyCluster,
    OptimizerFailed,
    // simulation
    BudgetExceeded,
    UnsortedLambdas,
    // risk
    WeightMismatch,
    EmptyLosses,
    EmptyTail,
    HorizonMissing,
    // pipeline
    MissingUpstream,
    ConfigInvalid,
    SpecInvalid,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Exit-code class used by the command line front end:
// 1 config, 2 parse, 3 pipeline order, 4 numerical failure.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace climrisk
