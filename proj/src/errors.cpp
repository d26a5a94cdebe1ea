#include "climrisk/errors.hpp"

namespace climrisk {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::NumericParse: return "NumericParse";
        case ErrorKind::DuplicateFirmId: return "DuplicateFirmId";
        case ErrorKind::OutOfRangeScore: return "OutOfRangeScore";
        case ErrorKind::DuplicateCountry: return "DuplicateCountry";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::TooFewPoints: return "TooFewPoints";
        case ErrorKind::ZeroRevenue: return "ZeroRevenue";
        case ErrorKind::DegenerateSeries: return "DegenerateSeries";
        case ErrorKind::GordonInvalid: return "GordonInvalid";
        case ErrorKind::DegenerateGrowth: return "DegenerateGrowth";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::InvalidInputs: return "InvalidInputs";
        case ErrorKind::EmptyCluster: return "EmptyCluster";
        case ErrorKind::OptimizerFailed: return "OptimizerFailed";
        case ErrorKind::BudgetExceeded: return "BudgetExceeded";
        case ErrorKind::UnsortedLambdas: return "UnsortedLambdas";
        case ErrorKind::WeightMismatch: return "WeightMismatch";
        case ErrorKind::EmptyLosses: return "EmptyLosses";
        case ErrorKind::EmptyTail: return "EmptyTail";
        case ErrorKind::HorizonMissing: return "HorizonMissing";
        case ErrorKind::MissingUpstream: return "MissingUpstream";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::SpecInvalid: return "SpecInvalid";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ConfigInvalid:
        case ErrorKind::SpecInvalid:
            return 1;
        case ErrorKind::MissingColumn:
        case ErrorKind::NumericParse:
        case ErrorKind::DuplicateFirmId:
        case ErrorKind::OutOfRangeScore:
        case ErrorKind::DuplicateCountry:
        case ErrorKind::Io:
            return 2;
        case ErrorKind::MissingUpstream:
        case ErrorKind::HorizonMissing:
            return 3;
        default:
            return 4;
    }
}

}  // namespace climrisk
