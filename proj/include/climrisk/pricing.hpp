#pragma once

#include <complex>
#include <optional>

namespace climrisk {

// Constant-amplitude downward jumps: each jump adds -theta to log-assets,
// jumps arrive at rate lambda per year.
struct JumpParams {
    double lambda = 0.0;
    double theta = 0.0;

    // Exponential-mean compensator lambda (1 - e^{-theta}).
    double gamma() const noexcept;
};

struct PricingInputs {
    double asset = 0.0;     // V0
    double strike = 0.0;    // D
    double vol = 0.0;       // total asset volatility
    double maturity = 0.0;  // years
    double rate = 0.0;
    std::optional<JumpParams> jumps;
};

double normal_cdf(double x) noexcept;
double normal_pdf(double x) noexcept;

// Black-Scholes d1 for spot `asset`, strike `strike`.
double bs_d1(double asset, double strike, double vol, double maturity, double rate) noexcept;

// Black-Scholes call. Zero volatility gives the discounted intrinsic
// value; zero strike gives the asset value. Jumps on `in` are ignored.
double bs_call(double asset, double strike, double vol, double maturity, double rate);
double bs_call(const PricingInputs& in);

// Characteristic function of the drift-adjusted log-asset increment
// (gamma - vol^2/2) T + vol W_T - theta N_T.
std::complex<double> char_fn(std::complex<double> v, const PricingInputs& in);

enum class LewisContour {
    Midpoint,  // Im = -1/2 strip, the textbook form with the V0 residue term
    Shifted,   // contour moved past the pole, integrand carries the price
    Auto,      // midpoint, switching to shifted when the price is far out of the money
};

struct LewisOptions {
    double abs_tol_factor = 1e-10;  // absolute price tolerance relative to V0
    double rel_tol = 1e-10;
    LewisContour contour = LewisContour::Auto;
    int max_intervals = 2000;
};

struct LewisResult {
    double price = 0.0;
    double error = 0.0;  // quadrature error propagated to the price
    int evaluations = 0;
    LewisContour contour_used = LewisContour::Midpoint;
};

// Call price under the jump-extended dynamics by complex-plane integration
// of the characteristic function. Throws QuadratureNotConverged.
LewisResult lewis_call_detailed(const PricingInputs& in, const LewisOptions& options = {});
double lewis_call(const PricingInputs& in, const LewisOptions& options = {});

}  // namespace climrisk
