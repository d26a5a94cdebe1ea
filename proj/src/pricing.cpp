#include "climrisk/pricing.hpp"

#include "climrisk/errors.hpp"
#include "climrisk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace climrisk {

double JumpParams::gamma() const noexcept { return lambda * -std::expm1(-theta); }

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) noexcept { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double bs_d1(double asset, double strike, double vol, double maturity, double rate) noexcept {
    return (std::log(asset / strike) + (rate + 0.5 * vol * vol) * maturity) / (vol * std::sqrt(maturity));
}

double bs_call(double asset, double strike, double vol, double maturity, double rate) {
    if (!(asset > 0.0) || !(strike >= 0.0) || !(vol >= 0.0) || !(maturity > 0.0) || !std::isfinite(rate))
        throw Error(ErrorKind::DomainError, "bs_call needs asset > 0, strike >= 0, vol >= 0, maturity > 0");
    if (strike == 0.0) return asset;
    const double discounted = strike * std::exp(-rate * maturity);
    if (vol == 0.0) return std::max(asset - discounted, 0.0);
    const double d1 = bs_d1(asset, strike, vol, maturity, rate);
    const double d2 = d1 - vol * std::sqrt(maturity);
    return std::max(asset * normal_cdf(d1) - discounted * normal_cdf(d2), 0.0);
}

double bs_call(const PricingInputs& in) { return bs_call(in.asset, in.strike, in.vol, in.maturity, in.rate); }

std::complex<double> char_fn(std::complex<double> v, const PricingInputs& in) {
    using namespace std::complex_literals;
    const JumpParams jumps = in.jumps.value_or(JumpParams{});
    const double var = in.vol * in.vol * in.maturity;
    const double gamma = jumps.gamma();
    const auto exponent = 1i * v * (gamma * in.maturity - 0.5 * var) - 0.5 * var * v * v -
                          jumps.lambda * in.maturity * (1.0 - std::exp(-1i * v * jumps.theta));
    return std::exp(exponent);
}

namespace {

// Truncation point where the Gaussian envelope exp(-vol^2 T u^2 / 2) drops
// below 1e-14.
double truncation(double vol, double maturity) {
    return std::sqrt(2.0 * std::log(1e14) / (vol * vol * maturity));
}

// log E[e^{nu Y}] for the drift-adjusted log increment Y.
double log_mgf(double nu, const PricingInputs& in, const JumpParams& j) {
    const double var = in.vol * in.vol * in.maturity;
    return nu * (j.gamma() * in.maturity - 0.5 * var) + 0.5 * nu * nu * var +
           j.lambda * in.maturity * std::expm1(-nu * j.theta);
}

// Contour height above the pole at i minimising the integrand at w = 0,
// found by golden-section search on (1, 1 + span].
double shifted_height(double k, const PricingInputs& in, const JumpParams& j) {
    auto psi = [&](double nu) { return (1.0 - nu) * k + log_mgf(nu, in, j) - std::log(nu * (nu - 1.0)); };
    double lo = 1.0 + 1e-6, hi = 1.0 + std::max(2.0, 4.0 * std::abs(k) / (in.vol * in.vol * in.maturity) + 2.0);
    hi = std::min(hi, 200.0);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
    double f1 = psi(x1), f2 = psi(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = psi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = psi(x2);
        }
    }
    return 0.5 * (lo + hi);
}

struct Bracket {
    double value;  // call / (V0 e^{-gamma T})
    double error;
    int evaluations;
};

Bracket midpoint_bracket(const PricingInputs& in, double z, const LewisOptions& opt, double scale) {
    using namespace std::complex_literals;
    const double abs_tol_integral = opt.abs_tol_factor * std::numbers::pi * std::exp(0.5 * z) / scale;
    auto integrand = [&](double u) {
        const std::complex<double> v(u, -0.5);
        return std::real(std::exp(1i * u * z) * char_fn(v, in)) / (u * u + 0.25);
    };
    const auto q = integrate_gauss_kronrod(integrand, 0.0, truncation(in.vol, in.maturity), abs_tol_integral,
                                           opt.rel_tol, opt.max_intervals);
    if (!q.converged)
        throw Error(ErrorKind::QuadratureNotConverged, "Lewis midpoint integral error " + std::to_string(q.error));
    const double factor = std::exp(-0.5 * z) / std::numbers::pi;
    return {1.0 - factor * q.value, factor * q.error, q.evaluations};
}

Bracket shifted_bracket(const PricingInputs& in, double z, const JumpParams& j, const LewisOptions& opt) {
    using namespace std::complex_literals;
    const double k = -z;
    const double nu = shifted_height(k, in, j);
    auto integrand = [&](double w) {
        const std::complex<double> v(-w, -nu);
        const std::complex<double> denom(w * w - nu * nu + nu, w * (2.0 * nu - 1.0));
        return std::real(std::exp(1i * w * k) * char_fn(v, in) / denom);
    };
    const auto q = integrate_gauss_kronrod(integrand, 0.0, truncation(in.vol, in.maturity), 1e-300, opt.rel_tol,
                                           opt.max_intervals);
    if (!q.converged)
        throw Error(ErrorKind::QuadratureNotConverged, "Lewis shifted integral error " + std::to_string(q.error));
    const double factor = std::exp((1.0 - nu) * k) / std::numbers::pi;
    return {-factor * q.value, factor * q.error, q.evaluations};
}

}  // namespace

LewisResult lewis_call_detailed(const PricingInputs& in, const LewisOptions& opt) {
    if (!(in.asset > 0.0) || !(in.strike > 0.0) || !(in.vol > 0.0) || !(in.maturity > 0.0) ||
        !std::isfinite(in.rate))
        throw Error(ErrorKind::DomainError, "lewis_call needs asset, strike, vol, maturity > 0");
    const JumpParams j = in.jumps.value_or(JumpParams{});
    if (!(j.lambda >= 0.0) || !(j.theta >= 0.0))
        throw Error(ErrorKind::DomainError, "jump intensity and amplitude must be nonnegative");

    const double gamma = j.gamma();
    const double z = std::log(in.asset / in.strike) + (in.rate - gamma) * in.maturity;
    const double scale = std::exp(-gamma * in.maturity);  // forward discount e^{-gamma T}

    LewisResult out;
    Bracket b{};
    if (opt.contour == LewisContour::Shifted) {
        b = shifted_bracket(in, z, j, opt);
        out.contour_used = LewisContour::Shifted;
    } else {
        try {
            b = midpoint_bracket(in, z, opt, scale);
        } catch (const Error&) {
            // Deep out of the money the midpoint tolerance is below rounding;
            // the shifted contour is the better form there anyway.
            if (opt.contour != LewisContour::Auto || z >= 0.0) throw;
            b = shifted_bracket(in, z, j, opt);
            out.contour_used = LewisContour::Shifted;
            const double bracket = std::clamp(b.value, 0.0, 1.0);
            out.price = in.asset * scale * bracket;
            out.error = in.asset * scale * b.error;
            out.evaluations = b.evaluations;
            return out;
        }
        out.contour_used = LewisContour::Midpoint;
        // Far out of the money the midpoint form is 1 minus a number close
        // to 1; the shifted contour integrates the small price directly.
        if (opt.contour == LewisContour::Auto && z < 0.0 && b.value < 1e-3) {
            try {
                const auto s = shifted_bracket(in, z, j, opt);
                b = {s.value, s.error, b.evaluations + s.evaluations};
                out.contour_used = LewisContour::Shifted;
            } catch (const Error&) {
                // Keep the midpoint value.
            }
        }
    }
    const double bracket = std::clamp(b.value, 0.0, 1.0);
    out.price = in.asset * scale * bracket;
    out.error = in.asset * scale * b.error;
    out.evaluations = b.evaluations;
    return out;
}

double lewis_call(const PricingInputs& in, const LewisOptions& options) {
    return lewis_call_detailed(in, options).price;
}

}  // namespace climrisk
