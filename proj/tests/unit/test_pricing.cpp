#include "doctest.h"

#include "climrisk/errors.hpp"
#include "climrisk/pricing.hpp"

#include <cmath>
#include <random>

using namespace climrisk;

namespace {

// Composite Simpson over standard normal draws of log(V_T); independent of
// the library quadrature.
double lognormal_call_oracle(double V, double D, double s, double T, double r) {
    const int n = 200000;
    const double a = -12.0, b = 12.0, h = (b - a) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = a + i * h;
        const double vt = V * std::exp((r - 0.5 * s * s) * T + s * std::sqrt(T) * x);
        const double f = std::max(vt - D, 0.0) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * f;
    }
    return std::exp(-r * T) * sum * h / 3.0;
}

// Conditioning on the jump count gives a Poisson mixture of BS prices with
// spot V e^{-n theta}.
double poisson_mixture_oracle(const PricingInputs& in) {
    const double lt = in.jumps->lambda * in.maturity;
    double total = 0.0, weight = std::exp(-lt);
    for (int n = 0; n < 400; ++n) {
        if (n > 0) weight *= lt / n;
        total += weight * bs_call(in.asset * std::exp(-n * in.jumps->theta), in.strike, in.vol, in.maturity, in.rate);
        if (n > lt && weight < 1e-18) break;
    }
    return total;
}

PricingInputs make(double V, double D, double s, double T, double r, double lambda, double theta) {
    PricingInputs in{V, D, s, T, r, JumpParams{lambda, theta}};
    return in;
}

}  // namespace

TEST_CASE("bs_call reference values") {
    CHECK(bs_call(100, 50, 0.0, 1, 0) == doctest::Approx(50.0));
    CHECK(bs_call(100, 50, 1e-12, 1, 0) == doctest::Approx(50.0));
    const double oracle = lognormal_call_oracle(100, 100, 0.2, 1, 0.05);
    CHECK(oracle == doctest::Approx(10.4506).epsilon(1e-5));
    CHECK(bs_call(100, 100, 0.2, 1, 0.05) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(bs_call(100, 1e9, 0.2, 1, 0.05) == doctest::Approx(0.0));
    CHECK(bs_call(100, 0, 0.2, 1, 0.05) == 100.0);
    CHECK_THROWS_AS(bs_call(100, 100, -0.1, 1, 0.0), Error);
    CHECK_THROWS_AS(bs_call(100, 100, 0.2, 0.0, 0.0), Error);
}

TEST_CASE("bs_call stays within no-arbitrage bounds") {
    for (double V : {20.0, 80.0, 100.0, 250.0})
        for (double s : {0.05, 0.3, 0.9})
            for (double T : {0.25, 5.0, 30.0}) {
                const double c = bs_call(V, 100, s, T, 0.03);
                CHECK(c <= V);
                CHECK(c >= std::max(V - 100 * std::exp(-0.03 * T), 0.0) - 1e-12);
            }
}

TEST_CASE("char_fn reductions") {
    const auto in = make(100, 80, 0.25, 5, 0.02, 0.3, 0.15);
    const auto one = char_fn({0.0, 0.0}, in);
    CHECK(one.real() == doctest::Approx(1.0));
    CHECK(one.imag() == doctest::Approx(0.0));

    const auto plain = make(100, 80, 0.25, 5, 0.02, 0.0, 0.15);
    for (double u : {0.3, 1.0, 2.5}) {
        const std::complex<double> v(u, -0.5);
        const double var = 0.25 * 0.25 * 5;
        const auto expected = std::exp(std::complex<double>(0, -1) * v * 0.5 * var - 0.5 * var * v * v);
        const auto got = char_fn(v, plain);
        CHECK(got.real() == doctest::Approx(expected.real()).epsilon(1e-12));
        CHECK(got.imag() == doctest::Approx(expected.imag()).epsilon(1e-12));
    }
}

TEST_CASE("char_fn modulus matches sampled log increments") {
    const auto in = make(100, 80, 0.25, 1, 0.02, 0.8, 0.3);
    const double g = in.jumps->gamma();
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> normal;
    std::poisson_distribution<int> poisson(0.8);
    const int n = 200000;
    std::vector<double> y(n);
    for (auto& x : y) x = (g - 0.5 * 0.0625) + 0.25 * normal(rng) - 0.3 * poisson(rng);
    for (double u : {0.5, 1.0, 2.0}) {
        double re = 0, im = 0;
        for (double x : y) {
            re += std::cos(u * x);
            im += std::sin(u * x);
        }
        const double modulus = std::hypot(re, im) / n;
        CHECK(std::abs(modulus - std::abs(char_fn({u, 0.0}, in))) < 1e-2);
    }
}

TEST_CASE("lewis_call without jumps reduces to bs_call") {
    for (double m : {0.5, 0.8, 1.0, 1.5, 2.0})
        for (double s : {0.1, 0.3, 0.5})
            for (double T : {1.0, 7.0, 20.0}) {
                const auto in = make(100 * m, 100, s, T, 0.03, 0.0, 0.2);
                const double bs = bs_call(in);
                CHECK(std::abs(lewis_call(in) - bs) / bs < 1e-6);
            }
    PricingInputs nojumps{100, 100, 0.2, 1, 0.05, std::nullopt};
    CHECK(lewis_call(nojumps) == doctest::Approx(10.4506).epsilon(1e-5));
}

TEST_CASE("lewis_call with vanishing amplitude reduces to bs_call") {
    const auto in = make(100, 90, 0.3, 4, 0.01, 2.0, 1e-9);
    const double bs = bs_call(in);
    CHECK(std::abs(lewis_call(in) - bs) / bs < 1e-5);
}

TEST_CASE("lewis_call matches the Poisson mixture") {
    for (auto [lambda, theta] : {std::pair{0.1, 0.05}, {0.4, 0.2}, {1.0, 0.5}, {3.0, 1.2}})
        for (double m : {0.5, 1.0, 2.0})
            for (double T : {1.0, 10.0}) {
                const auto in = make(100 * m, 100, 0.2, T, 0.02, lambda, theta);
                const double oracle = poisson_mixture_oracle(in);
                const auto res = lewis_call_detailed(in);
                INFO("lambda=" << lambda << " theta=" << theta << " m=" << m << " T=" << T);
                CHECK(res.price == doctest::Approx(oracle).epsilon(1e-8));
            }
}

TEST_CASE("deep out-of-the-money prices keep relative accuracy") {
    const auto in = make(50, 100, 0.1, 1, 0.0, 0.5, 0.3);
    const double oracle = poisson_mixture_oracle(in);
    const auto res = lewis_call_detailed(in);
    CHECK(res.contour_used == LewisContour::Shifted);
    CHECK(res.price == doctest::Approx(oracle).epsilon(1e-7));

    LewisOptions shifted;
    shifted.contour = LewisContour::Shifted;
    const auto atm = make(100, 100, 0.3, 2, 0.01, 0.4, 0.2);
    CHECK(lewis_call(atm, shifted) == doctest::Approx(poisson_mixture_oracle(atm)).epsilon(1e-8));
}

TEST_CASE("lewis_call matches a Monte Carlo of the stressed payoff") {
    const auto in = make(100, 80, 0.25, 5, 0.02, 0.3, 0.15);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal;
    std::poisson_distribution<int> poisson(0.3 * 5);
    const int n = 1000000;
    double sum = 0, sum2 = 0;
    const double drift = (0.02 - 0.5 * 0.0625) * 5;
    for (int i = 0; i < n; ++i) {
        const double vt = 100 * std::exp(drift + 0.25 * std::sqrt(5.0) * normal(rng) - 0.15 * poisson(rng));
        const double payoff = std::exp(-0.02 * 5) * std::max(vt - 80, 0.0);
        sum += payoff;
        sum2 += payoff * payoff;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
    CHECK(std::abs(lewis_call(in) - mean) < 3 * se);
}

TEST_CASE("lewis_call monotonicity, bounds and jump penalty") {
    double prev = 1e300;
    for (double D : {40.0, 60.0, 80.0, 100.0, 140.0}) {
        const double c = lewis_call(make(100, D, 0.3, 5, 0.02, 0.5, 0.2));
        CHECK(c < prev);
        CHECK(c >= 0.0);
        CHECK(c <= 100.0);
        prev = c;
    }
    prev = 0.0;
    for (double s : {0.1, 0.2, 0.3, 0.5}) {
        const double c = lewis_call(make(100, 90, s, 5, 0.02, 0.5, 0.2));
        CHECK(c > prev);
        prev = c;
    }
    prev = 0.0;
    for (double V : {60.0, 90.0, 120.0, 200.0}) {
        const double c = lewis_call(make(V, 90, 0.3, 5, 0.02, 0.5, 0.2));
        CHECK(c > prev);
        prev = c;
    }
    for (double lambda : {0.1, 1.0})
        for (double theta : {0.05, 0.5})
            for (double m : {0.6, 1.0, 1.8}) {
                const auto in = make(100 * m, 100, 0.25, 3, 0.02, lambda, theta);
                CHECK(lewis_call(in) <= bs_call(in));
            }
}

TEST_CASE("tighter tolerance stays within the reported error") {
    const auto in = make(100, 110, 0.2, 3, 0.02, 0.6, 0.25);
    LewisOptions loose;
    loose.abs_tol_factor = 1e-6;
    loose.rel_tol = 1e-6;
    LewisOptions tight = loose;
    tight.abs_tol_factor *= 0.5;
    tight.rel_tol *= 0.5;
    const auto a = lewis_call_detailed(in, loose);
    const auto b = lewis_call_detailed(in, tight);
    CHECK(std::abs(a.price - b.price) <= a.error + 1e-14);
}

TEST_CASE("lewis_call domain checks") {
    CHECK_THROWS_AS(lewis_call(make(100, 100, 0.0, 1, 0, 0.1, 0.1)), Error);
    CHECK_THROWS_AS(lewis_call(make(100, 0.0, 0.2, 1, 0, 0.1, 0.1)), Error);
    CHECK_THROWS_AS(lewis_call(make(100, 100, 0.2, 1, 0, -0.1, 0.1)), Error);
}
