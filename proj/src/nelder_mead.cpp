#include "climrisk/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace climrisk {

namespace {

double reflect_into(double x, double lo, double hi) {
    const double width = hi - lo;
    if (!(width > 0.0)) return lo;
    for (int i = 0; i < 8 && (x < lo || x > hi); ++i) x = x < lo ? lo + (lo - x) : hi - (x - hi);
    return std::clamp(x, lo, hi);
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             std::vector<double> step, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opt) {
    const std::size_t n = x0.size();
    NelderMeadResult out;
    auto eval = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = reflect_into(x[i], lower[i], upper[i]);
        ++out.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<double> best = x0;
    double best_value = eval(best);
    out.trace.push_back(best_value);

    for (int round = 0; round <= opt.restarts && out.evaluations < opt.max_evaluations; ++round) {
        std::vector<std::vector<double>> simplex(n + 1, best);
        std::vector<double> values(n + 1, best_value);
        for (std::size_t i = 0; i < n; ++i) {
            double s = step[i];
            if (best[i] + s > upper[i]) s = -s;
            simplex[i + 1][i] += s;
            values[i + 1] = eval(simplex[i + 1]);
        }
        std::vector<std::size_t> order(n + 1);
        bool converged = false;
        while (out.evaluations < opt.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
            const auto lo = order.front(), hi = order.back(), second = order[n - 1];
            out.trace.push_back(std::min(values[lo], best_value));

            double diameter = 0.0;
            for (std::size_t v = 0; v <= n; ++v)
                for (std::size_t i = 0; i < n; ++i)
                    diameter = std::max(diameter, std::abs(simplex[v][i] - simplex[lo][i]) / (upper[i] - lower[i]));
            if (diameter < opt.x_tol || values[hi] - values[lo] <= opt.f_tol) {
                converged = true;
                break;
            }

            std::vector<double> centroid(n, 0.0);
            for (std::size_t v = 0; v <= n; ++v)
                if (v != hi)
                    for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i] / static_cast<double>(n);
            auto along = [&](double t) {
                std::vector<double> p(n);
                for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (simplex[hi][i] - centroid[i]);
                return p;
            };

            auto xr = along(-1.0);
            const double fr = eval(xr);
            if (fr < values[lo]) {
                auto xe = along(-2.0);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[hi] = xe;
                    values[hi] = fe;
                } else {
                    simplex[hi] = xr;
                    values[hi] = fr;
                }
            } else if (fr < values[second]) {
                simplex[hi] = xr;
                values[hi] = fr;
            } else {
                auto xc = fr < values[hi] ? along(-0.5) : along(0.5);
                const double fc = eval(xc);
                if (fc < std::min(fr, values[hi])) {
                    simplex[hi] = xc;
                    values[hi] = fc;
                } else {
                    for (std::size_t v = 0; v <= n; ++v) {
                        if (v == lo) continue;
                        for (std::size_t i = 0; i < n; ++i)
                            simplex[v][i] = simplex[lo][i] + 0.5 * (simplex[v][i] - simplex[lo][i]);
                        values[v] = eval(simplex[v]);
                    }
                }
            }
        }
        const auto lo = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
        const bool improved = values[lo] < best_value;
        if (improved) {
            best = simplex[lo];
            best_value = values[lo];
        }
        out.converged = converged;
        if (!improved && round > 0) break;
        for (auto& s : step) s *= 0.1;
    }
    out.x = best;
    out.value = best_value;
    out.trace.push_back(best_value);
    return out;
}

}  // namespace climrisk
