#pragma once

#include <functional>

namespace climrisk {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;  // sum of |Kronrod - Gauss| over the final partition
    int evaluations = 0;
    int intervals = 0;
    bool converged = false;
};

// Globally adaptive 7/15-point Gauss-Kronrod quadrature on [a, b]. The
// interval with the largest error estimate is bisected until the total
// error is below max(abs_tol, rel_tol * |value|) or `max_intervals` is hit.
QuadratureResult integrate_gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                                         double abs_tol, double rel_tol, int max_intervals = 4000);

}  // namespace climrisk
