#pragma once

#include <functional>
#include <vector>

namespace climrisk {

struct NelderMeadOptions {
    int max_evaluations = 4000;
    double x_tol = 1e-12;  // simplex diameter relative to the box
    double f_tol = 1e-30;  // spread of objective values across the simplex
    int restarts = 3;      // fresh simplices built around the incumbent
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> trace;  // best value after each iteration
};

// Box-constrained Nelder-Mead. Trial points outside [lower, upper] are
// reflected back into the box.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             std::vector<double> step, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& options = {});

}  // namespace climrisk
