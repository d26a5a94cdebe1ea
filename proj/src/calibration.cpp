#include "climrisk/calibration.hpp"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"
#include "climrisk/nelder_mead.hpp"
#include "climrisk/parallel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace climrisk {

namespace {

struct Residual {
    double f1, f2;                  // relative residuals
    double j11, j12, j21, j22;      // Jacobian in (log V, log s)
};

Residual fvm_residual(double x, double y, double E, double sE, double D, double T, double r) {
    const double V = std::exp(x), s = std::exp(y);
    const double sqT = std::sqrt(T);
    const double d1 = bs_d1(V, D, s, T, r);
    const double d2 = d1 - s * sqT;
    const double Nd1 = normal_cdf(d1), nd1 = normal_pdf(d1);
    const double C = V * Nd1 - D * std::exp(-r * T) * normal_cdf(d2);
    const double target2 = E * sE;
    Residual out;
    out.f1 = (C - E) / E;
    out.f2 = (Nd1 * V * s - target2) / target2;
    out.j11 = V * Nd1 / E;
    out.j12 = s * V * nd1 * sqT / E;
    out.j21 = V * (s * Nd1 + nd1 / sqT) / target2;
    out.j22 = s * V * (Nd1 - nd1 * d2) / target2;
    return out;
}

double norm2(const Residual& r) { return r.f1 * r.f1 + r.f2 * r.f2; }

constexpr double kResidualTol = 1e-12;

std::optional<FvmSolution> newton(double x, double y, double E, double sE, double D, double T, double r) {
    auto res = fvm_residual(x, y, E, sE, D, T, r);
    for (int it = 1; it <= 200; ++it) {
        if (!std::isfinite(norm2(res))) return std::nullopt;
        const double det = res.j11 * res.j22 - res.j12 * res.j21;
        if (!std::isfinite(det) || det == 0.0) return std::nullopt;
        const double dx = -(res.j22 * res.f1 - res.j12 * res.f2) / det;
        const double dy = -(-res.j21 * res.f1 + res.j11 * res.f2) / det;
        // Damping: cap the step in log space, then backtrack on the residual norm.
        double scale = std::min(1.0, 2.0 / std::max(std::abs(dx), std::abs(dy)));
        const double before = norm2(res);
        Residual trial{};
        bool accepted = false;
        for (int k = 0; k < 40; ++k) {
            trial = fvm_residual(x + scale * dx, y + scale * dy, E, sE, D, T, r);
            if (std::isfinite(norm2(trial)) && norm2(trial) < before) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            if (std::max(std::abs(res.f1), std::abs(res.f2)) < kResidualTol)
                return FvmSolution{std::exp(x), std::exp(y), res.f1, res.f2, it};
            return std::nullopt;
        }
        x += scale * dx;
        y += scale * dy;
        res = trial;
        const double step = scale * std::max(std::abs(dx), std::abs(dy));
        if (std::max(std::abs(res.f1), std::abs(res.f2)) < kResidualTol && step < 1e-13)
            return FvmSolution{std::exp(x), std::exp(y), res.f1, res.f2, it};
        if (std::max(std::abs(res.f1), std::abs(res.f2)) < 1e-15)
            return FvmSolution{std::exp(x), std::exp(y), res.f1, res.f2, it};
    }
    if (std::max(std::abs(res.f1), std::abs(res.f2)) < kResidualTol)
        return FvmSolution{std::exp(x), std::exp(y), res.f1, res.f2, 200};
    return std::nullopt;
}

template <class F>
double bisect(F&& f, double lo, double hi, int iterations = 200) {
    double flo = f(lo);
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(lo))) break;
    }
    return 0.5 * (lo + hi);
}

// For fixed log-vol y, the log asset value matching the equity price.
double asset_for_vol(double y, double E, double D, double T, double r) {
    const double s = std::exp(y);
    const double lo = std::log(E), hi = std::log(E + D) + 1.0;
    return bisect([&](double x) { return bs_call(std::exp(x), D, s, T, r) - E; }, lo, hi);
}

}  // namespace

FvmSolution solve_fvm(double E, double sE, double D, double T, double r) {
    if (!(E > 0.0) || !(sE > 0.0) || !(T > 0.0) || !(D >= 0.0) || !std::isfinite(r) || !std::isfinite(E) ||
        !std::isfinite(D))
        throw Error(ErrorKind::InvalidInputs, "solve_fvm needs equity, equity vol, maturity > 0 and debt >= 0");
    if (D == 0.0) return {E, sE, 0.0, 0.0, 0};

    const double pv_debt = D * std::exp(-r * T);
    const double starts[][2] = {
        {E + pv_debt, sE * E / (E + pv_debt)},
        {E + D, sE * E / (E + D)},
        {E + pv_debt, sE},
        {E + 0.5 * pv_debt, sE * E / (E + 0.5 * pv_debt)},
    };
    for (const auto& s : starts)
        if (auto sol = newton(std::log(s[0]), std::log(s[1]), E, sE, D, T, r)) return *sol;

    // Nested bisection: the outer search runs on log-vol, each inner solve
    // prices the equity exactly.
    auto vol_gap = [&](double y) {
        const double x = asset_for_vol(y, E, D, T, r);
        return fvm_residual(x, y, E, sE, D, T, r).f2;
    };
    double lo = std::log(1e-6), hi = std::log(std::max(5.0, 4.0 * sE));
    if ((vol_gap(lo) < 0) != (vol_gap(hi) < 0)) {
        const double y = bisect(vol_gap, lo, hi);
        const double x = asset_for_vol(y, E, D, T, r);
        if (auto sol = newton(x, y, E, sE, D, T, r)) return *sol;
        const auto res = fvm_residual(x, y, E, sE, D, T, r);
        if (std::max(std::abs(res.f1), std::abs(res.f2)) < 1e-9)
            return {std::exp(x), std::exp(y), res.f1, res.f2, 0};
    }
    throw Error(ErrorKind::NoConvergence, "FVM system has no root from any start (E=" + csv::format_number(E) +
                                              ", sigma_E=" + csv::format_number(sE) + ", D=" + csv::format_number(D) +
                                              ")");
}

std::pair<double, double> split_correlation(double sigma_hat, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorKind::InvalidInputs, "rho must lie in [0, 1]");
    return {sigma_hat * std::sqrt(1.0 - rho), sigma_hat * std::sqrt(rho)};
}

FvmFirmParams make_fvm_params(std::string firm_id, double asset_value, double asset_vol, double rho) {
    const auto [sigma, omega] = split_correlation(asset_vol, rho);
    return {std::move(firm_id), asset_value, asset_vol, rho, sigma, omega};
}

FvmEstimate estimate_fvm(const std::vector<FirmRecord>& firms, double rho, int threads) {
    std::vector<std::optional<FvmFirmParams>> solved(firms.size());
    std::vector<std::string> failures(firms.size());
    parallel_for(firms.size(), threads, [&](std::size_t i) {
        const auto& f = firms[i];
        try {
            if (!f.equity_value || !f.equity_vol || !f.total_debt || !f.debt_maturity || !f.risk_free)
                throw Error(ErrorKind::InvalidInputs, "FVM inputs missing");
            const auto sol = solve_fvm(*f.equity_value, *f.equity_vol, *f.total_debt, *f.debt_maturity, *f.risk_free);
            solved[i] = make_fvm_params(f.firm_id, sol.asset_value, sol.asset_vol, rho);
        } catch (const Error& e) {
            failures[i] = std::string(to_string(e.kind()));
        }
    });
    FvmEstimate out;
    for (std::size_t i = 0; i < firms.size(); ++i) {
        if (solved[i]) out.params.push_back(std::move(*solved[i]));
        else out.ledger.add(ExclusionStage::FvmEstimation, firms[i].firm_id, failures[i]);
    }
    std::sort(out.params.begin(), out.params.end(), [](auto& a, auto& b) { return a.firm_id < b.firm_id; });
    return out;
}

namespace {

PricingInputs pricing_inputs(const CalibrationFirm& f, const JumpParams& j) {
    return {f.asset_value, f.debt, f.asset_vol, f.maturity, f.rate, j};
}

}  // namespace

double jump_objective(const std::vector<CalibrationFirm>& firms, const JumpParams& jumps) {
    double ss = 0.0;
    for (const auto& f : firms) {
        const double c = f.debt > 0.0 ? lewis_call(pricing_inputs(f, jumps)) : f.asset_value * std::exp(-jumps.gamma() * f.maturity);
        const double e = (f.target - c) / f.target;
        ss += e * e;
    }
    return ss;
}

JumpCalibration calibrate_cluster_jumps(const ClusterKey& key, double alpha, std::vector<CalibrationFirm> firms,
                                        const JumpCalibrationOptions& opt) {
    if (firms.empty()) throw Error(ErrorKind::EmptyCluster, "cluster " + key.label() + " has no firms");
    JumpCalibration out;

    const double l0 = std::log(opt.lambda_min), l1 = std::log(opt.lambda_max);
    const double t0 = std::log(opt.theta_min), t1 = std::log(opt.theta_max);
    auto grid_point = [&](int i, int j) {
        const double fl = opt.grid > 1 ? static_cast<double>(i) / (opt.grid - 1) : 0.5;
        const double ft = opt.grid > 1 ? static_cast<double>(j) / (opt.grid - 1) : 0.5;
        return std::pair{l0 + fl * (l1 - l0), t0 + ft * (t1 - t0)};
    };

    // Screen every firm across the seed grid; a firm the pricer cannot
    // handle anywhere is removed and ledgered.
    std::vector<CalibrationFirm> usable;
    for (auto& f : firms) {
        std::string failure;
        if (!(f.target > 0.0)) failure = "nonpositive stressed target";
        for (int i = 0; i < opt.grid && failure.empty(); ++i)
            for (int j = 0; j < opt.grid && failure.empty(); ++j) {
                const auto [ll, lt] = grid_point(i, j);
                try {
                    if (f.debt > 0.0) lewis_call(pricing_inputs(f, {std::exp(ll), std::exp(lt)}));
                } catch (const Error& e) {
                    failure = std::string(to_string(e.kind()));
                }
            }
        if (failure.empty()) usable.push_back(std::move(f));
        else out.ledger.add(ExclusionStage::FvmEstimation, f.firm_id, "jump calibration: " + failure);
    }
    if (usable.empty()) throw Error(ErrorKind::EmptyCluster, "cluster " + key.label() + " has no priceable firms");

    auto objective = [&](const std::vector<double>& p) {
        ++out.evaluations;
        try {
            return jump_objective(usable, {std::exp(p[0]), std::exp(p[1])});
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    struct Seed {
        double value;
        int i, j;
    };
    std::vector<Seed> seeds;
    for (int i = 0; i < opt.grid; ++i)
        for (int j = 0; j < opt.grid; ++j) {
            const auto [ll, lt] = grid_point(i, j);
            seeds.push_back({objective({ll, lt}), i, j});
        }
    std::stable_sort(seeds.begin(), seeds.end(), [](auto& a, auto& b) { return a.value < b.value; });
    out.trace.push_back(seeds.front().value);

    const std::vector<double> lower{l0, t0}, upper{l1, t1};
    const double cell_l = (l1 - l0) / std::max(1, opt.grid - 1), cell_t = (t1 - t0) / std::max(1, opt.grid - 1);
    NelderMeadOptions nm;
    nm.max_evaluations = opt.max_evaluations;
    std::optional<NelderMeadResult> best;
    for (int s = 0; s < std::min<int>(opt.starts, static_cast<int>(seeds.size())); ++s) {
        if (!std::isfinite(seeds[static_cast<std::size_t>(s)].value)) break;
        const auto [ll, lt] = grid_point(seeds[static_cast<std::size_t>(s)].i, seeds[static_cast<std::size_t>(s)].j);
        auto r = nelder_mead(objective, {ll, lt}, {0.5 * cell_l, 0.5 * cell_t}, lower, upper, nm);
        if (!best || r.value < best->value) {
            for (double v : r.trace) out.trace.push_back(std::min(v, out.trace.back()));
            best = std::move(r);
        }
    }
    if (!best || !std::isfinite(best->value))
        throw Error(ErrorKind::OptimizerFailed, "no finite objective value for cluster " + key.label());

    ClusterParams& p = out.params;
    p.key = key;
    p.alpha = alpha;
    p.jumps = {std::exp(best->x[0]), std::exp(best->x[1])};
    p.rmspe = std::sqrt(best->value);
    p.firm_count = usable.size();
    double model = 0.0, target = 0.0;
    for (const auto& f : usable) {
        const double c = f.debt > 0.0 ? lewis_call(pricing_inputs(f, p.jumps))
                                      : f.asset_value * std::exp(-p.jumps.gamma() * f.maturity);
        model += (1.0 - c / f.equity) * 100.0;
        target += (1.0 - f.target / f.equity) * 100.0;
    }
    p.model_mean_loss = model / static_cast<double>(usable.size());
    p.target_mean_loss = target / static_cast<double>(usable.size());
    spdlog::debug("cluster {}: lambda={} theta={} rmspe={} after {} evaluations", key.label(), p.jumps.lambda,
                  p.jumps.theta, p.rmspe, out.evaluations);
    return out;
}

std::map<ClusterKey, std::vector<CalibrationFirm>> calibration_sets(const std::vector<FirmRecord>& firms,
                                                                   const std::vector<FvmFirmParams>& fvm,
                                                                   const std::vector<StressedEquity>& shocks) {
    std::map<std::string, const FirmRecord*> by_id;
    for (const auto& f : firms) by_id[f.firm_id] = &f;
    std::map<std::string, const StressedEquity*> shock_by_id;
    for (const auto& s : shocks) shock_by_id[s.firm_id] = &s;
    std::map<ClusterKey, std::vector<CalibrationFirm>> out;
    for (const auto& p : fvm) {
        auto f = by_id.find(p.firm_id);
        auto s = shock_by_id.find(p.firm_id);
        if (f == by_id.end() || s == shock_by_id.end()) continue;
        const auto& rec = *f->second;
        out[s->second->cluster].push_back({p.firm_id, p.asset_value, p.asset_vol, *rec.total_debt,
                                           *rec.debt_maturity, *rec.risk_free, *rec.equity_value,
                                           s->second->stressed_value});
    }
    return out;
}

std::string fvm_params_to_csv(const std::vector<FvmFirmParams>& params) {
    csv::Writer w({"firm_id", "asset_value", "asset_vol"});
    for (const auto& p : params) {
        w.cell(p.firm_id).cell(p.asset_value).cell(p.asset_vol);
        w.end_row();
    }
    return w.str();
}

std::vector<FvmFirmParams> load_fvm_params(const std::filesystem::path& path, double rho) {
    const auto t = csv::read(path);
    const auto c_id = t.column("firm_id"), c_v = t.column("asset_value"), c_s = t.column("asset_vol");
    std::vector<FvmFirmParams> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto where = path.string() + " line " + std::to_string(t.line_numbers[r]);
        out.push_back(make_fvm_params(t.rows[r][c_id], csv::parse_number(t.rows[r][c_v], where),
                                      csv::parse_number(t.rows[r][c_s], where), rho));
    }
    return out;
}

std::string cluster_params_to_csv(const std::vector<ClusterParams>& params) {
    csv::Writer w({"vulnerability_tier", "intensity_tier", "lambda", "theta", "gamma", "alpha", "rmspe",
                   "model_mean_loss", "target_mean_loss"});
    for (const auto& p : params) {
        w.cell(to_string(p.key.vulnerability)).cell(to_string(p.key.intensity));
        w.cell(p.jumps.lambda).cell(p.jumps.theta).cell(p.jumps.gamma()).cell(p.alpha).cell(p.rmspe);
        w.cell(p.model_mean_loss).cell(p.target_mean_loss);
        w.end_row();
    }
    return w.str();
}

std::vector<ClusterParams> load_cluster_params(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto c_v = t.column("vulnerability_tier"), c_i = t.column("intensity_tier");
    const auto c_l = t.column("lambda"), c_t = t.column("theta"), c_a = t.column("alpha");
    const auto c_r = t.column("rmspe"), c_m = t.column("model_mean_loss"), c_g = t.column("target_mean_loss");
    std::vector<ClusterParams> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto where = path.string() + " line " + std::to_string(t.line_numbers[r]);
        ClusterParams p;
        p.key = {parse_vulnerability_tier(row[c_v]), parse_intensity_tier(row[c_i])};
        p.jumps = {csv::parse_number(row[c_l], where), csv::parse_number(row[c_t], where)};
        p.alpha = csv::parse_number(row[c_a], where);
        p.rmspe = csv::parse_number(row[c_r], where);
        p.model_mean_loss = csv::parse_number(row[c_m], where);
        p.target_mean_loss = csv::parse_number(row[c_g], where);
        out.push_back(p);
    }
    return out;
}

}  // namespace climrisk
