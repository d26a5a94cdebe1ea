#include "climrisk/risk.hpp"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"
#include "climrisk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace climrisk {

LossSample portfolio_losses(std::string portfolio_id, double horizon, std::span<const double> baseline_equity,
                            std::span<const double> stressed_equity, std::span<const double> weights,
                            std::span<const double> initial_equity) {
    const std::size_t n = weights.size();
    if (n == 0 || initial_equity.size() != n)
        throw Error(ErrorKind::WeightMismatch, "weights and initial equities must cover the same firms");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9)
        throw Error(ErrorKind::WeightMismatch, "weights sum to " + csv::format_number(total));
    if (baseline_equity.size() % n != 0 || stressed_equity.size() != baseline_equity.size())
        throw Error(ErrorKind::WeightMismatch, "equity panels do not match the number of weights");
    for (double e : initial_equity)
        if (!(e > 0.0)) throw Error(ErrorKind::InvalidInputs, "initial equities must be positive");

    LossSample s{std::move(portfolio_id), horizon, {}, {}};
    const std::size_t paths = baseline_equity.size() / n;
    s.baseline.resize(paths);
    s.stressed.resize(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        double lb = 0.0, ls = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            lb += weights[j] * (baseline_equity[p * n + j] / initial_equity[j] - 1.0);
            ls += weights[j] * (stressed_equity[p * n + j] / initial_equity[j] - 1.0);
        }
        s.baseline[p] = -lb * 100.0;
        s.stressed[p] = -ls * 100.0;
    }
    return s;
}

std::vector<LossSample> loss_samples(const LossPanel& panel, std::size_t portfolio) {
    std::vector<LossSample> out;
    for (std::size_t h = 0; h < panel.horizons.size(); ++h) {
        const auto a = panel.index(portfolio, h, 0), b = a + panel.n_paths;
        out.push_back({panel.portfolios.at(portfolio), panel.horizons[h],
                       {panel.baseline.begin() + a, panel.baseline.begin() + b},
                       {panel.stressed.begin() + a, panel.stressed.begin() + b}});
    }
    return out;
}

namespace {

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::InvalidInputs, "level must lie in (0, 1)");
}

double sorted_quantile(const std::vector<double>& x, double level) {
    const double h = static_cast<double>(x.size() - 1) * level;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

TailMeasures sorted_tail(const std::vector<double>& x, std::span<const double> suffix_sum, double level) {
    check_level(level);
    TailMeasures t;
    t.var = sorted_quantile(x, level);
    const auto first = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t.var) - x.begin());
    std::size_t count = x.size() - first;
    std::size_t from = first;
    if (count == 0) {
        count = static_cast<std::size_t>(std::ceil((1.0 - level) * static_cast<double>(x.size()) - 1e-9));
        if (count == 0) throw Error(ErrorKind::EmptyTail, "no observations in the loss tail");
        count = std::min(count, x.size());
        from = x.size() - count;
    }
    t.es = suffix_sum[from] / static_cast<double>(count);
    // Guard the ordering against summation rounding.
    t.es = std::max(t.es, t.var);
    return t;
}

std::vector<double> sorted_copy(std::span<const double> losses) {
    if (losses.empty()) throw Error(ErrorKind::EmptyLosses, "loss vector is empty");
    std::vector<double> x(losses.begin(), losses.end());
    std::sort(x.begin(), x.end());
    return x;
}

std::vector<double> suffix_sums(const std::vector<double>& x) {
    std::vector<double> s(x.size() + 1, 0.0);
    for (std::size_t i = x.size(); i-- > 0;) s[i] = s[i + 1] + x[i];
    return s;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw Error(ErrorKind::EmptyLosses, "loss vector is empty");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string level_tag(double level) {
    return csv::format_number(std::round(level * 1000.0) / 10.0);
}

}  // namespace

double var(std::span<const double> losses, double level) {
    check_level(level);
    return sorted_quantile(sorted_copy(losses), level);
}

double expected_shortfall(std::span<const double> losses, double level) {
    const auto x = sorted_copy(losses);
    return sorted_tail(x, suffix_sums(x), level).es;
}

std::vector<TailMeasures> tail_measures(std::span<const double> losses, std::span<const double> levels) {
    const auto x = sorted_copy(losses);
    const auto s = suffix_sums(x);
    std::vector<TailMeasures> out;
    for (double l : levels) out.push_back(sorted_tail(x, s, l));
    return out;
}

RiskReport risk_report(const std::vector<LossSample>& samples, const RiskOptions& options) {
    if (samples.empty()) throw Error(ErrorKind::EmptyLosses, "no loss samples");
    RiskReport r;
    r.portfolio_id = samples.front().portfolio_id;
    r.levels = options.levels;
    r.addon_level = options.addon_level;
    r.addon_horizon = options.addon_horizon;
    const auto level_it = std::find(options.levels.begin(), options.levels.end(), options.addon_level);
    if (level_it == options.levels.end())
        throw Error(ErrorKind::InvalidInputs, "add-on level must be one of the report levels");
    bool found = false;
    for (const auto& s : samples) {
        HorizonRisk h;
        h.horizon = s.horizon;
        h.mean_baseline = mean(s.baseline);
        h.mean_stressed = mean(s.stressed);
        h.delta_mean = h.mean_stressed - h.mean_baseline;
        h.baseline = tail_measures(s.baseline, options.levels);
        h.stressed = tail_measures(s.stressed, options.levels);
        if (s.horizon == options.addon_horizon) {
            const auto k = static_cast<std::size_t>(level_it - options.levels.begin());
            r.addon_pct = (h.stressed[k].var / h.baseline[k].var - 1.0) * 100.0;
            found = true;
        }
        r.horizons.push_back(std::move(h));
    }
    if (!found)
        throw Error(ErrorKind::HorizonMissing,
                    "no simulated horizon at " + csv::format_number(options.addon_horizon) + " years");
    return r;
}

std::vector<RiskReport> risk_reports(const LossPanel& panel, const RiskOptions& options, int threads) {
    std::vector<RiskReport> out(panel.portfolios.size());
    parallel_for(out.size(), threads, [&](std::size_t p) { out[p] = risk_report(loss_samples(panel, p), options); });
    return out;
}

std::string report_to_csv(const std::vector<RiskReport>& reports) {
    std::vector<std::string> header{"index", "horizon", "delta_L"};
    const auto levels = reports.empty() ? RiskOptions{}.levels : reports.front().levels;
    for (double l : levels) header.push_back("delta_var" + level_tag(l));
    for (double l : levels) header.push_back("delta_es" + level_tag(l));
    csv::Writer w(header);
    for (const auto& r : reports)
        for (const auto& h : r.horizons) {
            w.cell(r.portfolio_id).cell(h.horizon).cell(h.delta_mean);
            for (std::size_t k = 0; k < levels.size(); ++k) w.cell(h.stressed[k].var - h.baseline[k].var);
            for (std::size_t k = 0; k < levels.size(); ++k) w.cell(h.stressed[k].es - h.baseline[k].es);
            w.end_row();
        }
    return w.str();
}

std::string addons_to_csv(const std::vector<RiskReport>& reports) {
    csv::Writer w({"index", "level", "horizon", "var_baseline", "var_stressed", "addon_pct"});
    for (const auto& r : reports) {
        const auto k = static_cast<std::size_t>(std::find(r.levels.begin(), r.levels.end(), r.addon_level) -
                                                r.levels.begin());
        for (const auto& h : r.horizons) {
            if (h.horizon != r.addon_horizon) continue;
            w.cell(r.portfolio_id).cell(r.addon_level).cell(h.horizon);
            w.cell(h.baseline[k].var).cell(h.stressed[k].var).cell(r.addon_pct);
            w.end_row();
        }
    }
    return w.str();
}

std::string vars_by_horizon_to_csv(const std::vector<RiskReport>& reports) {
    csv::Writer w({"index", "horizon", "level", "var_baseline", "var_stressed", "es_baseline", "es_stressed"});
    for (const auto& r : reports)
        for (const auto& h : r.horizons)
            for (std::size_t k = 0; k < r.levels.size(); ++k) {
                w.cell(r.portfolio_id).cell(h.horizon).cell(r.levels[k]);
                w.cell(h.baseline[k].var).cell(h.stressed[k].var).cell(h.baseline[k].es).cell(h.stressed[k].es);
                w.end_row();
            }
    return w.str();
}

}  // namespace climrisk
