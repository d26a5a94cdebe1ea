#include "climrisk/shock.hpp"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace climrisk {

double estimate_growth(std::span<const EbitdaPoint> series) {
    std::set<int> years;
    for (const auto& p : series) years.insert(p.year);
    if (years.size() < 2)
        throw Error(ErrorKind::DegenerateSeries, "EBITDA regression needs at least two distinct years");

    const double n = static_cast<double>(series.size());
    double mean_t = 0.0, mean_y = 0.0, mean_abs = 0.0;
    for (const auto& p : series) {
        mean_t += p.year;
        mean_y += p.value;
        mean_abs += std::abs(p.value);
    }
    mean_t /= n;
    mean_y /= n;
    mean_abs /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : series) {
        const double dt = p.year - mean_t;
        sxy += dt * (p.value - mean_y);
        sxx += dt * dt;
    }
    const double slope = sxy / sxx;
    if (!(mean_abs > 0.0)) {
        if (slope == 0.0) return 0.0;
        throw Error(ErrorKind::DegenerateSeries, "EBITDA series is identically zero");
    }
    return slope / mean_abs;
}

double required_return(double beta, double market_return) { return beta * market_return; }

double cluster_alpha(double mean_vulnerability, double mean_intensity) {
    if (!(mean_vulnerability >= 0.0 && mean_vulnerability <= 1.0 && mean_intensity >= 0.0 && mean_intensity <= 1.0))
        throw Error(ErrorKind::InvalidInputs, "tier means must lie in [0, 1]");
    return mean_vulnerability * mean_intensity;
}

AlphaTable cluster_alphas(const ClusterAssignment& assignment) {
    AlphaTable out{};
    for (const auto& key : ClusterKey::all())
        out[static_cast<std::size_t>(key.index())] =
            cluster_alpha(assignment.vulnerability_mean(key.vulnerability), assignment.intensity_mean(key.intensity));
    return out;
}

AlphaTable cluster_alphas(const std::map<std::pair<std::string, std::string>, double>& tier_means) {
    auto mean = [&](const char* dim, std::string_view tier) {
        auto it = tier_means.find({dim, std::string(tier)});
        return it == tier_means.end() ? 0.0 : it->second;
    };
    AlphaTable out{};
    for (const auto& key : ClusterKey::all())
        out[static_cast<std::size_t>(key.index())] = cluster_alpha(
            mean("vulnerability", to_string(key.vulnerability)), mean("intensity", to_string(key.intensity)));
    return out;
}

double gordon_equity(double dividend, double growth, double required_return) {
    if (!(required_return > growth))
        throw Error(ErrorKind::GordonInvalid, "required return must exceed the growth rate");
    return dividend * (1.0 + growth) / (required_return - growth);
}

double gordon_shock(const ShockInputs& in) {
    if (!(in.alpha >= 0.0 && in.alpha <= 1.0)) throw Error(ErrorKind::InvalidInputs, "alpha must lie in [0, 1]");
    if (!(1.0 + in.growth > 0.0)) throw Error(ErrorKind::DegenerateGrowth, "growth rate must exceed -1");
    const double g = in.growth, q = in.required_return;
    const double g_stressed = (1.0 - in.alpha) * g;
    if (!(q > g_stressed))
        throw Error(ErrorKind::GordonInvalid, "required return " + csv::format_number(q) +
                                                  " does not exceed stressed growth " +
                                                  csv::format_number(g_stressed));
    if (in.alpha == 0.0 || g == 0.0) return 0.0;
    if (!(q > g))
        throw Error(ErrorKind::GordonInvalid, "required return " + csv::format_number(q) +
                                                  " does not exceed growth " + csv::format_number(g));
    return (1.0 + g_stressed) / (q - g_stressed) * (q - g) / (1.0 + g) - 1.0;
}

std::optional<double> reference_market_return(const FirmRecord& firm,
                                              const std::map<std::string, double>& market_returns) {
    for (const auto& m : firm.index_memberships)
        if (auto it = market_returns.find(m.index_id); it != market_returns.end()) return it->second;
    return std::nullopt;
}

ShockResult stressed_equity_targets(const std::vector<FirmRecord>& firms,
                                    const std::map<std::string, ClusterKey>& clusters, const AlphaTable& alphas,
                                    const std::map<std::string, double>& market_returns) {
    ShockResult result;
    for (const auto& f : firms) {
        auto fail = [&](std::string reason) {
            result.ledger.add(ExclusionStage::ShockComputation, f.firm_id, std::move(reason));
        };
        auto key = clusters.find(f.firm_id);
        if (key == clusters.end()) {
            fail("no climate cluster");
            continue;
        }
        const auto rm = reference_market_return(f, market_returns);
        if (!rm) {
            fail("no market return for any index membership");
            continue;
        }
        if (!f.equity_value || !f.capm_beta) {
            fail("equity value or beta missing");
            continue;
        }
        StressedEquity s;
        s.firm_id = f.firm_id;
        s.cluster = key->second;
        s.alpha = alphas[static_cast<std::size_t>(s.cluster.index())];
        try {
            s.growth = estimate_growth(f.ebitda_series);
            s.required_return = required_return(*f.capm_beta, *rm);
            s.shock = gordon_shock({s.growth, s.required_return, s.alpha});
        } catch (const Error& e) {
            fail(std::string(to_string(e.kind())));
            continue;
        }
        s.stressed_value = (1.0 + s.shock) * *f.equity_value;
        result.targets.push_back(std::move(s));
    }
    std::sort(result.targets.begin(), result.targets.end(),
              [](const auto& a, const auto& b) { return a.firm_id < b.firm_id; });
    return result;
}

std::string shocks_to_csv(const std::vector<StressedEquity>& targets) {
    csv::Writer w({"firm_id", "cluster", "alpha", "g", "q", "shock", "stressed_equity"});
    for (const auto& s : targets) {
        w.cell(s.firm_id).cell(s.cluster.label()).cell(s.alpha).cell(s.growth).cell(s.required_return);
        w.cell(s.shock).cell(s.stressed_value);
        w.end_row();
    }
    return w.str();
}

std::vector<StressedEquity> load_shocks(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto c_id = t.column("firm_id"), c_cluster = t.column("cluster"), c_alpha = t.column("alpha");
    const auto c_g = t.column("g"), c_q = t.column("q"), c_shock = t.column("shock");
    const auto c_se = t.column("stressed_equity");
    std::vector<StressedEquity> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const auto where = path.string() + " line " + std::to_string(t.line_numbers[r]);
        StressedEquity s;
        s.firm_id = row[c_id];
        const auto& label = row[c_cluster];
        const auto slash = label.find('/');
        if (slash == std::string::npos) throw Error(ErrorKind::NumericParse, where + ": bad cluster label");
        s.cluster = {parse_vulnerability_tier(label.substr(0, slash)), parse_intensity_tier(label.substr(slash + 1))};
        s.alpha = csv::parse_number(row[c_alpha], where);
        s.growth = csv::parse_number(row[c_g], where);
        s.required_return = csv::parse_number(row[c_q], where);
        s.shock = csv::parse_number(row[c_shock], where);
        s.stressed_value = csv::parse_number(row[c_se], where);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace climrisk
