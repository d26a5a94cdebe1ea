#include "climrisk/fixtures.hpp"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"
#include "climrisk/random.hpp"

#include "json.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace climrisk {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(FixtureShocks s) noexcept {
    return s == FixtureShocks::Gordon ? "gordon" : "planted_jumps";
}

FixtureShocks parse_fixture_shocks(std::string_view text) {
    if (text == "planted_jumps") return FixtureShocks::PlantedJumps;
    if (text == "gordon") return FixtureShocks::Gordon;
    throw Error(ErrorKind::SpecInvalid, "unknown fixture shock mode '" + std::string(text) + "'");
}

void FixtureSpec::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::SpecInvalid, m); };
    auto range = [&](const char* name, double lo, double hi, double floor) {
        if (!(lo > floor && lo <= hi)) bad(std::string(name) + " range is invalid");
    };
    // fewer firms would leave sectors empty and shift the intensity scale
    if (firms_per_cluster < 5) bad("need at least five firms per cluster");
    range("asset_value", asset_value_min, asset_value_max, 0.0);
    range("asset_vol", asset_vol_min, asset_vol_max, 0.0);
    range("leverage", leverage_min, leverage_max, 0.0);
    range("maturity", maturity_min, maturity_max, 0.0);
    range("beta", beta_min, beta_max, 0.0);
    if (!(rate_min >= 0.0 && rate_min <= rate_max)) bad("rate range is invalid");
    if (!(market_return > 0.0)) bad("market_return must be positive");
    if (!(rho >= 0.0 && rho <= 1.0)) bad("rho must lie in [0, 1]");
    if (years < 2) bad("need at least two EBITDA years");
    if (!(ebitda_noise >= 0.0 && ebitda_noise < 0.5)) bad("ebitda_noise must lie in [0, 0.5)");
    if (n_paths == 0) bad("n_paths must be positive");
    if (shocks == FixtureShocks::PlantedJumps) {
        for (const auto& j : jumps)
            if (!(j.lambda > 0.0 && j.theta > 0.0)) bad("planted jumps need lambda > 0 and theta > 0");
        // every firm needs q > g >= 0 with a shock reachable below q
        if (!(beta_min * market_return > 0.0)) bad("required returns must be positive");
    } else {
        if (!(gordon_required > gordon_growth && gordon_growth > -1.0)) bad("Gordon inputs need q > g > -1");
        for (double a : gordon_alphas)
            if (!(a >= 0.0 && a <= 1.0)) bad("alphas must lie in [0, 1]");
    }
}

namespace {

struct CountryDef {
    const char* code;
    double vulnerability;
    VulnerabilityTier tier;
};

// Three well separated groups; the upper two form the MidHigh tier. Tier
// means at the company level are 0.212 and 0.534 with balanced firms.
constexpr CountryDef kCountries[] = {
    {"NO", 0.180, VulnerabilityTier::Low},     {"CH", 0.196, VulnerabilityTier::Low},
    {"DK", 0.212, VulnerabilityTier::Low},     {"FI", 0.228, VulnerabilityTier::Low},
    {"SE", 0.244, VulnerabilityTier::Low},     {"BR", 0.460, VulnerabilityTier::MidHigh},
    {"MX", 0.480, VulnerabilityTier::MidHigh}, {"TR", 0.500, VulnerabilityTier::MidHigh},
    {"IN", 0.600, VulnerabilityTier::MidHigh}, {"NG", 0.630, VulnerabilityTier::MidHigh},
};

struct SectorDef {
    const char* nace;
    double scaled;  // intensity after clipping and min-max scaling
    IntensityTier tier;
};

// Extremes are duplicated so the 1/99 percentile clip leaves them alone.
constexpr SectorDef kSectors[] = {
    {"62", 0.00, IntensityTier::Low},     {"64", 0.00, IntensityTier::Low},     {"66", 0.03, IntensityTier::Low},
    {"69", 0.06, IntensityTier::Low},     {"70", 0.06, IntensityTier::Low},     {"46", 0.15, IntensityTier::Medium},
    {"47", 0.17, IntensityTier::Medium},  {"58", 0.19, IntensityTier::Medium},  {"71", 0.21, IntensityTier::Medium},
    {"72", 0.23, IntensityTier::Medium},  {"10", 0.40, IntensityTier::High},    {"20", 0.42, IntensityTier::High},
    {"25", 0.44, IntensityTier::High},    {"28", 0.46, IntensityTier::High},    {"29", 0.48, IntensityTier::High},
    {"05", 0.90, IntensityTier::Extreme}, {"06", 0.95, IntensityTier::Extreme}, {"19", 0.95, IntensityTier::Extreme},
    {"24", 1.00, IntensityTier::Extreme}, {"35", 1.00, IntensityTier::Extreme},
};

constexpr double kIntensityOffset = 0.1, kIntensityScale = 1.5;  // raw ppe / revenue

const char* const kWorld = "SYN_WORLD";
const char* const kHighIntensity = "SYN_HIGH_INTENSITY";
const char* const kLowVul = "SYN_LOW_VUL";

template <class Def, std::size_t N, class Tier>
std::vector<const Def*> members(const Def (&defs)[N], Tier tier) {
    std::vector<const Def*> out;
    for (const auto& d : defs)
        if (d.tier == tier) out.push_back(&d);
    return out;
}

// EBITDA levels whose OLS slope over mean is exactly `growth`: a linear
// trend plus noise orthogonal to both the constant and the trend.
std::vector<EbitdaPoint> ebitda_series(double level, double growth, const FixtureSpec& spec, Rng& rng) {
    const auto n = static_cast<std::size_t>(spec.years);
    const double tbar = (static_cast<double>(n) - 1.0) / 2.0;
    std::vector<double> noise(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
        noise[i] = rng.normal();
        t[i] = static_cast<double>(i) - tbar;
    }
    double mean = 0, tt = 0, nt = 0;
    for (std::size_t i = 0; i < n; ++i) mean += noise[i] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        noise[i] -= mean;
        tt += t[i] * t[i];
        nt += noise[i] * t[i];
    }
    double peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
        noise[i] -= nt / tt * t[i];
        peak = std::max(peak, std::abs(noise[i]));
    }
    const double scale = peak > 0 ? spec.ebitda_noise * level / peak : 0.0;
    std::vector<EbitdaPoint> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({spec.first_year + static_cast<int>(i), level * (1.0 + growth * t[i]) + scale * noise[i]});
    return out;
}

// g in (0, q) with gordon_shock(g, q, alpha) = shock.
double growth_for_shock(double shock, double q, double alpha) {
    auto f = [&](double g) { return gordon_shock({g, q, alpha}) - shock; };
    const double hi = q * (1.0 - 1e-12);
    if (!(f(0.0) > 0.0 && f(hi) < 0.0))
        throw Error(ErrorKind::SpecInvalid, "planted shock " + csv::format_number(shock) +
                                                " is not reachable with alpha " + csv::format_number(alpha));
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

}  // namespace

Fixture generate_fixture(const FixtureSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Fixture fx;
    for (const auto& c : kCountries) fx.climate.push_back({c.code, c.vulnerability});
    for (const char* idx : {kHighIntensity, kLowVul, kWorld}) fx.market_returns[idx] = spec.market_return;

    std::vector<FirmTruth> truth;
    int serial = 0;
    for (const auto& key : ClusterKey::all()) {
        const auto countries = members(kCountries, key.vulnerability);
        const auto sectors = members(kSectors, key.intensity);
        for (std::size_t i = 0; i < spec.firms_per_cluster; ++i) {
            FirmTruth t;
            char id[16];
            std::snprintf(id, sizeof(id), "SYN%03d", ++serial);
            t.firm_id = id;
            t.cluster = key;
            t.country = countries[i % countries.size()]->code;
            // Latin square over (country, sector): every sector is used once
            // a cluster has as many firms as countries.
            const auto* sector = sectors[(i + i / countries.size()) % sectors.size()];
            t.nace = sector->nace;
            t.asset_value = uniform(rng, spec.asset_value_min, spec.asset_value_max);
            t.asset_vol = uniform(rng, spec.asset_vol_min, spec.asset_vol_max);
            t.debt = t.asset_value * uniform(rng, spec.leverage_min, spec.leverage_max);
            t.maturity = uniform(rng, spec.maturity_min, spec.maturity_max);
            t.rate = uniform(rng, spec.rate_min, spec.rate_max);
            t.equity = bs_call(t.asset_value, t.debt, t.asset_vol, t.maturity, t.rate);
            t.equity_vol = t.asset_vol * t.asset_value *
                           normal_cdf(bs_d1(t.asset_value, t.debt, t.asset_vol, t.maturity, t.rate)) / t.equity;
            t.beta = spec.shocks == FixtureShocks::Gordon ? spec.gordon_required / spec.market_return
                                                          : uniform(rng, spec.beta_min, spec.beta_max);
            t.required_return = required_return(t.beta, spec.market_return);

            FirmRecord r;
            r.firm_id = t.firm_id;
            r.country = t.country;
            r.nace = t.nace;
            r.equity_value = t.equity;
            r.equity_vol = t.equity_vol;
            r.total_debt = t.debt;
            r.debt_maturity = t.maturity;
            r.risk_free = t.rate;
            r.revenue = uniform(rng, 100.0, 2000.0);
            r.ppe = (kIntensityOffset + kIntensityScale * sector->scaled) * *r.revenue;
            r.capm_beta = t.beta;
            fx.firms.push_back(std::move(r));
            truth.push_back(std::move(t));
        }
    }

    // Alphas as the pipeline will see them.
    const auto assignment = assign_clusters(fx.firms, fx.climate);
    for (const auto& t : truth) {
        const auto it = assignment.firm_keys.find(t.firm_id);
        if (it == assignment.firm_keys.end() || !(it->second == t.cluster))
            throw Error(ErrorKind::SpecInvalid, "clustering does not recover the planted cell of " + t.firm_id);
    }
    const AlphaTable alphas = spec.shocks == FixtureShocks::Gordon ? spec.gordon_alphas : cluster_alphas(assignment);

    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto& t = truth[i];
        auto& r = fx.firms[i];
        const auto k = static_cast<std::size_t>(t.cluster.index());
        t.alpha = alphas[k];
        if (spec.shocks == FixtureShocks::Gordon) {
            t.growth = spec.gordon_growth;
            t.shock = gordon_shock({t.growth, t.required_return, t.alpha});
            t.stressed_equity = (1.0 + t.shock) * t.equity;
        } else {
            t.stressed_equity =
                lewis_call({t.asset_value, t.debt, t.asset_vol, t.maturity, t.rate, spec.jumps[k]});
            t.shock = t.stressed_equity / t.equity - 1.0;
            t.growth = growth_for_shock(t.shock, t.required_return, t.alpha);
        }
        r.ebitda_series = ebitda_series(uniform(rng, 50.0, 500.0), t.growth, spec, rng);
    }

    // Index memberships with cap weights.
    std::map<std::string, double> caps;
    auto in_index = [](const FirmTruth& t, const std::string& idx) {
        if (idx == kWorld) return true;
        if (idx == kLowVul) return t.cluster.vulnerability == VulnerabilityTier::Low;
        return t.cluster.intensity == IntensityTier::High || t.cluster.intensity == IntensityTier::Extreme;
    };
    for (const char* idx : {kHighIntensity, kLowVul, kWorld})
        for (const auto& t : truth)
            if (in_index(t, idx)) caps[idx] += t.equity;
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (const char* idx : {kHighIntensity, kLowVul, kWorld})
            if (in_index(truth[i], idx)) fx.firms[i].index_memberships.push_back({idx, truth[i].equity / caps[idx]});

    fx.truth.seed = spec.seed;
    fx.truth.shocks = spec.shocks;
    fx.truth.rho = spec.rho;
    fx.truth.market_return = spec.market_return;
    for (const auto& key : ClusterKey::all()) {
        ClusterTruth c;
        c.key = key;
        const auto k = static_cast<std::size_t>(key.index());
        if (spec.shocks == FixtureShocks::PlantedJumps) c.jumps = spec.jumps[k];
        c.alpha = alphas[k];
        c.mean_vulnerability = assignment.vulnerability_mean(key.vulnerability);
        c.mean_intensity = assignment.intensity_mean(key.intensity);
        c.firm_count = spec.firms_per_cluster;
        fx.truth.clusters.push_back(c);
    }
    fx.truth.firms = std::move(truth);

    RunConfig& run = fx.run;
    run.firms = "firms.csv";
    run.ebitda = "ebitda.csv";
    run.vulnerability = "vulnerability.csv";
    run.market_returns = "market_returns.csv";
    run.rho = spec.rho;
    if (spec.shocks == FixtureShocks::Gordon) run.alpha_table = spec.gordon_alphas;
    run.simulation.n_paths = spec.n_paths;
    run.simulation.seed = spec.seed;
    run.output_dir = "out";
    return fx;
}

std::string truth_to_json(const FixtureTruth& truth) {
    json j;
    j["seed"] = truth.seed;
    j["shocks"] = to_string(truth.shocks);
    j["rho"] = truth.rho;
    j["market_return"] = truth.market_return;
    j["clusters"] = json::array();
    for (const auto& c : truth.clusters) {
        json e;
        e["cluster"] = c.key.label();
        e["lambda"] = c.jumps ? json(c.jumps->lambda) : json(nullptr);
        e["theta"] = c.jumps ? json(c.jumps->theta) : json(nullptr);
        e["alpha"] = c.alpha;
        e["mean_vulnerability"] = c.mean_vulnerability;
        e["mean_intensity"] = c.mean_intensity;
        e["firm_count"] = c.firm_count;
        j["clusters"].push_back(e);
    }
    j["firms"] = json::array();
    for (const auto& f : truth.firms) {
        j["firms"].push_back({{"firm_id", f.firm_id},
                              {"cluster", f.cluster.label()},
                              {"country", f.country},
                              {"nace", f.nace},
                              {"asset_value", f.asset_value},
                              {"asset_vol", f.asset_vol},
                              {"debt", f.debt},
                              {"maturity", f.maturity},
                              {"rate", f.rate},
                              {"equity", f.equity},
                              {"equity_vol", f.equity_vol},
                              {"beta", f.beta},
                              {"required_return", f.required_return},
                              {"growth", f.growth},
                              {"alpha", f.alpha},
                              {"shock", f.shock},
                              {"stressed_equity", f.stressed_equity}});
    }
    return j.dump(2) + "\n";
}

namespace {

ClusterKey parse_label(const std::string& label) {
    const auto slash = label.find('/');
    if (slash == std::string::npos) throw Error(ErrorKind::NumericParse, "bad cluster label " + label);
    return {parse_vulnerability_tier(label.substr(0, slash)), parse_intensity_tier(label.substr(slash + 1))};
}

}  // namespace

FixtureTruth load_truth(const fs::path& path) {
    FixtureTruth t;
    try {
        const auto j = json::parse(csv::read_file(path));
        t.seed = j.at("seed").get<std::uint64_t>();
        t.shocks = parse_fixture_shocks(j.at("shocks").get<std::string>());
        t.rho = j.at("rho").get<double>();
        t.market_return = j.at("market_return").get<double>();
        for (const auto& e : j.at("clusters")) {
            ClusterTruth c;
            c.key = parse_label(e.at("cluster").get<std::string>());
            if (!e.at("lambda").is_null()) c.jumps = JumpParams{e["lambda"].get<double>(), e.at("theta").get<double>()};
            c.alpha = e.at("alpha").get<double>();
            c.mean_vulnerability = e.at("mean_vulnerability").get<double>();
            c.mean_intensity = e.at("mean_intensity").get<double>();
            c.firm_count = e.at("firm_count").get<std::size_t>();
            t.clusters.push_back(c);
        }
        for (const auto& e : j.at("firms")) {
            FirmTruth f;
            f.firm_id = e.at("firm_id").get<std::string>();
            f.cluster = parse_label(e.at("cluster").get<std::string>());
            f.country = e.at("country").get<std::string>();
            f.nace = e.at("nace").get<std::string>();
            f.asset_value = e.at("asset_value").get<double>();
            f.asset_vol = e.at("asset_vol").get<double>();
            f.debt = e.at("debt").get<double>();
            f.maturity = e.at("maturity").get<double>();
            f.rate = e.at("rate").get<double>();
            f.equity = e.at("equity").get<double>();
            f.equity_vol = e.at("equity_vol").get<double>();
            f.beta = e.at("beta").get<double>();
            f.required_return = e.at("required_return").get<double>();
            f.growth = e.at("growth").get<double>();
            f.alpha = e.at("alpha").get<double>();
            f.shock = e.at("shock").get<double>();
            f.stressed_equity = e.at("stressed_equity").get<double>();
            t.firms.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::NumericParse, path.string() + ": " + e.what());
    }
    return t;
}

void write_fixture(const Fixture& fx, const fs::path& dir) {
    fs::create_directories(dir);
    csv::write_atomic(dir / "firms.csv", firms_to_csv(fx.firms));
    csv::write_atomic(dir / "ebitda.csv", ebitda_to_csv(fx.firms));
    csv::Writer v({"country", "vulnerability"});
    for (const auto& c : fx.climate) {
        v.cell(c.country).cell(c.vulnerability);
        v.end_row();
    }
    csv::write_atomic(dir / "vulnerability.csv", v.str());
    csv::Writer m({"index_id", "annual_return"});
    for (const auto& [idx, r] : fx.market_returns) {
        m.cell(idx).cell(r);
        m.end_row();
    }
    csv::write_atomic(dir / "market_returns.csv", m.str());
    csv::write_atomic(dir / "truth.json", truth_to_json(fx.truth));
    csv::write_atomic(dir / "run.json", run_config_to_json(fx.run, {}));
}

}  // namespace climrisk
