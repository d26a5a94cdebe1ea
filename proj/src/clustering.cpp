#include "climrisk/clustering.hpp"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace climrisk {

std::string_view to_string(VulnerabilityTier tier) noexcept {
    return tier == VulnerabilityTier::Low ? "Low" : "MidHigh";
}

std::string_view to_string(IntensityTier tier) noexcept {
    switch (tier) {
        case IntensityTier::Low: return "Low";
        case IntensityTier::Medium: return "Medium";
        case IntensityTier::High: return "High";
        case IntensityTier::Extreme: return "Extreme";
    }
    return "Unknown";
}

VulnerabilityTier parse_vulnerability_tier(std::string_view text) {
    if (text == "Low") return VulnerabilityTier::Low;
    if (text == "MidHigh") return VulnerabilityTier::MidHigh;
    throw Error(ErrorKind::NumericParse, "unknown vulnerability tier '" + std::string(text) + "'");
}

IntensityTier parse_intensity_tier(std::string_view text) {
    for (int i = 0; i < 4; ++i)
        if (to_string(static_cast<IntensityTier>(i)) == text) return static_cast<IntensityTier>(i);
    throw Error(ErrorKind::NumericParse, "unknown intensity tier '" + std::string(text) + "'");
}

std::array<ClusterKey, ClusterKey::kCount> ClusterKey::all() noexcept {
    std::array<ClusterKey, kCount> keys{};
    for (int i = 0; i < kCount; ++i) keys[static_cast<std::size_t>(i)] = from_index(i);
    return keys;
}

std::string ClusterKey::label() const {
    return std::string(to_string(vulnerability)) + "/" + std::string(to_string(intensity));
}

double empirical_percentile(std::span<const double> sorted, double percent) {
    if (sorted.empty()) throw Error(ErrorKind::EmptyInput, "percentile of an empty sample");
    const double h = (percent / 100.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> winsorize_minmax(std::span<const double> values, double p_lo, double p_hi) {
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "winsorize_minmax needs at least one value");
    if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 100.0))
        throw Error(ErrorKind::InvalidInputs, "percentiles must satisfy 0 <= p_lo < p_hi <= 100");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = empirical_percentile(sorted, p_lo);
    const double hi = empirical_percentile(sorted, p_hi);

    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::clamp(values[i], lo, hi);
    const auto [mn, mx] = std::minmax_element(out.begin(), out.end());
    const double min = *mn, range = *mx - *mn;
    if (!(range > 0.0)) {
        spdlog::info("winsorize_minmax: constant input of {} values mapped to zero", values.size());
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    for (auto& v : out) v = (v - min) / range;
    return out;
}

std::map<std::string, int> hierarchical_cluster(const std::vector<std::pair<std::string, double>>& values,
                                                int n_clusters) {
    if (values.empty() || n_clusters < 1 || static_cast<std::size_t>(n_clusters) > values.size())
        throw Error(ErrorKind::TooFewPoints, "cannot cut " + std::to_string(values.size()) + " points into " +
                                                 std::to_string(n_clusters) + " clusters");

    // Points are ordered by (value, id) so that cluster ids, and with them
    // tie-breaking, do not depend on input order.
    std::vector<std::pair<double, std::string>> points;
    points.reserve(values.size());
    for (const auto& [id, v] : values) points.emplace_back(v, id);
    std::sort(points.begin(), points.end());

    struct Group {
        std::size_t id;
        double sum;
        double size;
        std::vector<std::size_t> members;
    };
    std::vector<Group> groups;
    groups.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) groups.push_back({i, points[i].first, 1.0, {i}});

    // Ward merge cost: increase in within-cluster sum of squares.
    auto cost = [](const Group& a, const Group& b) {
        const double d = a.sum / a.size - b.sum / b.size;
        return a.size * b.size / (a.size + b.size) * d * d;
    };

    while (groups.size() > static_cast<std::size_t>(n_clusters)) {
        std::size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        std::pair<std::size_t, std::size_t> best_ids{std::numeric_limits<std::size_t>::max(), 0};
        for (std::size_t a = 0; a < groups.size(); ++a) {
            for (std::size_t b = a + 1; b < groups.size(); ++b) {
                const double c = cost(groups[a], groups[b]);
                const std::pair<std::size_t, std::size_t> ids = std::minmax(groups[a].id, groups[b].id);
                if (c < best || (c == best && ids < best_ids)) {
                    best = c;
                    best_a = a;
                    best_b = b;
                    best_ids = ids;
                }
            }
        }
        auto& keep = groups[best_a];
        auto& gone = groups[best_b];
        keep.id = std::min(keep.id, gone.id);
        keep.sum += gone.sum;
        keep.size += gone.size;
        keep.members.insert(keep.members.end(), gone.members.begin(), gone.members.end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(best_b));
    }

    std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
        const double ma = a.sum / a.size, mb = b.sum / b.size;
        return ma != mb ? ma < mb : a.id < b.id;
    });
    std::map<std::string, int> out;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (auto m : groups[g].members) out[points[m].second] = static_cast<int>(g);
    return out;
}

namespace {

int effective_clusters(const std::vector<std::pair<std::string, double>>& values, int requested) {
    std::set<double> distinct;
    for (const auto& [id, v] : values) distinct.insert(v);
    const int n = std::min<int>(requested, static_cast<int>(distinct.size()));
    if (n < requested)
        spdlog::info("clustering: only {} distinct values, cutting at {} clusters instead of {}", distinct.size(), n,
                     requested);
    return n;
}

struct Moments {
    std::size_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;
    void add(double v) {
        ++n;
        sum += v;
        sumsq += v * v;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double sd() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, sumsq / static_cast<double>(n) - m * m));
    }
};

}  // namespace

std::map<std::string, VulnerabilityTier> assign_vulnerability_tiers(const std::vector<CountryClimate>& climate) {
    if (climate.size() < 3)
        throw Error(ErrorKind::TooFewPoints, "vulnerability clustering needs at least 3 countries, got " +
                                                 std::to_string(climate.size()));
    std::vector<std::pair<std::string, double>> values;
    for (const auto& c : climate) values.emplace_back(c.country, c.vulnerability);
    const auto labels = hierarchical_cluster(values, effective_clusters(values, 3));
    std::map<std::string, VulnerabilityTier> out;
    for (const auto& [country, label] : labels)
        out[country] = label == 0 ? VulnerabilityTier::Low : VulnerabilityTier::MidHigh;
    return out;
}

std::map<std::string, double> sector_raw_intensity(const std::vector<FirmRecord>& firms) {
    std::map<std::string, Moments> acc;
    for (const auto& f : firms) {
        if (!f.revenue || !(*f.revenue > 0.0)) throw Error(ErrorKind::ZeroRevenue, f.firm_id);
        if (!f.ppe) throw Error(ErrorKind::InvalidInputs, "ppe missing for " + f.firm_id);
        acc[f.nace].add(*f.ppe / *f.revenue);
    }
    std::map<std::string, double> out;
    for (const auto& [nace, m] : acc) out[nace] = m.mean();
    return out;
}

std::map<std::string, double> sector_intensity(const std::vector<FirmRecord>& firms, double p_lo, double p_hi) {
    const auto raw = sector_raw_intensity(firms);
    if (raw.empty()) throw Error(ErrorKind::EmptyInput, "no sectors to scale");
    std::vector<double> values;
    for (const auto& [nace, v] : raw) values.push_back(v);
    const auto scaled = winsorize_minmax(values, p_lo, p_hi);
    std::map<std::string, double> out;
    std::size_t i = 0;
    for (const auto& [nace, v] : raw) out[nace] = scaled[i++];
    return out;
}

std::map<std::string, IntensityTier> assign_intensity_tiers(const std::map<std::string, double>& sector_values) {
    if (sector_values.size() < 4)
        throw Error(ErrorKind::TooFewPoints, "intensity clustering needs at least 4 sectors, got " +
                                                 std::to_string(sector_values.size()));
    std::vector<std::pair<std::string, double>> values(sector_values.begin(), sector_values.end());
    const auto labels = hierarchical_cluster(values, effective_clusters(values, 4));
    std::map<std::string, IntensityTier> out;
    for (const auto& [nace, label] : labels) out[nace] = static_cast<IntensityTier>(label);
    return out;
}

double ClusterAssignment::vulnerability_mean(VulnerabilityTier t) const {
    for (const auto& s : tiers)
        if (s.dimension == "vulnerability" && s.level == "company" && s.tier == to_string(t)) return s.mean;
    return 0.0;
}

double ClusterAssignment::intensity_mean(IntensityTier t) const {
    for (const auto& s : tiers)
        if (s.dimension == "intensity" && s.level == "company" && s.tier == to_string(t)) return s.mean;
    return 0.0;
}

ClusterAssignment assign_clusters(const std::vector<FirmRecord>& firms, const std::vector<CountryClimate>& climate,
                                  double p_lo, double p_hi) {
    ClusterAssignment out;
    out.country_tiers = assign_vulnerability_tiers(climate);
    out.sector_values = sector_intensity(firms, p_lo, p_hi);
    out.sector_tiers = assign_intensity_tiers(out.sector_values);

    std::map<std::string, double> vulnerability;
    for (const auto& c : climate) vulnerability[c.country] = c.vulnerability;

    std::array<Moments, ClusterKey::kCount> cell_v{}, cell_i{};
    std::array<Moments, 2> company_v{};
    std::array<Moments, 4> company_i{};
    for (const auto& f : firms) {
        auto vt = out.country_tiers.find(f.country);
        if (vt == out.country_tiers.end())
            throw Error(ErrorKind::InvalidInputs, "firm " + f.firm_id + " has no country vulnerability");
        const ClusterKey key{vt->second, out.sector_tiers.at(f.nace)};
        out.firm_keys[f.firm_id] = key;
        const double v = vulnerability.at(f.country);
        const double s = out.sector_values.at(f.nace);
        cell_v[static_cast<std::size_t>(key.index())].add(v);
        cell_i[static_cast<std::size_t>(key.index())].add(s);
        company_v[static_cast<std::size_t>(key.vulnerability)].add(v);
        company_i[static_cast<std::size_t>(key.intensity)].add(s);
    }
    for (const auto& key : ClusterKey::all()) {
        const auto i = static_cast<std::size_t>(key.index());
        out.cells[i] = {key, cell_v[i].n, cell_v[i].mean(), cell_i[i].mean(), cell_v[i].sd(), cell_i[i].sd()};
    }

    std::array<Moments, 2> country_v{};
    for (const auto& [country, tier] : out.country_tiers)
        country_v[static_cast<std::size_t>(tier)].add(vulnerability.at(country));
    std::array<Moments, 4> sector_i{};
    for (const auto& [nace, tier] : out.sector_tiers)
        sector_i[static_cast<std::size_t>(tier)].add(out.sector_values.at(nace));

    auto push = [&](std::string dim, std::string_view tier, std::string level, const Moments& m) {
        out.tiers.push_back({std::move(dim), std::string(tier), std::move(level), m.n, m.mean(), m.sd()});
    };
    for (int t = 0; t < 2; ++t) {
        const auto tier = to_string(static_cast<VulnerabilityTier>(t));
        push("vulnerability", tier, "company", company_v[static_cast<std::size_t>(t)]);
        push("vulnerability", tier, "country", country_v[static_cast<std::size_t>(t)]);
    }
    for (int t = 0; t < 4; ++t) {
        const auto tier = to_string(static_cast<IntensityTier>(t));
        push("intensity", tier, "company", company_i[static_cast<std::size_t>(t)]);
        push("intensity", tier, "sector", sector_i[static_cast<std::size_t>(t)]);
    }
    return out;
}

std::string clusters_to_csv(const ClusterAssignment& a) {
    csv::Writer w({"firm_id", "vulnerability_tier", "intensity_tier"});
    for (const auto& [firm, key] : a.firm_keys) {
        w.cell(firm).cell(to_string(key.vulnerability)).cell(to_string(key.intensity));
        w.end_row();
    }
    return w.str();
}

std::string cluster_stats_to_csv(const ClusterAssignment& a) {
    csv::Writer w({"dimension", "tier", "level", "count", "mean", "sd"});
    for (const auto& s : a.tiers) {
        w.cell(s.dimension).cell(s.tier).cell(s.level).cell(static_cast<long long>(s.count)).cell(s.mean).cell(s.sd);
        w.end_row();
    }
    return w.str();
}

std::string cluster_cells_to_csv(const ClusterAssignment& a) {
    csv::Writer w({"vulnerability_tier", "intensity_tier", "firm_count", "mean_vulnerability", "mean_intensity",
                   "sd_vulnerability", "sd_intensity"});
    for (const auto& c : a.cells) {
        w.cell(to_string(c.key.vulnerability)).cell(to_string(c.key.intensity));
        w.cell(static_cast<long long>(c.firm_count)).cell(c.mean_vulnerability).cell(c.mean_intensity);
        w.cell(c.sd_vulnerability).cell(c.sd_intensity);
        w.end_row();
    }
    return w.str();
}

std::map<std::string, ClusterKey> load_cluster_keys(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto c_id = t.column("firm_id");
    const auto c_v = t.column("vulnerability_tier");
    const auto c_i = t.column("intensity_tier");
    std::map<std::string, ClusterKey> out;
    for (const auto& row : t.rows)
        out[row[c_id]] = ClusterKey{parse_vulnerability_tier(row[c_v]), parse_intensity_tier(row[c_i])};
    return out;
}

std::map<std::pair<std::string, std::string>, double> load_tier_means(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto c_dim = t.column("dimension");
    const auto c_tier = t.column("tier");
    const auto c_level = t.column("level");
    const auto c_mean = t.column("mean");
    std::map<std::pair<std::string, std::string>, double> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (row[c_level] != "company") continue;
        out[{row[c_dim], row[c_tier]}] =
            csv::parse_number(row[c_mean], path.string() + " line " + std::to_string(t.line_numbers[r]));
    }
    return out;
}

}  // namespace climrisk
