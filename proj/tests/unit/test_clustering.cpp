#include "doctest.h"

#include "climrisk/clustering.hpp"
#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace climrisk;

namespace {

// Direct sort, clip and rescale.
std::vector<double> clip_rescale_oracle(const std::vector<double>& v, double p_lo, double p_hi) {
    auto s = v;
    std::sort(s.begin(), s.end());
    auto pct = [&](double p) {
        const double h = p / 100.0 * (s.size() - 1);
        const auto i = static_cast<std::size_t>(h);
        return i + 1 < s.size() ? s[i] + (h - i) * (s[i + 1] - s[i]) : s.back();
    };
    const double lo = pct(p_lo), hi = pct(p_hi);
    std::vector<double> out;
    for (double x : v) out.push_back((std::clamp(x, lo, hi) - lo) / (hi - lo));
    return out;
}

// Optimal 1-D k-means by dynamic programming over contiguous segments of
// the sorted data; returns the segment label of each sorted point.
std::vector<int> kmeans_1d_oracle(const std::vector<double>& sorted, int k) {
    const std::size_t n = sorted.size();
    std::vector<double> p(n + 1, 0), p2(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        p[i + 1] = p[i] + sorted[i];
        p2[i + 1] = p2[i] + sorted[i] * sorted[i];
    }
    auto sse = [&](std::size_t a, std::size_t b) {  // [a, b)
        const double m = (p[b] - p[a]) / (b - a);
        return p2[b] - p2[a] - m * (p[b] - p[a]);
    };
    const double inf = 1e300;
    std::vector<std::vector<double>> cost(k + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> arg(k + 1, std::vector<std::size_t>(n + 1, 0));
    cost[0][0] = 0;
    for (int c = 1; c <= k; ++c)
        for (std::size_t b = 1; b <= n; ++b)
            for (std::size_t a = c - 1; a < b; ++a)
                if (cost[c - 1][a] < inf && cost[c - 1][a] + sse(a, b) < cost[c][b]) {
                    cost[c][b] = cost[c - 1][a] + sse(a, b);
                    arg[c][b] = a;
                }
    std::vector<int> labels(n);
    std::size_t b = n;
    for (int c = k; c >= 1; --c) {
        const std::size_t a = arg[c][b];
        for (std::size_t i = a; i < b; ++i) labels[i] = c - 1;
        b = a;
    }
    return labels;
}

FirmRecord firm(std::string id, std::string country, std::string nace, double ppe, double revenue) {
    FirmRecord f;
    f.firm_id = std::move(id);
    f.country = std::move(country);
    f.nace = std::move(nace);
    f.ppe = ppe;
    f.revenue = revenue;
    return f;
}

}  // namespace

TEST_CASE("winsorize_minmax basics") {
    const std::vector<double> flat{5, 5, 5};
    CHECK(winsorize_minmax(flat, 1, 99) == std::vector<double>{0, 0, 0});

    std::vector<double> ramp;
    for (int i = 0; i <= 100; ++i) ramp.push_back(i);
    const auto r = winsorize_minmax(ramp, 1, 99);
    CHECK(*std::min_element(r.begin(), r.end()) == 0.0);
    CHECK(*std::max_element(r.begin(), r.end()) == 1.0);
    CHECK(r[50] == doctest::Approx(0.5));

    CHECK_THROWS_AS(winsorize_minmax(std::vector<double>{}, 1, 99), Error);
    CHECK_THROWS_AS(winsorize_minmax(ramp, 50, 10), Error);
}

TEST_CASE("winsorize_minmax with outliers matches the clip oracle") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> v(1000);
    for (auto& x : v) x = n(rng);
    v[10] = 1e6;
    v[500] = -1e6;
    const auto got = winsorize_minmax(v, 1, 99);
    const auto want = clip_rescale_oracle(v, 1, 99);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    CHECK(got[10] == 1.0);
    CHECK(got[500] == 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < std::min<std::size_t>(v.size(), i + 30); ++j)
            if (v[i] < v[j]) CHECK(got[i] <= got[j]);
}

TEST_CASE("hierarchical_cluster small cases") {
    const auto two = hierarchical_cluster({{"a", 0.1}, {"b", 0.11}, {"c", 0.9}}, 2);
    CHECK(two.at("a") == 0);
    CHECK(two.at("b") == 0);
    CHECK(two.at("c") == 1);

    const auto ident = hierarchical_cluster({{"x", 3.0}, {"y", 1.0}, {"z", 2.0}}, 3);
    CHECK(ident.at("y") == 0);
    CHECK(ident.at("z") == 1);
    CHECK(ident.at("x") == 2);

    CHECK_THROWS_AS(hierarchical_cluster({{"a", 1.0}}, 2), Error);
    CHECK_THROWS_AS(hierarchical_cluster({}, 1), Error);
}

TEST_CASE("hierarchical_cluster recovers a three-component mixture") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 0.03);
    std::vector<std::pair<std::string, double>> pts;
    std::map<std::string, int> truth;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 50; ++i) {
            const std::string id = "p" + std::to_string(c) + "_" + std::to_string(i);
            pts.emplace_back(id, 0.2 + 0.3 * c + n(rng));
            truth[id] = c;
        }
    const auto labels = hierarchical_cluster(pts, 3);

    auto by_value = pts;
    std::sort(by_value.begin(), by_value.end(), [](auto& a, auto& b) { return a.second < b.second; });
    std::vector<double> sorted;
    for (auto& [id, v] : by_value) sorted.push_back(v);
    const auto oracle = kmeans_1d_oracle(sorted, 3);

    int agree_oracle = 0, agree_truth = 0;
    for (std::size_t i = 0; i < by_value.size(); ++i) {
        agree_oracle += labels.at(by_value[i].first) == oracle[i];
        agree_truth += labels.at(by_value[i].first) == truth.at(by_value[i].first);
    }
    CHECK(agree_oracle >= 0.95 * 150);
    CHECK(agree_truth >= 0.95 * 150);
}

TEST_CASE("vulnerability tiers") {
    SUBCASE("tier means near the reported averages") {
        std::vector<CountryClimate> climate;
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> jitter(-0.02, 0.02);
        for (int i = 0; i < 20; ++i) climate.push_back({"L" + std::to_string(i), 0.212 + jitter(rng)});
        for (int i = 0; i < 10; ++i) climate.push_back({"M" + std::to_string(i), 0.46 + jitter(rng)});
        for (int i = 0; i < 10; ++i) climate.push_back({"H" + std::to_string(i), 0.608 + jitter(rng)});
        const auto tiers = assign_vulnerability_tiers(climate);
        double sum[2] = {0, 0};
        int cnt[2] = {0, 0};
        for (const auto& c : climate) {
            const int t = static_cast<int>(tiers.at(c.country));
            sum[t] += c.vulnerability;
            ++cnt[t];
        }
        CHECK(cnt[0] == 20);
        CHECK(std::abs(sum[0] / cnt[0] - 0.212) < 0.02);
        CHECK(std::abs(sum[1] / cnt[1] - 0.534) < 0.02);
    }
    SUBCASE("two distinct scores") {
        const auto t = assign_vulnerability_tiers({{"A", 0.1}, {"B", 0.1}, {"C", 0.9}});
        CHECK(t.at("A") == VulnerabilityTier::Low);
        CHECK(t.at("B") == VulnerabilityTier::Low);
        CHECK(t.at("C") == VulnerabilityTier::MidHigh);
    }
    SUBCASE("all equal") {
        const auto t = assign_vulnerability_tiers({{"A", 0.3}, {"B", 0.3}, {"C", 0.3}, {"D", 0.3}});
        for (auto& [c, tier] : t) CHECK(tier == VulnerabilityTier::Low);
    }
    CHECK_THROWS_AS(assign_vulnerability_tiers({{"A", 0.1}, {"B", 0.2}}), Error);
}

TEST_CASE("sector intensity") {
    const std::vector<FirmRecord> one{firm("a", "US", "C", 10, 100), firm("b", "US", "C", 30, 100)};
    CHECK(sector_raw_intensity(one).at("C") == doctest::Approx(0.2));
    CHECK(sector_intensity(one).at("C") == 0.0);

    std::vector<FirmRecord> panel;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.05, 2.0);
    for (int s = 0; s < 10; ++s)
        for (int i = 0; i < 3 + s % 3; ++i)
            panel.push_back(firm("f" + std::to_string(s) + "_" + std::to_string(i), "US", "S" + std::to_string(s),
                                 u(rng) * 100, 100));

    std::map<std::string, std::vector<double>> ratios;
    for (auto& f : panel) ratios[f.nace].push_back(*f.ppe / *f.revenue);
    std::vector<double> means;
    for (auto& [n, r] : ratios) {
        double s = 0;
        for (double x : r) s += x;
        means.push_back(s / r.size());
    }
    const auto oracle = clip_rescale_oracle(means, 1, 99);
    const auto got = sector_intensity(panel);
    std::size_t i = 0;
    for (auto& [nace, v] : got) CHECK(std::abs(v - oracle[i++]) < 1e-12);

    auto bad = panel;
    bad[0].revenue = 0.0;
    try {
        sector_intensity(bad);
        FAIL("expected ZeroRevenue");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroRevenue);
    }
}

TEST_CASE("intensity tiers") {
    SUBCASE("engineered sectors land on the reported tier means") {
        const std::map<std::string, double> sectors{
            {"A1", 0.020}, {"A2", 0.032}, {"A3", 0.044}, {"B1", 0.065}, {"B2", 0.071}, {"B3", 0.077},
            {"C1", 0.190}, {"C2", 0.202}, {"C3", 0.214}, {"D1", 0.335}, {"D2", 0.345}, {"D3", 0.355}};
        const auto tiers = assign_intensity_tiers(sectors);
        const double targets[4] = {0.032, 0.071, 0.202, 0.345};
        double sum[4] = {0, 0, 0, 0};
        int cnt[4] = {0, 0, 0, 0};
        for (auto& [n, v] : sectors) {
            const int t = static_cast<int>(tiers.at(n));
            sum[t] += v;
            ++cnt[t];
        }
        for (int t = 0; t < 4; ++t) CHECK(std::abs(sum[t] / cnt[t] - targets[t]) < 0.02);
    }
    SUBCASE("four distinct sectors each get their own ordered tier") {
        const auto t = assign_intensity_tiers({{"x", 0.9}, {"y", 0.1}, {"z", 0.5}, {"w", 0.2}});
        CHECK(t.at("y") == IntensityTier::Low);
        CHECK(t.at("w") == IntensityTier::Medium);
        CHECK(t.at("z") == IntensityTier::High);
        CHECK(t.at("x") == IntensityTier::Extreme);
    }
    SUBCASE("scale invariance through min-max scaling") {
        std::vector<FirmRecord> panel, scaled;
        for (int s = 0; s < 8; ++s) {
            panel.push_back(firm("f" + std::to_string(s), "US", "S" + std::to_string(s), 3.0 * s * s + 1, 50));
            scaled.push_back(firm("f" + std::to_string(s), "US", "S" + std::to_string(s), 7.5 * (3.0 * s * s + 1), 50));
        }
        CHECK(assign_intensity_tiers(sector_intensity(panel)) == assign_intensity_tiers(sector_intensity(scaled)));
    }
    CHECK_THROWS_AS(assign_intensity_tiers({{"a", 0.1}, {"b", 0.2}, {"c", 0.3}}), Error);
}

TEST_CASE("assign_clusters is total and ordered") {
    std::vector<CountryClimate> climate{{"AA", 0.15}, {"BB", 0.2}, {"CC", 0.45}, {"DD", 0.7}};
    std::vector<FirmRecord> firms;
    const char* countries[] = {"AA", "BB", "CC", "DD"};
    for (int i = 0; i < 40; ++i)
        firms.push_back(firm("F" + std::to_string(100 + i), countries[i % 4], "N" + std::to_string(i % 8),
                             10.0 * (1 + (i % 8) * (i % 8)), 100));
    const auto a = assign_clusters(firms, climate);
    CHECK(a.firm_keys.size() == firms.size());
    std::size_t total = 0;
    for (auto& c : a.cells) total += c.firm_count;
    CHECK(total == firms.size());
    CHECK(a.vulnerability_mean(VulnerabilityTier::Low) < a.vulnerability_mean(VulnerabilityTier::MidHigh));
    for (int t = 0; t + 1 < 4; ++t)
        CHECK(a.intensity_mean(static_cast<IntensityTier>(t)) < a.intensity_mean(static_cast<IntensityTier>(t + 1)));

    auto reversed = firms;
    std::reverse(reversed.begin(), reversed.end());
    auto climate_rev = climate;
    std::reverse(climate_rev.begin(), climate_rev.end());
    const auto b = assign_clusters(reversed, climate_rev);
    CHECK(clusters_to_csv(a) == clusters_to_csv(b));
    CHECK(cluster_stats_to_csv(a) == cluster_stats_to_csv(b));

    const auto dir = std::filesystem::temp_directory_path() / "climrisk_cluster_test";
    std::filesystem::create_directories(dir);
    csv::write_atomic(dir / "clusters.csv", clusters_to_csv(a));
    csv::write_atomic(dir / "stats.csv", cluster_stats_to_csv(a));
    CHECK(load_cluster_keys(dir / "clusters.csv") == a.firm_keys);
    const auto means = load_tier_means(dir / "stats.csv");
    CHECK(means.at({"intensity", "Extreme"}) == a.intensity_mean(IntensityTier::Extreme));
    std::filesystem::remove_all(dir);
}
