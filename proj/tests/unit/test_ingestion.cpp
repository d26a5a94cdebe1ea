#include "doctest.h"

#include "climrisk/errors.hpp"
#include "climrisk/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace climrisk;

namespace {

const char* kHeader =
    "firm_id,country,nace,equity_value,equity_vol,total_debt,debt_maturity,risk_free,ppe,revenue,capm_beta,index_id,"
    "index_weight\n";

struct Row {
    std::string id, country = "US", nace = "C";
    std::string equity = "100", vol = "0.3", debt = "50", maturity = "5", rf = "0.02", ppe = "40", revenue = "80",
                beta = "1.1", index = "IDX", weight = "0.1";
};

std::string to_text(const std::vector<Row>& rows) {
    std::ostringstream out;
    out << kHeader;
    for (const auto& r : rows)
        out << r.id << ',' << r.country << ',' << r.nace << ',' << r.equity << ',' << r.vol << ',' << r.debt << ','
            << r.maturity << ',' << r.rf << ',' << r.ppe << ',' << r.revenue << ',' << r.beta << ',' << r.index
            << ',' << r.weight << '\n';
    return out.str();
}

std::string ebitda_for(const std::vector<std::string>& ids, int years = 3) {
    std::string text = "firm_id,year,ebitda\n";
    for (const auto& id : ids)
        for (int y = 0; y < years; ++y) text += id + "," + std::to_string(2019 + y) + "," + std::to_string(10 + y) + "\n";
    return text;
}

std::vector<CountryClimate> climate() { return {{"US", 0.2}, {"DE", 0.25}, {"BR", 0.6}}; }

}  // namespace

TEST_CASE("header-only file gives no firms") {
    CHECK(parse_firms(kHeader).empty());
}

TEST_CASE("snapshot of sixteen firms loads") {
    const auto firms = load_firms(CLIMRISK_TEST_DATA "/firm_snapshot.csv");
    REQUIRE(firms.size() == 16);
    const auto it = std::find_if(firms.begin(), firms.end(), [](auto& f) { return f.firm_id == "US5529531015"; });
    REQUIRE(it != firms.end());
    CHECK(it->nace == "I.55");
    CHECK(*it->total_debt == 8.9);
    CHECK(*it->debt_maturity == 3.7);
    CHECK(*it->equity_value == 17.2);
    CHECK_FALSE(it->equity_vol.has_value());
    CHECK(it->index_memberships.at(0).index_id == "MSCI USA");
}

TEST_CASE("malformed numerics name the row") {
    Row r{.id = "A"};
    r.debt = "abc";
    try {
        parse_firms(to_text({Row{.id = "Z"}, r}));
        FAIL("expected NumericParse");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NumericParse);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("missing column and duplicate membership are errors") {
    try {
        parse_firms("firm_id,country\nA,US\n");
        FAIL("expected MissingColumn");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingColumn);
    }
    try {
        parse_firms(to_text({Row{.id = "A"}, Row{.id = "A"}}));
        FAIL("expected DuplicateFirmId");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DuplicateFirmId);
    }
    Row other{.id = "A"};
    other.index = "IDX2";
    const auto firms = parse_firms(to_text({Row{.id = "A"}, other}));
    REQUIRE(firms.size() == 1);
    CHECK(firms[0].index_memberships.size() == 2);

    Row conflicting = other;
    conflicting.equity = "101";
    CHECK_THROWS_AS(parse_firms(to_text({Row{.id = "A"}, conflicting})), Error);
}

TEST_CASE("ebitda attachment sorts by year and rejects duplicate years") {
    auto firms = parse_firms(to_text({Row{.id = "A"}}));
    attach_ebitda(firms, "firm_id,year,ebitda\nA,2021,3\nA,2019,1\nB,2019,5\n");
    REQUIRE(firms[0].ebitda_series.size() == 2);
    CHECK(firms[0].ebitda_series[0].year == 2019);
    CHECK_THROWS_AS(attach_ebitda(firms, "firm_id,year,ebitda\nA,2021,3\nA,2021,1\n"), Error);
}

TEST_CASE("vulnerability loading") {
    const auto one = parse_vulnerability("country,vulnerability\nUS,0.18\n");
    REQUIRE(one.size() == 1);
    CHECK(one[0].vulnerability == 0.18);
    try {
        parse_vulnerability("country,vulnerability\nUS,1.2\n");
        FAIL("expected OutOfRangeScore");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutOfRangeScore);
    }
    try {
        parse_vulnerability("country,vulnerability\nUS,0.2\nUS,0.3\n");
        FAIL("expected DuplicateCountry");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DuplicateCountry);
    }
}

TEST_CASE("country vulnerability moments") {
    // Standardise a fixed draw and rescale it to mean 0.44 and sd 0.23.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(120);
    for (auto& v : x) v = u(rng);
    double m = 0, s = 0;
    for (double v : x) m += v;
    m /= x.size();
    for (double v : x) s += (v - m) * (v - m);
    s = std::sqrt(s / (x.size() - 1));
    std::string text = "country,vulnerability\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double score = 0.44 + 0.23 * (x[i] - m) / s;
        REQUIRE(score >= 0.0);
        REQUIRE(score <= 1.0);
        text += "C" + std::to_string(i) + "," + std::to_string(score) + "\n";
    }
    const auto summary = summarize(parse_vulnerability(text));
    CHECK(summary.count == 120);
    CHECK(summary.mean == doctest::Approx(0.44).epsilon(1e-5));
    CHECK(summary.sd == doctest::Approx(0.23).epsilon(1e-5));
}

TEST_CASE("complete input passes every stage") {
    std::vector<Row> rows;
    for (int i = 0; i < 5; ++i) rows.push_back(Row{.id = "F" + std::to_string(i)});
    auto firms = parse_firms(to_text(rows));
    attach_ebitda(firms, ebitda_for({"F0", "F1", "F2", "F3", "F4"}));
    const auto result = filter_pipeline(firms, climate());
    CHECK(result.kept.size() == 5);
    CHECK(result.ledger.empty());
}

TEST_CASE("staged gaps 4/3/2 on twenty firms") {
    std::vector<Row> rows;
    std::vector<std::string> ids;
    for (int i = 1; i <= 20; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "F%02d", i);
        rows.push_back(Row{.id = buf});
        ids.push_back(buf);
    }
    // climate clustering gaps
    rows[0].country = "XX";
    rows[1].ppe = "";
    rows[2].revenue = "0";
    rows[3].nace = "";
    // shock gaps (F05 gets no EBITDA rows, F06 one year, F07 no beta)
    rows[6].beta = "";
    // FVM gaps, plus a firm with an unknown rate that gets imputed
    rows[7].vol = "";
    rows[8].maturity = "";
    rows[9].rf = "";

    std::vector<std::string> with_ebitda;
    for (const auto& id : ids)
        if (id != "F05" && id != "F06") with_ebitda.push_back(id);
    auto firms = parse_firms(to_text(rows));
    attach_ebitda(firms, ebitda_for(with_ebitda) + "F06,2020,4\n");

    const auto result = filter_pipeline(firms, climate());
    CHECK(result.kept.size() == 11);
    CHECK(result.ledger.count(ExclusionStage::ClimateClustering) == 4);
    CHECK(result.ledger.count(ExclusionStage::ShockComputation) == 3);
    CHECK(result.ledger.count(ExclusionStage::FvmEstimation) == 2);
    CHECK(result.kept.size() + result.ledger.excluded_firms().size() == 20);
    CHECK(result.ledger.contains(ExclusionStage::ClimateClustering, "F01"));
    CHECK(result.ledger.contains(ExclusionStage::ShockComputation, "F06"));

    const auto f10 = std::find_if(result.kept.begin(), result.kept.end(), [](auto& f) { return f.firm_id == "F10"; });
    REQUIRE(f10 != result.kept.end());
    CHECK(*f10->risk_free == doctest::Approx(0.02));

    SUBCASE("permutation and repetition give the same result") {
        auto shuffled = firms;
        std::mt19937 rng(3);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto again = filter_pipeline(shuffled, climate());
        CHECK(again.ledger == result.ledger);
        CHECK(again.kept == result.kept);
        CHECK(firms_to_csv(again.kept) == firms_to_csv(result.kept));
        CHECK(again.ledger.to_csv() == result.ledger.to_csv());
    }
}

TEST_CASE("risk-free imputation falls back to exclusion") {
    Row a{.id = "A"}, b{.id = "B"}, c{.id = "C"};
    a.rf = "0.01";
    b.rf = "0.03";
    c.rf = "";
    c.index = "LONELY";
    auto firms = parse_firms(to_text({a, b, c}));
    attach_ebitda(firms, ebitda_for({"A", "B", "C"}));
    const auto result = filter_pipeline(firms, climate());
    CHECK(result.kept.size() == 2);
    CHECK(result.ledger.contains(ExclusionStage::FvmEstimation, "C"));

    c.index = "IDX";
    firms = parse_firms(to_text({a, b, c}));
    attach_ebitda(firms, ebitda_for({"A", "B", "C"}));
    const auto imputed = filter_pipeline(firms, climate());
    REQUIRE(imputed.kept.size() == 3);
    CHECK(*imputed.kept[2].risk_free == doctest::Approx(0.02));
}

TEST_CASE("portfolio weights renormalise within each index") {
    Row a{.id = "A"}, b{.id = "B"}, c{.id = "C"};
    a.weight = "0.2";
    b.weight = "0.6";
    c.weight = "0.5";
    c.index = "OTHER";
    const auto firms = parse_firms(to_text({a, b, c}));
    const auto w = portfolio_weights(firms);
    REQUIRE(w.size() == 2);
    double total = 0;
    for (auto& [id, x] : w.at("IDX")) total += x;
    CHECK(std::abs(total - 1.0) < 1e-9);
    CHECK(w.at("IDX")[0].second == doctest::Approx(0.25));
    CHECK(w.at("OTHER")[0].second == doctest::Approx(1.0));
}

TEST_CASE("ledger round trip") {
    ExclusionLedger ledger;
    CHECK(ledger.add(ExclusionStage::FvmEstimation, "B", "x"));
    CHECK(ledger.add(ExclusionStage::ClimateClustering, "A", "reason, with comma"));
    CHECK_FALSE(ledger.add(ExclusionStage::FvmEstimation, "B", "again"));
    const auto dir = std::filesystem::temp_directory_path() / "climrisk_ledger_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "ex.csv") << ledger.to_csv();
    CHECK(ExclusionLedger::from_csv(dir / "ex.csv") == ledger);
    std::filesystem::remove_all(dir);
}
