#include "climrisk/ingestion.hpp"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace climrisk {

std::string_view to_string(ExclusionStage stage) noexcept {
    switch (stage) {
        case ExclusionStage::ClimateClustering: return "climate_clustering";
        case ExclusionStage::ShockComputation: return "shock_computation";
        case ExclusionStage::FvmEstimation: return "fvm_estimation";
    }
    return "unknown";
}

ExclusionStage parse_exclusion_stage(std::string_view text) {
    if (text == "climate_clustering") return ExclusionStage::ClimateClustering;
    if (text == "shock_computation") return ExclusionStage::ShockComputation;
    if (text == "fvm_estimation") return ExclusionStage::FvmEstimation;
    throw Error(ErrorKind::NumericParse, "unknown exclusion stage '" + std::string(text) + "'");
}

bool ExclusionLedger::add(ExclusionStage stage, std::string firm_id, std::string reason) {
    auto key_less = [](const Exclusion& e, const std::pair<ExclusionStage, std::string_view>& k) {
        return std::pair<ExclusionStage, std::string_view>(e.stage, e.firm_id) < k;
    };
    const std::pair<ExclusionStage, std::string_view> key(stage, firm_id);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key, key_less);
    if (it != entries_.end() && it->stage == stage && it->firm_id == firm_id) return false;
    entries_.insert(it, Exclusion{stage, std::move(firm_id), std::move(reason)});
    return true;
}

void ExclusionLedger::merge(const ExclusionLedger& other) {
    for (const auto& e : other.entries_) add(e.stage, e.firm_id, e.reason);
}

std::size_t ExclusionLedger::count(ExclusionStage stage) const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [&](const Exclusion& e) { return e.stage == stage; }));
}

std::set<std::string> ExclusionLedger::excluded_firms() const {
    std::set<std::string> out;
    for (const auto& e : entries_) out.insert(e.firm_id);
    return out;
}

bool ExclusionLedger::contains(ExclusionStage stage, std::string_view firm_id) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Exclusion& e) { return e.stage == stage && e.firm_id == firm_id; });
}

std::string ExclusionLedger::to_csv() const {
    csv::Writer w({"stage", "firm_id", "reason"});
    for (const auto& e : entries_) {
        w.cell(to_string(e.stage)).cell(e.firm_id).cell(e.reason);
        w.end_row();
    }
    return w.str();
}

ExclusionLedger ExclusionLedger::from_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto c_stage = table.column("stage");
    const auto c_firm = table.column("firm_id");
    const auto c_reason = table.column("reason");
    ExclusionLedger ledger;
    for (const auto& row : table.rows) ledger.add(parse_exclusion_stage(row[c_stage]), row[c_firm], row[c_reason]);
    return ledger;
}

namespace {

std::string row_label(std::string_view origin, std::size_t line, std::string_view column) {
    return std::string(origin) + " line " + std::to_string(line) + " column " + std::string(column);
}

bool same_attributes(const FirmRecord& a, const FirmRecord& b) {
    return a.country == b.country && a.nace == b.nace && a.equity_value == b.equity_value &&
           a.equity_vol == b.equity_vol && a.total_debt == b.total_debt && a.debt_maturity == b.debt_maturity &&
           a.risk_free == b.risk_free && a.ppe == b.ppe && a.revenue == b.revenue && a.capm_beta == b.capm_beta;
}

}  // namespace

std::vector<FirmRecord> parse_firms(std::string_view csv_text, std::string_view origin) {
    const auto table = csv::parse(csv_text, origin);
    static const char* const kNumeric[] = {"equity_value", "equity_vol", "total_debt", "debt_maturity",
                                           "risk_free",    "ppe",        "revenue",    "capm_beta"};
    const auto c_id = table.column("firm_id");
    const auto c_country = table.column("country");
    const auto c_nace = table.column("nace");
    std::size_t c_num[8];
    for (int i = 0; i < 8; ++i) c_num[i] = table.column(kNumeric[i]);
    const auto c_index = table.column("index_id");
    const auto c_weight = table.column("index_weight");

    std::vector<FirmRecord> firms;
    std::unordered_map<std::string, std::size_t> position;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        FirmRecord rec;
        rec.firm_id = row[c_id];
        if (rec.firm_id.empty())
            throw Error(ErrorKind::NumericParse, row_label(origin, line, "firm_id") + ": empty firm id");
        rec.country = row[c_country];
        rec.nace = row[c_nace];
        std::optional<double>* targets[8] = {&rec.equity_value, &rec.equity_vol, &rec.total_debt,
                                             &rec.debt_maturity, &rec.risk_free,  &rec.ppe,
                                             &rec.revenue,       &rec.capm_beta};
        for (int i = 0; i < 8; ++i)
            *targets[i] = csv::parse_optional_number(row[c_num[i]], row_label(origin, line, kNumeric[i]));

        std::optional<IndexMembership> membership;
        if (!row[c_index].empty()) {
            const double w = csv::parse_number(row[c_weight], row_label(origin, line, "index_weight"));
            if (w < 0.0 || w > 1.0)
                throw Error(ErrorKind::NumericParse,
                            row_label(origin, line, "index_weight") + ": weight outside [0, 1]");
            membership = IndexMembership{row[c_index], w};
        }

        auto [it, inserted] = position.emplace(rec.firm_id, firms.size());
        if (inserted) {
            if (membership) rec.index_memberships.push_back(*membership);
            firms.push_back(std::move(rec));
            continue;
        }
        auto& existing = firms[it->second];
        if (!same_attributes(existing, rec))
            throw Error(ErrorKind::DuplicateFirmId,
                        std::string(origin) + " line " + std::to_string(line) + ": firm '" + rec.firm_id +
                            "' repeated with conflicting attributes");
        if (!membership)
            throw Error(ErrorKind::DuplicateFirmId, std::string(origin) + " line " + std::to_string(line) +
                                                        ": firm '" + rec.firm_id + "' repeated without an index");
        for (const auto& m : existing.index_memberships) {
            if (m.index_id == membership->index_id)
                throw Error(ErrorKind::DuplicateFirmId, std::string(origin) + " line " + std::to_string(line) +
                                                            ": duplicate membership of '" + rec.firm_id +
                                                            "' in index '" + m.index_id + "'");
        }
        existing.index_memberships.push_back(*membership);
    }
    for (auto& f : firms)
        std::sort(f.index_memberships.begin(), f.index_memberships.end(),
                  [](const auto& a, const auto& b) { return a.index_id < b.index_id; });
    return firms;
}

void attach_ebitda(std::vector<FirmRecord>& firms, std::string_view ebitda_csv_text, std::string_view origin) {
    const auto table = csv::parse(ebitda_csv_text, origin);
    const auto c_id = table.column("firm_id");
    const auto c_year = table.column("year");
    const auto c_value = table.column("ebitda");
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < firms.size(); ++i) position.emplace(firms[i].firm_id, i);

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        auto it = position.find(row[c_id]);
        if (it == position.end()) {
            spdlog::debug("{} line {}: EBITDA for unknown firm '{}' ignored", origin, line, row[c_id]);
            continue;
        }
        const double year = csv::parse_number(row[c_year], row_label(origin, line, "year"));
        if (year != std::floor(year))
            throw Error(ErrorKind::NumericParse, row_label(origin, line, "year") + ": year must be an integer");
        const auto value = csv::parse_optional_number(row[c_value], row_label(origin, line, "ebitda"));
        if (!value) continue;
        auto& series = firms[it->second].ebitda_series;
        const int y = static_cast<int>(year);
        if (std::any_of(series.begin(), series.end(), [&](const EbitdaPoint& p) { return p.year == y; }))
            throw Error(ErrorKind::DuplicateFirmId, std::string(origin) + " line " + std::to_string(line) +
                                                        ": duplicate year for firm '" + row[c_id] + "'");
        series.push_back({y, *value});
    }
    for (auto& f : firms)
        std::sort(f.ebitda_series.begin(), f.ebitda_series.end(),
                  [](const auto& a, const auto& b) { return a.year < b.year; });
}

std::vector<FirmRecord> load_firms(const std::filesystem::path& firms_path,
                                   const std::optional<std::filesystem::path>& ebitda_path) {
    auto firms = parse_firms(csv::read_file(firms_path), firms_path.string());
    if (ebitda_path) attach_ebitda(firms, csv::read_file(*ebitda_path), ebitda_path->string());
    return firms;
}

std::vector<CountryClimate> parse_vulnerability(std::string_view csv_text, std::string_view origin) {
    const auto table = csv::parse(csv_text, origin);
    const auto c_country = table.column("country");
    const auto c_vul = table.column("vulnerability");
    std::vector<CountryClimate> out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        const double v = csv::parse_number(row[c_vul], row_label(origin, line, "vulnerability"));
        if (v < 0.0 || v > 1.0)
            throw Error(ErrorKind::OutOfRangeScore,
                        row_label(origin, line, "vulnerability") + ": score " + csv::format_number(v) +
                            " outside [0, 1]");
        if (!seen.insert(row[c_country]).second)
            throw Error(ErrorKind::DuplicateCountry,
                        std::string(origin) + " line " + std::to_string(line) + ": country '" + row[c_country] +
                            "' listed twice");
        out.push_back({row[c_country], v});
    }
    return out;
}

std::vector<CountryClimate> load_vulnerability(const std::filesystem::path& path) {
    return parse_vulnerability(csv::read_file(path), path.string());
}

VulnerabilitySummary summarize(const std::vector<CountryClimate>& climate) {
    VulnerabilitySummary s;
    s.count = climate.size();
    if (climate.empty()) return s;
    double sum = 0.0;
    for (const auto& c : climate) sum += c.vulnerability;
    s.mean = sum / static_cast<double>(climate.size());
    if (climate.size() > 1) {
        double ss = 0.0;
        for (const auto& c : climate) ss += (c.vulnerability - s.mean) * (c.vulnerability - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(climate.size() - 1));
    }
    return s;
}

std::map<std::string, double> parse_market_returns(std::string_view csv_text, std::string_view origin) {
    const auto table = csv::parse(csv_text, origin);
    const auto c_index = table.column("index_id");
    const auto c_ret = table.column("annual_return");
    std::map<std::string, double> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const double v = csv::parse_number(row[c_ret], row_label(origin, table.line_numbers[r], "annual_return"));
        if (!out.emplace(row[c_index], v).second)
            throw Error(ErrorKind::DuplicateFirmId, std::string(origin) + ": index '" + row[c_index] +
                                                        "' listed twice");
    }
    return out;
}

std::map<std::string, double> load_market_returns(const std::filesystem::path& path) {
    return parse_market_returns(csv::read_file(path), path.string());
}

namespace {

std::size_t distinct_years(const std::vector<EbitdaPoint>& series) {
    std::set<int> years;
    for (const auto& p : series) years.insert(p.year);
    return years.size();
}

bool positive(const std::optional<double>& v) { return v && *v > 0.0; }

}  // namespace

FilterResult filter_pipeline(std::vector<FirmRecord> firms, const std::vector<CountryClimate>& climate) {
    std::sort(firms.begin(), firms.end(), [](const auto& a, const auto& b) { return a.firm_id < b.firm_id; });

    std::set<std::string> countries;
    for (const auto& c : climate) countries.insert(c.country);

    // Imputation pool: index_id -> rates of every input firm in that index.
    std::map<std::string, std::pair<double, std::size_t>> index_rates;
    for (const auto& f : firms) {
        if (!f.risk_free) continue;
        for (const auto& m : f.index_memberships) {
            auto& acc = index_rates[m.index_id];
            acc.first += *f.risk_free;
            acc.second += 1;
        }
    }

    FilterResult result;
    auto& ledger = result.ledger;

    for (auto& f : firms) {
        // Stage 1: climate clustering inputs.
        std::string reason;
        if (!countries.count(f.country)) reason = "country vulnerability missing";
        else if (f.nace.empty()) reason = "nace sector missing";
        else if (!f.ppe) reason = "ppe missing";
        else if (*f.ppe < 0.0) reason = "ppe negative";
        else if (!positive(f.revenue)) reason = "revenue missing or nonpositive";
        if (!reason.empty()) {
            ledger.add(ExclusionStage::ClimateClustering, f.firm_id, reason);
            continue;
        }

        // Stage 2: shock inputs.
        if (distinct_years(f.ebitda_series) < 2) reason = "fewer than two EBITDA years";
        else if (!f.capm_beta) reason = "capm beta missing";
        if (!reason.empty()) {
            ledger.add(ExclusionStage::ShockComputation, f.firm_id, reason);
            continue;
        }

        // Stage 3: firm value model inputs.
        if (!positive(f.equity_value)) reason = "equity value missing or nonpositive";
        else if (!positive(f.equity_vol)) reason = "equity volatility missing or nonpositive";
        else if (!f.total_debt || *f.total_debt < 0.0) reason = "total debt missing or negative";
        else if (!positive(f.debt_maturity)) reason = "debt maturity missing or nonpositive";
        if (reason.empty() && !f.risk_free) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& m : f.index_memberships) {
                if (auto it = index_rates.find(m.index_id); it != index_rates.end()) {
                    sum += it->second.first;
                    n += it->second.second;
                }
            }
            if (n == 0) {
                reason = "risk-free rate missing with no same-index rates to impute";
            } else {
                f.risk_free = sum / static_cast<double>(n);
                spdlog::debug("firm {}: risk-free rate imputed as {}", f.firm_id, *f.risk_free);
            }
        }
        if (!reason.empty()) {
            ledger.add(ExclusionStage::FvmEstimation, f.firm_id, reason);
            continue;
        }
        result.kept.push_back(std::move(f));
    }
    return result;
}

std::string firms_to_csv(const std::vector<FirmRecord>& firms) {
    csv::Writer w({"firm_id", "country", "nace", "equity_value", "equity_vol", "total_debt", "debt_maturity",
                   "risk_free", "ppe", "revenue", "capm_beta", "index_id", "index_weight"});
    auto opt = [&](const std::optional<double>& v) {
        if (v) w.cell(*v);
        else w.cell(std::string_view{});
    };
    for (const auto& f : firms) {
        auto emit = [&](const IndexMembership* m) {
            w.cell(f.firm_id).cell(f.country).cell(f.nace);
            opt(f.equity_value);
            opt(f.equity_vol);
            opt(f.total_debt);
            opt(f.debt_maturity);
            opt(f.risk_free);
            opt(f.ppe);
            opt(f.revenue);
            opt(f.capm_beta);
            if (m) w.cell(m->index_id).cell(m->weight);
            else w.cell(std::string_view{}).cell(std::string_view{});
            w.end_row();
        };
        if (f.index_memberships.empty()) emit(nullptr);
        for (const auto& m : f.index_memberships) emit(&m);
    }
    return w.str();
}

std::map<std::string, std::vector<std::pair<std::string, double>>> portfolio_weights(
    const std::vector<FirmRecord>& firms) {
    std::map<std::string, std::vector<std::pair<std::string, double>>> out;
    for (const auto& f : firms)
        for (const auto& m : f.index_memberships) out[m.index_id].emplace_back(f.firm_id, m.weight);
    for (auto it = out.begin(); it != out.end();) {
        auto& members = it->second;
        std::sort(members.begin(), members.end());
        double total = 0.0;
        for (const auto& [id, w] : members) total += w;
        if (!(total > 0.0)) {
            spdlog::warn("index {} has zero total weight after filtering; dropped", it->first);
            it = out.erase(it);
            continue;
        }
        for (auto& [id, w] : members) w /= total;
        ++it;
    }
    return out;
}

std::string ebitda_to_csv(const std::vector<FirmRecord>& firms) {
    csv::Writer w({"firm_id", "year", "ebitda"});
    for (const auto& f : firms)
        for (const auto& p : f.ebitda_series) {
            w.cell(f.firm_id).cell(static_cast<long long>(p.year)).cell(p.value);
            w.end_row();
        }
    return w.str();
}

}  // namespace climrisk
