#include "climrisk/pipeline.hpp"

#include "climrisk/csv.hpp"
#include "climrisk/errors.hpp"
#include "climrisk/parallel.hpp"

#include "json.hpp"

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

namespace climrisk {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::Ingest: return "ingest";
        case Stage::Cluster: return "cluster";
        case Stage::Shock: return "shock";
        case Stage::Calibrate: return "calibrate";
        case Stage::Simulate: return "simulate";
        case Stage::Report: return "report";
        case Stage::All: return "all";
    }
    return "all";
}

Stage parse_stage(std::string_view text) {
    for (auto s : {Stage::Ingest, Stage::Cluster, Stage::Shock, Stage::Calibrate, Stage::Simulate, Stage::Report,
                   Stage::All})
        if (text == to_string(s)) return s;
    throw Error(ErrorKind::ConfigInvalid, "unknown stage '" + std::string(text) + "'");
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Io, "SHA-256 failed");
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------- config

void RunConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::ConfigInvalid, m); };
    if (!(rho >= 0.0 && rho <= 1.0)) bad("rho must lie in [0, 1]");
    if (!(winsor_lower >= 0.0 && winsor_lower < winsor_upper && winsor_upper <= 100.0))
        bad("winsor percentiles must satisfy 0 <= lower < upper <= 100");
    if (threads < 1) bad("threads must be at least 1");
    if (alpha_table)
        for (double a : *alpha_table)
            if (!(a >= 0.0 && a <= 1.0)) bad("alpha_table entries must lie in [0, 1]");
    for (double l : report.levels)
        if (!(l > 0.0 && l < 1.0)) bad("report levels must lie in (0, 1)");
    if (std::find(report.levels.begin(), report.levels.end(), report.addon_level) == report.levels.end())
        bad("report.addon_level must be one of report.levels");
    if (std::find(simulation.horizons.begin(), simulation.horizons.end(), report.addon_horizon) ==
        simulation.horizons.end())
        bad("report.addon_horizon must be one of simulation.horizons");
    if (!(calibration.lambda_min > 0.0 && calibration.lambda_min < calibration.lambda_max &&
          calibration.theta_min > 0.0 && calibration.theta_min < calibration.theta_max))
        bad("calibration ranges must be positive and increasing");
    if (calibration.grid < 2 || calibration.starts < 1 || calibration.max_evaluations < 10)
        bad("calibration grid >= 2, starts >= 1, max_evaluations >= 10 required");
    simulation.validate();
    for (const auto& [name, p] : {std::pair{"firms", &firms}, {"ebitda", &ebitda}, {"vulnerability", &vulnerability},
                                  {"market_returns", &market_returns}}) {
        if (p->empty()) bad(std::string("inputs.") + name + " is required");
        if (!fs::is_regular_file(*p)) bad(std::string("inputs.") + name + " not found: " + p->string());
    }
}

namespace {

const std::set<std::string> kTopLevelKeys{"inputs",     "rho",        "winsor",    "alpha_table", "calibration",
                                          "simulation", "report",     "output_dir", "log_level",   "threads",
                                          "write_slices"};

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
    if (base.empty()) return p.generic_string();
    const auto rel = p.lexically_proximate(base);
    const auto s = rel.generic_string();
    return s.rfind("..", 0) == 0 ? p.generic_string() : s;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("run config: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::ConfigInvalid, "run config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!kTopLevelKeys.count(k)) throw Error(ErrorKind::ConfigInvalid, "unknown config key '" + k + "'");

    RunConfig c;
    try {
        const auto& in = j.at("inputs");
        c.firms = resolve(base_dir, in.at("firms").get<std::string>());
        c.ebitda = resolve(base_dir, in.at("ebitda").get<std::string>());
        c.vulnerability = resolve(base_dir, in.at("vulnerability").get<std::string>());
        c.market_returns = resolve(base_dir, in.at("market_returns").get<std::string>());
        if (j.contains("rho")) c.rho = j["rho"].get<double>();
        if (j.contains("winsor")) {
            c.winsor_lower = j["winsor"].value("lower", c.winsor_lower);
            c.winsor_upper = j["winsor"].value("upper", c.winsor_upper);
        }
        if (j.contains("alpha_table")) {
            AlphaTable t{};
            const auto& a = j["alpha_table"];
            for (const auto& key : ClusterKey::all()) {
                if (!a.contains(key.label()))
                    throw Error(ErrorKind::ConfigInvalid, "alpha_table lacks cluster " + key.label());
                t[static_cast<std::size_t>(key.index())] = a[key.label()].get<double>();
            }
            if (a.size() != t.size()) throw Error(ErrorKind::ConfigInvalid, "alpha_table has unknown clusters");
            c.alpha_table = t;
        }
        if (j.contains("calibration")) {
            const auto& cal = j["calibration"];
            if (cal.contains("lambda_range")) {
                c.calibration.lambda_min = cal["lambda_range"].at(0).get<double>();
                c.calibration.lambda_max = cal["lambda_range"].at(1).get<double>();
            }
            if (cal.contains("theta_range")) {
                c.calibration.theta_min = cal["theta_range"].at(0).get<double>();
                c.calibration.theta_max = cal["theta_range"].at(1).get<double>();
            }
            c.calibration.grid = cal.value("grid", c.calibration.grid);
            c.calibration.starts = cal.value("starts", c.calibration.starts);
            c.calibration.max_evaluations = cal.value("max_evaluations", c.calibration.max_evaluations);
        }
        if (j.contains("simulation")) c.simulation = simulation_config_from_json(j["simulation"].dump());
        if (j.contains("report")) {
            const auto& r = j["report"];
            if (r.contains("levels")) c.report.levels = r["levels"].get<std::vector<double>>();
            c.report.addon_level = r.value("addon_level", c.report.addon_level);
            c.report.addon_horizon = r.value("addon_horizon", c.report.addon_horizon);
        }
        if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
        else c.output_dir = base_dir / "out";
        c.log_level = j.value("log_level", c.log_level);
        c.threads = j.value("threads", c.threads);
        c.write_slices = j.value("write_slices", c.write_slices);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::string text;
    try {
        text = csv::read_file(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigInvalid, "cannot read config " + path.string());
    }
    return parse_run_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

namespace {

json config_json(const RunConfig& c, const fs::path& base, bool with_runtime) {
    json j;
    j["inputs"] = {{"firms", relative_to(c.firms, base)},
                   {"ebitda", relative_to(c.ebitda, base)},
                   {"vulnerability", relative_to(c.vulnerability, base)},
                   {"market_returns", relative_to(c.market_returns, base)}};
    j["rho"] = c.rho;
    j["winsor"] = {{"lower", c.winsor_lower}, {"upper", c.winsor_upper}};
    if (c.alpha_table) {
        json a;
        for (const auto& key : ClusterKey::all()) a[key.label()] = (*c.alpha_table)[static_cast<std::size_t>(key.index())];
        j["alpha_table"] = a;
    }
    j["calibration"] = {{"lambda_range", {c.calibration.lambda_min, c.calibration.lambda_max}},
                        {"theta_range", {c.calibration.theta_min, c.calibration.theta_max}},
                        {"grid", c.calibration.grid},
                        {"starts", c.calibration.starts},
                        {"max_evaluations", c.calibration.max_evaluations}};
    j["simulation"] = json::parse(simulation_config_to_json(c.simulation));
    j["report"] = {{"levels", c.report.levels},
                   {"addon_level", c.report.addon_level},
                   {"addon_horizon", c.report.addon_horizon}};
    j["write_slices"] = c.write_slices;
    if (with_runtime) {
        j["output_dir"] = relative_to(c.output_dir, base);
        j["log_level"] = c.log_level;
        j["threads"] = c.threads;
    }
    return j;
}

}  // namespace

std::string run_config_to_json(const RunConfig& c, const fs::path& base_dir) {
    return config_json(c, base_dir, true).dump(2) + "\n";
}

// ---------------------------------------------------------------- stages

namespace {

json sorted_object(const json& j) {
    std::map<std::string, json> m;
    for (const auto& [k, v] : j.items()) m[k] = v;
    json out = json::object();
    for (auto& [k, v] : m) out[k] = v;
    return out;
}

class StageContext {
public:
    explicit StageContext(const RunConfig& c) : config(c), out(c.output_dir) {
        fs::create_directories(out);
        const auto mpath = out / artifact::kManifest;
        if (fs::exists(mpath)) {
            try {
                manifest_ = json::parse(csv::read_file(mpath));
            } catch (const json::exception&) {
                manifest_ = json::object();
            }
        }
        if (!manifest_.is_object()) manifest_ = json::object();
        if (!manifest_.contains("inputs")) manifest_["inputs"] = json::object();
        if (!manifest_.contains("artifacts")) manifest_["artifacts"] = json::object();
        manifest_["config_sha256"] = config_hash();
        manifest_["seed"] = config.simulation.seed;
    }

    // Input contents are hashed separately, so only their names enter here.
    std::string config_hash() const {
        auto j = config_json(config, {}, false);
        for (auto& [k, v] : j["inputs"].items()) v = fs::path(v.get<std::string>()).filename().generic_string();
        return sha256_hex(j.dump());
    }

    fs::path path(const char* name) const { return out / name; }

    void require(Stage stage, std::initializer_list<const char*> names) const {
        for (const char* n : names)
            if (!fs::is_regular_file(path(n)))
                throw Error(ErrorKind::MissingUpstream, std::string("stage ") + std::string(to_string(stage)) +
                                                            " needs " + n + "; run the earlier stages first");
    }

    // Records a raw input and returns its contents.
    std::string input(const std::string& name, const fs::path& p) {
        auto text = csv::read_file(p);
        const auto h = sha256_hex(text);
        manifest_["inputs"][name] = {{"path", p.filename().generic_string()}, {"sha256", h}};
        input_hash_[name] = h;
        return text;
    }

    void write(Stage stage, const char* name, std::string_view contents, const std::vector<std::string>& raw_inputs,
               const std::vector<std::string>& upstream) {
        csv::write_atomic(path(name), contents);
        json deps = json::object();
        for (const auto& r : raw_inputs) {
            auto it = input_hash_.find(r);
            if (it == input_hash_.end()) {
                const auto& known = manifest_["inputs"];
                if (known.contains(r)) deps["input:" + r] = known[r]["sha256"];
            } else {
                deps["input:" + r] = it->second;
            }
        }
        for (const auto& u : upstream) {
            deps[u] = sha256_hex(csv::read_file(out / u));
            // carry the upstream lineage so every raw input is listed
            const auto& arts = manifest_["artifacts"];
            if (arts.contains(u))
                for (const auto& [k, v] : arts[u]["inputs"].items())
                    if (!deps.contains(k)) deps[k] = v;
        }
        const json ordered = sorted_object(deps);
        manifest_["artifacts"][name] = {{"stage", to_string(stage)},
                                        {"sha256", sha256_hex(contents)},
                                        {"config_sha256", manifest_["config_sha256"]},
                                        {"inputs", ordered}};
        written_.push_back(path(name));
    }

    void commit() {
        // Keep entries in name order so the manifest is stable.
        manifest_["artifacts"] = sorted_object(manifest_["artifacts"]);
        manifest_["inputs"] = sorted_object(manifest_["inputs"]);
        csv::write_atomic(path(artifact::kManifest), manifest_.dump(2) + "\n");
    }

    const RunConfig& config;
    fs::path out;
    std::vector<fs::path> written_;

private:
    json manifest_;
    std::map<std::string, std::string> input_hash_;
};

std::vector<FirmRecord> load_clean_firms(StageContext& ctx, bool with_ebitda) {
    auto firms = parse_firms(csv::read_file(ctx.path(artifact::kFirms)), artifact::kFirms);
    if (with_ebitda) attach_ebitda(firms, csv::read_file(ctx.path(artifact::kEbitda)), artifact::kEbitda);
    return firms;
}

void ingest(StageContext& ctx) {
    const auto& c = ctx.config;
    auto firms = parse_firms(ctx.input("firms", c.firms), c.firms.filename().string());
    attach_ebitda(firms, ctx.input("ebitda", c.ebitda), c.ebitda.filename().string());
    const auto climate = parse_vulnerability(ctx.input("vulnerability", c.vulnerability),
                                             c.vulnerability.filename().string());
    auto result = filter_pipeline(std::move(firms), climate);
    spdlog::info("ingest: kept {} firms, excluded {}", result.kept.size(), result.ledger.entries().size());
    const std::vector<std::string> raw{"firms", "ebitda", "vulnerability"};
    ctx.write(Stage::Ingest, artifact::kFirms, firms_to_csv(result.kept), raw, {});
    ctx.write(Stage::Ingest, artifact::kEbitda, ebitda_to_csv(result.kept), raw, {});
    ctx.write(Stage::Ingest, artifact::kLedgerIngest, result.ledger.to_csv(), raw, {});
}

void cluster(StageContext& ctx) {
    ctx.require(Stage::Cluster, {artifact::kFirms});
    const auto& c = ctx.config;
    const auto firms = load_clean_firms(ctx, false);
    const auto climate = parse_vulnerability(ctx.input("vulnerability", c.vulnerability),
                                             c.vulnerability.filename().string());
    const auto a = assign_clusters(firms, climate, c.winsor_lower, c.winsor_upper);
    ctx.write(Stage::Cluster, artifact::kClusters, clusters_to_csv(a), {"vulnerability"}, {artifact::kFirms});
    ctx.write(Stage::Cluster, artifact::kClusterStats, cluster_stats_to_csv(a), {"vulnerability"}, {artifact::kFirms});
    ctx.write(Stage::Cluster, artifact::kClusterCells, cluster_cells_to_csv(a), {"vulnerability"}, {artifact::kFirms});
}

void shock(StageContext& ctx) {
    ctx.require(Stage::Shock, {artifact::kFirms, artifact::kEbitda, artifact::kClusters, artifact::kClusterStats});
    const auto& c = ctx.config;
    const auto firms = load_clean_firms(ctx, true);
    const auto keys = load_cluster_keys(ctx.path(artifact::kClusters));
    const auto returns = parse_market_returns(ctx.input("market_returns", c.market_returns),
                                              c.market_returns.filename().string());
    const AlphaTable alphas = c.alpha_table ? *c.alpha_table : cluster_alphas(load_tier_means(ctx.path(artifact::kClusterStats)));

    csv::Writer aw({"cluster", "alpha", "source"});
    for (const auto& key : ClusterKey::all()) {
        aw.cell(key.label()).cell(alphas[static_cast<std::size_t>(key.index())]);
        aw.cell(c.alpha_table ? "config" : "tier_means");
        aw.end_row();
    }
    const auto result = stressed_equity_targets(firms, keys, alphas, returns);
    spdlog::info("shock: {} targets, {} exclusions", result.targets.size(), result.ledger.entries().size());
    const std::vector<std::string> up{artifact::kFirms, artifact::kEbitda, artifact::kClusters,
                                                artifact::kClusterStats};
    ctx.write(Stage::Shock, artifact::kAlphas, aw.str(), {}, {artifact::kClusterStats});
    ctx.write(Stage::Shock, artifact::kShocks, shocks_to_csv(result.targets), {"market_returns"}, up);
    ctx.write(Stage::Shock, artifact::kLedgerShock, result.ledger.to_csv(), {"market_returns"}, up);
}

void calibrate(StageContext& ctx) {
    ctx.require(Stage::Calibrate, {artifact::kFirms, artifact::kShocks});
    const auto& c = ctx.config;
    const auto all_firms = load_clean_firms(ctx, false);
    const auto shocks = load_shocks(ctx.path(artifact::kShocks));
    std::set<std::string> shocked;
    for (const auto& s : shocks) shocked.insert(s.firm_id);
    std::vector<FirmRecord> firms;
    for (const auto& f : all_firms)
        if (shocked.count(f.firm_id)) firms.push_back(f);

    auto fvm = estimate_fvm(firms, c.rho, c.threads);
    ExclusionLedger ledger = fvm.ledger;
    const auto sets = calibration_sets(firms, fvm.params, shocks);
    std::vector<std::pair<ClusterKey, std::vector<CalibrationFirm>>> work(sets.begin(), sets.end());
    std::map<ClusterKey, double> alpha_of;
    for (const auto& s : shocks) alpha_of[s.cluster] = s.alpha;

    std::vector<JumpCalibration> results(work.size());
    parallel_for(work.size(), c.threads, [&](std::size_t i) {
        results[i] = calibrate_cluster_jumps(work[i].first, alpha_of[work[i].first], work[i].second, c.calibration);
    });

    std::vector<ClusterParams> params;
    csv::Writer trace({"cluster", "iteration", "objective"});
    for (const auto& r : results) {
        spdlog::info("calibrate {}: lambda={:.6g} theta={:.6g} rmspe={:.3g} ({} firms, {} evaluations)",
                     r.params.key.label(), r.params.jumps.lambda, r.params.jumps.theta, r.params.rmspe,
                     r.params.firm_count, r.evaluations);
        params.push_back(r.params);
        ledger.merge(r.ledger);
        for (std::size_t it = 0; it < r.trace.size(); ++it) {
            trace.cell(r.params.key.label()).cell(static_cast<long long>(it)).cell(r.trace[it]);
            trace.end_row();
        }
    }
    // Firms the jump calibration dropped leave the simulation too.
    const auto dropped = ledger.excluded_firms();
    std::vector<FvmFirmParams> kept;
    for (const auto& p : fvm.params)
        if (!dropped.count(p.firm_id)) kept.push_back(p);

    const std::vector<std::string> up{artifact::kFirms, artifact::kShocks};
    ctx.write(Stage::Calibrate, artifact::kFvm, fvm_params_to_csv(kept), {}, up);
    ctx.write(Stage::Calibrate, artifact::kClusterParams, cluster_params_to_csv(params), {}, up);
    ctx.write(Stage::Calibrate, artifact::kTrace, trace.str(), {}, up);
    ctx.write(Stage::Calibrate, artifact::kLedgerCalibrate, ledger.to_csv(), {}, up);
}

void simulate(StageContext& ctx) {
    ctx.require(Stage::Simulate, {artifact::kFirms, artifact::kClusters, artifact::kFvm, artifact::kClusterParams});
    const auto& c = ctx.config;
    const auto firms = load_clean_firms(ctx, false);
    const auto model = build_model(firms, load_fvm_params(ctx.path(artifact::kFvm), c.rho),
                                   load_cluster_keys(ctx.path(artifact::kClusters)),
                                   load_cluster_params(ctx.path(artifact::kClusterParams)));
    const auto portfolios = build_portfolios(model, firms);
    if (portfolios.empty()) throw Error(ErrorKind::EmptyLosses, "no portfolio has surviving members");

    csv::Writer pw({"index", "firm_id", "weight"});
    for (const auto& p : portfolios)
        for (const auto& [j, w] : p.members) {
            pw.cell(p.id).cell(model.firms[j].firm_id).cell(w);
            pw.end_row();
        }
    const auto panel = simulate_losses(model, c.simulation, portfolios, c.threads);
    const std::vector<std::string> up{artifact::kFirms, artifact::kClusters, artifact::kFvm,
                                                artifact::kClusterParams};
    ctx.write(Stage::Simulate, artifact::kPortfolios, pw.str(), {}, up);
    ctx.write(Stage::Simulate, artifact::kLosses, encode_losses(panel), {}, up);
    if (c.write_slices) {
        const auto block = simulate_paths(model, c.simulation, c.threads);
        ctx.write(Stage::Simulate, artifact::kSlices, encode_slices(block, model, c.simulation), {}, up);
    }
}

void report(StageContext& ctx) {
    ctx.require(Stage::Report, {artifact::kLosses});
    const auto& c = ctx.config;
    const auto panel = decode_losses(csv::read_file(ctx.path(artifact::kLosses)));
    if (!std::count(panel.horizons.begin(), panel.horizons.end(), c.report.addon_horizon))
        throw Error(ErrorKind::HorizonMissing, "losses.bin was simulated without the add-on horizon");
    const auto reports = risk_reports(panel, c.report, c.threads);
    ctx.write(Stage::Report, artifact::kReport, report_to_csv(reports), {}, {artifact::kLosses});
    ctx.write(Stage::Report, artifact::kAddons, addons_to_csv(reports), {}, {artifact::kLosses});
    ctx.write(Stage::Report, artifact::kVarsByHorizon, vars_by_horizon_to_csv(reports), {}, {artifact::kLosses});

    ExclusionLedger all;
    std::vector<std::string> present;
    for (const char* name : {artifact::kLedgerIngest, artifact::kLedgerShock, artifact::kLedgerCalibrate})
        if (fs::is_regular_file(ctx.path(name))) {
            all.merge(ExclusionLedger::from_csv(ctx.path(name)));
            present.push_back(name);
        }
    ctx.write(Stage::Report, artifact::kExclusions, all.to_csv(), {}, present);
}

}  // namespace

std::vector<fs::path> run_stage(Stage stage, const RunConfig& config) {
    config.validate();
    StageContext ctx(config);
    auto run = [&](Stage s) {
        spdlog::info("stage {}", to_string(s));
        switch (s) {
            case Stage::Ingest: ingest(ctx); break;
            case Stage::Cluster: cluster(ctx); break;
            case Stage::Shock: shock(ctx); break;
            case Stage::Calibrate: calibrate(ctx); break;
            case Stage::Simulate: simulate(ctx); break;
            case Stage::Report: report(ctx); break;
            case Stage::All: break;
        }
        ctx.commit();
    };
    if (stage == Stage::All) {
        for (auto s : {Stage::Ingest, Stage::Cluster, Stage::Shock, Stage::Calibrate, Stage::Simulate, Stage::Report})
            run(s);
    } else {
        run(stage);
    }
    return ctx.written_;
}

}  // namespace climrisk
