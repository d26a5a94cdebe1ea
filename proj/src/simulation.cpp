#include "climrisk/simulation.hpp"

#include "climrisk/errors.hpp"
#include "climrisk/parallel.hpp"
#include "climrisk/pricing.hpp"
#include "climrisk/random.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include "json.hpp"
#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

namespace climrisk {

std::string_view to_string(JumpMode m) noexcept { return m == JumpMode::Independent ? "independent" : "correlated"; }
std::string_view to_string(Repricing m) noexcept { return m == Repricing::Neglect ? "neglect" : "aware"; }
std::string_view to_string(JumpSampling m) noexcept {
    return m == JumpSampling::PerStep ? "per_step" : "event_times";
}

JumpMode parse_jump_mode(std::string_view t) {
    if (t == "independent") return JumpMode::Independent;
    if (t == "correlated") return JumpMode::Correlated;
    throw Error(ErrorKind::ConfigInvalid, "jump_mode must be independent or correlated, got '" + std::string(t) + "'");
}

Repricing parse_repricing(std::string_view t) {
    if (t == "neglect") return Repricing::Neglect;
    if (t == "aware") return Repricing::Aware;
    throw Error(ErrorKind::ConfigInvalid, "repricing must be neglect or aware, got '" + std::string(t) + "'");
}

JumpSampling parse_jump_sampling(std::string_view t) {
    if (t == "per_step") return JumpSampling::PerStep;
    if (t == "event_times") return JumpSampling::EventTimes;
    throw Error(ErrorKind::ConfigInvalid,
                "jump_sampling must be per_step or event_times, got '" + std::string(t) + "'");
}

void SimulationConfig::validate() const {
    if (n_paths < 1) throw Error(ErrorKind::ConfigInvalid, "n_paths must be at least 1");
    if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::ConfigInvalid, "step must be positive");
    if (horizons.empty()) throw Error(ErrorKind::ConfigInvalid, "at least one horizon is required");
    if (chunk_paths < 1) throw Error(ErrorKind::ConfigInvalid, "chunk_paths must be at least 1");
    double prev = 0.0;
    for (double h : horizons) {
        if (!(h > prev)) throw Error(ErrorKind::ConfigInvalid, "horizons must be positive and strictly increasing");
        const double k = h / step;
        if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
            throw Error(ErrorKind::ConfigInvalid, "horizon " + std::to_string(h) + " is not a multiple of the step");
        prev = h;
    }
}

std::size_t SimulationConfig::steps_to(double horizon) const {
    return static_cast<std::size_t>(std::llround(horizon / step));
}

std::size_t SimulationConfig::total_steps() const { return steps_to(horizons.back()); }

SimulationConfig simulation_config_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("simulation config: ") + e.what());
    }
    SimulationConfig c;
    try {
        if (j.contains("n_paths")) c.n_paths = j.at("n_paths").get<std::size_t>();
        if (j.contains("step")) c.step = j.at("step").get<double>();
        if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<double>>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("jump_mode")) c.jump_mode = parse_jump_mode(j.at("jump_mode").get<std::string>());
        if (j.contains("repricing")) c.repricing = parse_repricing(j.at("repricing").get<std::string>());
        if (j.contains("jump_sampling"))
            c.jump_sampling = parse_jump_sampling(j.at("jump_sampling").get<std::string>());
        if (j.contains("memory_budget_mb")) c.memory_budget_mb = j.at("memory_budget_mb").get<std::size_t>();
        if (j.contains("chunk_paths")) c.chunk_paths = j.at("chunk_paths").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("simulation config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string simulation_config_to_json(const SimulationConfig& c) {
    nlohmann::ordered_json j;
    j["n_paths"] = c.n_paths;
    j["step"] = c.step;
    j["horizons"] = c.horizons;
    j["seed"] = c.seed;
    j["jump_mode"] = to_string(c.jump_mode);
    j["repricing"] = to_string(c.repricing);
    j["jump_sampling"] = to_string(c.jump_sampling);
    j["memory_budget_mb"] = c.memory_budget_mb;
    j["chunk_paths"] = c.chunk_paths;
    return j.dump(2);
}

SimulationModel build_model(const std::vector<FirmRecord>& firms, const std::vector<FvmFirmParams>& fvm,
                            const std::map<std::string, ClusterKey>& keys, const std::vector<ClusterParams>& clusters) {
    SimulationModel model;
    model.clusters = clusters;
    std::sort(model.clusters.begin(), model.clusters.end(), [](auto& a, auto& b) { return a.key < b.key; });
    std::map<ClusterKey, int> cluster_index;
    for (std::size_t k = 0; k < model.clusters.size(); ++k) cluster_index[model.clusters[k].key] = static_cast<int>(k);

    std::map<std::string, const FirmRecord*> records;
    for (const auto& f : firms) records[f.firm_id] = &f;
    for (const auto& p : fvm) {
        const auto rec = records.find(p.firm_id);
        const auto key = keys.find(p.firm_id);
        if (rec == records.end() || key == keys.end()) continue;
        const auto ci = cluster_index.find(key->second);
        if (ci == cluster_index.end()) continue;
        const FirmRecord& r = *rec->second;
        if (!r.total_debt || !r.debt_maturity || !r.risk_free) continue;
        model.firms.push_back({p.firm_id, p.asset_value, p.asset_vol, p.sigma_idio, p.omega_sys, *r.total_debt,
                               *r.debt_maturity, *r.risk_free, ci->second});
    }
    std::sort(model.firms.begin(), model.firms.end(), [](auto& a, auto& b) { return a.firm_id < b.firm_id; });
    return model;
}

std::size_t path_block_bytes(std::size_t n_paths, std::size_t n_horizons, std::size_t n_firms,
                             std::size_t n_clusters) noexcept {
    return n_paths * n_horizons * (2 * n_firms * sizeof(double) + n_clusters * sizeof(std::uint32_t));
}

namespace {

const std::uint64_t kSystematicKey = stream_key("systematic");

std::uint64_t firm_key(const std::string& id) { return stream_key("firm:" + id); }
std::uint64_t cluster_key(const ClusterKey& k) { return stream_key("jumps:" + k.label()); }
std::uint64_t increment_key(std::size_t rank) { return stream_key("jumps-increment:" + std::to_string(rank)); }

// Counts of one Poisson stream of `rate` at each horizon.
void count_stream(Rng& rng, double rate, const SimulationConfig& config, const std::vector<std::size_t>& horizon_steps,
                  std::uint32_t* out, std::size_t stride) {
    const std::size_t total = horizon_steps.back();
    if (config.jump_sampling == JumpSampling::PerStep) {
        std::uint32_t n = 0;
        std::size_t h = 0;
        const double mean = rate * config.step;
        for (std::size_t s = 1; s <= total; ++s) {
            n += rng.poisson(mean);
            while (h < horizon_steps.size() && horizon_steps[h] == s) out[(h++) * stride] = n;
        }
        return;
    }
    // Explicit jump times from exponential inter-arrivals.
    const double t_end = static_cast<double>(total) * config.step;
    std::vector<double> horizon_times;
    for (auto s : horizon_steps) horizon_times.push_back(static_cast<double>(s) * config.step);
    std::vector<std::uint32_t> counts(horizon_steps.size(), 0);
    if (rate > 0.0) {
        double t = rng.exponential() / rate;
        while (t <= t_end) {
            for (std::size_t h = 0; h < horizon_times.size(); ++h)
                if (t <= horizon_times[h]) ++counts[h];
            t += rng.exponential() / rate;
        }
    }
    for (std::size_t h = 0; h < counts.size(); ++h) out[h * stride] = counts[h];
}

void correlated_counts_for_path(const std::vector<double>& lambdas_sorted, const SimulationConfig& config,
                                const std::vector<std::size_t>& horizon_steps, std::size_t path,
                                std::uint32_t* out /* [horizon][k] */) {
    const std::size_t K = lambdas_sorted.size(), H = horizon_steps.size();
    std::vector<std::uint32_t> increment(H);
    double previous = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        Rng rng(substream_seed(config.seed, path, increment_key(k)));
        count_stream(rng, lambdas_sorted[k] - previous, config, horizon_steps, increment.data(), 1);
        for (std::size_t h = 0; h < H; ++h) out[h * K + k] = (k ? out[h * K + k - 1] : 0u) + increment[h];
        previous = lambdas_sorted[k];
    }
}

std::vector<std::size_t> horizon_steps_of(const SimulationConfig& config) {
    std::vector<std::size_t> steps;
    for (double h : config.horizons) steps.push_back(config.steps_to(h));
    return steps;
}

}  // namespace

PathBlock simulate_chunk(const SimulationModel& model, const SimulationConfig& config, std::size_t path_begin,
                         std::size_t path_end) {
    config.validate();
    const auto horizon_steps = horizon_steps_of(config);
    const std::size_t H = horizon_steps.size(), F = model.firms.size(), K = model.clusters.size();
    const std::size_t M = horizon_steps.back();

    PathBlock b;
    b.path_begin = path_begin;
    b.n_paths = path_end - path_begin;
    b.n_horizons = H;
    b.n_firms = F;
    b.n_clusters = K;
    b.log_baseline.resize(b.n_paths * H * F);
    b.log_stressed.resize(b.n_paths * H * F);
    b.jump_counts.resize(b.n_paths * H * K);

    // Rank order for the correlated construction (ascending lambda).
    std::vector<std::size_t> rank(K);
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(),
                     [&](auto a, auto b2) { return model.clusters[a].jumps.lambda < model.clusters[b2].jumps.lambda; });
    std::vector<double> lambdas_sorted;
    for (auto k : rank) lambdas_sorted.push_back(model.clusters[k].jumps.lambda);

    const double sqdt = std::sqrt(config.step);
    std::vector<double> z(M), w(M);
    std::vector<std::uint32_t> sorted_counts(H * K);
    for (std::size_t p = 0; p < b.n_paths; ++p) {
        const std::size_t path = path_begin + p;
        Rng sys(substream_seed(config.seed, path, kSystematicKey));
        sys.fill_normal(z.data(), M);

        if (config.jump_mode == JumpMode::Independent) {
            for (std::size_t k = 0; k < K; ++k) {
                Rng rng(substream_seed(config.seed, path, cluster_key(model.clusters[k].key)));
                count_stream(rng, model.clusters[k].jumps.lambda, config, horizon_steps,
                             &b.jump_counts[b.jump_index(p, 0, k)], K);
            }
        } else if (K > 0) {
            correlated_counts_for_path(lambdas_sorted, config, horizon_steps, path, sorted_counts.data());
            for (std::size_t r = 0; r < K; ++r)
                for (std::size_t h = 0; h < H; ++h) b.jump_counts[b.jump_index(p, h, rank[r])] = sorted_counts[h * K + r];
        }

        for (std::size_t j = 0; j < F; ++j) {
            const SimFirm& f = model.firms[j];
            Rng idio(substream_seed(config.seed, path, firm_key(f.firm_id)));
            idio.fill_normal(w.data(), M);
            const double drift = (f.rate - 0.5 * f.sigma_idio * f.sigma_idio - 0.5 * f.omega_sys * f.omega_sys) *
                                 config.step;
            const double a = f.sigma_idio * sqdt, c = f.omega_sys * sqdt;
            double x = std::log(f.asset_value);
            std::size_t h = 0;
            for (std::size_t s = 1; s <= M; ++s) {
                x += drift + a * w[s - 1] + c * z[s - 1];
                while (h < H && horizon_steps[h] == s) {
                    const auto i = b.index(p, h, j);
                    b.log_baseline[i] = x;
                    const double theta = f.cluster >= 0 ? model.clusters[static_cast<std::size_t>(f.cluster)].jumps.theta : 0.0;
                    const double n = f.cluster >= 0 ? b.jump_counts[b.jump_index(p, h, static_cast<std::size_t>(f.cluster))] : 0.0;
                    b.log_stressed[i] = n > 0 ? x - theta * n : x;
                    ++h;
                }
            }
        }
    }
    return b;
}

PathBlock simulate_paths(const SimulationModel& model, const SimulationConfig& config, int threads) {
    config.validate();
    const auto bytes = path_block_bytes(config.n_paths, config.horizons.size(), model.firms.size(), model.clusters.size());
    if (bytes > config.memory_budget_mb * (std::size_t{1} << 20))
        throw Error(ErrorKind::BudgetExceeded, "path block needs " + std::to_string(bytes >> 20) +
                                                   " MiB, budget is " + std::to_string(config.memory_budget_mb) + " MiB");
    const std::size_t chunks = (config.n_paths + config.chunk_paths - 1) / config.chunk_paths;
    std::vector<PathBlock> parts(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t a = c * config.chunk_paths, e = std::min(config.n_paths, a + config.chunk_paths);
        parts[c] = simulate_chunk(model, config, a, e);
    });
    PathBlock out;
    out.n_paths = config.n_paths;
    out.n_horizons = config.horizons.size();
    out.n_firms = model.firms.size();
    out.n_clusters = model.clusters.size();
    for (auto& part : parts) {
        out.log_baseline.insert(out.log_baseline.end(), part.log_baseline.begin(), part.log_baseline.end());
        out.log_stressed.insert(out.log_stressed.end(), part.log_stressed.begin(), part.log_stressed.end());
        out.jump_counts.insert(out.jump_counts.end(), part.jump_counts.begin(), part.jump_counts.end());
    }
    return out;
}

std::vector<std::uint32_t> correlated_jump_counters(const std::vector<double>& lambdas_sorted,
                                                    const SimulationConfig& config) {
    config.validate();
    for (std::size_t k = 0; k < lambdas_sorted.size(); ++k) {
        if (!(lambdas_sorted[k] >= 0.0)) throw Error(ErrorKind::DomainError, "jump intensities must be nonnegative");
        if (k > 0 && lambdas_sorted[k] < lambdas_sorted[k - 1])
            throw Error(ErrorKind::UnsortedLambdas, "intensities must be sorted ascending");
    }
    const auto horizon_steps = horizon_steps_of(config);
    const std::size_t H = horizon_steps.size(), K = lambdas_sorted.size();
    std::vector<std::uint32_t> out(config.n_paths * H * K);
    for (std::size_t p = 0; p < config.n_paths; ++p)
        correlated_counts_for_path(lambdas_sorted, config, horizon_steps, p, &out[p * H * K]);
    return out;
}

// Equity below this fraction of face value is priced off the table edge.
constexpr double kRepricerFloor = 1e-10;

struct LewisRepricer::Impl {
    SimFirm firm;
    JumpParams jumps;
    double lo = 0.0, hi = 0.0;
    std::optional<boost::math::interpolators::cardinal_cubic_b_spline<double>> ratio;

    double direct(double v) const {
        return lewis_call({v, firm.debt, firm.asset_vol, firm.maturity, firm.rate, jumps});
    }
};

LewisRepricer::LewisRepricer(const SimFirm& firm, const JumpParams& jumps, double log_lo, double log_hi,
                             std::size_t nodes)
    : impl_(std::make_unique<Impl>()) {
    impl_->firm = firm;
    impl_->jumps = jumps;
    if (!(firm.debt > 0.0)) return;  // zero strike: both pricers return the asset value
    // Move the lower end up to where both prices carry significant digits;
    // Lewis quadrature noise is near 1e-16 of the asset value. Below the
    // table the ratio is held at its edge value.
    while (log_lo < log_hi &&
           bs_call(firm.debt * std::exp(log_lo), firm.debt, firm.asset_vol, firm.maturity, firm.rate) <
               kRepricerFloor * firm.debt)
        log_lo += 0.25;
    if (!(log_lo < log_hi) || nodes < 4) return;
    const double h = (log_hi - log_lo) / static_cast<double>(nodes - 1);
    std::vector<double> ratio(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double v = firm.debt * std::exp(log_lo + static_cast<double>(i) * h);
        ratio[i] = impl_->direct(v) / bs_call(v, firm.debt, firm.asset_vol, firm.maturity, firm.rate);
    }
    impl_->lo = log_lo;
    impl_->hi = log_hi;
    impl_->ratio.emplace(ratio.begin(), ratio.end(), log_lo, h);
}

LewisRepricer::~LewisRepricer() = default;
LewisRepricer::LewisRepricer(LewisRepricer&&) noexcept = default;
LewisRepricer& LewisRepricer::operator=(LewisRepricer&&) noexcept = default;

double LewisRepricer::price(double v) const {
    const auto& f = impl_->firm;
    if (!(f.debt > 0.0)) return v * std::exp(-impl_->jumps.gamma() * f.maturity);
    const double x = std::log(v / f.debt);
    if (impl_->ratio && x <= impl_->hi)
        return (*impl_->ratio)(std::max(x, impl_->lo)) * bs_call(v, f.debt, f.asset_vol, f.maturity, f.rate);
    return impl_->direct(v);
}

std::vector<std::unique_ptr<LewisRepricer>> build_repricers(const SimulationModel& model,
                                                            const SimulationConfig& config, int threads) {
    std::vector<std::unique_ptr<LewisRepricer>> out(model.firms.size());
    const double t_max = config.horizons.back();
    parallel_for(model.firms.size(), threads, [&](std::size_t j) {
        const SimFirm& f = model.firms[j];
        if (f.cluster < 0 || !(f.debt > 0.0)) return;
        const JumpParams jumps = model.clusters[static_cast<std::size_t>(f.cluster)].jumps;
        const double x0 = std::log(f.asset_value / f.debt);
        const double sd = f.asset_vol * std::sqrt(t_max);
        double drift_lo = 0.0, drift_hi = 0.0;
        for (double h : config.horizons) {
            const double d = (f.rate - 0.5 * f.asset_vol * f.asset_vol) * h;
            drift_lo = std::min(drift_lo, d);
            drift_hi = std::max(drift_hi, d);
        }
        const double mean_jumps = jumps.lambda * t_max;
        const double jump_span = jumps.theta * (mean_jumps + 10.0 * std::sqrt(mean_jumps) + 10.0);
        out[j] = std::make_unique<LewisRepricer>(f, jumps, x0 + drift_lo - 9.0 * sd - jump_span,
                                                 x0 + drift_hi + 9.0 * sd);
    });
    return out;
}

EquityBlock equity_along_paths(const PathBlock& block, const SimulationModel& model, const SimulationConfig& config,
                               const std::vector<std::unique_ptr<LewisRepricer>>* repricers) {
    const bool aware = config.repricing == Repricing::Aware;
    if (aware && (!repricers || repricers->size() != model.firms.size()))
        throw Error(ErrorKind::InvalidInputs, "aware repricing needs one repricer per firm");
    EquityBlock out;
    out.n_paths = block.n_paths;
    out.n_horizons = block.n_horizons;
    out.n_firms = block.n_firms;
    out.baseline.resize(block.log_baseline.size());
    out.stressed.resize(block.log_stressed.size());
    for (std::size_t p = 0; p < block.n_paths; ++p)
        for (std::size_t h = 0; h < block.n_horizons; ++h)
            for (std::size_t j = 0; j < block.n_firms; ++j) {
                const SimFirm& f = model.firms[j];
                const auto i = block.index(p, h, j);
                const double v = std::exp(block.log_baseline[i]);
                const double e = bs_call(v, f.debt, f.asset_vol, f.maturity, f.rate);
                out.baseline[i] = e;
                if (block.log_stressed[i] == block.log_baseline[i] && !aware) {
                    out.stressed[i] = e;
                    continue;
                }
                const double vt = std::exp(block.log_stressed[i]);
                const LewisRepricer* rp = aware ? (*repricers)[j].get() : nullptr;
                out.stressed[i] = rp ? rp->price(vt) : bs_call(vt, f.debt, f.asset_vol, f.maturity, f.rate);
            }
    return out;
}

std::vector<double> initial_equity(const SimulationModel& model) {
    std::vector<double> out;
    for (const auto& f : model.firms) out.push_back(bs_call(f.asset_value, f.debt, f.asset_vol, f.maturity, f.rate));
    return out;
}

std::vector<Portfolio> build_portfolios(const SimulationModel& model, const std::vector<FirmRecord>& firms) {
    std::map<std::string, std::size_t> index_of;
    for (std::size_t j = 0; j < model.firms.size(); ++j) index_of[model.firms[j].firm_id] = j;
    std::vector<FirmRecord> present;
    for (const auto& f : firms)
        if (index_of.count(f.firm_id)) present.push_back(f);
    std::vector<Portfolio> out;
    for (const auto& [id, members] : portfolio_weights(present)) {
        Portfolio p{id, {}};
        for (const auto& [firm, w] : members) p.members.emplace_back(index_of.at(firm), w);
        out.push_back(std::move(p));
    }
    return out;
}

LossPanel simulate_losses(const SimulationModel& model, const SimulationConfig& config,
                          const std::vector<Portfolio>& portfolios, int threads) {
    config.validate();
    LossPanel panel;
    for (const auto& p : portfolios) panel.portfolios.push_back(p.id);
    panel.horizons = config.horizons;
    panel.n_paths = config.n_paths;
    const std::size_t H = config.horizons.size();
    panel.baseline.assign(portfolios.size() * H * config.n_paths, 0.0);
    panel.stressed.assign(panel.baseline.size(), 0.0);

    const auto e0 = initial_equity(model);
    std::vector<std::unique_ptr<LewisRepricer>> repricers;
    if (config.repricing == Repricing::Aware) repricers = build_repricers(model, config, threads);

    const std::size_t chunks = (config.n_paths + config.chunk_paths - 1) / config.chunk_paths;
    spdlog::info("simulating {} paths in {} chunks ({} firms, {} clusters, {} portfolios)", config.n_paths, chunks,
                 model.firms.size(), model.clusters.size(), portfolios.size());
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t a = c * config.chunk_paths, e = std::min(config.n_paths, a + config.chunk_paths);
        const auto block = simulate_chunk(model, config, a, e);
        const auto eq = equity_along_paths(block, model, config, &repricers);
        for (std::size_t pi = 0; pi < portfolios.size(); ++pi)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t p = 0; p < block.n_paths; ++p) {
                    double lb = 0.0, ls = 0.0;
                    for (const auto& [j, w] : portfolios[pi].members) {
                        const auto i = block.index(p, h, j);
                        lb += w * (eq.baseline[i] / e0[j] - 1.0);
                        ls += w * (eq.stressed[i] / e0[j] - 1.0);
                    }
                    panel.baseline[panel.index(pi, h, a + p)] = -lb * 100.0;
                    panel.stressed[panel.index(pi, h, a + p)] = -ls * 100.0;
                }
    });
    return panel;
}

namespace {

template <class T>
void put(std::string& out, T value) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.append(bytes, sizeof(T));
}

template <class T>
T get(std::string_view in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw Error(ErrorKind::NumericParse, "truncated binary dump");
    char bytes[sizeof(T)];
    std::memcpy(bytes, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

void put_string(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

}  // namespace

std::string encode_losses(const LossPanel& panel) {
    std::string out = "CRLS";
    put<std::uint32_t>(out, 1);
    put<std::uint64_t>(out, panel.portfolios.size());
    put<std::uint64_t>(out, panel.horizons.size());
    put<std::uint64_t>(out, panel.n_paths);
    for (const auto& id : panel.portfolios) put_string(out, id);
    for (double h : panel.horizons) put<double>(out, h);
    for (double v : panel.baseline) put<double>(out, v);
    for (double v : panel.stressed) put<double>(out, v);
    return out;
}

LossPanel decode_losses(std::string_view in) {
    if (in.substr(0, 4) != "CRLS") throw Error(ErrorKind::NumericParse, "not a loss dump");
    std::size_t pos = 4;
    if (get<std::uint32_t>(in, pos) != 1) throw Error(ErrorKind::NumericParse, "unsupported loss dump version");
    LossPanel p;
    const auto np = get<std::uint64_t>(in, pos), nh = get<std::uint64_t>(in, pos);
    p.n_paths = get<std::uint64_t>(in, pos);
    for (std::uint64_t i = 0; i < np; ++i) {
        const auto len = get<std::uint32_t>(in, pos);
        if (pos + len > in.size()) throw Error(ErrorKind::NumericParse, "truncated binary dump");
        p.portfolios.emplace_back(in.substr(pos, len));
        pos += len;
    }
    for (std::uint64_t i = 0; i < nh; ++i) p.horizons.push_back(get<double>(in, pos));
    const std::size_t n = np * nh * p.n_paths;
    p.baseline.resize(n);
    p.stressed.resize(n);
    for (auto& v : p.baseline) v = get<double>(in, pos);
    for (auto& v : p.stressed) v = get<double>(in, pos);
    if (pos != in.size()) throw Error(ErrorKind::NumericParse, "trailing bytes in loss dump");
    return p;
}

std::string encode_slices(const PathBlock& block, const SimulationModel& model, const SimulationConfig& config) {
    std::string out = "CRSL";
    put<std::uint32_t>(out, 1);
    put<std::uint64_t>(out, block.n_paths);
    put<std::uint64_t>(out, block.n_horizons);
    put<std::uint64_t>(out, block.n_firms);
    for (const auto& f : model.firms) put_string(out, f.firm_id);
    for (double h : config.horizons) put<double>(out, h);
    for (double v : block.log_baseline) put<double>(out, v);
    for (double v : block.log_stressed) put<double>(out, v);
    return out;
}

}  // namespace climrisk
