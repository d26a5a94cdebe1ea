#include "climrisk/calibration.hpp"
#include "climrisk/errors.hpp"
#include "climrisk/fixtures.hpp"
#include "climrisk/log.hpp"
#include "climrisk/pipeline.hpp"
#include "climrisk/pricing.hpp"
#include "climrisk/risk.hpp"
#include "climrisk/shock.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace climrisk;

namespace {

std::optional<JumpParams> jumps_of(double lambda, double theta) {
    if (lambda == 0.0) return std::nullopt;
    return JumpParams{lambda, theta};
}

}  // namespace

PYBIND11_MODULE(_climrisk, m) {
    m.doc() = "Climate physical-risk stress testing: pricing, calibration, simulation and risk metrics";
    init_logging();

    static py::exception<Error> error(m, "ClimriskError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = error;
            py::object inst = exc(e.what());
            inst.attr("kind") = std::string(to_string(e.kind()));
            inst.attr("exit_code") = exit_code(e.kind());
            PyErr_SetObject(error.ptr(), inst.ptr());
        }
    });

    m.def("bs_call", py::overload_cast<double, double, double, double, double>(&bs_call), py::arg("asset"),
          py::arg("strike"), py::arg("vol"), py::arg("maturity"), py::arg("rate"),
          "Black-Scholes call on firm assets (equity value in the Merton model).");
    m.def(
        "lewis_call",
        [](double asset, double strike, double vol, double maturity, double rate, double lambda, double theta) {
            return lewis_call({asset, strike, vol, maturity, rate, jumps_of(lambda, theta)});
        },
        py::arg("asset"), py::arg("strike"), py::arg("vol"), py::arg("maturity"), py::arg("rate"),
        py::arg("lam") = 0.0, py::arg("theta") = 0.0, "Equity value under constant-size downward jumps.");
    m.def(
        "solve_fvm",
        [](double equity, double equity_vol, double debt, double maturity, double rate) {
            const auto s = solve_fvm(equity, equity_vol, debt, maturity, rate);
            py::dict d;
            d["asset_value"] = s.asset_value;
            d["asset_vol"] = s.asset_vol;
            d["price_residual"] = s.price_residual;
            d["vol_residual"] = s.vol_residual;
            d["iterations"] = s.iterations;
            return d;
        },
        py::arg("equity"), py::arg("equity_vol"), py::arg("debt"), py::arg("maturity"), py::arg("rate"));
    m.def(
        "gordon_shock",
        [](double growth, double required_return, double alpha) {
            return gordon_shock({growth, required_return, alpha});
        },
        py::arg("growth"), py::arg("required_return"), py::arg("alpha"));
    m.def("cluster_alpha", &cluster_alpha, py::arg("mean_vulnerability"), py::arg("mean_intensity"));
    m.def(
        "var", [](const std::vector<double>& losses, double level) { return var(losses, level); }, py::arg("losses"),
        py::arg("level"));
    m.def(
        "expected_shortfall",
        [](const std::vector<double>& losses, double level) { return expected_shortfall(losses, level); },
        py::arg("losses"), py::arg("level"));
    m.def(
        "write_fixture",
        [](const std::filesystem::path& out, std::uint64_t seed, std::size_t firms_per_cluster, std::size_t n_paths,
           const std::string& shocks) {
            FixtureSpec spec;
            spec.seed = seed;
            spec.firms_per_cluster = firms_per_cluster;
            spec.n_paths = n_paths;
            spec.shocks = parse_fixture_shocks(shocks);
            write_fixture(generate_fixture(spec), out);
        },
        py::arg("out"), py::arg("seed") = 2024, py::arg("firms_per_cluster") = 25, py::arg("n_paths") = 10000,
        py::arg("shocks") = "planted_jumps", "Write a synthetic dataset with truth.json and run.json.");
    m.def(
        "run",
        [](const std::filesystem::path& config_path, const std::string& stage, std::optional<std::uint64_t> seed,
           std::optional<std::filesystem::path> out, std::optional<int> threads, bool correlated_jumps,
           std::optional<std::string> repricing) {
            auto c = load_run_config(config_path);
            if (seed) c.simulation.seed = *seed;
            if (out) c.output_dir = *out;
            if (threads) c.threads = *threads;
            if (correlated_jumps) c.simulation.jump_mode = JumpMode::Correlated;
            if (repricing) c.simulation.repricing = parse_repricing(*repricing);
            std::vector<std::filesystem::path> written;
            {
                py::gil_scoped_release release;
                written = run_stage(parse_stage(stage), c);
            }
            return written;
        },
        py::arg("config"), py::arg("stage") = "all", py::arg("seed") = py::none(), py::arg("out") = py::none(),
        py::arg("threads") = py::none(), py::arg("correlated_jumps") = false, py::arg("repricing") = py::none(),
        "Run pipeline stages; returns the artifact paths written.");
}
