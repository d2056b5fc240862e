#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "hrplab/allocation.hpp"
#include "hrplab/backtest.hpp"
#include "hrplab/error.hpp"
#include "hrplab/estimation.hpp"
#include "hrplab/hcluster.hpp"
#include "hrplab/metrics.hpp"
#include "hrplab/report.hpp"

namespace py = pybind11;
using namespace hrplab;

namespace {

std::vector<std::string> ids(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back("a" + std::to_string(i));
    return out;
}

ReturnsPanel panel_from(const Eigen::MatrixXd& values) {
    std::vector<Month> dates;
    for (Eigen::Index i = 0; i < values.rows(); ++i) dates.push_back(Month(2000, 1) + static_cast<int>(i));
    return ReturnsPanel(dates, ids(values.cols()), values);
}

std::vector<std::string> month_strings(const std::vector<Month>& m) {
    std::vector<std::string> out;
    for (const auto& x : m) out.push_back(x.str());
    return out;
}

LinkageTree tree_of(const Eigen::MatrixXd& dist) { return single_linkage(DistanceMatrix(ids(dist.rows()), dist)); }

}  // namespace

PYBIND11_MODULE(_hrplab, m) {
    m.doc() = "Hierarchical risk parity research toolkit";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.def(
        "synthetic",
        [](int n_assets, int n_sectors, int n_months, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.n_assets = n_assets;
            spec.n_sectors = n_sectors;
            spec.n_months = n_months;
            spec.seed = seed;
            const SyntheticData d = generate_synthetic(spec);
            py::dict out;
            out["dates"] = month_strings(d.returns.dates());
            out["assets"] = d.returns.assets();
            out["returns"] = d.returns.values();
            out["rf"] = d.riskfree.rf();
            out["mkt_rf"] = d.factors.column("mkt_rf");
            return out;
        },
        py::arg("n_assets") = 12, py::arg("n_sectors") = 3, py::arg("n_months") = 60, py::arg("seed") = 42);

    m.def("covariance", [](const Eigen::MatrixXd& r) { return sample_covariance(panel_from(r)).matrix(); },
          "Sample (T - 1) covariance of a T x N return matrix");
    m.def("correlation",
          [](const Eigen::MatrixXd& cov) { return correlation(CovarianceEstimate(ids(cov.rows()), cov)).matrix(); });
    m.def(
        "shrink",
        [](const Eigen::MatrixXd& cov, double delta) { return shrink(CovarianceEstimate(ids(cov.rows()), cov), delta).matrix(); },
        py::arg("cov"), py::arg("delta"));
    m.def("distance",
          [](const Eigen::MatrixXd& corr) { return distance_matrix(CorrelationMatrix(ids(corr.rows()), corr)).matrix(); });

    m.def(
        "single_linkage",
        [](const Eigen::MatrixXd& dist) {
            std::vector<std::tuple<int, int, double>> out;
            for (const auto& mg : tree_of(dist).merges()) out.emplace_back(mg.left, mg.right, mg.distance);
            return out;
        },
        "Merges as (left, right, distance); the k-th merge creates node N + k");
    m.def("seriation", [](const Eigen::MatrixXd& dist) { return quasi_diagonalize(tree_of(dist)).order(); });

    m.def(
        "hrp_weights",
        [](const Eigen::MatrixXd& cov, std::optional<std::vector<int>> order) {
            const CovarianceEstimate c(ids(cov.rows()), cov);
            const Seriation s = order ? Seriation(*order) : quasi_diagonalize(single_linkage(distance_matrix(correlation(c))));
            return Eigen::VectorXd(recursive_bisection(c, s).weights());
        },
        py::arg("cov"), py::arg("order") = py::none());
    m.def("gmv_weights", [](const Eigen::MatrixXd& cov) {
        const MarkowitzResult r = markowitz_gmv(CovarianceEstimate(ids(cov.rows()), cov));
        return std::make_pair(r.raw, Eigen::VectorXd(r.weights.weights()));
    });
    m.def("tangency_weights", [](const Eigen::MatrixXd& cov, const Eigen::VectorXd& mu) {
        const MarkowitzResult r = markowitz_tangency(CovarianceEstimate(ids(cov.rows()), cov), mu);
        return std::make_pair(r.raw, Eigen::VectorXd(r.weights.weights()));
    });

    m.def("summarize", [](const std::vector<double>& x) {
        const MetricsRow r = summarize(x);
        py::dict out;
        out["mean_excess"] = r.mean_excess;
        out["std_dev"] = r.std_dev;
        out["sharpe"] = r.sharpe;
        out["n_months"] = r.n_months;
        return out;
    });

    m.def(
        "backtest_json",
        [](const std::string& returns, const std::string& rf, const std::string& factors, const std::vector<std::string>& methods,
           int lookback, int hold, double shrink_delta, int jobs) {
            BacktestConfig cfg;
            cfg.lookback_months = lookback;
            cfg.hold_months = hold;
            cfg.shrinkage_delta = shrink_delta;
            cfg.jobs = jobs;
            cfg.methods.clear();
            for (const auto& s : methods) cfg.methods.push_back(parse_method(s));
            py::gil_scoped_release release;
            return report_to_json(
                run_backtest(load_returns_csv(returns), load_riskfree_csv(rf), load_factors_csv(factors), cfg));
        },
        py::arg("returns"), py::arg("rf"), py::arg("factors"), py::arg("methods") = std::vector<std::string>{"hrp", "gmv"},
        py::arg("lookback") = 12, py::arg("hold") = 3, py::arg("shrink") = 0.0, py::arg("jobs") = 1);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        "Runs one command-line invocation in-process; returns (exit_code, stdout, stderr)");
}
