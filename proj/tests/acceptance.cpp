// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "hrplab/allocation.hpp"
#include "hrplab/backtest.hpp"
#include "hrplab/error.hpp"
#include "hrplab/estimation.hpp"
#include "hrplab/hcluster.hpp"
#include "hrplab/metrics.hpp"
#include "hrplab/rng.hpp"
#include "oracles.hpp"

using namespace hrplab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

// The shipped default synthetic scenario.
SyntheticSpec default_scenario() {
    SyntheticSpec s;
    s.n_assets = 30;
    s.n_sectors = 3;
    s.n_months = 252;  // 12 look-back + 240 evaluated
    s.seed = 42;
    return s;
}
constexpr int kDefaultLookback = 12;

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

Outcome distance_endpoints() {
    auto d = [](double rho) {
        Eigen::MatrixXd c(2, 2);
        c << 1.0, rho, rho, 1.0;
        return distance_matrix(CorrelationMatrix({"A", "B"}, c)).matrix()(0, 1);
    };
    const double e1 = std::abs(d(1.0)), e2 = std::abs(d(-1.0) - 1.0), e3 = std::abs(d(0.0) - std::sqrt(0.5));
    const double worst = std::max({e1, e2, e3});
    return {worst <= 1e-12, "max error " + num(worst)};
}

Outcome six_asset_example() {
    const LinkageTree tree = single_linkage(DistanceMatrix(oracle::labels(6), oracle::fig1_distances()));
    // (A,B), (E,F), (D,EF), (C,DEF), (AB,CDEF)
    const std::vector<std::pair<int, int>> expected{{0, 1}, {4, 5}, {3, 7}, {2, 8}, {6, 9}};
    bool ok = tree.merges().size() == expected.size();
    for (std::size_t k = 0; ok && k < expected.size(); ++k) {
        ok = tree.merges()[k].left == expected[k].first && tree.merges()[k].right == expected[k].second;
    }
    const auto order = quasi_diagonalize(tree).order();
    ok = ok && order == std::vector<int>{0, 1, 2, 3, 4, 5};
    std::string seq;
    for (int i : order) seq += oracle::labels(6)[static_cast<std::size_t>(i)];
    return {ok, "seriation " + seq};
}

Outcome hrp_oracles() {
    auto ident = [](int n) {
        std::vector<int> o(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) o[static_cast<std::size_t>(i)] = i;
        return Seriation(o);
    };
    Eigen::MatrixXd d2(2, 2);
    d2 << 0.09, 0.0, 0.0, 0.01;
    const Eigen::VectorXd w2 = recursive_bisection(CovarianceEstimate({"A", "B"}, d2), ident(2)).weights();
    const Eigen::Vector2d ivp(0.1, 0.9);  // (1/0.09, 1/0.01) normalized
    double worst = (w2 - ivp).cwiseAbs().maxCoeff();
    for (int n : {3, 4}) {
        const Eigen::VectorXd w =
            recursive_bisection(CovarianceEstimate(oracle::labels(n), 0.03 * Eigen::MatrixXd::Identity(n, n)), ident(n))
                .weights();
        worst = std::max(worst, (w.array() - 1.0 / n).abs().maxCoeff());
    }
    Rng rng(20240101);
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 2 + k % 19;
        const CovarianceEstimate cov(oracle::labels(n), oracle::random_spd(rng, n));
        const Seriation s = quasi_diagonalize(single_linkage(distance_matrix(correlation(cov))));
        const Eigen::VectorXd w = recursive_bisection(cov, s).weights();
        if (std::abs(w.sum() - 1.0) > 1e-12 || !(w.array() > 0.0).all()) ++bad;
    }
    return {worst <= 1e-12 && bad == 0, "closed-form error " + num(worst) + ", random violations " + std::to_string(bad)};
}

Outcome gmv_oracles() {
    Rng rng(777);
    double grid_gap = 0.0;
    for (int k = 0; k < 5; ++k) {
        const int n = 2 + k % 2;
        const Eigen::MatrixXd s = oracle::random_spd(rng, n, 0.01);
        const Eigen::VectorXd g = oracle::gmv_grid_search(s, 1e-3, 3.0);
        const Eigen::VectorXd w = markowitz_gmv(CovarianceEstimate(oracle::labels(n), s)).raw;
        grid_gap = std::max(grid_gap, (w - g).cwiseAbs().maxCoeff());
    }
    double foc = 0.0;
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + k % 12;
        const Eigen::MatrixXd s = oracle::random_spd(rng, n);
        const Eigen::VectorXd w = markowitz_gmv(CovarianceEstimate(oracle::labels(n), s)).raw;
        const Eigen::VectorXd m = s * w;
        foc = std::max(foc, m.maxCoeff() - m.minCoeff());
    }
    // Lattice spacing 1e-3 with one implied coordinate bounds the error by about two steps.
    return {grid_gap <= 2e-3 && foc <= 1e-8, "grid gap " + num(grid_gap) + ", FOC spread " + num(foc)};
}

Outcome buy_and_hold_identity() {
    Rng rng(5150);
    std::vector<Month> dates{Month(2000, 1), Month(2000, 2), Month(2000, 3)};
    const RiskFreeSeries rf(dates, {0.0, 0.0, 0.0});
    double worst = 0.0;
    int done = 0;
    while (done < 1000) {
        const int n = 2 + done % 8;
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) w(i) = rng.normal();
        if (std::abs(w.sum()) < 0.2) continue;
        w /= w.sum();  // fully invested, signed
        Eigen::MatrixXd r(3, n);
        for (int t = 0; t < 3; ++t) {
            for (int i = 0; i < n; ++i) r(t, i) = rng.normal(0.005, 0.05);
        }
        const auto h = hold_period_returns({oracle::labels(n), w}, ReturnsPanel(dates, oracle::labels(n), r), rf);
        double lhs = 1.0;
        for (double x : h.raw) lhs *= 1.0 + x;
        worst = std::max(worst, std::abs(lhs - oracle::buy_and_hold_growth(w, r)));
        ++done;
    }
    return {worst <= 1e-10, "max error " + num(worst)};
}

Outcome block_recovery() {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SyntheticSpec spec;
        spec.n_assets = 12;
        spec.n_sectors = 3;
        spec.n_months = 120;
        spec.seed = seed;
        spec.sector_loading_range = {1.0, 1.5};
        spec.sector_vol = 0.05;
        spec.idio_vol = 0.02;
        spec.market_vol = 0.04;
        const auto d = generate_synthetic(spec);
        const auto order = quasi_diagonalize(single_linkage(distance_matrix(correlation(sample_covariance(d.returns))))).order();
        bool ok = true;
        for (int s = 0; s < spec.n_sectors; ++s) {
            int first = -1, last = -1, count = 0;
            for (std::size_t p = 0; p < order.size(); ++p) {
                if (order[p] % spec.n_sectors != s) continue;
                if (first < 0) first = static_cast<int>(p);
                last = static_cast<int>(p);
                ++count;
            }
            ok = ok && last - first + 1 == count;
        }
        hits += ok;
    }
    return {hits >= 95, std::to_string(hits) + "/100 seeds contiguous"};
}

MetricsRow run_method(const SyntheticData& d, Method m, int lookback, const std::string& tag, std::string& note) {
    BacktestConfig cfg;
    cfg.lookback_months = lookback;
    cfg.methods = {m};
    try {
        return *run_backtest(d.returns, d.riskfree, d.factors, cfg).strategies.front().metrics_all;
    } catch (const Error& e) {
        note += tag + " " + to_string(m) + " failed (" + e.what() + "); ";
        return {};
    }
}

Outcome table_direction() {
    std::string note;
    auto verdict = [&](const SyntheticData& d, int lookback, const std::string& tag) {
        const MetricsRow hrp = run_method(d, Method::hrp, lookback, tag, note);
        const MetricsRow gmv = run_method(d, Method::gmv, lookback, tag, note);
        if (!hrp.std_dev || !gmv.std_dev) return false;
        note += tag + ": std hrp " + num(*hrp.std_dev) + " vs gmv " + num(*gmv.std_dev) + ", sharpe hrp " +
                num(*hrp.sharpe) + " vs gmv " + num(*gmv.sharpe) + "; ";
        return *hrp.std_dev < *gmv.std_dev && *hrp.sharpe >= *gmv.sharpe;
    };
    const bool literal = verdict(generate_synthetic(default_scenario()), kDefaultLookback, "N=30");
    // Smallest universe below the look-back length, where unshrunk GMV exists.
    SyntheticSpec feasible = default_scenario();
    feasible.n_assets = 10;
    feasible.n_sectors = 2;
    verdict(generate_synthetic(feasible), kDefaultLookback, "N=10");
    return {literal, note};
}

Outcome downturn_machinery() {
    // Two identical assets so the portfolio return equals the asset return.
    const std::vector<double> hold{0.03, -0.02, 0.01, -0.05, 0.02, -0.03};
    const std::vector<double> mkt{0.02, -0.01, 0.03, -0.04, 0.01, -0.02};
    std::vector<Month> dates;
    for (int i = 0; i < 8; ++i) dates.push_back(Month(2010, 1) + i);
    Eigen::MatrixXd r(8, 2);
    r.row(0) << 0.01, 0.02;
    r.row(1) << -0.01, 0.005;
    for (int t = 0; t < 6; ++t) r.row(t + 2) << hold[static_cast<std::size_t>(t)], hold[static_cast<std::size_t>(t)];
    const ReturnsPanel panel(dates, {"A", "B"}, r);
    const RiskFreeSeries rf(dates, std::vector<double>(8, 0.0));
    std::vector<double> mkt_full{0.0, 0.0};
    mkt_full.insert(mkt_full.end(), mkt.begin(), mkt.end());
    const FactorSeries factors(dates, {"mkt_rf"}, {mkt_full});

    const std::vector<Month> eval(dates.begin() + 2, dates.end());
    const bool mask_ok = downturn_mask(factors, eval, 0.0) == std::vector<bool>{false, true, false, true, false, true};

    BacktestConfig cfg;
    cfg.lookback_months = 2;
    cfg.hold_months = 6;
    cfg.methods = {Method::equal_weight};
    cfg.side_rule = SideRule::all_long;
    const BacktestReport rep = run_backtest(panel, rf, factors, cfg);
    const MetricsRow& m = rep.strategies.front().metrics_downturn;
    // Downturn months: -0.02, -0.05, -0.03.
    const double mean = -0.1 / 3.0;
    const double sd = std::sqrt(7.0 / 30000.0);
    const double err = std::max({std::abs(*m.mean_excess - mean), std::abs(*m.std_dev - sd), std::abs(*m.sharpe - mean / sd)});
    return {mask_ok && m.n_months == 3 && err <= 1e-12, "mask " + std::string(mask_ok ? "ok" : "wrong") + ", max error " + num(err)};
}

Outcome jobs_determinism() {
    const fs::path dir = fs::path(HRPLAB_TEST_TMPDIR) / "default_scenario";
    fs::remove_all(dir);
    const SyntheticSpec s = default_scenario();
    std::ostringstream sink;
    if (cli::run({"gen", "--out", dir.string(), "--assets", std::to_string(s.n_assets), "--sectors",
                  std::to_string(s.n_sectors), "--months", std::to_string(s.n_months), "--seed", std::to_string(s.seed)},
                 sink, sink) != 0) {
        return {false, "gen failed: " + sink.str()};
    }
    auto backtest = [&](const std::string& jobs) {
        std::ostringstream out, err;
        const int rc = cli::run({"backtest", "--returns", (dir / "returns.csv").string(), "--rf", (dir / "riskfree.csv").string(),
                                 "--factors", (dir / "factors.csv").string(), "--methods", "hrp,gmv,tangency,equal", "--lookback",
                                 std::to_string(kDefaultLookback), "--shrink", "0.5", "--jobs", jobs},
                                out, err);
        return rc == 0 ? out.str() : "rc " + std::to_string(rc) + ": " + err.str();
    };
    const std::string a = backtest("1");
    const std::string b = backtest("8");
    return {a == b && a.front() == '{', std::to_string(a.size()) + " bytes"};
}

Outcome metrics_fixture() {
    const std::vector<double> x{0.01, 0.02, 0.03};
    const MetricsRow m = summarize(x);
    const double err = std::max({std::abs(*m.mean_excess - 0.02), std::abs(*m.std_dev - 0.01), std::abs(*m.sharpe - 2.0)});
    return {err <= 1e-15, "(" + num(*m.mean_excess) + ", " + num(*m.std_dev) + ", " + num(*m.sharpe) + ")"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"distance endpoints", 1.0, distance_endpoints},
        {"six-asset merge sequence and seriation", 1.0, six_asset_example},
        {"HRP oracles", 0.0, hrp_oracles},
        {"GMV oracles", 0.0, gmv_oracles},
        {"buy-and-hold identity", 0.0, buy_and_hold_identity},
        {"block recovery", 30.0, block_recovery},
        {"HRP vs unshrunk GMV direction on default scenario", 120.0, table_direction},
        {"downturn machinery", 0.0, downturn_machinery},
        {"determinism across --jobs", 0.0, jobs_determinism},
        {"metrics fixture", 0.0, metrics_fixture},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_seconds > 0.0 && secs >= c.limit_seconds) {
            o.pass = false;
            o.detail += " [over time limit " + num(c.limit_seconds) + " s]";
        }
        failed += !o.pass;
        std::printf("%s %2d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", index, c.name, secs, o.detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
