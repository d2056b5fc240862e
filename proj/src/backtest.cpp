#include "hrplab/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "hrplab/error.hpp"
#include "hrplab/estimation.hpp"
#include "hrplab/hcluster.hpp"

namespace hrplab {

void BacktestConfig::validate() const {
    if (lookback_months < 2) throw ValidationError("lookback must be at least 2 months");
    if (hold_months < 1) throw ValidationError("hold must be at least 1 month");
    if (methods.empty()) throw ValidationError("no methods selected");
    if (!(shrinkage_delta >= 0.0 && shrinkage_delta <= 1.0)) throw ValidationError("shrinkage delta must lie in [0, 1]");
    if (!std::isfinite(downturn_threshold)) throw ValidationError("downturn threshold must be finite");
    if (jobs < 1) throw ValidationError("jobs must be at least 1");
    if (start && end && *end < *start) throw ValidationError("end month precedes start month");
}

HoldPeriodResult hold_period_returns(const Holdings& start, const ReturnsPanel& holding_raw, const RiskFreeSeries& rf) {
    if (start.assets != holding_raw.assets()) {
        throw ValidationError("hold period: weight universe does not match holding panel columns");
    }
    if (holding_raw.has_missing()) throw DataError("hold period: holding panel has missing cells");

    HoldPeriodResult out;
    Eigen::VectorXd w = start.weights;
    for (Eigen::Index t = 0; t < holding_raw.rows(); ++t) {
        const Month m = holding_raw.dates()[static_cast<std::size_t>(t)];
        const Eigen::VectorXd r = holding_raw.values().row(t).transpose();
        const double rp = w.dot(r);
        if (1.0 + rp == 0.0) {
            throw NumericalError("hold period: portfolio return of -100% in " + m.str() + "; wealth wiped out");
        }
        out.raw.push_back(rp);
        out.excess.push_back(rp - rf.at(m));
        w = (w.array() * (1.0 + r.array())).matrix() / (1.0 + rp);
    }
    out.end_weights = std::move(w);
    return out;
}

double turnover(const Holdings& previous_end, const Holdings& next) {
    std::map<std::string, double> delta;
    for (std::size_t i = 0; i < next.assets.size(); ++i) delta[next.assets[i]] += next.weights(static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < previous_end.assets.size(); ++i) {
        delta[previous_end.assets[i]] -= previous_end.weights(static_cast<Eigen::Index>(i));
    }
    double sum = 0.0;
    for (const auto& [asset, d] : delta) sum += std::abs(d);
    return 0.5 * sum;
}

std::vector<bool> downturn_mask(const FactorSeries& factors, const std::vector<Month>& months, double threshold) {
    std::vector<bool> mask;
    mask.reserve(months.size());
    for (Month m : months) mask.push_back(factors.mkt_rf(m) < threshold);
    return mask;
}

std::vector<Month> rebalance_schedule(const ReturnsPanel& panel, const BacktestConfig& config) {
    config.validate();
    if (panel.dates().empty()) throw DataError("backtest: empty returns panel");
    Month first = panel.dates().front() + config.lookback_months;
    if (config.start && *config.start > first) first = *config.start;
    Month last = panel.dates().back();
    if (config.end && *config.end < last) last = *config.end;

    std::vector<Month> out;
    for (Month as_of = first; as_of + (config.hold_months - 1) <= last; as_of = as_of + config.hold_months) {
        out.push_back(as_of);
    }
    if (out.empty()) {
        throw DataError("backtest: panel span " + panel.dates().front().str() + ".." + panel.dates().back().str() +
                        " is too short for a " + std::to_string(config.lookback_months) + "-month look-back plus a " +
                        std::to_string(config.hold_months) + "-month holding period");
    }
    return out;
}

Allocation allocate(const ReturnsPanel& lookback_excess, Method method, const BacktestConfig& config) {
    const auto& assets = lookback_excess.assets();
    auto estimate = [&] { return shrink(sample_covariance(lookback_excess), config.shrinkage_delta); };

    switch (method) {
        case Method::equal_weight: {
            auto w = equal_weight(assets);
            return Allocation{method, Holdings{assets, w.weights()}, w.signs(), std::nullopt};
        }
        case Method::hrp: {
            const auto cov = estimate();
            const auto tree = single_linkage(distance_matrix(correlation(cov)));
            const auto base = recursive_bisection(cov, quasi_diagonalize(tree));
            const auto sides = assign_sides(lookback_excess, config.side_rule, config.explicit_sides);
            const auto w = apply_sides(base, sides);
            return Allocation{method, Holdings{assets, w.weights()}, sides.sides(), std::nullopt};
        }
        case Method::gmv: {
            auto res = markowitz_gmv(estimate());
            return Allocation{method, Holdings{assets, res.weights.weights()}, res.weights.signs(), std::move(res.raw)};
        }
        case Method::tangency: {
            const Eigen::VectorXd mu = lookback_excess.values().colwise().mean().transpose();
            auto res = markowitz_tangency(estimate(), mu);
            return Allocation{method, Holdings{assets, res.weights.weights()}, res.weights.signs(), std::move(res.raw)};
        }
    }
    throw ValidationError("unknown method");
}

namespace {

struct MethodWindow {
    Allocation allocation;
    HoldPeriodResult hold;
};

struct WindowResult {
    Month as_of;
    std::vector<MethodWindow> per_method;
};

WindowResult evaluate_window(const ReturnsPanel& panel, const RiskFreeSeries& rf, const BacktestConfig& config,
                             Month as_of) {
    const auto panels = window(panel, WindowSpec{as_of, config.lookback_months, config.hold_months});
    const auto lookback_excess = excess_returns(panels.lookback, rf);
    WindowResult out{as_of, {}};
    for (Method method : config.methods) {
        try {
            auto alloc = allocate(lookback_excess, method, config);
            auto hold = hold_period_returns(alloc.holdings, panels.holding, rf);
            out.per_method.push_back(MethodWindow{std::move(alloc), std::move(hold)});
        } catch (const Error& e) {
            // Re-raise with the window and method attached, preserving the category.
            const std::string msg = "window " + as_of.str() + ", method " + to_string(method) + ": " + e.what();
            if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(msg);
            if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(msg);
            throw DataError(msg);
        }
    }
    return out;
}

std::vector<WindowResult> evaluate_all(const ReturnsPanel& panel, const RiskFreeSeries& rf, const BacktestConfig& config,
                                       const std::vector<Month>& schedule) {
    std::vector<std::optional<WindowResult>> results(schedule.size());
    std::vector<std::exception_ptr> errors(schedule.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < schedule.size(); i = next++) {
            try {
                results[i] = evaluate_window(panel, rf, config, schedule[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), schedule.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    // Report the chronologically first failure regardless of scheduling.
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<WindowResult> out;
    out.reserve(results.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

std::vector<double> select(const std::vector<double>& xs, const std::vector<bool>& mask) {
    std::vector<double> out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (mask[i]) out.push_back(xs[i]);
    }
    return out;
}

}  // namespace

BacktestReport run_backtest(const ReturnsPanel& panel, const RiskFreeSeries& rf, const FactorSeries& factors,
                            const BacktestConfig& config) {
    const auto schedule = rebalance_schedule(panel, config);

    BacktestReport report;
    report.config = config;
    for (Month as_of : schedule) {
        for (int k = 0; k < config.hold_months; ++k) report.dates.push_back(as_of + k);
    }
    for (Month m : report.dates) {
        if (!factors.covers(m)) throw DataError("factor series does not cover evaluated month " + m.str());
        report.market_excess.push_back(factors.mkt_rf(m));
    }
    report.downturn = downturn_mask(factors, report.dates, config.downturn_threshold);

    const auto windows = evaluate_all(panel, rf, config, schedule);

    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        StrategyResult s{config.methods[mi], {}, {}, std::nullopt, {}};
        Holdings previous_end;  // starts in cash
        double turnover_sum = 0.0;
        for (const auto& w : windows) {
            const auto& mw = w.per_method[mi];
            Rebalance r;
            r.as_of = w.as_of;
            r.assets = mw.allocation.holdings.assets;
            r.weights = mw.allocation.holdings.weights;
            r.sides = mw.allocation.sides;
            r.turnover = turnover(previous_end, mw.allocation.holdings);
            r.raw_weights = mw.allocation.raw_weights;
            if (!s.rebalances.empty()) turnover_sum += r.turnover;
            s.excess_returns.insert(s.excess_returns.end(), mw.hold.excess.begin(), mw.hold.excess.end());
            previous_end = Holdings{mw.allocation.holdings.assets, mw.hold.end_weights};
            s.rebalances.push_back(std::move(r));
        }

        // The opening trade out of cash is not counted as turnover.
        std::optional<double> avg_turnover;
        if (s.rebalances.size() > 1) avg_turnover = turnover_sum / static_cast<double>(s.rebalances.size() - 1);

        if (!config.downturns_only) {
            s.metrics_all = summarize_partial(s.excess_returns);
            s.metrics_all->avg_turnover = avg_turnover;
        }
        s.metrics_downturn = summarize_partial(select(s.excess_returns, report.downturn));
        s.metrics_downturn.avg_turnover = avg_turnover;
        report.strategies.push_back(std::move(s));
    }

    if (!config.downturns_only) report.market_all = summarize_partial(report.market_excess);
    report.market_downturn = summarize_partial(select(report.market_excess, report.downturn));
    return report;
}

}  // namespace hrplab
