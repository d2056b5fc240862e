#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrplab/allocation.hpp"
#include "hrplab/market_data.hpp"
#include "hrplab/metrics.hpp"

namespace hrplab {

struct BacktestConfig {
    int lookback_months = 12;
    int hold_months = 3;
    std::vector<Method> methods{Method::hrp, Method::gmv};
    SideRule side_rule = SideRule::momentum_sign;
    std::map<std::string, int> explicit_sides;
    double shrinkage_delta = 0.0;
    std::optional<Month> start;  // earliest allowed as_of
    std::optional<Month> end;    // last month that may be evaluated
    double downturn_threshold = 0.0;
    bool downturns_only = false;
    int jobs = 1;  // window-level parallelism; never affects results

    void validate() const;
};

/// Asset ids with signed position weights (gross need not be 1).
struct Holdings {
    std::vector<std::string> assets;
    Eigen::VectorXd weights;
};

struct Rebalance {
    Month as_of;
    std::vector<std::string> assets;
    Eigen::VectorXd weights;                   // traded, unit gross exposure
    std::vector<int> sides;
    double turnover = 0.0;
    std::optional<Eigen::VectorXd> raw_weights;  // Markowitz only, sums to one
};

struct StrategyResult {
    Method method;
    std::vector<double> excess_returns;  // aligned with BacktestReport::dates
    std::vector<Rebalance> rebalances;
    std::optional<MetricsRow> metrics_all;  // absent when downturns_only
    MetricsRow metrics_downturn;
};

struct BacktestReport {
    BacktestConfig config;
    std::vector<Month> dates;
    std::vector<double> market_excess;
    std::vector<bool> downturn;
    std::optional<MetricsRow> market_all;
    MetricsRow market_downturn;
    std::vector<StrategyResult> strategies;
};

struct HoldPeriodResult {
    std::vector<double> excess;  // r_p,t - rf_t
    std::vector<double> raw;     // r_p,t
    Eigen::VectorXd end_weights; // drifted weights after the last month
};

/// Buy-and-hold accounting over one holding block. Weights drift as
/// w_{t+1,i} = w_{t,i} (1 + r_{i,t}) / (1 + r_{p,t}). Throws NumericalError
/// if the portfolio loses 100% in any month.
HoldPeriodResult hold_period_returns(const Holdings& start, const ReturnsPanel& holding_raw, const RiskFreeSeries& rf);

/// Half the L1 distance between the two allocations over the union of their
/// assets; an asset missing on one side counts as zero there.
double turnover(const Holdings& previous_end, const Holdings& next);

/// true where mkt_rf < threshold.
std::vector<bool> downturn_mask(const FactorSeries& factors, const std::vector<Month>& months, double threshold);

/// Non-overlapping as_of dates: the first month with a full look-back (or
/// config.start if later), then every hold_months while a full holding block fits.
std::vector<Month> rebalance_schedule(const ReturnsPanel& panel, const BacktestConfig& config);

BacktestReport run_backtest(const ReturnsPanel& panel, const RiskFreeSeries& rf, const FactorSeries& factors,
                            const BacktestConfig& config);

/// Single-date allocation used by both the backtest and the `allocate` command.
struct Allocation {
    Method method;
    Holdings holdings;  // unit gross exposure
    std::vector<int> sides;
    std::optional<Eigen::VectorXd> raw_weights;
};

Allocation allocate(const ReturnsPanel& lookback_excess, Method method, const BacktestConfig& config);

}  // namespace hrplab
