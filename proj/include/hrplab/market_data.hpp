#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "hrplab/month.hpp"

namespace hrplab {

/// Date-indexed matrix of monthly simple returns (decimal fractions).
///
/// Rows are months, columns are assets. Missing cells are stored as quiet NaN
/// and reported through is_missing(); present cells are always finite and
/// strictly greater than -1.
class ReturnsPanel {
public:
    ReturnsPanel(std::vector<Month> dates, std::vector<std::string> assets, Eigen::MatrixXd values);

    const std::vector<Month>& dates() const { return dates_; }
    const std::vector<std::string>& assets() const { return assets_; }
    const Eigen::MatrixXd& values() const { return values_; }

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }

    bool is_missing(Eigen::Index row, Eigen::Index col) const;
    Eigen::Index missing_count() const;
    bool has_missing() const { return missing_count() > 0; }

    /// Row index of `m`, or -1 when the month is not in the panel.
    Eigen::Index row_of(Month m) const;

    /// Contiguous rows [first, first + count) restricted to `columns`.
    ReturnsPanel slice(Eigen::Index first, Eigen::Index count, const std::vector<Eigen::Index>& columns) const;

    friend bool operator==(const ReturnsPanel& a, const ReturnsPanel& b);

private:
    std::vector<Month> dates_;
    std::vector<std::string> assets_;
    Eigen::MatrixXd values_;
};

class RiskFreeSeries {
public:
    RiskFreeSeries(std::vector<Month> dates, std::vector<double> rf);

    const std::vector<Month>& dates() const { return dates_; }
    const std::vector<double>& rf() const { return rf_; }

    bool covers(Month m) const;
    double at(Month m) const;

private:
    std::vector<Month> dates_;
    std::vector<double> rf_;
};

/// Monthly factor series. `mkt_rf` is mandatory; the remaining columns
/// (smb, hml, rmw, cma, mom) are kept in header order when present.
class FactorSeries {
public:
    FactorSeries(std::vector<Month> dates, std::vector<std::string> names, std::vector<std::vector<double>> columns);

    const std::vector<Month>& dates() const { return dates_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<double>& column(const std::string& name) const;

    bool covers(Month m) const;
    double mkt_rf(Month m) const;

    static const std::vector<std::string>& known_columns();

private:
    std::vector<Month> dates_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

struct WindowSpec {
    Month as_of;
    int lookback_months = 12;
    int hold_months = 3;
};

struct WindowedPanels {
    ReturnsPanel lookback;
    ReturnsPanel holding;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Parameters of the seeded sector factor model used in place of licensed
/// return data. Volatilities are monthly.
struct SyntheticSpec {
    int n_assets = 12;
    int n_sectors = 3;
    int n_months = 60;
    std::uint64_t seed = 42;
    Interval market_beta_range{0.5, 1.5};
    Interval sector_loading_range{0.5, 1.5};
    double idio_vol = 0.05;
    double sector_vol = 0.03;
    double market_vol = 0.045;
    double rf_const = 0.003;
    Month start{2000, 1};

    void validate() const;
};

struct SyntheticData {
    ReturnsPanel returns;
    RiskFreeSeries riskfree;
    FactorSeries factors;
};

ReturnsPanel load_returns_csv(const std::filesystem::path& path);
RiskFreeSeries load_riskfree_csv(const std::filesystem::path& path);
FactorSeries load_factors_csv(const std::filesystem::path& path);

// Stream-based variants; `source` names the input in diagnostics.
ReturnsPanel parse_returns_csv(std::istream& in, const std::string& source = "<stream>");
RiskFreeSeries parse_riskfree_csv(std::istream& in, const std::string& source = "<stream>");
FactorSeries parse_factors_csv(std::istream& in, const std::string& source = "<stream>");

void write_returns_csv(std::ostream& out, const ReturnsPanel& panel);
void write_riskfree_csv(std::ostream& out, const RiskFreeSeries& rf);
void write_factors_csv(std::ostream& out, const FactorSeries& factors);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_decimal(double value);

/// r - rf per month; missing cells stay missing.
ReturnsPanel excess_returns(const ReturnsPanel& panel, const RiskFreeSeries& rf);

/// Look-back rows [as_of - lookback, as_of - 1] and holding rows
/// [as_of, as_of + hold - 1]. Assets with any missing cell in either window
/// are dropped from both.
WindowedPanels window(const ReturnsPanel& panel, const WindowSpec& spec);

/// Look-back rows only; `as_of` may be one month past the panel end.
/// Assets with a missing cell in the look-back are dropped.
ReturnsPanel lookback_window(const ReturnsPanel& panel, Month as_of, int lookback_months);

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace hrplab
