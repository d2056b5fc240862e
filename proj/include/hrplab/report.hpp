#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrplab/backtest.hpp"
#include "hrplab/hcluster.hpp"

namespace hrplab {

enum class TableFormat { table, csv, json };

TableFormat parse_table_format(const std::string& text);

struct TableOptions {
    bool include_market = false;  // adds the benchmark's rows after the strategies
    bool styled = false;          // ANSI bold header in table mode
};

/// One row per (method, all|downturn). Table mode prints percentages with two
/// decimals; CSV and JSON carry raw decimals. Subsets omitted by a
/// downturns-only run are skipped.
std::string render_table(const BacktestReport& report, TableFormat format, const TableOptions& options = {});

inline constexpr const char* kMetricsCsvHeader = "method,subset,mean_excess,std_dev,sharpe,avg_turnover,n_months";

/// Stable-order JSON document; undefined metrics serialize as null.
std::string report_to_json(const BacktestReport& report);
BacktestReport report_from_json(const std::string& text);

/// Output of the `allocate` command.
std::string allocation_to_json(const Allocation& allocation, Month as_of, int lookback_months);

/// Orthogonal-link dendrogram; leaves follow the seriation left to right and
/// link heights are proportional to merge distance.
std::string render_dendrogram_svg(const LinkageTree& tree, const std::vector<std::string>& labels);

/// Heatmap color scale: -limit -> #2166ac, 0 -> #f7f7f7, +limit -> #b2182b,
/// linear in between. `limit` is the largest absolute entry (1 for a
/// correlation matrix).
std::string heatmap_color(double value, double limit);

/// N x N colored grid with row/column labels. When `order` is given, rows and
/// columns are drawn in that order.
std::string render_heatmap_svg(const std::vector<std::string>& assets, const Eigen::MatrixXd& matrix,
                               const std::optional<Seriation>& order, bool is_correlation);

}  // namespace hrplab
