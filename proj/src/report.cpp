#include "hrplab/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "hrplab/error.hpp"

namespace hrplab {

using ojson = nlohmann::ordered_json;

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson metrics_json(const MetricsRow& m) {
    ojson j;
    j["mean_excess"] = opt_json(m.mean_excess);
    j["std_dev"] = opt_json(m.std_dev);
    j["sharpe"] = opt_json(m.sharpe);
    j["avg_turnover"] = opt_json(m.avg_turnover);
    j["n_months"] = m.n_months;
    return j;
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

MetricsRow metrics_from(const nlohmann::json& j) {
    MetricsRow m;
    m.mean_excess = opt_from(j, "mean_excess");
    m.std_dev = opt_from(j, "std_dev");
    m.sharpe = opt_from(j, "sharpe");
    m.avg_turnover = opt_from(j, "avg_turnover");
    m.n_months = j.at("n_months").get<int>();
    return m;
}

std::vector<std::string> month_strings(const std::vector<Month>& months) {
    std::vector<std::string> out;
    out.reserve(months.size());
    for (Month m : months) out.push_back(m.str());
    return out;
}

std::vector<Month> months_from(const nlohmann::json& j) {
    std::vector<Month> out;
    for (const auto& s : j) out.push_back(Month::parse(s.get<std::string>()));
    return out;
}

std::vector<double> eigen_to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd vector_to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ojson config_json(const BacktestConfig& c) {
    ojson j;
    j["lookback_months"] = c.lookback_months;
    j["hold_months"] = c.hold_months;
    auto methods = ojson::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    j["methods"] = std::move(methods);
    j["side_rule"] = to_string(c.side_rule);
    if (c.side_rule == SideRule::explicit_map) {
        ojson sides = ojson::object();
        for (const auto& [a, s] : c.explicit_sides) sides[a] = s;
        j["explicit_sides"] = std::move(sides);
    }
    j["shrinkage_delta"] = c.shrinkage_delta;
    j["start"] = c.start ? ojson(c.start->str()) : ojson(nullptr);
    j["end"] = c.end ? ojson(c.end->str()) : ojson(nullptr);
    j["downturn_threshold"] = c.downturn_threshold;
    j["downturns_only"] = c.downturns_only;
    return j;
}

SideRule side_rule_from(const std::string& s) {
    if (s == "all_long") return SideRule::all_long;
    if (s == "momentum_sign") return SideRule::momentum_sign;
    if (s == "explicit") return SideRule::explicit_map;
    throw DataError("unknown side rule '" + s + "'");
}

BacktestConfig config_from(const nlohmann::json& j) {
    BacktestConfig c;
    c.lookback_months = j.at("lookback_months").get<int>();
    c.hold_months = j.at("hold_months").get<int>();
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    c.side_rule = side_rule_from(j.at("side_rule").get<std::string>());
    if (j.contains("explicit_sides")) c.explicit_sides = j.at("explicit_sides").get<std::map<std::string, int>>();
    c.shrinkage_delta = j.at("shrinkage_delta").get<double>();
    if (!j.at("start").is_null()) c.start = Month::parse(j.at("start").get<std::string>());
    if (!j.at("end").is_null()) c.end = Month::parse(j.at("end").get<std::string>());
    c.downturn_threshold = j.at("downturn_threshold").get<double>();
    c.downturns_only = j.at("downturns_only").get<bool>();
    return c;
}

ojson metrics_pair_json(const std::optional<MetricsRow>& all, const MetricsRow& downturn) {
    ojson j;
    if (all) j["all"] = metrics_json(*all);
    j["downturn"] = metrics_json(downturn);
    return j;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct TableRow {
    std::string method;
    std::string subset;
    MetricsRow metrics;
};

std::vector<TableRow> table_rows(const BacktestReport& report, bool include_market) {
    std::vector<TableRow> rows;
    auto add = [&](const std::string& name, const std::optional<MetricsRow>& all, const MetricsRow& downturn) {
        if (all) rows.push_back({name, "all", *all});
        rows.push_back({name, "downturn", downturn});
    };
    for (const auto& s : report.strategies) add(to_string(s.method), s.metrics_all, s.metrics_downturn);
    if (include_market) add("market", report.market_all, report.market_downturn);
    return rows;
}

}  // namespace

TableFormat parse_table_format(const std::string& text) {
    if (text == "table") return TableFormat::table;
    if (text == "csv") return TableFormat::csv;
    if (text == "json") return TableFormat::json;
    throw ValidationError("unknown format '" + text + "' (expected table, csv, json)");
}

std::string render_table(const BacktestReport& report, TableFormat format, const TableOptions& options) {
    const auto rows = table_rows(report, options.include_market);
    std::ostringstream out;
    switch (format) {
        case TableFormat::csv: {
            auto cell = [](const std::optional<double>& v) { return v ? format_decimal(*v) : std::string(); };
            out << kMetricsCsvHeader << '\n';
            for (const auto& r : rows) {
                out << r.method << ',' << r.subset << ',' << cell(r.metrics.mean_excess) << ','
                    << cell(r.metrics.std_dev) << ',' << cell(r.metrics.sharpe) << ',' << cell(r.metrics.avg_turnover)
                    << ',' << r.metrics.n_months << '\n';
            }
            break;
        }
        case TableFormat::json: {
            auto arr = ojson::array();
            for (const auto& r : rows) {
                ojson j;
                j["method"] = r.method;
                j["subset"] = r.subset;
                const ojson metrics = metrics_json(r.metrics);
                for (const auto& item : metrics.items()) j[item.key()] = item.value();
                arr.push_back(std::move(j));
            }
            out << arr.dump(2) << '\n';
            break;
        }
        case TableFormat::table: {
            auto pct = [](const std::optional<double>& v) { return v ? fixed(*v * 100.0, 2) + "%" : std::string("n/a"); };
            auto num = [](const std::optional<double>& v) { return v ? fixed(*v, 2) : std::string("n/a"); };
            const std::array<std::string, 7> header{"method", "subset", "mean_excess", "std_dev",
                                                    "sharpe", "avg_turnover", "n_months"};
            std::vector<std::array<std::string, 7>> cells;
            for (const auto& r : rows) {
                cells.push_back({r.method, r.subset, pct(r.metrics.mean_excess), pct(r.metrics.std_dev),
                                 num(r.metrics.sharpe), pct(r.metrics.avg_turnover), std::to_string(r.metrics.n_months)});
            }
            std::array<std::size_t, 7> width{};
            for (std::size_t c = 0; c < 7; ++c) {
                width[c] = header[c].size();
                for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
            }
            auto emit = [&](const std::array<std::string, 7>& row) {
                for (std::size_t c = 0; c < 7; ++c) {
                    if (c > 0) out << "  ";
                    const std::string pad(width[c] - row[c].size(), ' ');
                    // Text columns left-aligned, numbers right-aligned.
                    out << (c < 2 ? row[c] + pad : pad + row[c]);
                }
                out << '\n';
            };
            if (options.styled) out << "\x1b[1m";
            emit(header);
            if (options.styled) out << "\x1b[0m";
            for (const auto& row : cells) emit(row);
            break;
        }
    }
    return out.str();
}

std::string report_to_json(const BacktestReport& report) {
    ojson j;
    j["config"] = config_json(report.config);

    ojson market;
    market["dates"] = month_strings(report.dates);
    market["excess"] = report.market_excess;
    market["metrics"] = metrics_pair_json(report.market_all, report.market_downturn);
    j["market"] = std::move(market);

    ojson strategies = ojson::object();
    for (const auto& s : report.strategies) {
        ojson sj;
        sj["dates"] = month_strings(report.dates);
        sj["excess_returns"] = s.excess_returns;
        auto rebalances = ojson::array();
        for (const auto& r : s.rebalances) {
            ojson rj;
            rj["as_of"] = r.as_of.str();
            rj["assets"] = r.assets;
            rj["weights"] = eigen_to_vector(r.weights);
            rj["sides"] = r.sides;
            rj["turnover"] = r.turnover;
            if (r.raw_weights) rj["raw_weights"] = eigen_to_vector(*r.raw_weights);
            rebalances.push_back(std::move(rj));
        }
        sj["rebalances"] = std::move(rebalances);
        sj["metrics"] = metrics_pair_json(s.metrics_all, s.metrics_downturn);
        strategies[to_string(s.method)] = std::move(sj);
    }
    j["strategies"] = std::move(strategies);
    return j.dump(2) + "\n";
}

BacktestReport report_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        BacktestReport r;
        r.config = config_from(j.at("config"));
        const auto& market = j.at("market");
        r.dates = months_from(market.at("dates"));
        r.market_excess = market.at("excess").get<std::vector<double>>();
        const auto& mm = market.at("metrics");
        if (mm.contains("all")) r.market_all = metrics_from(mm.at("all"));
        r.market_downturn = metrics_from(mm.at("downturn"));

        // Strategy order follows config.methods, not JSON key order.
        const auto& strategies = j.at("strategies");
        for (Method m : r.config.methods) {
            const auto& sj = strategies.at(to_string(m));
            StrategyResult s{m, sj.at("excess_returns").get<std::vector<double>>(), {}, std::nullopt, {}};
            for (const auto& rj : sj.at("rebalances")) {
                Rebalance rb;
                rb.as_of = Month::parse(rj.at("as_of").get<std::string>());
                rb.assets = rj.at("assets").get<std::vector<std::string>>();
                rb.weights = vector_to_eigen(rj.at("weights").get<std::vector<double>>());
                rb.sides = rj.at("sides").get<std::vector<int>>();
                rb.turnover = rj.at("turnover").get<double>();
                if (rj.contains("raw_weights")) rb.raw_weights = vector_to_eigen(rj.at("raw_weights").get<std::vector<double>>());
                s.rebalances.push_back(std::move(rb));
            }
            const auto& metrics = sj.at("metrics");
            if (metrics.contains("all")) s.metrics_all = metrics_from(metrics.at("all"));
            s.metrics_downturn = metrics_from(metrics.at("downturn"));
            r.strategies.push_back(std::move(s));
        }
        r.downturn.assign(r.dates.size(), false);
        for (std::size_t i = 0; i < r.dates.size(); ++i) {
            r.downturn[i] = r.market_excess.at(i) < r.config.downturn_threshold;
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report JSON: ") + e.what());
    }
}

std::string allocation_to_json(const Allocation& a, Month as_of, int lookback_months) {
    const double gross = a.holdings.weights.cwiseAbs().sum();
    const double net = a.holdings.weights.sum();
    ojson j;
    j["method"] = to_string(a.method);
    j["as_of"] = as_of.str();
    j["lookback"] = lookback_months;
    j["assets"] = a.holdings.assets;
    j["weights"] = eigen_to_vector(a.holdings.weights);
    j["sides"] = a.sides;
    j["gross"] = gross;
    j["net"] = net;
    if (a.raw_weights) j["raw_weights"] = eigen_to_vector(*a.raw_weights);
    return j.dump(2) + "\n";
}

std::string render_dendrogram_svg(const LinkageTree& tree, const std::vector<std::string>& labels) {
    const int n = tree.n_leaves();
    if (labels.size() != static_cast<std::size_t>(n)) {
        throw ValidationError("dendrogram: expected " + std::to_string(n) + " labels, got " + std::to_string(labels.size()));
    }
    const auto order = quasi_diagonalize(tree).order();

    constexpr double spacing = 40.0;
    constexpr double left_margin = 60.0;
    constexpr double top = 20.0;
    constexpr double plot_h = 300.0;
    const double baseline = top + plot_h;
    const double width = left_margin + spacing * n + 20.0;
    const double height = baseline + 90.0;
    const double max_d = tree.merges().back().distance;
    const double scale = max_d > 0.0 ? plot_h / max_d : 0.0;

    std::vector<double> x(static_cast<std::size_t>(2 * n - 1));
    std::vector<double> y(x.size(), baseline);
    for (int pos = 0; pos < n; ++pos) x[static_cast<std::size_t>(order[pos])] = left_margin + spacing * (pos + 0.5);

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    // Distance axis.
    s << "<g stroke=\"#444444\" fill=\"none\">\n"
      << "<path d=\"M " << fixed(left_margin - 10, 2) << ' ' << fixed(top, 2) << " V " << fixed(baseline, 2) << "\"/>\n"
      << "</g>\n"
      << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\" text-anchor=\"end\">\n"
      << "<text x=\"" << fixed(left_margin - 14, 2) << "\" y=\"" << fixed(baseline + 3, 2) << "\">0</text>\n"
      << "<text x=\"" << fixed(left_margin - 14, 2) << "\" y=\"" << fixed(top + 3, 2) << "\">" << fixed(max_d, 3)
      << "</text>\n</g>\n";

    s << "<g stroke=\"#1f3b73\" stroke-width=\"1.5\" fill=\"none\">\n";
    for (const auto& m : tree.merges()) {
        const auto l = static_cast<std::size_t>(m.left);
        const auto r = static_cast<std::size_t>(m.right);
        const auto k = static_cast<std::size_t>(m.node);
        x[k] = 0.5 * (x[l] + x[r]);
        y[k] = baseline - m.distance * scale;
        s << "<path d=\"M " << fixed(x[l], 2) << ' ' << fixed(y[l], 2) << " V " << fixed(y[k], 2) << " H "
          << fixed(x[r], 2) << " V " << fixed(y[r], 2) << "\"/>\n";
    }
    s << "</g>\n";

    s << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\" text-anchor=\"end\">\n";
    for (int pos = 0; pos < n; ++pos) {
        const auto leaf = static_cast<std::size_t>(order[pos]);
        const std::string lx = fixed(x[leaf], 2);
        const std::string ly = fixed(baseline + 14, 2);
        s << "<text x=\"" << lx << "\" y=\"" << ly << "\" transform=\"rotate(-45 " << lx << ' ' << ly << ")\">"
          << xml_escape(labels[leaf]) << "</text>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

std::string heatmap_color(double value, double limit) {
    struct Rgb {
        double r, g, b;
    };
    constexpr Rgb neg{0x21, 0x66, 0xac};
    constexpr Rgb mid{0xf7, 0xf7, 0xf7};
    constexpr Rgb pos{0xb2, 0x18, 0x2b};
    const double t = limit > 0.0 ? std::clamp(value / limit, -1.0, 1.0) : 0.0;
    const Rgb& end = t >= 0.0 ? pos : neg;
    const double a = std::abs(t);
    auto channel = [&](double m, double e) { return static_cast<int>(std::lround(m + (e - m) * a)); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(mid.r, end.r), channel(mid.g, end.g), channel(mid.b, end.b));
    return buf;
}

std::string render_heatmap_svg(const std::vector<std::string>& assets, const Eigen::MatrixXd& matrix,
                               const std::optional<Seriation>& order, bool is_correlation) {
    const auto n = static_cast<int>(matrix.rows());
    if (matrix.cols() != n || assets.size() != static_cast<std::size_t>(n)) {
        throw ValidationError("heatmap: matrix and labels disagree in size");
    }
    if (order && order->size() != static_cast<std::size_t>(n)) {
        throw ValidationError("heatmap: seriation does not match matrix dimension");
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = order ? order->order()[static_cast<std::size_t>(i)] : i;

    const double limit = is_correlation ? 1.0 : std::max(matrix.cwiseAbs().maxCoeff(), 0.0);

    std::size_t longest = 1;
    for (const auto& a : assets) longest = std::max(longest, a.size());
    constexpr double cell = 20.0;
    const double label_w = 7.0 * static_cast<double>(longest) + 10.0;
    const double grid = cell * n;
    const double legend_h = 40.0;
    const double width = label_w + grid + 20.0;
    const double height = label_w + grid + legend_h + 20.0;

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n<g>\n";
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = matrix(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            s << "<rect x=\"" << fixed(label_w + cell * j, 2) << "\" y=\"" << fixed(label_w + cell * i, 2)
              << "\" width=\"" << fixed(cell, 2) << "\" height=\"" << fixed(cell, 2) << "\" fill=\""
              << heatmap_color(v, limit) << "\"/>\n";
        }
    }
    s << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">\n";
    for (int i = 0; i < n; ++i) {
        const auto& label = xml_escape(assets[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
        const std::string center = fixed(label_w + cell * (i + 0.5) + 4.0, 2);
        s << "<text x=\"" << fixed(label_w - 4.0, 2) << "\" y=\"" << center << "\" text-anchor=\"end\">" << label
          << "</text>\n";
        const std::string cx = fixed(label_w + cell * (i + 0.5) + 4.0, 2);
        const std::string cy = fixed(label_w - 4.0, 2);
        s << "<text x=\"" << cx << "\" y=\"" << cy << "\" transform=\"rotate(-90 " << cx << ' ' << cy << ")\">" << label
          << "</text>\n";
    }
    s << "</g>\n";

    // Legend: endpoint and midpoint swatches with their values.
    const double ly = label_w + grid + 15.0;
    const std::array<double, 3> stops{-limit, 0.0, limit};
    s << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#000000\">\n";
    for (std::size_t k = 0; k < stops.size(); ++k) {
        const double lx = label_w + 70.0 * static_cast<double>(k);
        s << "<rect x=\"" << fixed(lx, 2) << "\" y=\"" << fixed(ly, 2) << "\" width=\"12.00\" height=\"12.00\" fill=\""
          << heatmap_color(stops[k], limit) << "\" stroke=\"#888888\"/>\n"
          << "<text x=\"" << fixed(lx + 16.0, 2) << "\" y=\"" << fixed(ly + 10.0, 2) << "\">"
          << (is_correlation ? fixed(stops[k], 1) : fixed(stops[k], 6)) << "</text>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

}  // namespace hrplab
