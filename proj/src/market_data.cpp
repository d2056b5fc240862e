#include "hrplab/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "hrplab/error.hpp"
#include "hrplab/rng.hpp"

namespace hrplab {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

using csv::location;
using csv::parse_double;
using csv::split_commas;
using csv::trim;
using CsvLines = csv::Lines;

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

void require_increasing(const std::vector<Month>& dates, const std::string& what) {
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] == dates[i - 1]) throw DataError(what + ": duplicate date " + dates[i].str());
        if (dates[i] < dates[i - 1]) throw DataError(what + ": dates not increasing at " + dates[i].str());
    }
}

void require_gap_free(const std::vector<Month>& dates, const std::string& what) {
    require_increasing(dates, what);
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] - dates[i - 1] != 1) {
            throw DataError(what + ": date gap between " + dates[i - 1].str() + " and " + dates[i].str());
        }
    }
}

// Shared reader for the two gap-free series files.
struct SeriesTable {
    std::vector<std::string> header;
    std::vector<Month> dates;
    std::vector<std::vector<double>> columns;
};

SeriesTable read_series(std::istream& in, const std::string& source) {
    CsvLines lines{in};
    std::string line;
    if (!lines.next(line)) throw DataError(source + ": empty file");

    SeriesTable t;
    for (auto field : split_commas(line)) t.header.emplace_back(field);
    if (t.header.empty() || t.header.front() != "date") {
        throw DataError(location(source, lines.line_no) + ": header must start with 'date'");
    }
    t.columns.resize(t.header.size() - 1);

    while (lines.next(line)) {
        const auto fields = split_commas(line);
        if (fields.size() != t.header.size()) {
            throw DataError(location(source, lines.line_no) + ": expected " + std::to_string(t.header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        }
        try {
            t.dates.push_back(Month::parse(fields[0]));
        } catch (const DataError& e) {
            throw DataError(location(source, lines.line_no) + ": " + e.what());
        }
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                throw DataError(location(source, lines.line_no) + ": unparseable cell in column '" + t.header[c] +
                                "': '" + std::string(fields[c]) + "'");
            }
            t.columns[c - 1].push_back(v);
        }
    }
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Month

Month Month::parse(std::string_view text) {
    text = trim(text);
    auto bad = [&] { return DataError("invalid month '" + std::string(text) + "' (expected YYYY-MM)"); };
    if (text.size() != 7 || text[4] != '-') throw bad();
    int year = 0;
    int month = 0;
    auto r1 = std::from_chars(text.data(), text.data() + 4, year);
    auto r2 = std::from_chars(text.data() + 5, text.data() + 7, month);
    if (r1.ec != std::errc{} || r1.ptr != text.data() + 4 || r2.ec != std::errc{} || r2.ptr != text.data() + 7) {
        throw bad();
    }
    if (month < 1 || month > 12) throw bad();
    return Month(year, month);
}

std::string Month::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year(), month());
    return buf;
}

// ---------------------------------------------------------------------------
// ReturnsPanel

ReturnsPanel::ReturnsPanel(std::vector<Month> dates, std::vector<std::string> assets, Eigen::MatrixXd values)
    : dates_(std::move(dates)), assets_(std::move(assets)), values_(std::move(values)) {
    if (values_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
        values_.cols() != static_cast<Eigen::Index>(assets_.size())) {
        throw DataError("returns panel: value matrix shape does not match dates x assets");
    }
    require_increasing(dates_, "returns panel");
    std::set<std::string> seen;
    for (const auto& a : assets_) {
        if (a.empty()) throw DataError("returns panel: empty asset id");
        if (!seen.insert(a).second) throw DataError("returns panel: duplicate asset id '" + a + "'");
    }
    for (Eigen::Index r = 0; r < values_.rows(); ++r) {
        for (Eigen::Index c = 0; c < values_.cols(); ++c) {
            const double v = values_(r, c);
            if (std::isnan(v)) continue;
            if (!std::isfinite(v) || v <= -1.0) {
                throw DataError("returns panel: invalid return " + format_decimal(v) + " at (" + dates_[r].str() +
                                ", " + assets_[c] + ")");
            }
        }
    }
}

bool ReturnsPanel::is_missing(Eigen::Index row, Eigen::Index col) const { return std::isnan(values_(row, col)); }

Eigen::Index ReturnsPanel::missing_count() const { return values_.array().isNaN().count(); }

Eigen::Index ReturnsPanel::row_of(Month m) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), m);
    if (it == dates_.end() || *it != m) return -1;
    return it - dates_.begin();
}

ReturnsPanel ReturnsPanel::slice(Eigen::Index first, Eigen::Index count, const std::vector<Eigen::Index>& columns) const {
    std::vector<Month> d(dates_.begin() + first, dates_.begin() + first + count);
    std::vector<std::string> a;
    Eigen::MatrixXd v(count, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        a.push_back(assets_[columns[j]]);
        v.col(static_cast<Eigen::Index>(j)) = values_.col(columns[j]).segment(first, count);
    }
    return ReturnsPanel(std::move(d), std::move(a), std::move(v));
}

bool operator==(const ReturnsPanel& a, const ReturnsPanel& b) {
    if (a.dates_ != b.dates_ || a.assets_ != b.assets_) return false;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            const bool ma = a.is_missing(r, c);
            if (ma != b.is_missing(r, c)) return false;
            if (!ma && a.values_(r, c) != b.values_(r, c)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// RiskFreeSeries / FactorSeries

RiskFreeSeries::RiskFreeSeries(std::vector<Month> dates, std::vector<double> rf)
    : dates_(std::move(dates)), rf_(std::move(rf)) {
    if (dates_.size() != rf_.size()) throw DataError("risk-free series: length mismatch");
    require_gap_free(dates_, "risk-free series");
    for (double v : rf_) {
        if (!std::isfinite(v)) throw DataError("risk-free series: non-finite value");
    }
}

bool RiskFreeSeries::covers(Month m) const {
    return !dates_.empty() && m >= dates_.front() && m <= dates_.back();
}

double RiskFreeSeries::at(Month m) const {
    if (!covers(m)) throw DataError("risk-free series does not cover " + m.str());
    return rf_[static_cast<std::size_t>(m - dates_.front())];
}

const std::vector<std::string>& FactorSeries::known_columns() {
    static const std::vector<std::string> names{"mkt_rf", "smb", "hml", "rmw", "cma", "mom"};
    return names;
}

FactorSeries::FactorSeries(std::vector<Month> dates, std::vector<std::string> names,
                           std::vector<std::vector<double>> columns)
    : dates_(std::move(dates)), names_(std::move(names)), columns_(std::move(columns)) {
    if (names_.size() != columns_.size()) throw DataError("factor series: name/column count mismatch");
    if (std::find(names_.begin(), names_.end(), "mkt_rf") == names_.end()) {
        throw DataError("factor series: missing mandatory column 'mkt_rf'");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        const auto& known = known_columns();
        if (std::find(known.begin(), known.end(), names_[i]) == known.end()) {
            throw DataError("factor series: unknown column '" + names_[i] + "'");
        }
        if (!seen.insert(names_[i]).second) throw DataError("factor series: duplicate column '" + names_[i] + "'");
        if (columns_[i].size() != dates_.size()) throw DataError("factor series: column length mismatch");
    }
    require_gap_free(dates_, "factor series");
}

const std::vector<double>& FactorSeries::column(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw DataError("factor series has no column '" + name + "'");
    return columns_[static_cast<std::size_t>(it - names_.begin())];
}

bool FactorSeries::covers(Month m) const {
    return !dates_.empty() && m >= dates_.front() && m <= dates_.back();
}

double FactorSeries::mkt_rf(Month m) const {
    if (!covers(m)) throw DataError("factor series does not cover " + m.str());
    return column("mkt_rf")[static_cast<std::size_t>(m - dates_.front())];
}

// ---------------------------------------------------------------------------
// CSV I/O

std::string format_decimal(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

ReturnsPanel parse_returns_csv(std::istream& in, const std::string& source) {
    CsvLines lines{in};
    std::string line;
    if (!lines.next(line)) throw DataError(source + ": empty file");

    const auto header = split_commas(line);
    if (header.size() < 2 || header.front() != "date") {
        throw DataError(location(source, lines.line_no) + ": malformed header (expected 'date,<asset>,...')");
    }
    std::vector<std::string> assets;
    std::set<std::string> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty()) throw DataError(location(source, lines.line_no) + ": empty asset id in header");
        if (!seen.emplace(header[c]).second) {
            throw DataError(location(source, lines.line_no) + ": duplicate asset id '" + std::string(header[c]) + "'");
        }
        assets.emplace_back(header[c]);
    }

    std::vector<Month> dates;
    std::vector<std::vector<double>> rows;
    while (lines.next(line)) {
        const auto fields = split_commas(line);
        if (fields.size() != header.size()) {
            throw DataError(location(source, lines.line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        }
        Month m;
        try {
            m = Month::parse(fields[0]);
        } catch (const DataError& e) {
            throw DataError(location(source, lines.line_no) + ": " + e.what());
        }
        if (!dates.empty() && m <= dates.back()) {
            throw DataError(location(source, lines.line_no) + ": " +
                            (m == dates.back() ? "duplicate date " : "dates not increasing at ") + m.str());
        }
        dates.push_back(m);

        std::vector<double> row(assets.size(), kMissing);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty()) continue;
            double v = 0.0;
            const std::string cell = "row " + m.str() + ", column " + assets[c - 1];
            if (!parse_double(fields[c], v)) {
                throw DataError(location(source, lines.line_no) + ": unparseable cell at " + cell + ": '" +
                                std::string(fields[c]) + "'");
            }
            if (v <= -1.0) {
                throw DataError(location(source, lines.line_no) + ": return " + std::string(fields[c]) + " at " + cell +
                                " is <= -1.0");
            }
            row[c - 1] = v;
        }
        rows.push_back(std::move(row));
    }

    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(assets.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < assets.size(); ++c) {
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return ReturnsPanel(std::move(dates), std::move(assets), std::move(values));
}

RiskFreeSeries parse_riskfree_csv(std::istream& in, const std::string& source) {
    auto t = read_series(in, source);
    if (t.header.size() != 2 || t.header[1] != "rf") {
        throw DataError(source + ": malformed header (expected 'date,rf')");
    }
    try {
        return RiskFreeSeries(std::move(t.dates), std::move(t.columns[0]));
    } catch (const DataError& e) {
        throw DataError(source + ": " + e.what());
    }
}

FactorSeries parse_factors_csv(std::istream& in, const std::string& source) {
    auto t = read_series(in, source);
    std::vector<std::string> names(t.header.begin() + 1, t.header.end());
    try {
        return FactorSeries(std::move(t.dates), std::move(names), std::move(t.columns));
    } catch (const DataError& e) {
        throw DataError(source + ": " + e.what());
    }
}

ReturnsPanel load_returns_csv(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return parse_returns_csv(in, path.string());
}

RiskFreeSeries load_riskfree_csv(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return parse_riskfree_csv(in, path.string());
}

FactorSeries load_factors_csv(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return parse_factors_csv(in, path.string());
}

void write_returns_csv(std::ostream& out, const ReturnsPanel& panel) {
    out << "date";
    for (const auto& a : panel.assets()) out << ',' << a;
    out << '\n';
    for (Eigen::Index r = 0; r < panel.rows(); ++r) {
        out << panel.dates()[static_cast<std::size_t>(r)].str();
        for (Eigen::Index c = 0; c < panel.cols(); ++c) {
            out << ',';
            if (!panel.is_missing(r, c)) out << format_decimal(panel.values()(r, c));
        }
        out << '\n';
    }
}

void write_riskfree_csv(std::ostream& out, const RiskFreeSeries& rf) {
    out << "date,rf\n";
    for (std::size_t i = 0; i < rf.dates().size(); ++i) {
        out << rf.dates()[i].str() << ',' << format_decimal(rf.rf()[i]) << '\n';
    }
}

void write_factors_csv(std::ostream& out, const FactorSeries& factors) {
    out << "date";
    for (const auto& n : factors.names()) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < factors.dates().size(); ++i) {
        out << factors.dates()[i].str();
        for (const auto& n : factors.names()) out << ',' << format_decimal(factors.column(n)[i]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Transformations

ReturnsPanel excess_returns(const ReturnsPanel& panel, const RiskFreeSeries& rf) {
    Eigen::MatrixXd v = panel.values();
    for (Eigen::Index r = 0; r < panel.rows(); ++r) {
        const Month m = panel.dates()[static_cast<std::size_t>(r)];
        if (!rf.covers(m)) throw DataError("risk-free series does not cover panel month " + m.str());
        v.row(r).array() -= rf.at(m);  // NaN stays NaN
    }
    return ReturnsPanel(panel.dates(), panel.assets(), std::move(v));
}

namespace {

// Returns the row index of `first` after checking that `count` consecutive
// calendar months starting there are present in the panel.
Eigen::Index locate_run(const ReturnsPanel& panel, Month first, int count, const char* what) {
    const Eigen::Index row = panel.row_of(first);
    if (row < 0 || row + count > panel.rows()) {
        throw DataError(std::string(what) + " window [" + first.str() + ", " + (first + (count - 1)).str() +
                        "] is outside the panel span");
    }
    if (panel.dates()[static_cast<std::size_t>(row + count - 1)] != first + (count - 1)) {
        throw DataError(std::string(what) + " window starting " + first.str() + " spans a gap in the panel dates");
    }
    return row;
}

std::vector<Eigen::Index> complete_columns(const ReturnsPanel& panel, Eigen::Index first, Eigen::Index count) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < panel.cols(); ++c) {
        if (!panel.values().col(c).segment(first, count).array().isNaN().any()) keep.push_back(c);
    }
    return keep;
}

}  // namespace

WindowedPanels window(const ReturnsPanel& panel, const WindowSpec& spec) {
    if (spec.lookback_months < 1 || spec.hold_months < 1) {
        throw ValidationError("window: lookback and hold must be positive");
    }
    const int total = spec.lookback_months + spec.hold_months;
    const Eigen::Index first = locate_run(panel, spec.as_of - spec.lookback_months, total, "look-back/holding");
    const auto keep = complete_columns(panel, first, total);
    if (keep.size() < 2) {
        throw DataError("window at " + spec.as_of.str() + ": fewer than 2 assets with complete data");
    }
    return WindowedPanels{panel.slice(first, spec.lookback_months, keep),
                          panel.slice(first + spec.lookback_months, spec.hold_months, keep)};
}

ReturnsPanel lookback_window(const ReturnsPanel& panel, Month as_of, int lookback_months) {
    if (lookback_months < 1) throw ValidationError("lookback must be positive");
    const Eigen::Index first = locate_run(panel, as_of - lookback_months, lookback_months, "look-back");
    const auto keep = complete_columns(panel, first, lookback_months);
    if (keep.size() < 2) {
        throw DataError("look-back ending before " + as_of.str() + ": fewer than 2 assets with complete data");
    }
    return panel.slice(first, lookback_months, keep);
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SyntheticSpec::validate() const {
    if (n_assets < 1) throw ValidationError("synthetic: n_assets must be positive");
    if (n_sectors < 1 || n_sectors > n_assets) throw ValidationError("synthetic: n_sectors must be in [1, n_assets]");
    if (n_months < 1) throw ValidationError("synthetic: n_months must be positive");
    if (market_beta_range.lo > market_beta_range.hi) throw ValidationError("synthetic: empty market beta range");
    if (sector_loading_range.lo > sector_loading_range.hi) {
        throw ValidationError("synthetic: empty sector loading range");
    }
    if (!(idio_vol > 0.0) || !(sector_vol > 0.0) || !(market_vol > 0.0)) {
        throw ValidationError("synthetic: volatilities must be positive");
    }
    if (!std::isfinite(rf_const)) throw ValidationError("synthetic: rf must be finite");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const auto n = static_cast<std::size_t>(spec.n_assets);
    const auto k = static_cast<std::size_t>(spec.n_sectors);
    const auto t = static_cast<std::size_t>(spec.n_months);

    // Stream order: per asset (beta, loading); then per month
    // (market, sector 0..k-1, idiosyncratic 0..n-1).
    std::vector<double> beta(n);
    std::vector<double> loading(n);
    for (std::size_t i = 0; i < n; ++i) {
        beta[i] = rng.uniform(spec.market_beta_range.lo, spec.market_beta_range.hi);
        loading[i] = rng.uniform(spec.sector_loading_range.lo, spec.sector_loading_range.hi);
    }

    std::vector<Month> dates;
    std::vector<std::string> assets;
    const int width = static_cast<int>(std::to_string(spec.n_assets).size());
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = std::to_string(i + 1);
        assets.push_back("S" + std::to_string(i % k + 1) + "A" + std::string(width - id.size(), '0') + id);
    }

    Eigen::MatrixXd values(spec.n_months, spec.n_assets);
    std::vector<double> mkt(t);
    std::vector<double> sector(k);
    for (std::size_t m = 0; m < t; ++m) {
        dates.push_back(spec.start + static_cast<int>(m));
        mkt[m] = rng.normal(0.0, spec.market_vol);
        for (auto& s : sector) s = rng.normal(0.0, spec.sector_vol);
        for (std::size_t i = 0; i < n; ++i) {
            const double excess = beta[i] * mkt[m] + loading[i] * sector[i % k] + rng.normal(0.0, spec.idio_vol);
            // Keep the raw return above the -100% floor; only reachable with
            // absurd volatility settings.
            const double raw = std::max(excess + spec.rf_const, -0.99);
            values(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = raw;
        }
    }

    RiskFreeSeries rf(dates, std::vector<double>(t, spec.rf_const));
    FactorSeries factors(dates, {"mkt_rf"}, {mkt});
    return SyntheticData{ReturnsPanel(dates, std::move(assets), std::move(values)), std::move(rf), std::move(factors)};
}

}  // namespace hrplab
