#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "hrplab/error.hpp"
#include "hrplab/market_data.hpp"

using namespace hrplab;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Month> months(Month first, int n) {
    std::vector<Month> out;
    for (int i = 0; i < n; ++i) out.push_back(first + i);
    return out;
}

double sample_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double ma = a.mean(), mb = b.mean();
    double sab = 0, saa = 0, sbb = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        sab += (a(i) - ma) * (b(i) - mb);
        saa += (a(i) - ma) * (a(i) - ma);
        sbb += (b(i) - mb) * (b(i) - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("month parsing and arithmetic") {
    const Month m = Month::parse("2001-12");
    CHECK(m.year() == 2001);
    CHECK(m.month() == 12);
    CHECK((m + 1).str() == "2002-01");
    CHECK((Month(2002, 3) - m) == 3);
    CHECK_THROWS_AS(Month::parse("2001-13"), DataError);
    CHECK_THROWS_AS(Month::parse("2001-1"), DataError);
    CHECK_THROWS_AS(Month::parse("01/2001"), DataError);
}

TEST_CASE("returns csv parses values and blanks") {
    std::istringstream in("date,AAA,BBB\n2000-01,0.01,-0.02\n2000-02,,0.03\n2000-03,0.5,0\n");
    const ReturnsPanel p = parse_returns_csv(in);
    CHECK(p.rows() == 3);
    CHECK(p.cols() == 2);
    CHECK(p.assets() == std::vector<std::string>{"AAA", "BBB"});
    CHECK(p.values()(0, 1) == -0.02);
    CHECK(p.is_missing(1, 0));
    CHECK(p.missing_count() == 1);
    CHECK(p.row_of(Month(2000, 3)) == 2);
    CHECK(p.row_of(Month(2001, 1)) == -1);
}

TEST_CASE("returns csv errors name the cell") {
    std::istringstream bad("date,AAA,BBB\n2000-01,0.01,abc\n");
    try {
        parse_returns_csv(bad, "r.csv");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK(what.find("2000-01") != std::string::npos);
        CHECK(what.find("BBB") != std::string::npos);
    }
    std::istringstream total_loss("date,AAA\n2000-01,-1\n");
    CHECK_THROWS_AS(parse_returns_csv(total_loss), DataError);
    std::istringstream unsorted("date,AAA\n2000-02,0.1\n2000-01,0.1\n");
    CHECK_THROWS_AS(parse_returns_csv(unsorted), DataError);
    std::istringstream dup("date,AAA,AAA\n2000-01,0.1,0.1\n");
    CHECK_THROWS_AS(parse_returns_csv(dup), DataError);
    std::istringstream ragged("date,AAA,BBB\n2000-01,0.1\n");
    CHECK_THROWS_AS(parse_returns_csv(ragged), DataError);
}

TEST_CASE("factor and rf csv") {
    std::istringstream f("date,mkt_rf,smb\n2000-01,-0.01,0.002\n2000-02,0.03,0.001\n");
    const FactorSeries fs = parse_factors_csv(f);
    CHECK(fs.mkt_rf(Month(2000, 1)) == -0.01);
    CHECK(fs.column("smb")[1] == 0.001);
    std::istringstream no_mkt("date,smb\n2000-01,0.1\n");
    CHECK_THROWS_AS(parse_factors_csv(no_mkt), DataError);
    std::istringstream unknown("date,mkt_rf,xyz\n2000-01,0.1,0.2\n");
    CHECK_THROWS_AS(parse_factors_csv(unknown), DataError);

    std::istringstream r("date,rf\n2000-01,0.003\n2000-02,0.004\n");
    const RiskFreeSeries rf = parse_riskfree_csv(r);
    CHECK(rf.at(Month(2000, 2)) == 0.004);
    CHECK_FALSE(rf.covers(Month(2000, 3)));
    std::istringstream gap("date,rf\n2000-01,0.003\n2000-03,0.004\n");
    CHECK_THROWS_AS(parse_riskfree_csv(gap), DataError);
}

TEST_CASE("csv round trip is exact") {
    const SyntheticData d = generate_synthetic(SyntheticSpec{});
    std::ostringstream a, b, c;
    write_returns_csv(a, d.returns);
    write_riskfree_csv(b, d.riskfree);
    write_factors_csv(c, d.factors);
    std::istringstream ia(a.str()), ib(b.str()), ic(c.str());
    CHECK(parse_returns_csv(ia) == d.returns);
    const RiskFreeSeries rf = parse_riskfree_csv(ib);
    CHECK(rf.rf() == d.riskfree.rf());
    CHECK(parse_factors_csv(ic).column("mkt_rf") == d.factors.column("mkt_rf"));
    CHECK(format_decimal(0.1) == "0.1");
    CHECK(std::stod(format_decimal(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("excess returns subtract rf and keep gaps") {
    Eigen::MatrixXd v(2, 2);
    v << 0.05, kNaN, 0.01, 0.02;
    const ReturnsPanel p(months(Month(2000, 1), 2), {"A", "B"}, v);
    const RiskFreeSeries rf(months(Month(2000, 1), 2), {0.01, 0.002});
    const ReturnsPanel x = excess_returns(p, rf);
    CHECK(x.values()(0, 0) == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(x.is_missing(0, 1));
    CHECK(x.values()(1, 1) == doctest::Approx(0.018).epsilon(1e-15));
    const RiskFreeSeries short_rf(months(Month(2000, 1), 1), {0.01});
    CHECK_THROWS_AS(excess_returns(p, short_rf), DataError);
}

TEST_CASE("window selects rows and drops incomplete assets") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Constant(8, 3, 0.01);
    for (int t = 0; t < 8; ++t) v(t, 0) = 0.001 * t;
    v(6, 2) = kNaN;  // inside holding
    const ReturnsPanel p(months(Month(2000, 1), 8), {"A", "B", "C"}, v);
    const WindowedPanels w = window(p, {Month(2000, 5), 4, 3});
    CHECK(w.lookback.rows() == 4);
    CHECK(w.holding.rows() == 3);
    CHECK(w.lookback.dates().front() == Month(2000, 1));
    CHECK(w.holding.dates().front() == Month(2000, 5));
    CHECK(w.lookback.assets() == std::vector<std::string>{"A", "B"});
    CHECK(w.holding.values()(0, 0) == 0.004);

    CHECK_THROWS_AS(window(p, {Month(2000, 3), 4, 3}), DataError);  // look-back before panel
    CHECK_THROWS_AS(window(p, {Month(2000, 7), 4, 3}), DataError);  // holding past panel
    CHECK_THROWS_AS(window(p, {Month(2000, 5), 0, 3}), ValidationError);

    const ReturnsPanel lb = lookback_window(p, Month(2000, 9), 4);
    CHECK(lb.rows() == 4);
    CHECK(lb.assets() == std::vector<std::string>{"A", "B"});
}

TEST_CASE("synthetic generator is deterministic and sector-structured") {
    SyntheticSpec spec;
    spec.n_months = 240;
    const SyntheticData a = generate_synthetic(spec);
    const SyntheticData b = generate_synthetic(spec);
    CHECK(a.returns == b.returns);
    spec.seed = 43;
    CHECK_FALSE(generate_synthetic(spec).returns == a.returns);

    CHECK(a.returns.cols() == 12);
    CHECK(a.returns.assets().front() == "S1A01");
    CHECK_FALSE(a.returns.has_missing());
    CHECK(a.riskfree.at(Month(2000, 1)) == 0.003);

    // Average intra-sector correlation well above inter-sector.
    const Eigen::MatrixXd& v = a.returns.values();
    double intra = 0, inter = 0;
    int ni = 0, nx = 0;
    for (int i = 0; i < 12; ++i) {
        for (int j = i + 1; j < 12; ++j) {
            const double c = sample_corr(v.col(i), v.col(j));
            if (i % 3 == j % 3) intra += c, ++ni;
            else inter += c, ++nx;
        }
    }
    CHECK(intra / ni > inter / nx + 0.1);

    SyntheticSpec bad;
    bad.n_sectors = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = SyntheticSpec{};
    bad.n_sectors = 13;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}
