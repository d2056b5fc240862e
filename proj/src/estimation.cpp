#include "hrplab/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "hrplab/error.hpp"

namespace hrplab {

namespace {

constexpr double kSymmetryTol = 1e-12;

void check_square(const std::vector<std::string>& assets, const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols()) throw ValidationError(std::string(what) + ": matrix is not square");
    if (m.rows() != static_cast<Eigen::Index>(assets.size())) {
        throw ValidationError(std::string(what) + ": asset list does not match matrix dimension");
    }
    if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite entry");
}

// Exact symmetrization after a relative asymmetry check.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
        throw ValidationError(std::string(what) + ": matrix is not symmetric");
    }
    Eigen::MatrixXd s = 0.5 * (m + m.transpose());
    return s;
}

}  // namespace

CovarianceEstimate::CovarianceEstimate(std::vector<std::string> assets, Eigen::MatrixXd matrix, int lookback_months)
    : assets_(std::move(assets)), lookback_months_(lookback_months) {
    check_square(assets_, matrix, "covariance");
    if (matrix.rows() < 2) throw ValidationError("covariance: need at least 2 assets");
    matrix_ = symmetrized(matrix, "covariance");
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
        if (!(matrix_(i, i) > 0.0)) {
            throw NumericalError("covariance: non-positive variance for asset '" + assets_[static_cast<std::size_t>(i)] + "'");
        }
    }
}

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> assets, Eigen::MatrixXd matrix)
    : assets_(std::move(assets)) {
    check_square(assets_, matrix, "correlation");
    matrix_ = symmetrized(matrix, "correlation");
    for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
        if (std::abs(matrix_(i, i) - 1.0) > kSymmetryTol) throw ValidationError("correlation: diagonal must be 1");
        matrix_(i, i) = 1.0;
    }
    if (matrix_.maxCoeff() > 1.0 || matrix_.minCoeff() < -1.0) {
        throw ValidationError("correlation: entries must lie in [-1, 1]");
    }
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> assets, Eigen::MatrixXd matrix) : assets_(std::move(assets)) {
    check_square(assets_, matrix, "distance");
    matrix_ = symmetrized(matrix, "distance");
    if (matrix_.diagonal().cwiseAbs().maxCoeff() != 0.0) throw ValidationError("distance: diagonal must be zero");
    if (matrix_.size() > 0 && (matrix_.minCoeff() < 0.0 || matrix_.maxCoeff() > 1.0)) {
        throw ValidationError("distance: entries must lie in [0, 1]");
    }
}

CovarianceEstimate sample_covariance(const ReturnsPanel& panel) {
    if (panel.has_missing()) throw DataError("sample covariance: panel has missing cells");
    const Eigen::Index t = panel.rows();
    if (t < 2) throw DataError("sample covariance: need at least 2 observations, got " + std::to_string(t));
    if (panel.cols() < 2) throw DataError("sample covariance: need at least 2 assets");

    const Eigen::RowVectorXd mean = panel.values().colwise().mean();
    const Eigen::MatrixXd centered = panel.values().rowwise() - mean;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(t - 1);
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        if (!(cov(i, i) > 0.0)) {
            throw DataError("sample covariance: zero variance for asset '" + panel.assets()[static_cast<std::size_t>(i)] +
                            "'");
        }
    }
    cov = 0.5 * (cov + cov.transpose()).eval();
    return CovarianceEstimate(panel.assets(), std::move(cov), static_cast<int>(t));
}

CorrelationMatrix correlation(const CovarianceEstimate& cov) {
    const Eigen::VectorXd inv_sd = cov.matrix().diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd rho = inv_sd.asDiagonal() * cov.matrix() * inv_sd.asDiagonal();
    rho = rho.cwiseMax(-1.0).cwiseMin(1.0);
    rho.diagonal().setOnes();
    return CorrelationMatrix(cov.assets(), std::move(rho));
}

CovarianceEstimate shrink(const CovarianceEstimate& cov, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw ValidationError("shrinkage delta must lie in [0, 1], got " + format_decimal(delta));
    }
    if (delta == 0.0) return cov;
    const auto n = cov.size();
    const double target = cov.matrix().trace() / static_cast<double>(n);
    Eigen::MatrixXd out = (1.0 - delta) * cov.matrix();
    out.diagonal().array() += delta * target;
    return CovarianceEstimate(cov.assets(), std::move(out), cov.lookback_months());
}

DistanceMatrix distance_matrix(const CorrelationMatrix& corr) {
    Eigen::MatrixXd d = (0.5 * (1.0 - corr.matrix().array())).max(0.0).sqrt().matrix();
    d.diagonal().setZero();
    return DistanceMatrix(corr.assets(), std::move(d));
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& assets, const Eigen::MatrixXd& matrix) {
    for (const auto& a : assets) out << ',' << a;
    out << '\n';
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        out << assets[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) out << ',' << format_decimal(matrix(i, j));
        out << '\n';
    }
}

LabeledMatrix read_matrix_csv(std::istream& in, const std::string& source) {
    csv::Lines lines{in};
    std::string line;
    if (!lines.next(line)) throw DataError(source + ": empty file");
    const auto header = csv::split_commas(line);
    if (header.size() < 2 || !header.front().empty()) {
        throw DataError(csv::location(source, lines.line_no) + ": malformed matrix header (expected ',<id>,...')");
    }
    LabeledMatrix out;
    std::set<std::string> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty() || !seen.emplace(header[c]).second) {
            throw DataError(csv::location(source, lines.line_no) + ": empty or duplicate asset id in header");
        }
        out.assets.emplace_back(header[c]);
    }
    const auto n = static_cast<Eigen::Index>(out.assets.size());
    out.matrix.resize(n, n);
    Eigen::Index row = 0;
    while (lines.next(line)) {
        const auto fields = csv::split_commas(line);
        if (row >= n || fields.size() != header.size()) {
            throw DataError(csv::location(source, lines.line_no) + ": unexpected row shape");
        }
        if (fields[0] != out.assets[static_cast<std::size_t>(row)]) {
            throw DataError(csv::location(source, lines.line_no) + ": row label '" + std::string(fields[0]) +
                            "' does not match column order");
        }
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = 0.0;
            if (!csv::parse_double(fields[c], v)) {
                throw DataError(csv::location(source, lines.line_no) + ": unparseable cell '" + std::string(fields[c]) +
                                "'");
            }
            out.matrix(row, static_cast<Eigen::Index>(c - 1)) = v;
        }
        ++row;
    }
    if (row != n) throw DataError(source + ": expected " + std::to_string(n) + " matrix rows");
    return out;
}

}  // namespace hrplab
