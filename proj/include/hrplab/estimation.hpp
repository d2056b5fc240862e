#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrplab/market_data.hpp"

namespace hrplab {

/// Symmetric N x N covariance over a named universe (N >= 2, positive
/// diagonal). The stored matrix is exactly symmetric.
class CovarianceEstimate {
public:
    CovarianceEstimate(std::vector<std::string> assets, Eigen::MatrixXd matrix, int lookback_months = 0);

    const std::vector<std::string>& assets() const { return assets_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    int lookback_months() const { return lookback_months_; }
    Eigen::Index size() const { return matrix_.rows(); }

private:
    std::vector<std::string> assets_;
    Eigen::MatrixXd matrix_;
    int lookback_months_;
};

/// Unit-diagonal correlation matrix with entries in [-1, 1].
class CorrelationMatrix {
public:
    CorrelationMatrix(std::vector<std::string> assets, Eigen::MatrixXd matrix);

    const std::vector<std::string>& assets() const { return assets_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index size() const { return matrix_.rows(); }

private:
    std::vector<std::string> assets_;
    Eigen::MatrixXd matrix_;
};

/// Pairwise distances in [0, 1] with an exactly-zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix(std::vector<std::string> assets, Eigen::MatrixXd matrix);

    const std::vector<std::string>& assets() const { return assets_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index size() const { return matrix_.rows(); }

private:
    std::vector<std::string> assets_;
    Eigen::MatrixXd matrix_;
};

/// Unbiased (T - 1) sample covariance of a complete look-back panel.
CovarianceEstimate sample_covariance(const ReturnsPanel& panel);

/// rho_ij = cov_ij / sqrt(cov_ii cov_jj), clamped to [-1, 1].
CorrelationMatrix correlation(const CovarianceEstimate& cov);

/// (1 - delta) * cov + delta * (trace / N) * I, delta in [0, 1].
CovarianceEstimate shrink(const CovarianceEstimate& cov, double delta);

/// d_ij = sqrt((1 - rho_ij) / 2).
DistanceMatrix distance_matrix(const CorrelationMatrix& corr);

// Matrix CSV: header `,<id1>,<id2>,...`, then one row per asset led by its id.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& assets, const Eigen::MatrixXd& matrix);

struct LabeledMatrix {
    std::vector<std::string> assets;
    Eigen::MatrixXd matrix;
};

LabeledMatrix read_matrix_csv(std::istream& in, const std::string& source = "<stream>");

}  // namespace hrplab
