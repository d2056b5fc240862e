#include "hrplab/allocation.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <utility>

#include <Eigen/Eigenvalues>

#include "csv.hpp"
#include "hrplab/error.hpp"

namespace hrplab {

namespace {

constexpr double kGrossTol = 1e-10;
constexpr double kDegenerateTol = 1e-12;

void require_same_universe(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
    if (a != b) throw ValidationError(std::string(what) + ": asset universes differ");
}

// Returns Sigma^-1 * rhs after the conditioning check.
Eigen::VectorXd solve_checked(const CovarianceEstimate& cov, const Eigen::VectorXd& rhs, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.matrix(), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    const double rcond = lo > 0.0 ? lo / hi : 0.0;
    if (!(rcond >= kMinReciprocalCondition)) {
        throw NumericalError(std::string(what) + ": covariance is singular or near-singular (reciprocal condition " +
                             format_decimal(rcond) + "); apply shrinkage");
    }
    return cov.matrix().ldlt().solve(rhs);
}

MarkowitzResult normalized(const CovarianceEstimate& cov, Eigen::VectorXd raw, Method method) {
    Eigen::VectorXd unit_gross = raw / raw.cwiseAbs().sum();
    return MarkowitzResult{std::move(raw), WeightVector(cov.assets(), std::move(unit_gross), method)};
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::hrp: return "hrp";
        case Method::gmv: return "gmv";
        case Method::tangency: return "tangency";
        case Method::equal_weight: return "equal_weight";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    if (text == "hrp") return Method::hrp;
    if (text == "gmv") return Method::gmv;
    if (text == "tangency") return Method::tangency;
    if (text == "equal" || text == "equal_weight") return Method::equal_weight;
    throw ValidationError("unknown method '" + text + "' (expected hrp, gmv, tangency, equal)");
}

std::string to_string(SideRule r) {
    switch (r) {
        case SideRule::all_long: return "all_long";
        case SideRule::momentum_sign: return "momentum_sign";
        case SideRule::explicit_map: return "explicit";
    }
    return "?";
}

WeightVector::WeightVector(std::vector<std::string> assets, Eigen::VectorXd weights, Method method)
    : assets_(std::move(assets)), weights_(std::move(weights)), method_(method) {
    if (weights_.size() != static_cast<Eigen::Index>(assets_.size())) {
        throw ValidationError("weight vector: asset count does not match weight count");
    }
    if (!weights_.allFinite()) throw NumericalError("weight vector: non-finite weight");
    if (std::abs(gross_exposure() - 1.0) > kGrossTol) {
        throw NumericalError("weight vector: gross exposure " + format_decimal(gross_exposure()) + " is not 1");
    }
}

std::vector<int> WeightVector::signs() const {
    std::vector<int> out(static_cast<std::size_t>(weights_.size()));
    for (Eigen::Index i = 0; i < weights_.size(); ++i) out[static_cast<std::size_t>(i)] = weights_(i) < 0.0 ? -1 : 1;
    return out;
}

SideAssignment::SideAssignment(std::vector<std::string> assets, std::vector<int> sides, SideRule rule)
    : assets_(std::move(assets)), sides_(std::move(sides)), rule_(rule) {
    if (assets_.size() != sides_.size()) throw ValidationError("side assignment: asset/side count mismatch");
    for (std::size_t i = 0; i < sides_.size(); ++i) {
        if (sides_[i] != 1 && sides_[i] != -1) {
            throw ValidationError("side assignment: side for '" + assets_[i] + "' must be +1 or -1");
        }
    }
}

double cluster_variance(const CovarianceEstimate& cov, const std::vector<int>& members) {
    if (members.empty()) throw ValidationError("cluster variance: empty member list");
    const auto k = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        const int i = members[static_cast<std::size_t>(a)];
        if (i < 0 || i >= cov.size()) throw ValidationError("cluster variance: member index out of range");
        for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = cov.matrix()(i, members[static_cast<std::size_t>(b)]);
    }
    Eigen::VectorXd u = sub.diagonal().cwiseInverse();
    u /= u.sum();
    return u.dot(sub * u);
}

WeightVector recursive_bisection(const CovarianceEstimate& cov, const Seriation& order) {
    const auto n = static_cast<std::size_t>(cov.size());
    if (order.size() != n) throw ValidationError("recursive bisection: seriation does not match covariance universe");

    Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    std::deque<std::vector<int>> work{order.order()};
    while (!work.empty()) {
        std::vector<int> items = std::move(work.front());
        work.pop_front();
        if (items.size() < 2) continue;
        const auto mid = static_cast<std::ptrdiff_t>(items.size() / 2);
        std::vector<int> left(items.begin(), items.begin() + mid);
        std::vector<int> right(items.begin() + mid, items.end());
        const double v_left = cluster_variance(cov, left);
        const double v_right = cluster_variance(cov, right);
        const double alpha = 1.0 - v_left / (v_left + v_right);
        for (int i : left) w(i) *= alpha;
        for (int i : right) w(i) *= 1.0 - alpha;
        work.push_back(std::move(left));
        work.push_back(std::move(right));
    }
    return WeightVector(cov.assets(), std::move(w), Method::hrp);
}

SideAssignment assign_sides(const ReturnsPanel& lookback_excess, SideRule rule,
                            const std::map<std::string, int>& explicit_sides) {
    const auto& assets = lookback_excess.assets();
    std::vector<int> sides(assets.size(), 1);
    switch (rule) {
        case SideRule::all_long:
            break;
        case SideRule::momentum_sign:
            if (lookback_excess.has_missing()) throw DataError("momentum sides: look-back panel has missing cells");
            for (Eigen::Index c = 0; c < lookback_excess.cols(); ++c) {
                const double growth = (1.0 + lookback_excess.values().col(c).array()).prod() - 1.0;
                sides[static_cast<std::size_t>(c)] = growth >= 0.0 ? 1 : -1;
            }
            break;
        case SideRule::explicit_map:
            for (std::size_t i = 0; i < assets.size(); ++i) {
                auto it = explicit_sides.find(assets[i]);
                if (it == explicit_sides.end()) {
                    throw ValidationError("explicit sides: no side given for asset '" + assets[i] + "'");
                }
                if (it->second != 1 && it->second != -1) {
                    throw ValidationError("explicit sides: side for '" + assets[i] + "' must be +1 or -1");
                }
                sides[i] = it->second;
            }
            break;
    }
    return SideAssignment(assets, std::move(sides), rule);
}

WeightVector apply_sides(const WeightVector& w, const SideAssignment& sides) {
    require_same_universe(w.assets(), sides.assets(), "apply sides");
    if ((w.weights().array() < 0.0).any()) throw ValidationError("apply sides: input weights must be long-only");
    Eigen::VectorXd signed_w = w.weights();
    for (Eigen::Index i = 0; i < signed_w.size(); ++i) signed_w(i) *= sides.sides()[static_cast<std::size_t>(i)];
    return WeightVector(w.assets(), std::move(signed_w), w.method());
}

MarkowitzResult markowitz_gmv(const CovarianceEstimate& cov) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(cov.size());
    Eigen::VectorXd x = solve_checked(cov, ones, "gmv");
    const double norm = x.sum();
    return normalized(cov, x / norm, Method::gmv);
}

MarkowitzResult markowitz_tangency(const CovarianceEstimate& cov, const Eigen::VectorXd& mean_excess) {
    if (mean_excess.size() != cov.size()) throw ValidationError("tangency: mean vector length does not match covariance");
    Eigen::VectorXd x = solve_checked(cov, mean_excess, "tangency");
    const double norm = x.sum();
    if (std::abs(norm) <= kDegenerateTol) {
        throw NumericalError("tangency: 1' inv(Sigma) mu is zero; weights cannot be normalized");
    }
    return normalized(cov, x / norm, Method::tangency);
}

WeightVector equal_weight(const std::vector<std::string>& universe) {
    if (universe.empty()) throw ValidationError("equal weight: empty universe");
    const auto n = static_cast<Eigen::Index>(universe.size());
    return WeightVector(universe, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), Method::equal_weight);
}

std::map<std::string, int> load_sides_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open sides file " + path);
    csv::Lines lines{in};
    std::string line;
    if (!lines.next(line)) throw DataError(path + ": empty sides file");
    const auto header = csv::split_commas(line);
    if (header.size() != 2 || header[0] != "asset" || header[1] != "side") {
        throw DataError(csv::location(path, lines.line_no) + ": sides header must be 'asset,side'");
    }
    std::map<std::string, int> out;
    while (lines.next(line)) {
        const auto f = csv::split_commas(line);
        double v = 0.0;
        if (f.size() != 2 || f[0].empty() || !csv::parse_double(f[1], v) || (v != 1.0 && v != -1.0)) {
            throw ValidationError(csv::location(path, lines.line_no) + ": expected '<asset>,<+1|-1>'");
        }
        if (!out.emplace(std::string(f[0]), static_cast<int>(v)).second) {
            throw ValidationError(csv::location(path, lines.line_no) + ": duplicate asset '" + std::string(f[0]) + "'");
        }
    }
    return out;
}

}  // namespace hrplab
