#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hrplab/estimation.hpp"
#include "hrplab/hcluster.hpp"
#include "hrplab/market_data.hpp"

namespace hrplab {

enum class Method { hrp, gmv, tangency, equal_weight };

std::string to_string(Method m);
Method parse_method(const std::string& text);  // accepts "equal" as an alias

enum class SideRule { all_long, momentum_sign, explicit_map };

std::string to_string(SideRule r);

/// Signed per-asset allocation at unit gross exposure.
class WeightVector {
public:
    WeightVector(std::vector<std::string> assets, Eigen::VectorXd weights, Method method);

    const std::vector<std::string>& assets() const { return assets_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    Method method() const { return method_; }

    double gross_exposure() const { return weights_.cwiseAbs().sum(); }
    double net_exposure() const { return weights_.sum(); }

    /// +1 for non-negative weights, -1 otherwise.
    std::vector<int> signs() const;

private:
    std::vector<std::string> assets_;
    Eigen::VectorXd weights_;
    Method method_;
};

class SideAssignment {
public:
    SideAssignment(std::vector<std::string> assets, std::vector<int> sides, SideRule rule);

    const std::vector<std::string>& assets() const { return assets_; }
    const std::vector<int>& sides() const { return sides_; }
    SideRule rule() const { return rule_; }

private:
    std::vector<std::string> assets_;
    std::vector<int> sides_;
    SideRule rule_;
};

/// Variance of the inverse-variance portfolio over `members`.
double cluster_variance(const CovarianceEstimate& cov, const std::vector<int>& members);

/// Top-down bisection of the seriated order. Each list of length n splits
/// into its first floor(n/2) items and the remainder; the left half is scaled
/// by 1 - V_L / (V_L + V_R) and the right half by the complement.
WeightVector recursive_bisection(const CovarianceEstimate& cov, const Seriation& order);

/// Rules: all_long -> +1; momentum_sign -> sign of the compounded look-back
/// return (zero counts as long); explicit_map -> looked up in `explicit_sides`.
SideAssignment assign_sides(const ReturnsPanel& lookback_excess, SideRule rule,
                            const std::map<std::string, int>& explicit_sides = {});

/// w'_i = side_i * w_i on a long-only, fully invested input.
WeightVector apply_sides(const WeightVector& w, const SideAssignment& sides);

/// Closed-form Markowitz result. `raw` sums to one and may carry any gross
/// exposure; `weights` is the same direction rescaled to unit gross exposure.
struct MarkowitzResult {
    Eigen::VectorXd raw;
    WeightVector weights;
};

/// Reciprocal 2-norm condition number below which a covariance is treated as singular.
inline constexpr double kMinReciprocalCondition = 1e-12;

MarkowitzResult markowitz_gmv(const CovarianceEstimate& cov);
MarkowitzResult markowitz_tangency(const CovarianceEstimate& cov, const Eigen::VectorXd& mean_excess);

WeightVector equal_weight(const std::vector<std::string>& universe);

/// Parses `asset,side` rows (header `asset,side`).
std::map<std::string, int> load_sides_csv(const std::string& path);

}  // namespace hrplab
