#include "hrplab/hcluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <json.hpp>

#include "hrplab/error.hpp"

namespace hrplab {

LinkageTree::LinkageTree(int n_leaves, std::vector<Merge> merges) : n_leaves_(n_leaves), merges_(std::move(merges)) {
    if (n_leaves_ < 2) throw ValidationError("linkage tree: need at least 2 leaves");
    if (merges_.size() != static_cast<std::size_t>(n_leaves_ - 1)) {
        throw ValidationError("linkage tree: expected " + std::to_string(n_leaves_ - 1) + " merges, got " +
                              std::to_string(merges_.size()));
    }
    std::vector<bool> used(static_cast<std::size_t>(2 * n_leaves_ - 1), false);
    double previous = 0.0;
    for (std::size_t k = 0; k < merges_.size(); ++k) {
        const Merge& m = merges_[k];
        const int created = n_leaves_ + static_cast<int>(k);
        if (m.node != created) {
            throw ValidationError("linkage tree: merge " + std::to_string(k) + " must create node " +
                                  std::to_string(created));
        }
        for (int child : {m.left, m.right}) {
            if (child < 0 || child >= created) {
                throw ValidationError("linkage tree: merge " + std::to_string(k) + " references unknown node " +
                                      std::to_string(child));
            }
            if (used[static_cast<std::size_t>(child)]) {
                throw ValidationError("linkage tree: node " + std::to_string(child) + " merged twice");
            }
            used[static_cast<std::size_t>(child)] = true;
        }
        if (!std::isfinite(m.distance) || m.distance < 0.0) {
            throw ValidationError("linkage tree: merge distance must be finite and non-negative");
        }
        if (m.distance < previous) throw ValidationError("linkage tree: merge distances must be non-decreasing");
        previous = m.distance;
    }
}

Seriation::Seriation(std::vector<int> order) : order_(std::move(order)) {
    std::vector<bool> seen(order_.size(), false);
    for (int i : order_) {
        if (i < 0 || static_cast<std::size_t>(i) >= order_.size() || seen[static_cast<std::size_t>(i)]) {
            throw ValidationError("seriation is not a permutation");
        }
        seen[static_cast<std::size_t>(i)] = true;
    }
}

Seriation Seriation::inverse() const {
    std::vector<int> inv(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) inv[static_cast<std::size_t>(order_[k])] = static_cast<int>(k);
    return Seriation(std::move(inv));
}

LinkageTree single_linkage(const DistanceMatrix& dist) {
    const auto n = static_cast<int>(dist.size());
    if (n < 2) throw ValidationError("single linkage: need at least 2 assets");

    // Slot i starts as leaf i; a merge reuses the left slot and retires the right.
    Eigen::MatrixXd d = dist.matrix();
    std::vector<int> node(static_cast<std::size_t>(n));
    std::vector<int> min_leaf(static_cast<std::size_t>(n));
    std::vector<bool> active(static_cast<std::size_t>(n), true);
    for (int i = 0; i < n; ++i) node[i] = min_leaf[i] = i;

    std::vector<Merge> merges;
    merges.reserve(static_cast<std::size_t>(n - 1));
    for (int step = 0; step < n - 1; ++step) {
        int best_a = -1;
        int best_b = -1;
        auto best = std::make_tuple(std::numeric_limits<double>::infinity(), n, n);
        for (int a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (int b = a + 1; b < n; ++b) {
                if (!active[b]) continue;
                const auto key = std::make_tuple(d(a, b), std::min(min_leaf[a], min_leaf[b]),
                                                 std::max(min_leaf[a], min_leaf[b]));
                if (best_a < 0 || key < best) {
                    best = key;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        int left = best_a;
        int right = best_b;
        if (min_leaf[right] < min_leaf[left]) std::swap(left, right);

        merges.push_back(Merge{node[left], node[right], std::get<0>(best), n + step});

        for (int c = 0; c < n; ++c) {
            if (!active[c] || c == left || c == right) continue;
            d(left, c) = d(c, left) = std::min(d(left, c), d(right, c));
        }
        node[left] = n + step;
        min_leaf[left] = std::min(min_leaf[left], min_leaf[right]);
        active[right] = false;
    }
    return LinkageTree(n, std::move(merges));
}

Seriation quasi_diagonalize(const LinkageTree& tree) {
    const int n = tree.n_leaves();
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<int> stack{tree.root()};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (id < n) {
            order.push_back(id);
            continue;
        }
        const Merge& m = tree.merges()[static_cast<std::size_t>(id - n)];
        stack.push_back(m.right);
        stack.push_back(m.left);
    }
    return Seriation(std::move(order));
}

namespace {

template <typename Result, typename Input>
Result reorder_impl(const Input& in, const Seriation& s, auto&&... extra) {
    const auto n = in.size();
    if (static_cast<Eigen::Index>(s.size()) != n) {
        throw ValidationError("reorder: permutation length " + std::to_string(s.size()) +
                              " does not match matrix dimension " + std::to_string(n));
    }
    Eigen::MatrixXd out(n, n);
    std::vector<std::string> assets(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int src_i = s.order()[static_cast<std::size_t>(i)];
        assets[static_cast<std::size_t>(i)] = in.assets()[static_cast<std::size_t>(src_i)];
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = in.matrix()(src_i, s.order()[static_cast<std::size_t>(j)]);
    }
    return Result(std::move(assets), std::move(out), extra...);
}

}  // namespace

CovarianceEstimate reorder(const CovarianceEstimate& cov, const Seriation& s) {
    return reorder_impl<CovarianceEstimate>(cov, s, cov.lookback_months());
}

CorrelationMatrix reorder(const CorrelationMatrix& corr, const Seriation& s) {
    return reorder_impl<CorrelationMatrix>(corr, s);
}

std::string tree_to_json(const LinkageTree& tree, const std::vector<std::string>& labels) {
    if (labels.size() != static_cast<std::size_t>(tree.n_leaves())) {
        throw ValidationError("tree export: label count does not match leaf count");
    }
    nlohmann::ordered_json j;
    j["n_leaves"] = tree.n_leaves();
    j["labels"] = labels;
    auto merges = nlohmann::ordered_json::array();
    for (const auto& m : tree.merges()) merges.push_back({m.left, m.right, m.distance});
    j["merges"] = std::move(merges);
    return j.dump(2);
}

LabeledTree tree_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        const int n = j.at("n_leaves").get<int>();
        auto labels = j.at("labels").get<std::vector<std::string>>();
        std::vector<Merge> merges;
        int k = 0;
        for (const auto& row : j.at("merges")) {
            if (!row.is_array() || row.size() != 3) throw DataError("tree JSON: each merge must be [left, right, distance]");
            merges.push_back(Merge{row[0].get<int>(), row[1].get<int>(), row[2].get<double>(), n + k++});
        }
        if (labels.size() != static_cast<std::size_t>(n)) throw DataError("tree JSON: label count does not match n_leaves");
        return LabeledTree{LinkageTree(n, std::move(merges)), std::move(labels)};
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("tree JSON: ") + e.what());
    } catch (const ValidationError& e) {
        throw DataError(e.what());
    }
}

}  // namespace hrplab
