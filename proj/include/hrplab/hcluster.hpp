#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hrplab/estimation.hpp"

namespace hrplab {

struct Merge {
    int left = 0;
    int right = 0;
    double distance = 0.0;
    int node = 0;  // n_leaves + position in the merge sequence

    friend bool operator==(const Merge&, const Merge&) = default;
};

/// Agglomerative merge tree in the conventional linkage encoding: leaves are
/// 0..N-1, the k-th merge creates node N + k, and the root is 2N - 2.
///
/// The constructor rejects malformed sequences (wrong length, a node used
/// twice or before it exists, negative or decreasing merge distances).
class LinkageTree {
public:
    LinkageTree(int n_leaves, std::vector<Merge> merges);

    int n_leaves() const { return n_leaves_; }
    const std::vector<Merge>& merges() const { return merges_; }
    int root() const { return 2 * n_leaves_ - 2; }

    friend bool operator==(const LinkageTree&, const LinkageTree&) = default;

private:
    int n_leaves_;
    std::vector<Merge> merges_;
};

/// Dendrogram leaf order: a permutation of 0..N-1.
class Seriation {
public:
    explicit Seriation(std::vector<int> order);

    const std::vector<int>& order() const { return order_; }
    std::size_t size() const { return order_.size(); }
    Seriation inverse() const;

    friend bool operator==(const Seriation&, const Seriation&) = default;

private:
    std::vector<int> order_;
};

/// Single-linkage clustering. At each step the globally closest pair of
/// clusters merges; ties go to the pair whose (smaller min-leaf, larger
/// min-leaf) is lexicographically least. The cluster holding the smaller
/// leaf index is recorded as the left child.
LinkageTree single_linkage(const DistanceMatrix& dist);

/// Depth-first leaf order, left child before right.
Seriation quasi_diagonalize(const LinkageTree& tree);

/// Simultaneous row/column permutation; row k of the result is row
/// order[k] of the input.
CovarianceEstimate reorder(const CovarianceEstimate& cov, const Seriation& s);
CorrelationMatrix reorder(const CorrelationMatrix& corr, const Seriation& s);

/// `{n_leaves, labels, merges: [[left, right, distance], ...]}`.
std::string tree_to_json(const LinkageTree& tree, const std::vector<std::string>& labels);

struct LabeledTree {
    LinkageTree tree;
    std::vector<std::string> labels;
};

LabeledTree tree_from_json(const std::string& text);

}  // namespace hrplab
