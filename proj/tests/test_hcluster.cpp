#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "hrplab/error.hpp"
#include "hrplab/hcluster.hpp"
#include "hrplab/rng.hpp"
#include "oracles.hpp"

using namespace hrplab;

namespace {

DistanceMatrix dist(const Eigen::MatrixXd& d) { return DistanceMatrix(oracle::labels(static_cast<int>(d.rows())), d); }

Eigen::MatrixXd random_distances(Rng& rng, int n) {
    const Eigen::MatrixXd cov = oracle::random_spd(rng, n);
    const Eigen::VectorXd s = cov.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd rho = s.asDiagonal() * cov * s.asDiagonal();
    Eigen::MatrixXd d = ((1.0 - rho.array()) * 0.5).max(0.0).sqrt().matrix();
    d.diagonal().setZero();
    return 0.5 * (d + d.transpose());
}

bool sectors_contiguous(const std::vector<int>& order, int k) {
    for (int s = 0; s < k; ++s) {
        std::vector<int> pos;
        for (std::size_t p = 0; p < order.size(); ++p) {
            if (order[p] % k == s) pos.push_back(static_cast<int>(p));
        }
        if (pos.back() - pos.front() + 1 != static_cast<int>(pos.size())) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("six-asset example merge sequence and seriation") {
    const LinkageTree tree = single_linkage(dist(oracle::fig1_distances()));
    const std::vector<Merge> expected{
        {0, 1, 0.10, 6}, {4, 5, 0.20, 7}, {3, 7, 0.30, 8}, {2, 8, 0.40, 9}, {6, 9, 0.50, 10}};
    CHECK(tree.merges() == expected);
    CHECK(tree.root() == 10);
    CHECK(quasi_diagonalize(tree).order() == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("two leaves") {
    Eigen::MatrixXd d(2, 2);
    d << 0, 0.3, 0.3, 0;
    const LinkageTree tree = single_linkage(dist(d));
    CHECK(tree.merges() == std::vector<Merge>{{0, 1, 0.3, 2}});
    CHECK(quasi_diagonalize(tree).order() == std::vector<int>{0, 1});
}

TEST_CASE("all-equal distances chain by lowest index") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(4, 4, 0.5);
    d.diagonal().setZero();
    const LinkageTree tree = single_linkage(dist(d));
    CHECK(tree.merges() == std::vector<Merge>{{0, 1, 0.5, 4}, {4, 2, 0.5, 5}, {5, 3, 0.5, 6}});
    CHECK(quasi_diagonalize(tree).order() == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("single linkage matches brute-force leaf-set oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 12;
        const Eigen::MatrixXd d = random_distances(rng, n);
        const LinkageTree tree = single_linkage(dist(d));
        const auto expected = oracle::brute_single_linkage(d);
        REQUIRE(tree.merges().size() == expected.size());
        for (std::size_t k = 0; k < expected.size(); ++k) {
            CHECK(tree.merges()[k].left == expected[k].left);
            CHECK(tree.merges()[k].right == expected[k].right);
            CHECK(tree.merges()[k].distance == expected[k].distance);
        }
        std::vector<int> leaves;
        oracle::expand(expected, n, 2 * n - 2, leaves);
        CHECK(quasi_diagonalize(tree).order() == leaves);
    }
}

TEST_CASE("merge heights are monotone and seriation is a permutation") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 3 + trial % 20;
        const LinkageTree tree = single_linkage(dist(random_distances(rng, n)));
        for (std::size_t k = 1; k < tree.merges().size(); ++k) {
            CHECK(tree.merges()[k].distance >= tree.merges()[k - 1].distance);
        }
        std::vector<int> order = quasi_diagonalize(tree).order();
        std::sort(order.begin(), order.end());
        std::vector<int> iota(static_cast<std::size_t>(n));
        std::iota(iota.begin(), iota.end(), 0);
        CHECK(order == iota);
    }
}

TEST_CASE("merge heights are invariant to relabeling the assets") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 8;
        const Eigen::MatrixXd d = random_distances(rng, n);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[static_cast<int>(rng.uniform() * (i + 1))]);
        Eigen::MatrixXd pd(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) pd(i, j) = d(perm[i], perm[j]);
        }
        const LinkageTree a = single_linkage(dist(d));
        const LinkageTree b = single_linkage(dist(pd));
        for (int k = 0; k < n - 1; ++k) CHECK(a.merges()[k].distance == b.merges()[k].distance);
    }
}

TEST_CASE("sector blocks are recovered and concentrated on the diagonal") {
    int contiguous = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SyntheticSpec spec;
        spec.n_months = 120;
        spec.seed = seed;
        spec.sector_vol = 0.05;
        spec.idio_vol = 0.02;
        spec.market_vol = 0.04;
        const auto data = generate_synthetic(spec);
        const auto cov = sample_covariance(data.returns);
        const auto rho = correlation(cov);
        const Seriation s = quasi_diagonalize(single_linkage(distance_matrix(rho)));
        if (sectors_contiguous(s.order(), spec.n_sectors)) ++contiguous;

        // Mean |rho| within a band of width 3 around the diagonal increases.
        auto band = [](const Eigen::MatrixXd& m) {
            double sum = 0;
            int cnt = 0;
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                for (Eigen::Index j = 0; j < m.cols(); ++j) {
                    if (i != j && std::abs(i - j) <= 3) sum += std::abs(m(i, j)), ++cnt;
                }
            }
            return sum / cnt;
        };
        CHECK(band(reorder(rho, s).matrix()) > band(rho.matrix()));
    }
    CHECK(contiguous >= 19);
}

TEST_CASE("reorder permutes rows and columns together") {
    Eigen::MatrixXd m(3, 3);
    m << 1, 0.1, 0.2, 0.1, 2, 0.3, 0.2, 0.3, 3;
    const CovarianceEstimate cov({"A", "B", "C"}, m);
    const Seriation s({2, 0, 1});
    const auto r = reorder(cov, s);
    CHECK(r.assets() == std::vector<std::string>{"C", "A", "B"});
    CHECK(r.matrix()(0, 0) == 3);
    CHECK(r.matrix()(0, 1) == 0.2);
    CHECK(r.matrix()(1, 2) == 0.1);
    CHECK(s.inverse().order() == std::vector<int>{1, 2, 0});
    CHECK_THROWS_AS(Seriation({0, 0, 1}), ValidationError);
}

TEST_CASE("linkage tree validation and json round trip") {
    CHECK_THROWS_AS(LinkageTree(3, {{0, 1, 0.2, 3}}), ValidationError);
    CHECK_THROWS_AS(LinkageTree(3, {{0, 1, 0.2, 3}, {0, 2, 0.3, 4}}), ValidationError);
    CHECK_THROWS_AS(LinkageTree(3, {{0, 1, 0.3, 3}, {3, 2, 0.2, 4}}), ValidationError);
    CHECK_THROWS_AS(LinkageTree(3, {{0, 1, -0.1, 3}, {3, 2, 0.2, 4}}), ValidationError);

    const LinkageTree tree = single_linkage(dist(oracle::fig1_distances()));
    const std::string text = tree_to_json(tree, oracle::labels(6));
    const LabeledTree back = tree_from_json(text);
    CHECK(back.tree == tree);
    CHECK(back.labels == oracle::labels(6));
    CHECK_THROWS_AS(tree_from_json("{\"n_leaves\": 2}"), DataError);
}
