#include "mmfit/losses.hpp"

#include <doctest.h>

#include "grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace mmfit;

namespace {

Matrix random_unit_rows(int n, int d, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix z(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) z(i, j) = g(rng);
        z.row(i).normalize();
    }
    return z;
}

std::vector<int> random_labels(int n, int k, Rng& rng) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> u(0, k - 1);
    for (;;) {
        for (int& label : labels) label = u(rng);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int label : labels) ++counts[static_cast<std::size_t>(label)];
        if (std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) {
            return labels;
        }
    }
}

// MIMI is a subgradient at extremal-value ties; keep test inputs away from them.
bool mimi_margins_ok(const Matrix& z, const std::vector<int>& labels) {
    const ClusterStats stats = cluster_stats(z, labels);
    const int k = static_cast<int>(stats.members.size());
    double second_min = std::numeric_limits<double>::infinity();
    for (int m = 0; m < k; ++m) {
        for (int n = m + 1; n < k; ++n) {
            if (m == stats.argmin_m && n == stats.argmin_n) continue;
            second_min =
                std::min(second_min, (stats.means.row(m) - stats.means.row(n)).squaredNorm());
        }
    }
    double second_scatter = -std::numeric_limits<double>::infinity();
    for (int l = 0; l < k; ++l) {
        if (l == stats.argmax_scatter) continue;
        second_scatter = std::max(second_scatter, stats.scatters(l));
    }
    return stats.min_pair_dist2 > 1e-3 && stats.max_scatter > 1e-3 &&
           (k < 3 || second_min - stats.min_pair_dist2 > 1e-3) &&
           (k < 2 || stats.max_scatter - second_scatter > 1e-3);
}

Vector flatten(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

void check_loss_gradient(const LossSpec& spec, const Matrix& z,
                         const std::vector<int>& labels, double h, double tol) {
    const LossResult result = loss_variant(spec, z, labels);
    const auto value_at = [&](const Vector& flat) {
        return loss_variant(spec, unflatten(flat, z.rows(), z.cols()), labels).value;
    };
    const Vector fd = gradcheck::central_difference(value_at, flatten(z), h);
    const auto cmp = gradcheck::compare(flatten(result.grad), fd);
    CHECK(cmp.vec_rel < tol);
    CHECK(cmp.max_elem_rel < 10.0 * tol);
}

}  // namespace

TEST_CASE("affinity_ideal: block structure") {
    const std::vector<int> labels = {0, 0, 1};
    const Matrix a = affinity_ideal(labels, 2);
    Matrix expected(3, 3);
    expected << 1, 1, 0, 1, 1, 0, 0, 0, 1;
    CHECK(a == expected);

    const std::vector<int> distinct = {0, 1, 2};
    CHECK(affinity_ideal(distinct, 3) == Matrix::Identity(3, 3));

    const std::vector<int> same = {1, 1, 1};
    CHECK(affinity_ideal(same, 2) == Matrix::Ones(3, 3));
}

TEST_CASE("loss_l2regression: perfect embedding and hand case") {
    // clusters collapsed onto orthogonal basis vectors: Gram == affinity
    Matrix z(4, 2);
    z << 1, 0, 1, 0, 0, 1, 0, 1;
    const std::vector<int> labels = {0, 0, 1, 1};
    CHECK(loss_l2regression(z, labels).value == doctest::Approx(0.0));

    // N=2, same label, orthogonal embeddings: off-diagonal terms contribute
    // (1-0)^2 each, diagonals 0 -> total 2.
    Matrix z2(2, 2);
    z2 << 1, 0, 0, 1;
    const std::vector<int> same = {0, 0};
    CHECK(loss_l2regression(z2, same).value == doctest::Approx(2.0));
}

TEST_CASE("loss_l2regression: gradient matches finite differences") {
    Rng rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix z = random_unit_rows(8, 3, rng);
        const auto labels = random_labels(8, 3, rng);
        check_loss_gradient({LossKind::L2Regression, 1.0, 1e-8}, z, labels, 1e-6, 1e-6);
    }
}

TEST_CASE("loss_crossentropy: zero inner product costs ln 2 per ordered off-diagonal pair") {
    Matrix z(2, 2);
    z << 1, 0, 0, 1;
    const std::vector<int> same = {0, 0};
    const double value = loss_crossentropy(z, same).value;
    // diagonal pairs have inner product 1: H(1, sigmoid(1)) = softplus(1) - 1
    const double diag = std::log1p(std::exp(1.0)) - 1.0;
    CHECK(value - 2.0 * diag == doctest::Approx(2.0 * std::log(2.0)));
}

TEST_CASE("loss_crossentropy: decreases as same-label pairs align") {
    const std::vector<int> same = {0, 0};
    double previous = std::numeric_limits<double>::infinity();
    for (double theta : {1.5, 1.0, 0.5, 0.1}) {
        Matrix z(2, 2);
        z << 1, 0, std::cos(theta), std::sin(theta);
        const double value = loss_crossentropy(z, same).value;
        CHECK(value < previous);
        previous = value;
    }
}

TEST_CASE("loss_crossentropy: gradient matches finite differences") {
    Rng rng(202);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix z = random_unit_rows(9, 4, rng);
        const auto labels = random_labels(9, 2, rng);
        check_loss_gradient({LossKind::CrossEntropy, 1.0, 1e-8}, z, labels, 1e-6, 1e-6);
    }
}

TEST_CASE("cluster_stats: hand-computed means and scatters") {
    Matrix z(4, 2);
    z << 0.8, 0.6, 0.6, 0.8, -0.8, -0.6, -0.6, -0.8;
    const std::vector<int> labels = {0, 0, 1, 1};
    const ClusterStats stats = cluster_stats(z, labels);
    CHECK(stats.means(0, 0) == doctest::Approx(0.7));
    CHECK(stats.means(0, 1) == doctest::Approx(0.7));
    CHECK(stats.means(1, 0) == doctest::Approx(-0.7));
    CHECK(stats.means(1, 1) == doctest::Approx(-0.7));
    CHECK(stats.scatters(0) == doctest::Approx(0.04));
    CHECK(stats.scatters(1) == doctest::Approx(0.04));
    CHECK(stats.argmin_m == 0);
    CHECK(stats.argmin_n == 1);
    CHECK(stats.min_pair_dist2 == doctest::Approx(3.92));
}

TEST_CASE("cluster_stats: singletons and label permutation") {
    Matrix z(3, 2);
    z << 1, 0, 0, 1, -1, 0;
    const std::vector<int> labels = {0, 1, 2};
    const ClusterStats stats = cluster_stats(z, labels);
    CHECK(stats.scatters.maxCoeff() == 0.0);

    const std::vector<int> permuted = {2, 0, 1};
    const ClusterStats again = cluster_stats(z, permuted);
    CHECK(again.means.row(2) == stats.means.row(0));
    CHECK(again.scatters.sum() == stats.scatters.sum());

    const std::vector<int> empty_cluster = {0, 0, 2};
    CHECK_THROWS_AS(cluster_stats(z, empty_cluster), EmptyCluster);
}

TEST_CASE("loss_mimi: hand-computed values") {
    Matrix z(4, 2);
    z << 0.8, 0.6, 0.6, 0.8, -0.8, -0.6, -0.6, -0.8;
    const std::vector<int> labels = {0, 0, 1, 1};
    const double value = loss_mimi(z, labels, 1.0, 0.0).value;
    CHECK(value == doctest::Approx(-std::log(3.92) + std::log(0.04)));

    // singleton clusters exercise the eps floor on the zero scatter
    Matrix z2(2, 2);
    z2 << 1, 0, 0, 1;
    const std::vector<int> singletons = {0, 1};
    const double v2 = loss_mimi(z2, singletons, 1.0, 1e-6).value;
    CHECK(v2 == doctest::Approx(-std::log(2.0 + 1e-6) + std::log(1e-6)));
}

TEST_CASE("loss_mimi: gradient matches finite differences away from ties") {
    Rng rng(303);
    int done = 0;
    while (done < 10) {
        const Matrix z = random_unit_rows(12, 4, rng);
        const auto labels = random_labels(12, 3, rng);
        if (!mimi_margins_ok(z, labels)) continue;
        check_loss_gradient({LossKind::MIMI, 1.0, 1e-8}, z, labels, 1e-5, 1e-4);
        ++done;
    }
}

TEST_CASE("loss variants: additivity and supervised k-means zero") {
    Rng rng(404);
    const Matrix z = random_unit_rows(10, 3, rng);
    const auto labels = random_labels(10, 3, rng);
    const LossSpec inter{LossKind::MaxInterOnly, 1.0, 1e-8};
    const LossSpec intra{LossKind::MinIntraOnly, 1.0, 1e-8};
    const LossSpec mimi{LossKind::MIMI, 1.0, 1e-8};
    const double sum =
        loss_variant(inter, z, labels).value + loss_variant(intra, z, labels).value;
    CHECK(sum == doctest::Approx(loss_variant(mimi, z, labels).value).epsilon(1e-12));

    // all points already at their cluster mean
    Matrix collapsed(4, 2);
    collapsed << 1, 0, 1, 0, 0, 1, 0, 1;
    const std::vector<int> two = {0, 0, 1, 1};
    CHECK(loss_variant({LossKind::SupervisedKMeans, 1.0, 1e-8}, collapsed, two).value ==
          doctest::Approx(0.0));
}

TEST_CASE("loss variants: gradients match finite differences") {
    Rng rng(505);
    const LossKind kinds[] = {LossKind::MaxInterOnly, LossKind::MinIntraOnly,
                              LossKind::SupervisedKMeans};
    for (LossKind kind : kinds) {
        int done = 0;
        while (done < 5) {
            const Matrix z = random_unit_rows(10, 3, rng);
            const auto labels = random_labels(10, 3, rng);
            if (!mimi_margins_ok(z, labels)) continue;
            check_loss_gradient({kind, 0.7, 1e-8}, z, labels, 1e-5, 1e-4);
            ++done;
        }
    }
}

TEST_CASE("losses: label-permutation invariance is exact") {
    Rng rng(606);
    const LossSpec specs[] = {
        {LossKind::L2Regression, 1.0, 1e-8}, {LossKind::CrossEntropy, 1.0, 1e-8},
        {LossKind::MIMI, 1.0, 1e-8},         {LossKind::MaxInterOnly, 1.0, 1e-8},
        {LossKind::MinIntraOnly, 1.0, 1e-8}, {LossKind::SupervisedKMeans, 1.0, 1e-8},
    };
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 3;
        const Matrix z = random_unit_rows(12, 4, rng);
        const auto labels = random_labels(12, k, rng);
        std::vector<int> relabel(static_cast<std::size_t>(k));
        std::iota(relabel.begin(), relabel.end(), 0);
        std::shuffle(relabel.begin(), relabel.end(), rng);
        std::vector<int> permuted;
        for (int label : labels) permuted.push_back(relabel[static_cast<std::size_t>(label)]);
        for (const LossSpec& spec : specs) {
            CHECK(loss_variant(spec, z, labels).value ==
                  loss_variant(spec, z, permuted).value);
        }
    }
}

TEST_CASE("losses: point-permutation invariance") {
    Rng rng(707);
    const LossSpec specs[] = {
        {LossKind::L2Regression, 1.0, 1e-8}, {LossKind::CrossEntropy, 1.0, 1e-8},
        {LossKind::MIMI, 1.0, 1e-8},         {LossKind::SupervisedKMeans, 1.0, 1e-8},
    };
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix z = random_unit_rows(12, 4, rng);
        const auto labels = random_labels(12, 3, rng);
        std::vector<int> order(12);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Matrix pz(12, 4);
        std::vector<int> plabels(12);
        for (int i = 0; i < 12; ++i) {
            pz.row(i) = z.row(order[static_cast<std::size_t>(i)]);
            plabels[static_cast<std::size_t>(i)] =
                labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        }
        for (const LossSpec& spec : specs) {
            const double a = loss_variant(spec, z, labels).value;
            const double b = loss_variant(spec, pz, plabels).value;
            CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("losses: sign and monotonicity properties") {
    Rng rng(808);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix z = random_unit_rows(10, 3, rng);
        const auto labels = random_labels(10, 2, rng);
        CHECK(loss_l2regression(z, labels).value >= 0.0);
        CHECK(loss_crossentropy(z, labels).value >= 0.0);
    }

    // growing the extremal inter-cluster distance with scatters fixed
    // decreases MIMI
    auto two_cluster_value = [](double separation) {
        Matrix z(4, 2);
        z << 0.0, 0.1, 0.0, -0.1, separation, 0.1, separation, -0.1;
        const std::vector<int> labels = {0, 0, 1, 1};
        return loss_mimi(z, labels, 1.0, 1e-8).value;
    };
    CHECK(two_cluster_value(2.0) < two_cluster_value(1.0));
    CHECK(two_cluster_value(1.0) < two_cluster_value(0.5));
}

TEST_CASE("losses: single-cluster input is rejected for pairwise terms") {
    Matrix z(3, 2);
    z << 1, 0, 0, 1, -1, 0;
    const std::vector<int> one = {0, 0, 0};
    CHECK_THROWS_AS(loss_mimi(z, one, 1.0, 1e-8), InvalidSpec);
    CHECK_THROWS_AS(loss_variant({LossKind::MaxInterOnly, 1.0, 1e-8}, z, one), InvalidSpec);
}
