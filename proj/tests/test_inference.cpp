#include "mmfit/inference.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace mmfit;

namespace {

struct Planted {
    Matrix z;
    std::vector<int> labels;
};

// K Gaussian blobs with centers 10*sigma*sqrt(2) apart (orthogonal axes).
Planted planted_blobs(int k, int per_cluster, int d, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    Planted out;
    out.z.resize(k * per_cluster, d);
    for (int c = 0; c < k; ++c) {
        Vector center = Vector::Zero(d);
        center(c % d) = 10.0 * sigma * (1.0 + c / d);
        for (int i = 0; i < per_cluster; ++i) {
            const Eigen::Index row = c * per_cluster + i;
            for (Eigen::Index j = 0; j < d; ++j) out.z(row, j) = center(j) + g(rng);
            out.labels.push_back(c);
        }
    }
    return out;
}

// Exhaustive oracle: pad the contingency to square and try every permutation.
double error_rate_bruteforce(std::span<const int> pred, std::span<const int> truth) {
    int kp = 0, kt = 0;
    for (int p : pred) kp = std::max(kp, p + 1);
    for (int t : truth) kt = std::max(kt, t + 1);
    const int n = std::max(kp, kt);
    Matrix table = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < pred.size(); ++i) table(pred[i], truth[i]) += 1.0;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
        double matched = 0.0;
        for (int i = 0; i < n; ++i) matched += table(i, perm[static_cast<std::size_t>(i)]);
        best = std::max(best, matched);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return 1.0 - best / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("kmeans: K=1 gives the global mean and total scatter") {
    Rng rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix z(20, 3);
    for (Eigen::Index i = 0; i < 20; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) z(i, j) = g(rng);
    }
    const ClusterResult result = kmeans(z, 1, 5, 0);
    const Eigen::RowVectorXd mean = z.colwise().mean();
    CHECK((result.centers.row(0) - mean).norm() < 1e-12);
    double scatter = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i) scatter += (z.row(i) - mean).squaredNorm();
    CHECK(result.residual == doctest::Approx(scatter));
}

TEST_CASE("kmeans: K=N drives the residual to zero") {
    Rng rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix z(8, 2);
    for (Eigen::Index i = 0; i < 8; ++i) {
        z(i, 0) = u(rng);
        z(i, 1) = u(rng);
    }
    const ClusterResult result = kmeans(z, 8, 5, 3);
    CHECK(result.residual == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kmeans: recovers well-separated planted blobs exactly") {
    const Planted planted = planted_blobs(3, 30, 5, 0.05, 7);
    const ClusterResult result = kmeans(planted.z, 3, 10, 11);
    CHECK(error_rate(result.assignments, planted.labels) == 0.0);
}

TEST_CASE("kmeans: deterministic and error cases") {
    const Planted planted = planted_blobs(3, 10, 4, 0.05, 9);
    const ClusterResult a = kmeans(planted.z, 3, 10, 5);
    const ClusterResult b = kmeans(planted.z, 3, 10, 5);
    CHECK(a.assignments == b.assignments);
    CHECK(a.residual == b.residual);

    CHECK_THROWS_AS(kmeans(planted.z, 31, 1, 0), TooManyClusters);
    CHECK_THROWS_AS(kmeans(planted.z, 0, 1, 0), InvalidSpec);
}

TEST_CASE("kmeans: residual never increases across Lloyd iterations") {
    // Truncating the same seeded restart at m iterations exposes the
    // per-iteration residuals.
    Rng rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix z(60, 3);
    for (Eigen::Index i = 0; i < 60; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) z(i, j) = u(rng);
    }
    double previous = std::numeric_limits<double>::infinity();
    for (int iters = 1; iters <= 12; ++iters) {
        const double r = kmeans(z, 4, 1, 42, iters).residual;
        CHECK(r <= previous + 1e-12);
        previous = r;
    }
}

TEST_CASE("residual_curve: planted blobs show the elbow") {
    const Planted planted = planted_blobs(3, 40, 5, 0.05, 21);
    const ResidualCurve curve = residual_curve(planted.z, 1, 6, 10, 5);
    CHECK(curve.values.size() == 6);
    CHECK(curve.at(3) < 0.2 * curve.at(2));   // sharp drop at the true K
    CHECK(curve.at(4) <= curve.at(3));
    CHECK(curve.at(4) > 0.5 * curve.at(3));   // only marginal gains past it
}

TEST_CASE("residual_curve: identical rows give zero residuals") {
    Matrix z = Matrix::Ones(10, 3);
    const ResidualCurve curve = residual_curve(z, 1, 4, 3, 1);
    for (double r : curve.values) CHECK(r == doctest::Approx(0.0));
}

TEST_CASE("select_k_sod: hand curve and tie-break") {
    ResidualCurve curve;
    curve.kmin = 1;
    curve.values = {10.0, 2.0, 1.8, 1.7};
    CHECK(select_k_sod(curve) == 2);  // second differences: 7.8 vs 0.1

    ResidualCurve linear;
    linear.kmin = 1;
    linear.values = {5.0, 4.0, 3.0, 2.0, 1.0};
    CHECK(select_k_sod(linear) == 2);  // all zero: smallest interior K

    ResidualCurve too_short;
    too_short.kmin = 1;
    too_short.values = {2.0, 1.0};
    CHECK_THROWS_AS(select_k_sod(too_short), CurveTooShort);
}

TEST_CASE("select_k_sod: planted blobs over seeds") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Planted planted = planted_blobs(3, 40, 5, 0.05, 100 + seed);
        const ResidualCurve curve = residual_curve(planted.z, 1, 8, 10, seed);
        if (select_k_sod(curve) == 3) ++hits;
    }
    CHECK(hits >= 18);
}

TEST_CASE("select_k_silhouette: planted blobs and degenerate cases") {
    const Planted planted = planted_blobs(3, 40, 5, 0.05, 33);
    CHECK(select_k_silhouette(planted.z, 2, 8, 10, 1) == 3);

    // two antipodal singleton clusters: both points are singletons, so the
    // convention s(i) = 0 makes the mean silhouette 0
    Matrix z(2, 2);
    z << 1, 0, -1, 0;
    const std::vector<int> assignments = {0, 1};
    CHECK(mean_silhouette(z, assignments, 2) == doctest::Approx(0.0));

    CHECK_THROWS_AS(select_k_silhouette(planted.z, 2, 1, 5, 0), CurveTooShort);
}

TEST_CASE("mean_silhouette: values stay in [-1, 1]") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix z(24, 3);
        for (Eigen::Index i = 0; i < 24; ++i) {
            for (Eigen::Index j = 0; j < 3; ++j) z(i, j) = u(rng);
        }
        const ClusterResult result = kmeans(z, 4, 5, static_cast<std::uint64_t>(trial));
        const double s = mean_silhouette(z, result.assignments, 4);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("error_rate: relabeling and hand cases") {
    const std::vector<int> a = {1, 1, 0};
    const std::vector<int> b = {0, 0, 1};
    CHECK(error_rate(a, b) == doctest::Approx(0.0));

    const std::vector<int> p = {0, 1, 0, 1};
    const std::vector<int> t = {0, 0, 1, 1};
    CHECK(error_rate(p, t) == doctest::Approx(0.5));

    CHECK(error_rate(t, t) == 0.0);

    const std::vector<int> longer = {0, 1, 0};
    CHECK_THROWS_AS(error_rate(longer, p), LengthMismatch);
}

TEST_CASE("error_rate: agrees with brute-force enumeration") {
    Rng rng(4);
    for (int trial = 0; trial < 60; ++trial) {
        std::uniform_int_distribution<int> uk(1, 5);
        const int kp = uk(rng);
        const int kt = uk(rng);
        std::uniform_int_distribution<int> un(3, 30);
        const int n = un(rng);
        std::vector<int> pred, truth;
        std::uniform_int_distribution<int> up(0, kp - 1);
        std::uniform_int_distribution<int> ut(0, kt - 1);
        for (int i = 0; i < n; ++i) {
            pred.push_back(up(rng));
            truth.push_back(ut(rng));
        }
        CHECK(error_rate(pred, truth) == doctest::Approx(error_rate_bruteforce(pred, truth)));
    }
}

TEST_CASE("error_rate and nmi: symmetric under relabeling either argument") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> u(0, 2);
        std::vector<int> pred, truth;
        for (int i = 0; i < 20; ++i) {
            pred.push_back(u(rng));
            truth.push_back(u(rng));
        }
        std::vector<int> relabel = {2, 0, 1};
        std::vector<int> pred2, truth2;
        for (int p : pred) pred2.push_back(relabel[static_cast<std::size_t>(p)]);
        for (int t : truth) truth2.push_back(relabel[static_cast<std::size_t>(t)]);
        CHECK(error_rate(pred, truth) == doctest::Approx(error_rate(pred2, truth)));
        CHECK(error_rate(pred, truth) == doctest::Approx(error_rate(pred, truth2)));
        CHECK(nmi(pred, truth) == doctest::Approx(nmi(pred2, truth)));
        CHECK(nmi(pred, truth) == doctest::Approx(nmi(pred, truth2)));
    }
}

TEST_CASE("error_rate: zero iff identical up to relabeling") {
    const std::vector<int> truth = {0, 0, 1, 1, 2, 2};
    const std::vector<int> relabeled = {2, 2, 0, 0, 1, 1};
    CHECK(error_rate(relabeled, truth) == 0.0);
    std::vector<int> off = relabeled;
    off[0] = 1;
    CHECK(error_rate(off, truth) > 0.0);
}

TEST_CASE("nmi: reference values") {
    const std::vector<int> a = {0, 0, 1, 1};
    CHECK(nmi(a, a) == doctest::Approx(1.0));

    const std::vector<int> constant = {0, 0, 0, 0};
    CHECK(nmi(constant, a) == doctest::Approx(0.0));

    const std::vector<int> b = {0, 1, 0, 1};
    CHECK(nmi(a, b) == doctest::Approx(0.0));  // independent partitions

    const std::vector<int> c0 = {0, 0, 0};
    CHECK(nmi(c0, c0) == doctest::Approx(1.0));  // both single-cluster
}

TEST_CASE("best-of-restarts residuals are monotone in K on most trials") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int ok = 0, total = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix z(40, 3);
        for (Eigen::Index i = 0; i < 40; ++i) {
            for (Eigen::Index j = 0; j < 3; ++j) z(i, j) = u(rng);
        }
        const ResidualCurve curve =
            residual_curve(z, 1, 6, 10, static_cast<std::uint64_t>(trial));
        for (std::size_t i = 1; i < curve.values.size(); ++i) {
            ++total;
            if (curve.values[i] <= curve.values[i - 1] + 1e-12) ++ok;
        }
    }
    CHECK(static_cast<double>(ok) / total >= 0.95);
}
