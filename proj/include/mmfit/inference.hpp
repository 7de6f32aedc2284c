#pragma once

#include "mmfit/common.hpp"

#include <span>
#include <vector>

namespace mmfit {

struct ClusterResult {
    std::vector<int> assignments;  // N, nearest center per point
    Matrix centers;                // K x d
    double residual = 0.0;         // total within-cluster squared distance
    int iterations = 0;
};

struct KMeansOptions {
    int restarts = 10;
    int max_iters = 300;
};

/// Lloyd's algorithm with k-means++ seeding per restart; returns the restart
/// with the lowest residual. Deterministic given the seed. Empty clusters are
/// reseeded at the point currently farthest from its center.
ClusterResult kmeans(const Matrix& z, int k, int restarts, std::uint64_t seed,
                     int max_iters = 300);

struct ResidualCurve {
    int kmin = 1;
    std::vector<double> values;  // r(kmin) .. r(kmax)

    int kmax() const { return kmin + static_cast<int>(values.size()) - 1; }
    double at(int k) const { return values.at(static_cast<std::size_t>(k - kmin)); }
};

ResidualCurve residual_curve(const Matrix& z, int kmin, int kmax, int restarts,
                             std::uint64_t seed, int max_iters = 300);

/// Elbow by the discrete second-order difference r(K-1) + r(K+1) - 2 r(K),
/// maximized over interior K; ties resolve to the smallest K.
int select_k_sod(const ResidualCurve& curve);

/// Mean silhouette coefficient of a given clustering; singleton clusters
/// contribute s(i) = 0.
double mean_silhouette(const Matrix& z, std::span<const int> assignments, int k);

/// K in [max(2, kmin), kmax] maximizing the mean silhouette coefficient.
int select_k_silhouette(const Matrix& z, int kmin, int kmax, int restarts,
                        std::uint64_t seed, int max_iters = 300);

/// Minimal misclassification fraction over injective mappings of predicted
/// cluster ids onto truth ids (optimal assignment on the contingency matrix).
double error_rate(std::span<const int> pred, std::span<const int> truth);

/// I(pred; truth) / sqrt(H(pred) H(truth)); 1 when both partitions are a
/// single cluster, 0 when exactly one of them is.
double nmi(std::span<const int> pred, std::span<const int> truth);

/// Max-sum assignment on a rectangular score matrix (Hungarian method on the
/// negated scores); returns the column matched to each row (-1 = unmatched).
std::vector<int> optimal_assignment(const Matrix& scores);

}  // namespace mmfit
