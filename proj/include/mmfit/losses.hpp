#pragma once

#include "mmfit/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace mmfit {

enum class LossKind {
    L2Regression,
    CrossEntropy,
    MIMI,
    MaxInterOnly,
    MinIntraOnly,
    SupervisedKMeans,
};

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct LossSpec {
    LossKind kind = LossKind::MIMI;
    double alpha = 1.0;  // weight of the intra-cluster term
    double eps = 1e-8;   // floor inside the logs
};

/// Value plus the analytic gradient with respect to the embedding rows.
/// The chain through the net (including its L2-normalization) lives in
/// net::backward, keeping the losses architecture-agnostic.
struct LossResult {
    double value = 0.0;
    Matrix grad;  // N x d
};

/// Per-cluster statistics of an embedding under ground-truth labels.
struct ClusterStats {
    Matrix means;     // K x d
    Vector scatters;  // K, sum of squared distances to the cluster mean
    std::vector<std::vector<int>> members;
    // Extremal pair of means (m < n) and extremal scatter; ties broken toward
    // the lowest indices.
    int argmin_m = -1;
    int argmin_n = -1;
    int argmax_scatter = -1;
    double min_pair_dist2 = 0.0;
    double max_scatter = 0.0;
};

/// (i, j) entry 1 iff labels[i] == labels[j]; equals Y^T Y for one-hot Y.
Matrix affinity_ideal(std::span<const int> labels, int k);

LossResult loss_l2regression(const Matrix& z, std::span<const int> labels);

/// Sum over all ordered pairs (diagonal included) of the binary cross-entropy
/// between the ideal affinity and the sigmoid of the embedding inner product.
LossResult loss_crossentropy(const Matrix& z, std::span<const int> labels);

ClusterStats cluster_stats(const Matrix& z, std::span<const int> labels);

/// -log(min_{m!=n} |mu_m - mu_n|^2 + eps) + alpha * log(max_l s_l + eps);
/// the gradient flows only through the extremal pair and extremal cluster.
LossResult loss_mimi(const Matrix& z, std::span<const int> labels, double alpha,
                     double eps);

LossResult loss_variant(const LossSpec& spec, const Matrix& z,
                        std::span<const int> labels);

}  // namespace mmfit
