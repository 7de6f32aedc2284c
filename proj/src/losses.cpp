#include "mmfit/losses.hpp"

#include <cmath>
#include <limits>

namespace mmfit {

const char* to_string(LossKind kind) {
    switch (kind) {
        case LossKind::L2Regression: return "l2";
        case LossKind::CrossEntropy: return "ce";
        case LossKind::MIMI: return "mimi";
        case LossKind::MaxInterOnly: return "maxinter";
        case LossKind::MinIntraOnly: return "minintra";
        case LossKind::SupervisedKMeans: return "skmeans";
    }
    return "mimi";
}

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "l2" || name == "l2regression") return LossKind::L2Regression;
    if (name == "ce" || name == "crossentropy") return LossKind::CrossEntropy;
    if (name == "mimi") return LossKind::MIMI;
    if (name == "maxinter") return LossKind::MaxInterOnly;
    if (name == "minintra") return LossKind::MinIntraOnly;
    if (name == "skmeans") return LossKind::SupervisedKMeans;
    throw FormatError("unknown loss kind: " + name);
}

namespace {

int infer_k(std::span<const int> labels) {
    int k = 0;
    for (int label : labels) {
        if (label < 0) throw InvalidSpec("negative cluster label");
        k = std::max(k, label + 1);
    }
    return k;
}

void check_rows(const Matrix& z, std::span<const int> labels) {
    if (static_cast<std::size_t>(z.rows()) != labels.size()) {
        throw DimensionMismatch("embedding rows do not match label count");
    }
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    return x > 0.0 ? 1.0 / (1.0 + std::exp(-x))
                   : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

Matrix affinity_ideal(std::span<const int> labels, int k) {
    const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
    for (int label : labels) {
        if (label < 0 || label >= k) throw InvalidSpec("label out of range [0, K)");
    }
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = labels[static_cast<std::size_t>(i)] ==
                              labels[static_cast<std::size_t>(j)]
                          ? 1.0
                          : 0.0;
        }
    }
    return a;
}

LossResult loss_l2regression(const Matrix& z, std::span<const int> labels) {
    check_rows(z, labels);
    const Matrix affinity = affinity_ideal(labels, infer_k(labels));
    const Matrix diff = z * z.transpose() - affinity;
    LossResult out;
    out.value = diff.squaredNorm();
    out.grad = 4.0 * diff * z;
    return out;
}

LossResult loss_crossentropy(const Matrix& z, std::span<const int> labels) {
    check_rows(z, labels);
    const Eigen::Index n = z.rows();
    const Matrix gram = z * z.transpose();
    double value = 0.0;
    Matrix s(n, n);  // d value / d gram
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double y = labels[static_cast<std::size_t>(i)] ==
                                     labels[static_cast<std::size_t>(j)]
                                 ? 1.0
                                 : 0.0;
            const double g = gram(i, j);
            // H(y, sigmoid(g)) = softplus(g) - y * g
            value += softplus(g) - y * g;
            s(i, j) = sigmoid(g) - y;
        }
    }
    LossResult out;
    out.value = value;
    out.grad = 2.0 * s * z;  // s is symmetric
    return out;
}

ClusterStats cluster_stats(const Matrix& z, std::span<const int> labels) {
    check_rows(z, labels);
    const int k = infer_k(labels);
    if (k < 1) throw EmptyCluster("no labels given");

    ClusterStats stats;
    stats.members.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        stats.members[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
    }
    for (int l = 0; l < k; ++l) {
        if (stats.members[static_cast<std::size_t>(l)].empty()) {
            throw EmptyCluster("cluster " + std::to_string(l) + " has no members");
        }
    }

    stats.means = Matrix::Zero(k, z.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        stats.means.row(labels[i]) += z.row(static_cast<Eigen::Index>(i));
    }
    for (int l = 0; l < k; ++l) {
        stats.means.row(l) /= static_cast<double>(stats.members[static_cast<std::size_t>(l)].size());
    }

    stats.scatters = Vector::Zero(k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        stats.scatters(labels[i]) +=
            (z.row(static_cast<Eigen::Index>(i)) - stats.means.row(labels[i])).squaredNorm();
    }

    stats.min_pair_dist2 = std::numeric_limits<double>::infinity();
    for (int m = 0; m < k; ++m) {
        for (int n2 = m + 1; n2 < k; ++n2) {
            const double d2 = (stats.means.row(m) - stats.means.row(n2)).squaredNorm();
            if (d2 < stats.min_pair_dist2) {
                stats.min_pair_dist2 = d2;
                stats.argmin_m = m;
                stats.argmin_n = n2;
            }
        }
    }
    stats.max_scatter = -1.0;
    for (int l = 0; l < k; ++l) {
        if (stats.scatters(l) > stats.max_scatter) {
            stats.max_scatter = stats.scatters(l);
            stats.argmax_scatter = l;
        }
    }
    return stats;
}

namespace {

// First term of the MIMI loss: -log(min pair distance^2 + eps).
LossResult max_inter_term(const Matrix& z, const ClusterStats& stats, double eps) {
    LossResult out;
    out.value = -std::log(stats.min_pair_dist2 + eps);
    out.grad = Matrix::Zero(z.rows(), z.cols());
    const int m = stats.argmin_m;
    const int n = stats.argmin_n;
    const Eigen::RowVectorXd diff = stats.means.row(m) - stats.means.row(n);
    const double scale = 2.0 / (stats.min_pair_dist2 + eps);
    const auto& cm = stats.members[static_cast<std::size_t>(m)];
    const auto& cn = stats.members[static_cast<std::size_t>(n)];
    for (int i : cm) {
        out.grad.row(i) -= scale / static_cast<double>(cm.size()) * diff;
    }
    for (int j : cn) {
        out.grad.row(j) += scale / static_cast<double>(cn.size()) * diff;
    }
    return out;
}

// Second term: alpha * log(max scatter + eps).
LossResult min_intra_term(const Matrix& z, const ClusterStats& stats, double alpha,
                          double eps) {
    LossResult out;
    out.value = alpha * std::log(stats.max_scatter + eps);
    out.grad = Matrix::Zero(z.rows(), z.cols());
    const int l = stats.argmax_scatter;
    const double scale = 2.0 * alpha / (stats.max_scatter + eps);
    for (int i : stats.members[static_cast<std::size_t>(l)]) {
        out.grad.row(i) += scale * (z.row(i) - stats.means.row(l));
    }
    return out;
}

ClusterStats stats_for_pairwise(const Matrix& z, std::span<const int> labels) {
    ClusterStats stats = cluster_stats(z, labels);
    if (stats.argmin_m < 0) {
        throw InvalidSpec("loss needs at least two clusters");
    }
    return stats;
}

}  // namespace

LossResult loss_mimi(const Matrix& z, std::span<const int> labels, double alpha,
                     double eps) {
    const ClusterStats stats = stats_for_pairwise(z, labels);
    LossResult inter = max_inter_term(z, stats, eps);
    const LossResult intra = min_intra_term(z, stats, alpha, eps);
    inter.value += intra.value;
    inter.grad += intra.grad;
    return inter;
}

LossResult loss_variant(const LossSpec& spec, const Matrix& z,
                        std::span<const int> labels) {
    switch (spec.kind) {
        case LossKind::L2Regression:
            return loss_l2regression(z, labels);
        case LossKind::CrossEntropy:
            return loss_crossentropy(z, labels);
        case LossKind::MIMI:
            return loss_mimi(z, labels, spec.alpha, spec.eps);
        case LossKind::MaxInterOnly:
            return max_inter_term(z, stats_for_pairwise(z, labels), spec.eps);
        case LossKind::MinIntraOnly:
            return min_intra_term(z, cluster_stats(z, labels), spec.alpha, spec.eps);
        case LossKind::SupervisedKMeans: {
            // K-means objective with the assignment fixed to the labels.
            // Summed in point order so the value is exactly invariant to
            // relabelling.
            const ClusterStats stats = cluster_stats(z, labels);
            LossResult out;
            out.grad.resize(z.rows(), z.cols());
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                const auto diff =
                    z.row(i) - stats.means.row(labels[static_cast<std::size_t>(i)]);
                out.value += diff.squaredNorm();
                out.grad.row(i) = 2.0 * diff;
            }
            return out;
        }
    }
    throw InvalidSpec("unknown loss kind");
}

}  // namespace mmfit
