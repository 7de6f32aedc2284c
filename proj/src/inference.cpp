#include "mmfit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> assign_to_centers(const Matrix& z, const Matrix& centers) {
    std::vector<int> assignments(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double best = kInf;
        int arg = 0;
        for (Eigen::Index c = 0; c < centers.rows(); ++c) {
            const double d2 = (z.row(i) - centers.row(c)).squaredNorm();
            if (d2 < best) {
                best = d2;
                arg = static_cast<int>(c);
            }
        }
        assignments[static_cast<std::size_t>(i)] = arg;
    }
    return assignments;
}

double total_residual(const Matrix& z, const Matrix& centers,
                      const std::vector<int>& assignments) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        r += (z.row(i) - centers.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return r;
}

Matrix seed_kmeanspp(const Matrix& z, int k, Rng& rng) {
    const Eigen::Index n = z.rows();
    Matrix centers(k, z.cols());
    std::uniform_int_distribution<Eigen::Index> ui(0, n - 1);
    centers.row(0) = z.row(ui(rng));
    Vector d2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d2(i) = (z.row(i) - centers.row(0)).squaredNorm();
    }
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = ui(rng);
        } else {
            std::uniform_real_distribution<double> ur(0.0, total);
            double r = ur(rng);
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                r -= d2(i);
                if (r <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(c) = z.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2(i) = std::min(d2(i), (z.row(i) - centers.row(c)).squaredNorm());
        }
    }
    return centers;
}

ClusterResult lloyd(const Matrix& z, int k, Rng& rng, int max_iters) {
    const Eigen::Index n = z.rows();
    ClusterResult result;
    result.centers = seed_kmeanspp(z, k, rng);
    std::vector<int> assignments;
    for (int iter = 0; iter < max_iters; ++iter) {
        std::vector<int> next = assign_to_centers(z, result.centers);
        result.iterations = iter + 1;
        if (next == assignments) break;
        assignments = std::move(next);

        Matrix sums = Matrix::Zero(k, z.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assignments[static_cast<std::size_t>(i)]) += z.row(i);
            ++counts[static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                result.centers.row(c) =
                    sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        // Reseed each empty cluster at the point farthest from its center.
        std::vector<char> taken(static_cast<std::size_t>(n), 0);
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            double worst = -1.0;
            Eigen::Index pick = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (taken[static_cast<std::size_t>(i)]) continue;
                const double d2 =
                    (z.row(i) - result.centers.row(assignments[static_cast<std::size_t>(i)]))
                        .squaredNorm();
                if (d2 > worst) {
                    worst = d2;
                    pick = i;
                }
            }
            result.centers.row(c) = z.row(pick);
            taken[static_cast<std::size_t>(pick)] = 1;
        }
    }
    result.assignments = assign_to_centers(z, result.centers);
    result.residual = total_residual(z, result.centers, result.assignments);
    return result;
}

}  // namespace

ClusterResult kmeans(const Matrix& z, int k, int restarts, std::uint64_t seed,
                     int max_iters) {
    if (k < 1 || restarts < 1 || max_iters < 1) {
        throw InvalidSpec("kmeans needs k, restarts, max_iters >= 1");
    }
    if (k > z.rows()) {
        throw TooManyClusters("k exceeds the number of points");
    }
    ClusterResult best;
    best.residual = kInf;
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        ClusterResult candidate = lloyd(z, k, rng, max_iters);
        if (candidate.residual < best.residual) {
            best = std::move(candidate);
        }
    }
    return best;
}

ResidualCurve residual_curve(const Matrix& z, int kmin, int kmax, int restarts,
                             std::uint64_t seed, int max_iters) {
    if (kmin < 1 || kmax < kmin) throw InvalidSpec("invalid K range");
    ResidualCurve curve;
    curve.kmin = kmin;
    curve.values.reserve(static_cast<std::size_t>(kmax - kmin + 1));
    for (int k = kmin; k <= kmax; ++k) {
        curve.values.push_back(
            kmeans(z, k, restarts, derive_seed(seed, static_cast<std::uint64_t>(k)), max_iters)
                .residual);
    }
    return curve;
}

int select_k_sod(const ResidualCurve& curve) {
    if (curve.values.size() < 3) {
        throw CurveTooShort("SOD needs at least three residual values");
    }
    int best_k = curve.kmin + 1;
    double best = -kInf;
    for (int k = curve.kmin + 1; k <= curve.kmax() - 1; ++k) {
        const double sod = curve.at(k - 1) + curve.at(k + 1) - 2.0 * curve.at(k);
        if (sod > best) {
            best = sod;
            best_k = k;
        }
    }
    return best_k;
}

double mean_silhouette(const Matrix& z, std::span<const int> assignments, int k) {
    const Eigen::Index n = z.rows();
    if (static_cast<std::size_t>(n) != assignments.size()) {
        throw LengthMismatch("assignments length does not match embedding rows");
    }
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assignments) {
        if (a < 0 || a >= k) throw InvalidSpec("assignment out of range");
        ++counts[static_cast<std::size_t>(a)];
    }
    double total = 0.0;
    std::vector<double> dist_sum(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            dist_sum[static_cast<std::size_t>(assignments[static_cast<std::size_t>(j)])] +=
                (z.row(i) - z.row(j)).norm();
        }
        const int own = assignments[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(own)] <= 1) {
            continue;  // singleton: s(i) = 0
        }
        const double a =
            dist_sum[static_cast<std::size_t>(own)] /
            static_cast<double>(counts[static_cast<std::size_t>(own)] - 1);
        double b = kInf;
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
            b = std::min(b, dist_sum[static_cast<std::size_t>(c)] /
                                static_cast<double>(counts[static_cast<std::size_t>(c)]));
        }
        if (!std::isfinite(b)) continue;  // no other cluster
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

int select_k_silhouette(const Matrix& z, int kmin, int kmax, int restarts,
                        std::uint64_t seed, int max_iters) {
    const int lo = std::max(2, kmin);
    if (kmax < lo) throw CurveTooShort("silhouette needs a K range starting at 2");
    int best_k = lo;
    double best = -kInf;
    for (int k = lo; k <= kmax; ++k) {
        const ClusterResult result =
            kmeans(z, k, restarts, derive_seed(seed, static_cast<std::uint64_t>(k)), max_iters);
        const double s = mean_silhouette(z, result.assignments, k);
        if (s > best) {
            best = s;
            best_k = k;
        }
    }
    return best_k;
}

namespace {

// Hungarian method with potentials; minimizes total cost, rows <= cols.
std::vector<int> hungarian_min(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(m) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_match(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j) {
        if (match[static_cast<std::size_t>(j)] > 0) {
            row_match[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
        }
    }
    return row_match;
}

}  // namespace

std::vector<int> optimal_assignment(const Matrix& scores) {
    if (scores.rows() == 0 || scores.cols() == 0) {
        return std::vector<int>(static_cast<std::size_t>(scores.rows()), -1);
    }
    if (scores.rows() <= scores.cols()) {
        return hungarian_min(-scores);
    }
    // More rows than columns: solve the transpose and invert the mapping.
    const std::vector<int> col_match = hungarian_min(-scores.transpose());
    std::vector<int> row_match(static_cast<std::size_t>(scores.rows()), -1);
    for (std::size_t j = 0; j < col_match.size(); ++j) {
        if (col_match[j] >= 0) {
            row_match[static_cast<std::size_t>(col_match[j])] = static_cast<int>(j);
        }
    }
    return row_match;
}

namespace {

Matrix contingency(std::span<const int> a, std::span<const int> b, int ka, int kb) {
    Matrix table = Matrix::Zero(ka, kb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        table(a[i], b[i]) += 1.0;
    }
    return table;
}

int max_label(std::span<const int> labels) {
    int k = 0;
    for (int label : labels) {
        if (label < 0) throw InvalidSpec("negative label");
        k = std::max(k, label + 1);
    }
    return k;
}

}  // namespace

double error_rate(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw LengthMismatch("prediction and truth have different lengths");
    }
    if (pred.empty()) return 0.0;
    const Matrix table = contingency(pred, truth, max_label(pred), max_label(truth));
    const std::vector<int> match = optimal_assignment(table);
    double matched = 0.0;
    for (std::size_t i = 0; i < match.size(); ++i) {
        if (match[i] >= 0) matched += table(static_cast<Eigen::Index>(i), match[i]);
    }
    return 1.0 - matched / static_cast<double>(pred.size());
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw LengthMismatch("prediction and truth have different lengths");
    }
    if (pred.empty()) return 1.0;
    const int kp = max_label(pred);
    const int kt = max_label(truth);
    const Matrix table = contingency(pred, truth, kp, kt);
    const double n = static_cast<double>(pred.size());
    const Vector pi = table.rowwise().sum() / n;
    const Vector qj = table.colwise().sum().transpose() / n;

    auto entropy = [](const Vector& p) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (p(i) > 0.0) h -= p(i) * std::log(p(i));
        }
        return h;
    };
    const double hp = entropy(pi);
    const double ht = entropy(qj);
    if (hp == 0.0 && ht == 0.0) return 1.0;  // both single-cluster
    if (hp == 0.0 || ht == 0.0) return 0.0;

    double mi = 0.0;
    for (Eigen::Index i = 0; i < kp; ++i) {
        for (Eigen::Index j = 0; j < kt; ++j) {
            const double pij = table(i, j) / n;
            if (pij > 0.0) mi += pij * std::log(pij / (pi(i) * qj(j)));
        }
    }
    return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

}  // namespace mmfit
