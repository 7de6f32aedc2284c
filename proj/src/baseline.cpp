#include "mmfit/baseline.hpp"

#include "mmfit/inference.hpp"

#include <algorithm>
#include <numeric>

namespace mmfit {

int minimal_sample_size(ConicKind kind) {
    switch (kind) {
        case ConicKind::Line: return 2;
        case ConicKind::Circle: return 3;
        case ConicKind::Ellipse: return 5;
        case ConicKind::GeneralConic: return 5;
    }
    return 5;
}

namespace {

int simplicity_rank(ConicKind kind) {
    switch (kind) {
        case ConicKind::Line: return 0;
        case ConicKind::Circle: return 1;
        case ConicKind::Ellipse: return 2;
        case ConicKind::GeneralConic: return 3;
    }
    return 3;
}

ConicModel fit_minimal(std::span<const Point2> pts, ConicKind kind) {
    switch (kind) {
        case ConicKind::Line: return fit_line_minimal(pts[0], pts[1]);
        case ConicKind::Circle: return fit_circle_minimal(pts[0], pts[1], pts[2]);
        case ConicKind::Ellipse: return fit_ellipse_minimal(pts);
        case ConicKind::GeneralConic: return fit_conic_ls(pts);
    }
    throw InvalidSpec("unknown conic kind");
}

void draw_distinct(Rng& rng, std::size_t n, int count, std::vector<std::size_t>& out) {
    out.clear();
    std::uniform_int_distribution<std::size_t> ui(0, n - 1);
    while (static_cast<int>(out.size()) < count) {
        const std::size_t idx = ui(rng);
        if (std::find(out.begin(), out.end(), idx) == out.end()) {
            out.push_back(idx);
        }
    }
}

}  // namespace

RansacFit ransac_fit_one(std::span<const Point2> points, ConicKind kind,
                         const RansacConfig& config, std::uint64_t seed) {
    if (config.iterations < 1 || !(config.inlier_threshold > 0.0)) {
        throw InvalidSpec("ransac config needs iterations >= 1 and threshold > 0");
    }
    const int msize = minimal_sample_size(kind);
    if (static_cast<int>(points.size()) < msize) {
        throw InsufficientPoints("not enough points for a minimal " +
                                 std::string(to_string(kind)) + " sample");
    }

    Rng rng(seed);
    std::vector<std::size_t> sample;
    std::vector<Point2> sample_pts(static_cast<std::size_t>(msize));
    RansacFit best;
    best.inlier_count = -1;

    for (int iter = 0; iter < config.iterations; ++iter) {
        draw_distinct(rng, points.size(), msize, sample);
        for (int i = 0; i < msize; ++i) {
            sample_pts[static_cast<std::size_t>(i)] = points[sample[static_cast<std::size_t>(i)]];
        }
        ConicModel model;
        try {
            model = fit_minimal(sample_pts, kind);
            if (model.kind == ConicKind::Circle || model.kind == ConicKind::Ellipse) {
                const EllipseParams ep = ellipse_params(model);
                if (ep.semi_major > config.max_semi_axis ||
                    ep.semi_minor < config.min_semi_axis) {
                    continue;
                }
            }
        } catch (const Error&) {
            continue;  // degenerate minimal sample
        }
        int count = 0;
        for (const Point2& p : points) {
            if (algebraic_residual(model, p) <= config.inlier_threshold) ++count;
        }
        if (count > best.inlier_count) {
            best.inlier_count = count;
            best.model = model;
        }
    }

    if (best.inlier_count < std::max(config.min_inliers, msize)) {
        throw NoModelFound("best " + std::string(to_string(kind)) + " hypothesis has " +
                           std::to_string(std::max(best.inlier_count, 0)) + " inliers");
    }
    best.inlier_mask.assign(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (algebraic_residual(best.model, points[i]) <= config.inlier_threshold) {
            best.inlier_mask[i] = 1;
        }
    }
    return best;
}

std::vector<int> sequential_fit(std::span<const Point2> points,
                                const RansacConfig& config, std::uint64_t seed) {
    if (config.type_order.empty()) {
        throw InvalidSpec("type_order must not be empty");
    }
    std::vector<ConicKind> kinds;
    for (ConicKind kind : config.type_order) {
        if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
            kinds.push_back(kind);
        }
    }

    std::vector<int> assignments(points.size(), -1);
    std::vector<std::size_t> active(points.size());
    std::iota(active.begin(), active.end(), 0);

    for (int structure = 0; structure < config.structure_budget; ++structure) {
        std::vector<Point2> pts;
        pts.reserve(active.size());
        for (std::size_t idx : active) pts.push_back(points[idx]);

        bool have_best = false;
        RansacFit best;
        ConicKind best_kind = ConicKind::GeneralConic;
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            RansacFit fit;
            try {
                fit = ransac_fit_one(
                    pts, kinds[k], config,
                    derive_seed(seed, static_cast<std::uint64_t>(structure) * 16 + k));
            } catch (const InsufficientPoints&) {
                continue;
            } catch (const NoModelFound&) {
                continue;
            }
            const bool better =
                !have_best || fit.inlier_count > best.inlier_count ||
                (fit.inlier_count == best.inlier_count &&
                 simplicity_rank(kinds[k]) < simplicity_rank(best_kind));
            if (better) {
                best = std::move(fit);
                best_kind = kinds[k];
                have_best = true;
            }
        }
        if (!have_best) break;

        std::vector<std::size_t> remaining;
        remaining.reserve(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (best.inlier_mask[i]) {
                assignments[active[i]] = structure;
            } else {
                remaining.push_back(active[i]);
            }
        }
        active = std::move(remaining);
        if (active.empty()) break;
    }
    return assignments;
}

std::vector<Point2> sample_points(const Sample& sample) {
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(sample.points.rows()));
    for (Eigen::Index i = 0; i < sample.points.rows(); ++i) {
        pts.push_back({sample.points(i, 0), sample.points(i, 1)});
    }
    return pts;
}

EvalSummary baseline_eval(const std::vector<Sample>& dataset,
                          const RansacConfig& config, std::uint64_t seed) {
    EvalSummary summary;
    summary.per_sample.reserve(dataset.size());
    for (std::size_t idx = 0; idx < dataset.size(); ++idx) {
        const Sample& sample = dataset[idx];
        const std::vector<Point2> pts = sample_points(sample);
        const std::vector<int> pred =
            sequential_fit(pts, config, derive_seed(seed, idx));

        int k_found = 0;
        for (int p : pred) k_found = std::max(k_found, p + 1);

        SampleMetrics metrics;
        metrics.id = sample.id;
        metrics.k_true = sample.K;
        metrics.k_sod = k_found;
        metrics.k_silh = k_found;

        // Unassigned points are errors by definition; the optimal label
        // matching only ever credits points a structure claimed.
        const std::size_t n = pred.size();
        if (n == 0) {
            metrics.error = 0.0;
            metrics.nmi_value = 1.0;
        } else if (k_found == 0) {
            metrics.error = 1.0;
            metrics.nmi_value = 0.0;
        } else {
            Matrix table = Matrix::Zero(k_found, sample.K);
            for (std::size_t i = 0; i < n; ++i) {
                if (pred[i] >= 0) {
                    table(pred[i], sample.labels[i]) += 1.0;
                }
            }
            const std::vector<int> match = optimal_assignment(table);
            double matched = 0.0;
            for (std::size_t r = 0; r < match.size(); ++r) {
                if (match[r] >= 0) matched += table(static_cast<Eigen::Index>(r), match[r]);
            }
            metrics.error = 1.0 - matched / static_cast<double>(n);

            std::vector<int> pred_full(pred.begin(), pred.end());
            for (int& p : pred_full) {
                if (p < 0) p = k_found;  // leftover points form one extra cluster
            }
            metrics.nmi_value = nmi(pred_full, sample.labels);
        }
        summary.per_sample.push_back(std::move(metrics));
    }
    finalize_summary(summary);
    return summary;
}

}  // namespace mmfit
