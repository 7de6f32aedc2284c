#pragma once

#include "mmfit/common.hpp"
#include "mmfit/datagen.hpp"
#include "mmfit/geometry.hpp"
#include "mmfit/trainer.hpp"

#include <span>
#include <vector>

namespace mmfit {

struct RansacConfig {
    double inlier_threshold = 0.02;  // on the unit-norm algebraic residual
    int iterations = 500;
    int min_inliers = 10;
    /// Model kinds tried each round; the round keeps the kind with the most
    /// inliers (ties toward the simpler model). {GeneralConic} gives the
    /// high-order fitting mode.
    std::vector<ConicKind> type_order = {ConicKind::Line, ConicKind::Circle,
                                         ConicKind::Ellipse};
    /// Cap on recovered structures; guards against over-segmentation.
    int structure_budget = 8;
    /// Plausibility gates for circle/ellipse hypotheses. Near-degenerate
    /// conics (a sliver ellipse is a band, a huge one locally a line) sweep
    /// up points across structures and would win rounds outright.
    double max_semi_axis = 4.0;
    double min_semi_axis = 0.02;
};

int minimal_sample_size(ConicKind kind);

struct RansacFit {
    ConicModel model;
    std::vector<char> inlier_mask;  // one flag per input point
    int inlier_count = 0;
};

/// Best model of one kind by inlier count under the residual threshold.
/// Ellipse hypotheses that are not elliptic are rejected before counting.
RansacFit ransac_fit_one(std::span<const Point2> points, ConicKind kind,
                         const RansacConfig& config, std::uint64_t seed);

/// Greedy multi-structure recovery: fit, remove inliers, repeat. Returns a
/// structure id per point, -1 for points never claimed by a model.
std::vector<int> sequential_fit(std::span<const Point2> points,
                                const RansacConfig& config, std::uint64_t seed);

/// Run sequential_fit over a dataset; unassigned points always count as
/// errors (for NMI they form one extra cluster).
EvalSummary baseline_eval(const std::vector<Sample>& dataset,
                          const RansacConfig& config, std::uint64_t seed);

std::vector<Point2> sample_points(const Sample& sample);

}  // namespace mmfit
