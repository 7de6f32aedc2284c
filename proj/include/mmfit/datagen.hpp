#pragma once

#include "mmfit/common.hpp"
#include "mmfit/geometry.hpp"

#include <string>
#include <vector>

namespace mmfit {

struct StructureMeta {
    ConicKind kind = ConicKind::GeneralConic;
    Coeffs coeffs = Coeffs::Zero();
};

/// One labelled point set: N points in 2D, a structure id per point, and the
/// generating curve of each structure.
struct Sample {
    std::string id;
    int K = 0;
    Matrix points;            // N x 2
    std::vector<int> labels;  // N, values in [0, K)
    std::vector<StructureMeta> meta;

    Eigen::Index size() const { return points.rows(); }
};

enum class Composition { LCE, LCE_Unmixed };

struct DatasetSpec {
    int n_samples = 1;
    Composition composition = Composition::LCE;
    int min_points_per_structure = 50;
    int max_points_per_structure = 100;
    double noise_sigma = 0.05;
    BoundingBox bounding_box;
    /// Fraction of extra uniform-box points added as their own cluster
    /// (label K); 0 disables the outlier class.
    double outlier_fraction = 0.0;
    // Placement distributions. Circle radii and ellipse semi-axes are drawn
    // uniformly from these ranges; centers land in the box shrunk by
    // center_margin on each side.
    double min_radius = 0.3;
    double max_radius = 1.2;
    double min_axis = 0.3;
    double max_axis = 1.2;
    double center_margin = 0.6;
    std::uint64_t seed = 0;
};

/// One sample per call site: 1 line, 2 ellipses, 1 circle (K = 4).
std::vector<Sample> generate_lce(const DatasetSpec& spec);

/// Samples with 2-4 instances of a single randomly chosen curve kind.
std::vector<Sample> generate_lce_unmixed(const DatasetSpec& spec);

/// Dispatch on spec.composition.
std::vector<Sample> generate(const DatasetSpec& spec);

/// JSON Lines, one sample per line:
/// {"id", "K", "points": [[x,y],...], "labels": [...], "meta": [{"kind","coeffs"},...]}
void write_dataset(const std::vector<Sample>& samples, const std::string& path);
std::vector<Sample> read_dataset(const std::string& path);

}  // namespace mmfit
