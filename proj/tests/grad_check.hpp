#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>

namespace gradcheck {

/// Central finite differences of a scalar function of a flat vector.
inline Eigen::VectorXd central_difference(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double original = probe(i);
        probe(i) = original + h;
        const double fp = f(probe);
        probe(i) = original - h;
        const double fm = f(probe);
        probe(i) = original;
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

struct GradComparison {
    double vec_rel = 0.0;       // |a - b| / max(|a|, |b|) on whole vectors
    double max_elem_rel = 0.0;  // worst per-element relative error (abs-floored)
};

inline GradComparison compare(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd,
                              double abs_floor = 1e-6) {
    GradComparison out;
    out.vec_rel = (analytic - fd).norm() / std::max({analytic.norm(), fd.norm(), 1e-12});
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double denom =
            std::max({std::abs(analytic(i)), std::abs(fd(i)), abs_floor});
        out.max_elem_rel =
            std::max(out.max_elem_rel, std::abs(analytic(i) - fd(i)) / denom);
    }
    return out;
}

}  // namespace gradcheck
