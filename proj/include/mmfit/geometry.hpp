#pragma once

#include "mmfit/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mmfit {

enum class ConicKind { Line, Circle, Ellipse, GeneralConic };

const char* to_string(ConicKind kind);
ConicKind conic_kind_from_string(const std::string& name);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// A conic in the frame A x^2 + B xy + C y^2 + D x + E y + F = 0.
/// The 6-vector (A..F) is kept at unit Euclidean norm; the residual of a
/// point against any model is then comparable across models.
struct ConicModel {
    ConicKind kind = ConicKind::GeneralConic;
    Coeffs coeffs = Coeffs::Zero();

    static ConicModel line(double d, double e, double f);
    static ConicModel line_through(const Point2& a, const Point2& b);
    static ConicModel circle(const Point2& center, double radius);
    static ConicModel ellipse(const Point2& center, double semi_a, double semi_b,
                              double angle);
};

struct BoundingBox {
    double xmin = -2.0;
    double xmax = 2.0;
    double ymin = -2.0;
    double ymax = 2.0;
};

/// Center/axes/rotation form of an elliptic conic (circles included).
struct EllipseParams {
    Point2 center;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double angle = 0.0;  // major-axis direction, radians
};

/// B^2 - 4AC; negative for elliptic conics.
double conic_discriminant(const Coeffs& coeffs);

/// Sign-aligned distance between coefficient vectors: min(|a-b|, |a+b|).
double coeff_distance(const Coeffs& a, const Coeffs& b);

/// Recover center/axes/angle of an elliptic conic.
/// Throws DegenerateModel for non-elliptic conics or conics with no real locus.
EllipseParams ellipse_params(const ConicModel& model);

/// Sample n points uniformly in the curve's natural parameter (chord parameter
/// for lines, eccentric angle for circles/ellipses), then perturb each with
/// isotropic Gaussian noise of standard deviation noise_sigma.
/// Lines are sampled on their chord inside `box`.
std::vector<Point2> sample_curve(const ConicModel& model, int n, double noise_sigma,
                                 std::uint64_t rng_seed, const BoundingBox& box = {});

/// |A x^2 + B xy + C y^2 + D x + E y + F| at p.
double algebraic_residual(const ConicModel& model, const Point2& p);

ConicModel fit_line_minimal(const Point2& p1, const Point2& p2);
ConicModel fit_circle_minimal(const Point2& p1, const Point2& p2, const Point2& p3);

/// Exact conic through 5 points via the null space of the design matrix.
/// Throws DegenerateConfiguration if the points do not determine a unique
/// conic, NotAnEllipse if the conic through them is not elliptic.
ConicModel fit_ellipse_minimal(std::span<const Point2> points);

/// Ellipse-specific direct least squares (generalized eigenproblem under the
/// constraint 4AC - B^2 = 1), renormalized to a unit coefficient vector.
ConicModel fit_ellipse_direct(std::span<const Point2> points);

/// Unconstrained least-squares conic: null vector of the design matrix.
/// Rank-deficient designs are resolved toward the lowest-order conic in the
/// null space (pure line before degenerate quadratic).
ConicModel fit_conic_ls(std::span<const Point2> points);

}  // namespace mmfit
