#include "mmfit/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmfit {

namespace {

Coeffs unit_norm(Coeffs c) {
    const double n = c.norm();
    if (n < 1e-300) {
        throw DegenerateModel("conic coefficients are all zero");
    }
    return c / n;
}

// t-interval of p0 + t*dir inside the box; empty interval -> lo > hi.
std::pair<double, double> clip_line_to_box(const Point2& p0, const Point2& dir,
                                           const BoundingBox& box) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    auto clip_axis = [&](double p, double d, double mn, double mx) {
        if (std::abs(d) < 1e-15) {
            if (p < mn || p > mx) {
                lo = 1.0;
                hi = 0.0;
            }
            return;
        }
        double t0 = (mn - p) / d;
        double t1 = (mx - p) / d;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
    };
    clip_axis(p0.x, dir.x, box.xmin, box.xmax);
    clip_axis(p0.y, dir.y, box.ymin, box.ymax);
    return {lo, hi};
}

}  // namespace

const char* to_string(ConicKind kind) {
    switch (kind) {
        case ConicKind::Line: return "line";
        case ConicKind::Circle: return "circle";
        case ConicKind::Ellipse: return "ellipse";
        case ConicKind::GeneralConic: return "conic";
    }
    return "conic";
}

ConicKind conic_kind_from_string(const std::string& name) {
    if (name == "line") return ConicKind::Line;
    if (name == "circle") return ConicKind::Circle;
    if (name == "ellipse") return ConicKind::Ellipse;
    if (name == "conic" || name == "general" || name == "general_conic") {
        return ConicKind::GeneralConic;
    }
    throw FormatError("unknown conic kind: " + name);
}

ConicModel ConicModel::line(double d, double e, double f) {
    if (d == 0.0 && e == 0.0) {
        throw DegenerateModel("line with zero normal");
    }
    Coeffs c;
    c << 0, 0, 0, d, e, f;
    return {ConicKind::Line, unit_norm(c)};
}

ConicModel ConicModel::line_through(const Point2& a, const Point2& b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    if (std::hypot(dx, dy) < 1e-12) {
        throw CoincidentPoints("line through coincident points");
    }
    // normal (-dy, dx), passing through a
    return line(-dy, dx, dy * a.x - dx * a.y);
}

ConicModel ConicModel::circle(const Point2& center, double radius) {
    if (!(radius > 0.0)) {
        throw DegenerateModel("circle with non-positive radius");
    }
    Coeffs c;
    c << 1, 0, 1, -2 * center.x, -2 * center.y,
        center.x * center.x + center.y * center.y - radius * radius;
    return {ConicKind::Circle, unit_norm(c)};
}

ConicModel ConicModel::ellipse(const Point2& center, double semi_a, double semi_b,
                               double angle) {
    if (!(semi_a > 0.0) || !(semi_b > 0.0)) {
        throw DegenerateModel("ellipse with non-positive semi-axis");
    }
    const double ct = std::cos(angle);
    const double st = std::sin(angle);
    const double ia = 1.0 / (semi_a * semi_a);
    const double ib = 1.0 / (semi_b * semi_b);
    // (u/a)^2 + (v/b)^2 = 1 with (u,v) the rotated, centered frame.
    const double A = ia * ct * ct + ib * st * st;
    const double B = 2.0 * (ia - ib) * ct * st;
    const double C = ia * st * st + ib * ct * ct;
    const double D = -2.0 * A * center.x - B * center.y;
    const double E = -B * center.x - 2.0 * C * center.y;
    const double F = A * center.x * center.x + B * center.x * center.y +
                     C * center.y * center.y - 1.0;
    Coeffs c;
    c << A, B, C, D, E, F;
    return {ConicKind::Ellipse, unit_norm(c)};
}

double conic_discriminant(const Coeffs& c) {
    return c(1) * c(1) - 4.0 * c(0) * c(2);
}

double coeff_distance(const Coeffs& a, const Coeffs& b) {
    return std::min((a - b).norm(), (a + b).norm());
}

EllipseParams ellipse_params(const ConicModel& model) {
    const Coeffs& c = model.coeffs;
    const double A = c(0), B = c(1), C = c(2), D = c(3), E = c(4), F = c(5);
    const double disc = conic_discriminant(c);
    if (disc >= 0.0) {
        throw DegenerateModel("conic is not elliptic");
    }
    // Gradient = 0 at the center: [2A B; B 2C] (cx,cy) = -(D,E)
    const double det = 4.0 * A * C - B * B;  // = -disc > 0
    const double cx = (B * E - 2.0 * C * D) / det;
    const double cy = (B * D - 2.0 * A * E) / det;
    const double fc = A * cx * cx + B * cx * cy + C * cy * cy + D * cx + E * cy + F;

    Eigen::Matrix2d m;
    m << A, B / 2.0, B / 2.0, C;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m);
    const Eigen::Vector2d lambda = eig.eigenvalues();  // ascending
    if (lambda(0) * fc >= 0.0 || lambda(1) * fc >= 0.0) {
        throw DegenerateModel("elliptic conic with no real locus");
    }
    const double axis0 = std::sqrt(-fc / lambda(0));
    const double axis1 = std::sqrt(-fc / lambda(1));
    const int major_col = axis0 >= axis1 ? 0 : 1;

    EllipseParams out;
    out.center = {cx, cy};
    out.semi_major = std::max(axis0, axis1);
    out.semi_minor = std::min(axis0, axis1);
    const Eigen::Vector2d axis = eig.eigenvectors().col(major_col);
    out.angle = std::atan2(axis(1), axis(0));
    if (out.angle < 0.0) out.angle += std::numbers::pi;
    return out;
}

std::vector<Point2> sample_curve(const ConicModel& model, int n, double noise_sigma,
                                 std::uint64_t rng_seed, const BoundingBox& box) {
    if (n < 1) throw InvalidSpec("sample_curve: n must be >= 1");
    if (noise_sigma < 0.0) throw InvalidSpec("sample_curve: negative noise sigma");

    Rng rng(rng_seed);
    std::vector<Point2> points;
    points.reserve(static_cast<std::size_t>(n));

    if (model.kind == ConicKind::Line) {
        const Coeffs& c = model.coeffs;
        const double d = c(3), e = c(4), f = c(5);
        const double nn = d * d + e * e;
        if (nn < 1e-300) throw DegenerateModel("line with zero normal");
        const Point2 p0{-f * d / nn, -f * e / nn};
        const Point2 dir{-e / std::sqrt(nn), d / std::sqrt(nn)};
        auto [t0, t1] = clip_line_to_box(p0, dir, box);
        if (!(t0 < t1)) {
            throw DegenerateModel("line does not intersect the sampling box");
        }
        std::uniform_real_distribution<double> ts(t0, t1);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            const double t = ts(rng);
            Point2 p{p0.x + t * dir.x, p0.y + t * dir.y};
            if (noise_sigma > 0.0) {
                p.x += noise_sigma * noise(rng);
                p.y += noise_sigma * noise(rng);
            }
            points.push_back(p);
        }
        return points;
    }

    const EllipseParams ep = ellipse_params(model);
    const double ct = std::cos(ep.angle);
    const double st = std::sin(ep.angle);
    std::uniform_real_distribution<double> ts(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const double t = ts(rng);
        const double u = ep.semi_major * std::cos(t);
        const double v = ep.semi_minor * std::sin(t);
        Point2 p{ep.center.x + u * ct - v * st, ep.center.y + u * st + v * ct};
        if (noise_sigma > 0.0) {
            p.x += noise_sigma * noise(rng);
            p.y += noise_sigma * noise(rng);
        }
        points.push_back(p);
    }
    return points;
}

double algebraic_residual(const ConicModel& model, const Point2& p) {
    const Coeffs& c = model.coeffs;
    return std::abs(c(0) * p.x * p.x + c(1) * p.x * p.y + c(2) * p.y * p.y +
                    c(3) * p.x + c(4) * p.y + c(5));
}

ConicModel fit_line_minimal(const Point2& p1, const Point2& p2) {
    return ConicModel::line_through(p1, p2);
}

ConicModel fit_circle_minimal(const Point2& p1, const Point2& p2, const Point2& p3) {
    const double area2 = (p2.x - p1.x) * (p3.y - p1.y) - (p2.y - p1.y) * (p3.x - p1.x);
    const double scale = std::max({std::hypot(p2.x - p1.x, p2.y - p1.y),
                                   std::hypot(p3.x - p1.x, p3.y - p1.y), 1e-12});
    if (std::abs(area2) < 1e-10 * scale * scale) {
        throw CollinearPoints("circle through collinear points");
    }
    // x^2 + y^2 + Dx + Ey + F = 0
    Eigen::Matrix3d lhs;
    Eigen::Vector3d rhs;
    const Point2 pts[3] = {p1, p2, p3};
    for (int i = 0; i < 3; ++i) {
        lhs.row(i) << pts[i].x, pts[i].y, 1.0;
        rhs(i) = -(pts[i].x * pts[i].x + pts[i].y * pts[i].y);
    }
    const Eigen::Vector3d sol = lhs.partialPivLu().solve(rhs);
    Coeffs c;
    c << 1, 0, 1, sol(0), sol(1), sol(2);
    return {ConicKind::Circle, unit_norm(c)};
}

namespace {

Matrix design_matrix(std::span<const Point2> points) {
    Matrix d(static_cast<Eigen::Index>(points.size()), 6);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const double x = points[static_cast<std::size_t>(i)].x;
        const double y = points[static_cast<std::size_t>(i)].y;
        d.row(i) << x * x, x * y, y * y, x, y, 1.0;
    }
    return d;
}

}  // namespace

ConicModel fit_ellipse_minimal(std::span<const Point2> points) {
    if (points.size() != 5) {
        throw DegenerateConfiguration("minimal ellipse fit needs exactly 5 points");
    }
    const Matrix d = design_matrix(points);
    Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullV);
    const Vector sv = svd.singularValues();  // 5 values
    if (sv(4) <= 1e-10 * sv(0)) {
        throw DegenerateConfiguration("points do not determine a unique conic");
    }
    const Coeffs c = svd.matrixV().col(5);
    if (conic_discriminant(c) >= 0.0) {
        throw NotAnEllipse("conic through the points is not elliptic");
    }
    return {ConicKind::Ellipse, unit_norm(c)};
}

ConicModel fit_ellipse_direct(std::span<const Point2> points) {
    if (points.size() < 6) {
        throw InsufficientPoints("direct ellipse fit needs at least 6 points");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Matrix d1(n, 3), d2(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = points[static_cast<std::size_t>(i)].x;
        const double y = points[static_cast<std::size_t>(i)].y;
        d1.row(i) << x * x, x * y, y * y;
        d2.row(i) << x, y, 1.0;
    }
    const Eigen::Matrix3d s1 = d1.transpose() * d1;
    const Eigen::Matrix3d s2 = d1.transpose() * d2;
    const Eigen::Matrix3d s3 = d2.transpose() * d2;

    Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) {
        throw SingularScatter("degenerate point configuration (linear scatter singular)");
    }
    const Eigen::Matrix3d t = -lu.solve(s2.transpose());
    const Eigen::Matrix3d m = s1 + s2 * t;
    // Premultiply by C1^{-1} for the constraint 4AC - B^2 = 1.
    Eigen::Matrix3d reduced;
    reduced.row(0) = m.row(2) / 2.0;
    reduced.row(1) = -m.row(1);
    reduced.row(2) = m.row(0) / 2.0;

    Eigen::EigenSolver<Eigen::Matrix3d> eig(reduced);
    int best = -1;
    double best_cond = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(eig.eigenvalues()(i).imag()) > 1e-12) continue;
        const Eigen::Vector3d v = eig.eigenvectors().col(i).real();
        const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
        if (cond > best_cond) {
            best_cond = cond;
            best = i;
        }
    }
    if (best < 0) {
        throw NotAnEllipse("no elliptic solution for this point set");
    }
    const Eigen::Vector3d a1 = eig.eigenvectors().col(best).real();
    const Eigen::Vector3d a2 = t * a1;
    Coeffs c;
    c << a1(0), a1(1), a1(2), a2(0), a2(1), a2(2);
    return {ConicKind::Ellipse, unit_norm(c)};
}

ConicModel fit_conic_ls(std::span<const Point2> points) {
    if (points.size() < 5) {
        throw InsufficientPoints("conic least squares needs at least 5 points");
    }
    const Matrix d = design_matrix(points);
    Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullV);
    const Vector sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol) ++rank;
    }
    if (rank < 3) {
        throw SingularScatter("points carry too little structure for a conic");
    }
    Coeffs c;
    if (rank >= 5) {
        c = svd.matrixV().col(5);
    } else {
        // Ambiguous null space: prefer the lowest-order conic it contains,
        // i.e. minimize the quadratic part over unit vectors of the space.
        const int null_dim = 6 - rank;
        const Matrix basis = svd.matrixV().rightCols(null_dim);
        Eigen::JacobiSVD<Matrix> qsvd(basis.topRows(3), Eigen::ComputeFullV);
        c = basis * qsvd.matrixV().col(null_dim - 1);
    }
    return {ConicKind::GeneralConic, unit_norm(c)};
}

}  // namespace mmfit
