#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace pmsm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;

/// Eigenvalues of a symmetric 2x2 matrix, descending. Closed form.
inline Vec2 sym_eigenvalues(const Mat2& A) {
    const double mean = 0.5 * (A(0, 0) + A(1, 1));
    const double diff = 0.5 * (A(0, 0) - A(1, 1));
    const double r = std::hypot(diff, 0.5 * (A(0, 1) + A(1, 0)));
    return {mean + r, mean - r};
}

/// Eigenvalues of a symmetric 3x3 matrix, descending.
///
/// Trigonometric solution of the characteristic cubic; exact for diagonal
/// input. Only the lower triangle is read.
inline Vec3 sym_eigenvalues(const Mat3& A) {
    const double a01 = A(1, 0), a02 = A(2, 0), a12 = A(2, 1);
    const double p1 = a01 * a01 + a02 * a02 + a12 * a12;
    if (p1 == 0.0) {
        Vec3 d(A(0, 0), A(1, 1), A(2, 2));
        std::sort(d.data(), d.data() + 3, std::greater<double>());
        return d;
    }
    const double q = (A(0, 0) + A(1, 1) + A(2, 2)) / 3.0;
    const double p2 = (A(0, 0) - q) * (A(0, 0) - q) + (A(1, 1) - q) * (A(1, 1) - q) +
                      (A(2, 2) - q) * (A(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Mat3 B = A.selfadjointView<Eigen::Lower>();
    B.diagonal().array() -= q;
    B /= p;
    double r = 0.5 * B.determinant();
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double lam1 = q + 2.0 * p * std::cos(phi);
    const double lam3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    return {lam1, 3.0 * q - lam1 - lam3, lam3};
}

inline double min_eigenvalue(const Mat3& A) { return sym_eigenvalues(A)(2); }

/// Root of a nondecreasing function g on [lo, hi] by bisection.
/// Requires g(lo) < 0 <= g(hi); converges to absolute width `tol`.
inline double bisect_nondecreasing(const std::function<double(double)>& g, double lo, double hi,
                                   double tol) {
    double glo = g(lo);
    double ghi = g(hi);
    if (!(glo < 0.0) || !(ghi >= 0.0)) {
        throw std::runtime_error("bisection bracket does not straddle a sign change");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) >= 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace pmsm
