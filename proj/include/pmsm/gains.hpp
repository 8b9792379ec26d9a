#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "pmsm/eig.hpp"
#include "pmsm/equilibrium.hpp"

namespace pmsm {

/// Dissipation matrix of the incremental model at an operating point
/// (x2Star, x3Star). The model is output passive with index `epsilon`
/// whenever this matrix is positive semidefinite.
inline Mat3 incremental_dissipation(double x2Star, double x3Star, double epsilon,
                                    const MotorParams& p) {
    const double offDiag = (p.Ld - p.Lq) * x3Star;
    const double cross = -p.Ld * x2Star;
    Mat3 B;
    B << 2.0 * p.Rs + 2.0 * epsilon, offDiag, cross,
         offDiag, 2.0 * p.Rs + 2.0 * epsilon, 0.0,
         cross, 0.0, 2.0 * p.Rm / p.np;
    return B;
}

struct DissipationReport {
    Mat3 B;
    double epsilon;  ///< passivity index the matrix was built for [Ohm]
    double minEig;   ///< smallest eigenvalue of B
};

inline DissipationReport dissipation_matrix(const Equilibrium& eq, double epsilon,
                                            const MotorParams& p) {
    DissipationReport rep;
    rep.B = incremental_dissipation(eq.xStar.iq, eq.xStar.omega, epsilon, p);
    rep.epsilon = epsilon;
    rep.minEig = min_eigenvalue(rep.B);
    return rep;
}

/// Smallest passivity index epsilon* with B(epsilon) >= 0 at the given
/// operating point, found by bisection on the smallest eigenvalue (which is
/// nondecreasing in epsilon). Negative epsilon* means the incremental model
/// is output strictly passive there.
///
/// Throws if epsilon* falls outside [-1e3, 1e3] Ohm.
inline double passivity_margin(const Equilibrium& eq, const MotorParams& p) {
    auto minEig = [&](double eps) {
        return min_eigenvalue(incremental_dissipation(eq.xStar.iq, eq.xStar.omega, eps, p));
    };
    const double lo = -1e3, hi = 1e3;
    if (!(minEig(lo) < 0.0) || !(minEig(hi) >= 0.0)) {
        throw std::runtime_error("passivity margin out of range [-1e3, 1e3] Ohm");
    }
    return bisect_nondecreasing(minEig, lo, hi, 1e-12);
}

/// Closed-loop damping matrix R_d for proportional gain kp. Positive
/// definiteness certifies global asymptotic stability of the PI loop.
inline Mat3 damping_matrix(double kp, double x2Star, double omegaStar, const MotorParams& p) {
    return incremental_dissipation(x2Star, omegaStar, kp, p);
}

inline Mat3 damping_matrix(double kp, const Equilibrium& eq, const MotorParams& p) {
    return damping_matrix(kp, eq.xStar.iq, eq.omegaStar, p);
}

/// Damping matrix for a full 2x2 symmetric proportional gain; reduces to the
/// scalar form when KP = kp*I.
inline Mat3 damping_matrix_general(const Mat2& KP, double x2Star, double omegaStar,
                                   const MotorParams& p) {
    Mat3 Rd = incremental_dissipation(x2Star, omegaStar, 0.0, p);
    Rd.topLeftCorner<2, 2>() += 2.0 * KP;
    return Rd;
}

enum class GainMethod { GeneralEigen, NonsalientClosedForm };

struct GainCertificate {
    double kpMin;       ///< boundary value of the stabilizing gain [Ohm]
    Mat3 Rd;            ///< damping matrix evaluated at kpMin
    GainMethod method;
    double tauMax;      ///< load-torque bound the certificate covers [N m]
};

/// Worst-case reference q-current implied by a load-torque bound.
inline double worst_case_q_current(double omegaStar, double tauMax, const MotorParams& p) {
    return (tauMax + p.Rm * std::abs(omegaStar)) / (p.np * p.Phi);
}

/// Minimal proportional gain with R_d > 0 for every load torque up to
/// tauMax in magnitude. Exact boundary value; callers should add a margin.
inline GainCertificate kp_min_general(double omegaStar, double tauMax, const MotorParams& p) {
    if (tauMax < 0.0) {
        throw std::invalid_argument("tauMax must be nonnegative");
    }
    const double x2w = worst_case_q_current(omegaStar, tauMax, p);
    // Schur complement of R_d against its (3,3) block, as a 2x2 bound on Rs + kp.
    Mat2 M;
    M << p.np * p.Ld * p.Ld * x2w * x2w / (2.0 * p.Rm), (p.Lq - p.Ld) * omegaStar,
         (p.Lq - p.Ld) * omegaStar, 0.0;
    M *= 0.5;
    const double kpMin = sym_eigenvalues(M)(0) - p.Rs;
    return GainCertificate{kpMin, damping_matrix(kpMin, x2w, omegaStar, p),
                           GainMethod::GeneralEigen, tauMax};
}

/// Closed-form gain bound for non-salient machines (Ld == Lq).
inline double kp_min_nonsalient(double omegaStar, double tauL, const MotorParams& p) {
    if (std::abs(p.Ld - p.Lq) > 1e-12 * std::max(p.Ld, p.Lq)) {
        throw std::invalid_argument("closed-form gain bound requires Ld == Lq");
    }
    const double s = tauL + p.Rm * std::abs(omegaStar);
    return p.Ld * p.Ld * s * s / (4.0 * p.Rm * p.np * p.Phi * p.Phi) - p.Rs;
}

/// Jacobian of the closed-loop vector field (motor + current PI with
/// KP = kp*I) at the equilibrium (x*, xc*). State order (id, iq, omega, xc).
inline Mat5 closed_loop_jacobian(double kp, const Mat2& KI, const Equilibrium& eq,
                                 const MotorParams& p) {
    const double x1 = eq.xStar.id;
    const double x2 = eq.xStar.iq;
    const double x3 = eq.xStar.omega;
    Mat5 A = Mat5::Zero();
    // d-axis current row
    A(0, 0) = (-p.Rs - kp) / p.Ld;
    A(0, 1) = p.Lq * x3 / p.Ld;
    A(0, 2) = p.Lq * x2 / p.Ld;
    A(0, 3) = -KI(0, 0) / p.Ld;
    A(0, 4) = -KI(0, 1) / p.Ld;
    // q-axis current row
    A(1, 0) = -p.Ld * x3 / p.Lq;
    A(1, 1) = (-p.Rs - kp) / p.Lq;
    A(1, 2) = (-p.Ld * x1 - p.Phi) / p.Lq;
    A(1, 3) = -KI(1, 0) / p.Lq;
    A(1, 4) = -KI(1, 1) / p.Lq;
    // mechanical row
    A(2, 0) = p.np * (p.Ld - p.Lq) * x2 / p.J;
    A(2, 1) = p.np * ((p.Ld - p.Lq) * x1 + p.Phi) / p.J;
    A(2, 2) = -p.Rm / p.J;
    // integrator rows
    A(3, 0) = 1.0;
    A(4, 1) = 1.0;
    return A;
}

/// Largest real part over the spectrum of a (generally non-symmetric) 5x5.
inline double max_real_eigenvalue(const Mat5& A) {
    Eigen::EigenSolver<Mat5> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

/// Local-stability boundary in kp, bisected on the spectral abscissa of the
/// closed-loop Jacobian. The bracket must straddle a Hurwitz transition.
inline double kp_stability_boundary(const Mat2& KI, const Equilibrium& eq, const MotorParams& p,
                                    double lo, double hi, double tol = 1e-3) {
    auto abscissa = [&](double kp) {
        return max_real_eigenvalue(closed_loop_jacobian(kp, KI, eq, p));
    };
    const bool stableLo = abscissa(lo) < 0.0;
    bool stableHi = abscissa(hi) < 0.0;
    if (stableLo == stableHi) {
        throw std::runtime_error("stability-boundary bracket does not straddle a transition");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if ((abscissa(mid) < 0.0) == stableHi) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace pmsm
