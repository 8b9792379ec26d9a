#pragma once

#include "pmsm/eig.hpp"
#include "pmsm/equilibrium.hpp"

namespace pmsm {

/// Incremental-energy storage U = 1/2 ||xTilde||^2_D.
inline double storage_U(const Vec3& xTilde, const MotorParams& p) {
    return 0.5 * (p.Ld * xTilde(0) * xTilde(0) + p.Lq * xTilde(1) * xTilde(1) +
                  (p.J / p.np) * xTilde(2) * xTilde(2));
}

/// Controller storage Hc = 1/2 ||xcTilde||^2_KI. KI must be positive definite.
inline double storage_Hc(const Vec2& xcTilde, const Mat2& KI) {
    if (!(sym_eigenvalues(KI)(1) > 0.0)) {
        throw std::invalid_argument("integral gain must be positive definite");
    }
    return 0.5 * xcTilde.dot(KI * xcTilde);
}

/// Integrator value that holds the loop at an equilibrium: xc* = -KI^{-1} u*.
inline Vec2 controller_equilibrium(const Mat2& KI, const InputVoltage& uStar) {
    if (!(sym_eigenvalues(KI)(1) > 0.0)) {
        throw std::invalid_argument("integral gain must be positive definite");
    }
    return KI.fullPivLu().solve(-uStar.vec());
}

/// Radially unbounded Lyapunov candidate W = U + Hc.
inline double lyapunov_W(const Vec3& xTilde, const Vec2& xcTilde, const MotorParams& p,
                         const Mat2& KI) {
    return storage_U(xTilde, p) + storage_Hc(xcTilde, KI);
}

}  // namespace pmsm
