#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "pmsm/eig.hpp"

namespace pmsm {

/// Physical constants of the machine. All values SI, all strictly positive.
struct MotorParams {
    double Ld;   ///< direct-axis inductance [H]
    double Lq;   ///< quadrature-axis inductance [H]
    double Rs;   ///< stator resistance [Ohm]
    double Rm;   ///< viscous friction coefficient [N m s]
    double J;    ///< drive inertia [kg m^2]
    double np;   ///< pole-pair constant [-]
    double Phi;  ///< permanent magnet flux [Wb]

    /// Throws std::invalid_argument naming the first non-positive field.
    void validate() const {
        auto check = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument(std::string("motor parameter must be positive: ") + name);
            }
        };
        check(Ld, "Ld");
        check(Lq, "Lq");
        check(Rs, "Rs");
        check(Rm, "Rm");
        check(J, "J");
        check(np, "np");
        check(Phi, "Phi");
    }

    /// 4.4 Nm / 104.7 rad/s class salient test machine used throughout the tests.
    static MotorParams default_params() {
        return MotorParams{31.2e-3, 55.0e-3, 6.0, 0.02, 3.61e-4, 3.0, 0.236};
    }
};

/// Electrical/mechanical state x = (i_d, i_q, omega).
struct MotorState {
    double id;     ///< d-axis current [A]
    double iq;     ///< q-axis current [A]
    double omega;  ///< electrical angular velocity [rad/s]

    Vec3 vec() const { return {id, iq, omega}; }
    static MotorState from(const Vec3& v) { return {v(0), v(1), v(2)}; }
};

/// Control vector u = (v_d, v_q).
struct InputVoltage {
    double vd;  ///< [V]
    double vq;  ///< [V]

    Vec2 vec() const { return {vd, vq}; }
    static InputVoltage from(const Vec2& v) { return {v(0), v(1)}; }
};

/// The matrices of the compact form D xdot + (C(x) + R) x = G u + d.
struct SystemMatrices {
    Mat3 D;                         ///< inertia-like diagonal, positive definite
    Mat3 R;                         ///< dissipation diagonal, positive definite
    Eigen::Matrix<double, 3, 2> G;  ///< input selector (first two coordinates)
    Vec3 d;                         ///< constant load term
};

inline SystemMatrices system_matrices(const MotorParams& p, double tauL) {
    SystemMatrices m;
    m.D = Vec3(p.Ld, p.Lq, p.J / p.np).asDiagonal();
    m.R = Vec3(p.Rs, p.Rs, p.Rm / p.np).asDiagonal();
    m.G.setZero();
    m.G(0, 0) = 1.0;
    m.G(1, 1) = 1.0;
    m.d = Vec3(0.0, 0.0, -tauL / p.np);
    return m;
}

/// Skew-symmetric coupling matrix C(x); C(x) = -C(x)^T exactly.
inline Mat3 coriolis(const MotorState& x, const MotorParams& p) {
    const double c13 = -p.Lq * x.iq;
    const double c23 = p.Ld * x.id + p.Phi;
    Mat3 C;
    C << 0.0, 0.0, c13,
         0.0, 0.0, c23,
        -c13, -c23, 0.0;
    return C;
}

/// Continuous-time dq model: returns (di_d/dt, di_q/dt, domega/dt).
inline Vec3 dynamics(const MotorState& x, const InputVoltage& u, double tauL,
                     const MotorParams& p) {
    const double did = (-p.Rs * x.id + x.omega * p.Lq * x.iq + u.vd) / p.Ld;
    const double diq = (-p.Rs * x.iq - x.omega * p.Ld * x.id - x.omega * p.Phi + u.vq) / p.Lq;
    const double dom =
        (-p.Rm * x.omega + p.np * ((p.Ld - p.Lq) * x.id * x.iq + p.Phi * x.iq) - tauL) / p.J;
    return {did, diq, dom};
}

/// Total energy H(x) = 1/2 x^T D x. Nonnegative, zero only at the origin.
inline double energy(const MotorState& x, const MotorParams& p) {
    return 0.5 * (p.Ld * x.id * x.id + p.Lq * x.iq * x.iq + (p.J / p.np) * x.omega * x.omega);
}

/// Stored + dissipated - supplied + extracted power, which vanishes when
/// `xdot` is the exact model derivative for (x, u, tauL).
inline double power_balance_residual(const MotorState& x, const Vec3& xdot,
                                     const InputVoltage& u, double tauL, const MotorParams& p) {
    const SystemMatrices m = system_matrices(p, tauL);
    const Vec3 xv = x.vec();
    const double hdot = xv.dot(m.D * xdot);
    const double dissipated = xv.dot(m.R * xv);
    const double supplied = x.id * u.vd + x.iq * u.vq;
    const double extracted = x.omega * tauL / p.np;
    return hdot + dissipated - supplied + extracted;
}

/// |residual| scaled by 1 + the magnitudes of the four balance terms.
inline double power_balance_residual_normalized(const MotorState& x, const Vec3& xdot,
                                                const InputVoltage& u, double tauL,
                                                const MotorParams& p) {
    const SystemMatrices m = system_matrices(p, tauL);
    const Vec3 xv = x.vec();
    const double hdot = xv.dot(m.D * xdot);
    const double dissipated = xv.dot(m.R * xv);
    const double supplied = x.id * u.vd + x.iq * u.vq;
    const double extracted = x.omega * tauL / p.np;
    const double residual = hdot + dissipated - supplied + extracted;
    const double scale =
        1.0 + std::abs(hdot) + std::abs(dissipated) + std::abs(supplied) + std::abs(extracted);
    return std::abs(residual) / scale;
}

}  // namespace pmsm
