#pragma once

#include "pmsm/motor.hpp"

namespace pmsm {

/// Desired operating point: zero d-current, all stator current in torque
/// production, together with the voltage that holds it.
struct Equilibrium {
    MotorState xStar;
    InputVoltage uStar;
    double tauL;       ///< load torque the point is computed for [N m]
    double omegaStar;  ///< desired electrical speed [rad/s]
};

/// Forced equilibrium for a given speed reference and load torque.
///
/// x* = (0, (tauL + Rm w*)/(np Phi), w*); u* solves the steady-state
/// equations exactly, so dynamics(x*, u*, tauL) == 0 to rounding.
inline Equilibrium equilibrium(double omegaStar, double tauL, const MotorParams& p) {
    const double iqStar = (tauL + p.Rm * omegaStar) / (p.np * p.Phi);
    const double vd = -p.Lq * omegaStar * iqStar;
    const double vq = p.Phi * omegaStar + p.Rs * iqStar;
    return Equilibrium{{0.0, iqStar, omegaStar}, {vd, vq}, tauL, omegaStar};
}

/// Reference q-current for a load torque estimate; the second component of
/// the current reference used by every controller.
inline double reference_q_current(double tauL, double omegaStar, const MotorParams& p) {
    return (tauL + p.Rm * omegaStar) / (p.np * p.Phi);
}

}  // namespace pmsm
