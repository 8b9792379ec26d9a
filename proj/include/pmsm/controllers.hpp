#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

#include "pmsm/equilibrium.hpp"
#include "pmsm/motor.hpp"

namespace pmsm {

/// Current-loop PI gains. Both matrices must be symmetric positive definite.
struct PiGains {
    Mat2 KP;  ///< proportional gain [Ohm]
    Mat2 KI;  ///< integral gain [Ohm/s]

    static PiGains scalar(double kp, double ki) {
        return PiGains{kp * Mat2::Identity(), ki * Mat2::Identity()};
    }
};

/// Integrator state of the current PI.
struct PiState {
    Vec2 xc{0.0, 0.0};  ///< [A s]
};

struct PiOutput {
    InputVoltage u;
    Vec2 xcDot;
};

/// Current error against the reference (0, x2Star).
inline Vec2 y_tilde(const MotorState& x, double x2Star) {
    return {x.id, x.iq - x2Star};
}

/// Classical PI around the current errors: u = -KI xc - KP yTilde.
inline PiOutput pi_control(const PiState& s, const Vec2& yTilde, const PiGains& g) {
    const Vec2 u = -g.KI * s.xc - g.KP * yTilde;
    return PiOutput{InputVoltage::from(u), yTilde};
}

/// Same law with the reference current replaced by an estimate.
inline PiOutput adaptive_pi_control(const PiState& s, const MotorState& x, double x2Hat,
                                    const PiGains& g) {
    return pi_control(s, y_tilde(x, x2Hat), g);
}

/// Reduced-order load-torque observer state.
struct ObserverState {
    double chi = 0.0;  ///< filtered-speed state [rad/s]
    double ell;        ///< observer gain, > 0 [N m s]
};

struct ObserverOutput {
    double chiDot;  ///< [rad/s^2]
    double tauHat;  ///< load-torque estimate [N m]
    double x2Hat;   ///< estimated reference q-current [A]
};

/// One evaluation of the torque observer. The estimation error obeys
/// de/dt = -(ell/J) e, so the estimate converges exponentially for any
/// ell > 0. Needs Ld, Lq, J, Phi and Rm from `p`.
inline ObserverOutput torque_observer_step(const ObserverState& o, const MotorState& x,
                                           double omegaStar, const MotorParams& p) {
    const double torque = p.np * ((p.Ld - p.Lq) * x.id * x.iq + p.Phi * x.iq);
    const double tauHat = o.ell * (o.chi - x.omega);
    const double chiDot = (-p.Rm * x.omega + torque - tauHat) / p.J;
    const double x2Hat = (tauHat + p.Rm * omegaStar) / (p.np * p.Phi);
    return ObserverOutput{chiDot, tauHat, x2Hat};
}

/// Gradient estimator of the viscous friction coefficient, with the two
/// second-order filters that build its regression signals.
///
/// Both filter channels share the denominator (p + alpha)^2 and are realized
/// with two states each, zero derivative of the raw speed required. The
/// z channel combines the derivative operator beta p^2/(p+alpha)^2 acting on
/// -J*omega with beta p/(p+alpha)^2 acting on the electromagnetic torque, so
/// that z = Rm * phi holds along motor trajectories once initial-condition
/// transients die out.
struct RmEstimatorState {
    double wz1 = 0.0;  ///< z-channel filter state
    double wz2 = 0.0;  ///< z-channel filter state
    double wp1 = 0.0;  ///< phi-channel filter state
    double wp2 = 0.0;  ///< phi-channel filter state
    double rmHat = 0.005;  ///< friction estimate [N m s]
    double alpha;      ///< filter pole, > 0 [1/s]
    double beta;       ///< filter gain, > 0 [1/s]
    double gamma;      ///< adaptation gain, > 0
};

struct RmFilterOutput {
    double z;    ///< filtered torque-balance signal
    double phi;  ///< filtered speed derivative (regressor)
    Eigen::Vector4d stateDots;  ///< (wz1, wz2, wp1, wp2) derivatives
};

/// z-channel input pair: the derivative channel acts on a = -J*omega, the
/// proper channel on b = np((Ld-Lq) id iq + Phi iq).
inline std::pair<double, double> rm_filter_inputs(const MotorState& x, const MotorParams& p) {
    const double a = -p.J * x.omega;
    const double b = p.np * ((p.Ld - p.Lq) * x.id * x.iq + p.Phi * x.iq);
    return {a, b};
}

inline RmFilterOutput rm_filter_step(const RmEstimatorState& e, const MotorState& x,
                                     const MotorParams& p) {
    const double al = e.alpha;
    const double be = e.beta;
    const auto [a, b] = rm_filter_inputs(x, p);
    // z = beta*a + wz1 with (p+alpha)^2 wz1 = -beta(2 alpha p + alpha^2) a + beta p b
    const double wz1Dot = -2.0 * al * e.wz1 + e.wz2 - 2.0 * al * be * a + be * b;
    const double wz2Dot = -al * al * e.wz1 - al * al * be * a;
    const double z = be * a + e.wz1;
    // phi = beta * wp2 with wp states in controllable canonical form
    const double wp1Dot = e.wp2;
    const double wp2Dot = -al * al * e.wp1 - 2.0 * al * e.wp2 + x.omega;
    const double phi = be * e.wp2;
    return RmFilterOutput{z, phi, {wz1Dot, wz2Dot, wp1Dot, wp2Dot}};
}

/// Steady filter state for constant inputs, so that z = phi = 0 from t = 0
/// when a scenario starts at an operating point.
inline Eigen::Vector4d rm_filter_steady_state(const RmEstimatorState& e, const MotorState& x,
                                              const MotorParams& p) {
    const auto [a, b] = rm_filter_inputs(x, p);
    return {-e.beta * a, -e.beta * b, x.omega / (e.alpha * e.alpha), 0.0};
}

/// Gradient update: d rmHat/dt = gamma phi (z - rmHat phi). No adaptation
/// without excitation (phi = 0).
inline double rm_estimator_step(const RmEstimatorState& e, double z, double phi) {
    return e.gamma * phi * (z - e.rmHat * phi);
}

/// Outer-loop speed PI that generates the q-current reference in the
/// conventional nested configuration.
struct OuterPiState {
    double chi = 0.0;  ///< speed-error integral [rad]
    double aP;         ///< proportional gain, > 0
    double aI;         ///< integral gain, > 0
};

struct OuterPiOutput {
    double x2Ref;   ///< q-current reference [A]
    double chiDot;  ///< [rad/s]
};

inline OuterPiOutput outer_pi(const OuterPiState& s, double omegaTilde) {
    return OuterPiOutput{-s.aI * s.chi - s.aP * omegaTilde, omegaTilde};
}

}  // namespace pmsm
