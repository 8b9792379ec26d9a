#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pmsm/controllers.hpp"
#include "pmsm/equilibrium.hpp"
#include "pmsm/lyapunov.hpp"
#include "pmsm/motor.hpp"
#include "pmsm/profile.hpp"

namespace pmsm {

enum class ScenarioId { C1, C2, C3, C4 };

inline const char* to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::C1: return "C1";
        case ScenarioId::C2: return "C2";
        case ScenarioId::C3: return "C3";
        case ScenarioId::C4: return "C4";
    }
    return "?";
}

/// Gain set for a scenario; only the fields used by the scenario's
/// controller are read.
struct ScenarioGains {
    Mat2 KP = 15.0 * Mat2::Identity();  ///< current PI proportional [Ohm]
    Mat2 KI = 2000.0 * Mat2::Identity();  ///< current PI integral [Ohm/s]
    double ell = 20.0;    ///< torque-observer gain [N m s]
    double gamma = 200.0; ///< friction-estimator adaptation gain
    double alpha = 300.0; ///< estimator filter pole [1/s]
    double beta = 300.0;  ///< estimator filter gain [1/s]
    double aP = 0.03;     ///< outer speed PI proportional
    double aI = 1.1;      ///< outer speed PI integral

    PiGains pi() const { return PiGains{KP, KI}; }
};

/// Initial controller states. Everything defaults to rest except the
/// friction estimate, which starts at a deliberately wrong value so the
/// adaptation is visible.
struct ControllerInit {
    Vec2 xc0{0.0, 0.0};
    double chi0 = 0.0;
    double rmHat0 = 0.005;
    double outerChi0 = 0.0;
    Eigen::Vector4d filters0{0.0, 0.0, 0.0, 0.0};
    /// When set, x0 and all controller states are replaced by the values
    /// that hold the loop at the t = 0 operating point (filters at their
    /// steady state), so only commanded reference changes excite the system.
    bool atEquilibrium = false;
};

struct Scenario {
    ScenarioId id = ScenarioId::C1;
    Profile speedRef = Profile::constant(104.7);
    Profile loadTorque = Profile::constant(1.0);
    ScenarioGains gains;
    double dt = 1e-5;      ///< integrator step [s]
    double horizon = 2.0;  ///< [s]
    MotorState x0{0.0, 0.0, 0.0};
    ControllerInit init;
    int decimation = 10;   ///< record every N-th step

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("scenario.dt must be positive");
        if (!(horizon >= dt)) throw std::invalid_argument("scenario.horizon must be >= dt");
        if (decimation < 1) throw std::invalid_argument("scenario.decimation must be >= 1");
        speedRef.validate();
        loadTorque.validate();
        if (!(sym_eigenvalues(gains.KP)(1) > 0.0) || !(sym_eigenvalues(gains.KI)(1) > 0.0)) {
            throw std::invalid_argument("gains.kp and gains.ki must be positive definite");
        }
        const bool needsObserver = id == ScenarioId::C2 || id == ScenarioId::C3;
        if (needsObserver && !(gains.ell > 0.0)) {
            throw std::invalid_argument("gains.ell must be positive");
        }
        if (id == ScenarioId::C3 &&
            (!(gains.gamma > 0.0) || !(gains.alpha > 0.0) || !(gains.beta > 0.0))) {
            throw std::invalid_argument("gains.gamma, gains.alpha, gains.beta must be positive");
        }
        if (id == ScenarioId::C4 && (!(gains.aP > 0.0) || !(gains.aI > 0.0))) {
            throw std::invalid_argument("gains.ap and gains.ai must be positive");
        }
    }
};

/// Closed-loop state; which components are live depends on the scenario.
struct AugmentedState {
    MotorState x{0.0, 0.0, 0.0};
    Vec2 xc{0.0, 0.0};
    double chi = 0.0;                          ///< C2, C3
    Eigen::Vector4d w{0.0, 0.0, 0.0, 0.0};     ///< C3 filter states
    double rmHat = 0.0;                        ///< C3
    double outerChi = 0.0;                     ///< C4
};

inline int state_dim(ScenarioId id) {
    switch (id) {
        case ScenarioId::C1: return 5;
        case ScenarioId::C2: return 6;
        case ScenarioId::C3: return 11;
        case ScenarioId::C4: return 6;
    }
    return 5;
}

/// Packed state vector; sized at most 11, stack-allocated.
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 11, 1>;

inline StateVec pack_state(const AugmentedState& s, ScenarioId id) {
    StateVec v(state_dim(id));
    v.head<3>() = s.x.vec();
    v.segment<2>(3) = s.xc;
    switch (id) {
        case ScenarioId::C1:
            break;
        case ScenarioId::C2:
            v(5) = s.chi;
            break;
        case ScenarioId::C3:
            v(5) = s.chi;
            v.segment<4>(6) = s.w;
            v(10) = s.rmHat;
            break;
        case ScenarioId::C4:
            v(5) = s.outerChi;
            break;
    }
    return v;
}

inline AugmentedState unpack_state(const StateVec& v, ScenarioId id) {
    AugmentedState s;
    s.x = MotorState::from(v.head<3>());
    s.xc = v.segment<2>(3);
    switch (id) {
        case ScenarioId::C1:
            break;
        case ScenarioId::C2:
            s.chi = v(5);
            break;
        case ScenarioId::C3:
            s.chi = v(5);
            s.w = v.segment<4>(6);
            s.rmHat = v(10);
            break;
        case ScenarioId::C4:
            s.outerChi = v(5);
            break;
    }
    return s;
}

/// One classical fourth-order Runge-Kutta step. Deterministic; non-finite
/// values propagate to the caller.
template <typename F, typename V>
V rk4_step(F&& f, const V& s, double t, double dt) {
    const V k1 = f(s, t);
    const V k2 = f(V(s + 0.5 * dt * k1), t + 0.5 * dt);
    const V k3 = f(V(s + 0.5 * dt * k2), t + 0.5 * dt);
    const V k4 = f(V(s + dt * k3), t + dt);
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Everything one field evaluation produces: the packed derivative plus the
/// quantities worth recording at that instant.
struct FieldEval {
    StateVec sdot;
    InputVoltage u;
    double x2Ref = 0.0;                ///< q-current reference in effect
    std::optional<double> tauHat;      ///< C2, C3
    std::optional<double> rmHat;       ///< C3
};

inline FieldEval closed_loop_eval(const StateVec& v, double t, const Scenario& sc,
                                  const MotorParams& p) {
    const AugmentedState s = unpack_state(v, sc.id);
    const double tauL = eval_profile(sc.loadTorque, t);
    const double omegaRef = eval_profile(sc.speedRef, t);
    const PiGains g = sc.gains.pi();

    FieldEval out;
    out.sdot.resize(v.size());
    PiOutput po;

    switch (sc.id) {
        case ScenarioId::C1: {
            out.x2Ref = reference_q_current(tauL, omegaRef, p);
            po = pi_control(PiState{s.xc}, y_tilde(s.x, out.x2Ref), g);
            break;
        }
        case ScenarioId::C2: {
            const ObserverOutput oo =
                torque_observer_step(ObserverState{s.chi, sc.gains.ell}, s.x, omegaRef, p);
            out.x2Ref = oo.x2Hat;
            out.tauHat = oo.tauHat;
            po = adaptive_pi_control(PiState{s.xc}, s.x, oo.x2Hat, g);
            out.sdot(5) = oo.chiDot;
            break;
        }
        case ScenarioId::C3: {
            const RmEstimatorState est{s.w(0), s.w(1), s.w(2), s.w(3), s.rmHat,
                                       sc.gains.alpha, sc.gains.beta, sc.gains.gamma};
            const RmFilterOutput fo = rm_filter_step(est, s.x, p);
            // The control side runs on the estimated friction coefficient.
            MotorParams pHat = p;
            pHat.Rm = s.rmHat;
            const ObserverOutput oo =
                torque_observer_step(ObserverState{s.chi, sc.gains.ell}, s.x, omegaRef, pHat);
            out.x2Ref = oo.x2Hat;
            out.tauHat = oo.tauHat;
            out.rmHat = s.rmHat;
            po = adaptive_pi_control(PiState{s.xc}, s.x, oo.x2Hat, g);
            out.sdot(5) = oo.chiDot;
            out.sdot.segment<4>(6) = fo.stateDots;
            out.sdot(10) = rm_estimator_step(est, fo.z, fo.phi);
            break;
        }
        case ScenarioId::C4: {
            const OuterPiOutput opo =
                outer_pi(OuterPiState{s.outerChi, sc.gains.aP, sc.gains.aI}, s.x.omega - omegaRef);
            out.x2Ref = opo.x2Ref;
            po = adaptive_pi_control(PiState{s.xc}, s.x, opo.x2Ref, g);
            out.sdot(5) = opo.chiDot;
            break;
        }
    }

    out.u = po.u;
    out.sdot.head<3>() = dynamics(s.x, po.u, tauL, p);
    out.sdot.segment<2>(3) = po.xcDot;
    return out;
}

/// Derivative of the full closed-loop state.
inline AugmentedState closed_loop_field(const AugmentedState& s, double t, const Scenario& sc,
                                        const MotorParams& p) {
    return unpack_state(closed_loop_eval(pack_state(s, sc.id), t, sc, p).sdot, sc.id);
}

/// Initial packed state, honoring ControllerInit.
inline StateVec initial_state(const Scenario& sc, const MotorParams& p) {
    AugmentedState s;
    s.x = sc.x0;
    s.xc = sc.init.xc0;
    s.chi = sc.init.chi0;
    s.w = sc.init.filters0;
    s.rmHat = sc.init.rmHat0;
    s.outerChi = sc.init.outerChi0;

    if (sc.init.atEquilibrium) {
        const double tauL = eval_profile(sc.loadTorque, 0.0);
        const double omega0 = eval_profile(sc.speedRef, 0.0);
        const Equilibrium eq = equilibrium(omega0, tauL, p);
        s.x = eq.xStar;
        s.xc = controller_equilibrium(sc.gains.KI, eq.uStar);
        switch (sc.id) {
            case ScenarioId::C1:
                break;
            case ScenarioId::C2:
                s.chi = omega0 + tauL / sc.gains.ell;
                break;
            case ScenarioId::C3: {
                // The observer rests where its friction-mismatch bias puts it.
                s.chi = omega0 + (tauL + (p.Rm - s.rmHat) * omega0) / sc.gains.ell;
                const RmEstimatorState est{0.0, 0.0, 0.0, 0.0, s.rmHat,
                                           sc.gains.alpha, sc.gains.beta, sc.gains.gamma};
                s.w = rm_filter_steady_state(est, s.x, p);
                break;
            }
            case ScenarioId::C4:
                s.outerChi = -eq.xStar.iq / sc.gains.aI;
                break;
        }
    }
    return pack_state(s, sc.id);
}

/// One recorded point of a run.
struct TrajectorySample {
    double t = 0.0;
    MotorState x{0.0, 0.0, 0.0};
    InputVoltage u{0.0, 0.0};
    Vec2 xc{0.0, 0.0};
    std::optional<double> tauHat;
    std::optional<double> rmHat;
    double x2Ref = 0.0;
    double W = 0.0;   ///< Lyapunov candidate vs the instantaneous operating point [J]
    double U = 0.0;   ///< incremental motor storage [J]
    double Hc = 0.0;  ///< controller storage [J]
    double powerResidual = 0.0;  ///< raw power-balance residual [W]
};

struct Trajectory {
    ScenarioId id = ScenarioId::C1;
    double dt = 0.0;
    int decimation = 1;
    std::vector<TrajectorySample> samples;
    bool diverged = false;
    double divergenceTime = 0.0;
};

inline std::int64_t step_count(const Scenario& sc) {
    return static_cast<std::int64_t>(std::llround(sc.horizon / sc.dt));
}

/// Number of records a non-diverging run produces.
inline std::int64_t expected_record_count(const Scenario& sc) {
    return step_count(sc) / sc.decimation + 1;
}

/// Fixed-step integration of the closed loop. Divergence (state norm above
/// 1e6 or any non-finite component, checked at recording instants) is a
/// flagged outcome: the trajectory keeps every sample before the bad one.
inline Trajectory run_scenario(const Scenario& sc, const MotorParams& p) {
    sc.validate();
    p.validate();

    Trajectory traj;
    traj.id = sc.id;
    traj.dt = sc.dt;
    traj.decimation = sc.decimation;

    auto field = [&](const StateVec& v, double t) -> StateVec {
        return closed_loop_eval(v, t, sc, p).sdot;
    };

    const std::int64_t n = step_count(sc);
    StateVec v = initial_state(sc, p);
    for (std::int64_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * sc.dt;
        if (k % sc.decimation == 0) {
            if (!v.allFinite() || v.head<3>().norm() > 1e6) {
                traj.diverged = true;
                traj.divergenceTime = t;
                break;
            }
            const FieldEval fe = closed_loop_eval(v, t, sc, p);
            const AugmentedState s = unpack_state(v, sc.id);
            const double tauL = eval_profile(sc.loadTorque, t);
            const double omegaRef = eval_profile(sc.speedRef, t);
            const Equilibrium eq = equilibrium(omegaRef, tauL, p);

            TrajectorySample rec;
            rec.t = t;
            rec.x = s.x;
            rec.u = fe.u;
            rec.xc = s.xc;
            rec.tauHat = fe.tauHat;
            rec.rmHat = fe.rmHat;
            rec.x2Ref = fe.x2Ref;
            const Vec3 xTilde = s.x.vec() - eq.xStar.vec();
            const Vec2 xcTilde = s.xc - controller_equilibrium(sc.gains.KI, eq.uStar);
            rec.U = storage_U(xTilde, p);
            rec.Hc = storage_Hc(xcTilde, sc.gains.KI);
            rec.W = rec.U + rec.Hc;
            rec.powerResidual =
                power_balance_residual(s.x, dynamics(s.x, fe.u, tauL, p), fe.u, tauL, p);
            traj.samples.push_back(rec);
        }
        if (k == n) break;
        v = rk4_step(field, v, t, sc.dt);
    }
    return traj;
}

}  // namespace pmsm
