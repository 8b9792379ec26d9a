#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmsm/gains.hpp"
#include "pmsm/lyapunov.hpp"
#include "pmsm/sim.hpp"

namespace pmsm {

/// Numerical certificates extracted from a single trajectory.
struct CertificateReport {
    double maxLyapunovIncrease = 0.0;       ///< max per-record W increase [J]
    double maxDissipationViolation = 0.0;   ///< normalized, C1 only
    double maxDotWMismatch = 0.0;           ///< normalized, C1 only
    double maxPowerResidual = 0.0;          ///< normalized
    std::optional<double> fittedObserverRate;  ///< [1/s], C2/C3 only
    bool diverged = false;
    double divergenceTime = 0.0;            ///< [s], meaningful when diverged
};

inline double max_lyapunov_increase(const Trajectory& traj) {
    double worst = 0.0;
    for (std::size_t k = 1; k < traj.samples.size(); ++k) {
        worst = std::max(worst, traj.samples[k].W - traj.samples[k - 1].W);
    }
    return worst;
}

/// Worst normalized mismatch between the centered-difference derivative of
/// the recorded W and the quadratic decay -1/2 ||xTilde||^2_Rd it must equal
/// along a constant-reference PI run.
inline double dotW_identity_residual(const Trajectory& traj, const Equilibrium& eq,
                                     const MotorParams& p, const PiGains& gains) {
    const auto& s = traj.samples;
    if (s.size() < 3) throw std::invalid_argument("trajectory too short for derivative monitors");
    const Mat3 Rd = damping_matrix_general(gains.KP, eq.xStar.iq, eq.omegaStar, p);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double h = s[k + 1].t - s[k - 1].t;
        const double dWnum = (s[k + 1].W - s[k - 1].W) / h;
        const Vec3 xTilde = s[k].x.vec() - eq.xStar.vec();
        const double dWpred = -0.5 * xTilde.dot(Rd * xTilde);
        worst = std::max(worst, std::abs(dWnum - dWpred) / std::max(1.0, std::abs(dWnum)));
    }
    return worst;
}

/// Worst positive slack of dU/dt <= epsilon |yTilde|^2 + yTilde . uTilde,
/// normalized the same way. Nonpositive values mean the inequality held.
inline double dissipation_check(const Trajectory& traj, const Equilibrium& eq,
                                const MotorParams& p, double epsilon) {
    const auto& s = traj.samples;
    if (s.size() < 3) throw std::invalid_argument("trajectory too short for derivative monitors");
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        const double h = s[k + 1].t - s[k - 1].t;
        const double dUnum = (s[k + 1].U - s[k - 1].U) / h;
        const Vec2 yTilde = pmsm::y_tilde(s[k].x, eq.xStar.iq);
        const Vec2 uTilde = s[k].u.vec() - eq.uStar.vec();
        const double rhs = epsilon * yTilde.squaredNorm() + yTilde.dot(uTilde);
        worst = std::max(worst, (dUnum - rhs) / std::max(1.0, std::abs(dUnum)));
    }
    return worst;
}

/// Least-squares exponential rate of a positive, decaying series: the
/// negated slope of log(series) over the leading window where the series
/// stays above 1e3 * eps * series[0].
inline double exp_rate_fit(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw std::invalid_argument("rate fit: size mismatch");
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() * (y.empty() ? 0.0 : y[0]);
    std::size_t n = 0;
    while (n < y.size() && y[n] > floor && y[n] > 0.0) ++n;
    if (n < 2) throw std::invalid_argument("rate fit: empty fit window");
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double ly = std::log(y[k]);
        st += t[k];
        sy += ly;
        stt += t[k] * t[k];
        sty += t[k] * ly;
    }
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw std::invalid_argument("rate fit: degenerate time grid");
    return -(n * sty - st * sy) / denom;
}

/// |tauHat - tauL(t)| series of an observer run.
inline void observer_error_series(const Trajectory& traj, const Profile& loadTorque,
                                  std::vector<double>& t, std::vector<double>& e) {
    t.clear();
    e.clear();
    for (const auto& s : traj.samples) {
        if (!s.tauHat) continue;
        t.push_back(s.t);
        e.push_back(std::abs(*s.tauHat - eval_profile(loadTorque, s.t)));
    }
}

struct ChannelMetrics {
    double settlingTime = 0.0;  ///< first time the error stays within 2% of its largest excursion
    double overshoot = 0.0;     ///< largest crossing past the final value
    double finalError = 0.0;
};

/// 2%-band settling time of an error series (band relative to the largest
/// absolute excursion).
inline double settling_time(const std::vector<double>& t, const std::vector<double>& e) {
    if (t.size() != e.size() || t.empty()) throw std::invalid_argument("settling: bad series");
    double excursion = 0.0;
    for (double v : e) excursion = std::max(excursion, std::abs(v));
    if (excursion == 0.0) return 0.0;
    const double band = 0.02 * excursion;
    std::size_t k = e.size();
    while (k > 0 && std::abs(e[k - 1]) <= band) --k;
    return k == 0 ? t.front() : (k == e.size() ? t.back() : t[k]);
}

inline ChannelMetrics channel_metrics(const std::vector<double>& t, const std::vector<double>& e) {
    ChannelMetrics m;
    m.settlingTime = settling_time(t, e);
    m.finalError = e.back();
    const double dir = (e.front() - e.back()) >= 0.0 ? 1.0 : -1.0;
    double worst = 0.0;
    for (double v : e) worst = std::max(worst, (e.back() - v) * dir);
    m.overshoot = worst;
    return m;
}

struct ConvergenceMetrics {
    ChannelMetrics id;
    ChannelMetrics iq;
    ChannelMetrics omega;
};

/// Per-channel settling/overshoot/final error against a fixed operating point.
inline ConvergenceMetrics convergence_metrics(const Trajectory& traj, const Equilibrium& eq) {
    const std::size_t n = traj.samples.size();
    std::vector<double> t(n), ed(n), eq_(n), ew(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = traj.samples[k];
        t[k] = s.t;
        ed[k] = s.x.id - eq.xStar.id;
        eq_[k] = s.x.iq - eq.xStar.iq;
        ew[k] = s.x.omega - eq.omegaStar;
    }
    return ConvergenceMetrics{channel_metrics(t, ed), channel_metrics(t, eq_),
                              channel_metrics(t, ew)};
}

/// True when both reference profiles are constants, so the run has a single
/// operating point and the Lyapunov monitors apply.
inline bool constant_references(const Scenario& sc) {
    return sc.speedRef.kind == Profile::Kind::Constant &&
           sc.loadTorque.kind == Profile::Kind::Constant;
}

inline bool scalar_gain(const Mat2& K) {
    return K(0, 1) == 0.0 && K(1, 0) == 0.0 && K(0, 0) == K(1, 1);
}

/// Whether the C1 Lyapunov/dissipation monitors are in force for this run:
/// constant references and a scalar proportional gain at least 1e-3 above
/// the certified bound.
inline bool lyapunov_monitors_apply(const Scenario& sc, const MotorParams& p) {
    if (sc.id != ScenarioId::C1 || !constant_references(sc) || !scalar_gain(sc.gains.KP)) {
        return false;
    }
    const double tauL = sc.loadTorque.value;
    const double kpMin = kp_min_general(sc.speedRef.value, std::abs(tauL), p).kpMin;
    return sc.gains.KP(0, 0) >= kpMin + 1e-3;
}

/// Assemble the certificate report for a finished run.
inline CertificateReport build_certificate_report(const Trajectory& traj, const Scenario& sc,
                                                  const MotorParams& p) {
    CertificateReport rep;
    rep.diverged = traj.diverged;
    rep.divergenceTime = traj.divergenceTime;

    for (const auto& s : traj.samples) {
        const double tauL = eval_profile(sc.loadTorque, s.t);
        rep.maxPowerResidual =
            std::max(rep.maxPowerResidual, power_balance_residual_normalized(
                                               s.x, dynamics(s.x, s.u, tauL, p), s.u, tauL, p));
    }
    if (traj.samples.size() >= 2) {
        rep.maxLyapunovIncrease = max_lyapunov_increase(traj);
    }
    if (!traj.diverged && traj.samples.size() >= 3 && sc.id == ScenarioId::C1 &&
        constant_references(sc) && sc.decimation == 1) {
        const Equilibrium eq = equilibrium(sc.speedRef.value, sc.loadTorque.value, p);
        rep.maxDotWMismatch = dotW_identity_residual(traj, eq, p, sc.gains.pi());
        rep.maxDissipationViolation = dissipation_check(traj, eq, p, passivity_margin(eq, p));
    }
    if (sc.id == ScenarioId::C2 || sc.id == ScenarioId::C3) {
        std::vector<double> t, e;
        observer_error_series(traj, sc.loadTorque, t, e);
        if (!t.empty() && e.front() > 0.0) {
            try {
                rep.fittedObserverRate = exp_rate_fit(t, e);
            } catch (const std::invalid_argument&) {
                // too few usable points; leave the field absent
            }
        }
    }
    return rep;
}

/// Outcome of checking a report against its tolerances.
struct CheckResult {
    bool ok = true;
    std::string failing;  ///< name of the first failing monitor
};

/// Tolerances for the pass/fail monitors.
struct MonitorTolerances {
    double powerResidual = 1e-8;
    double dotWMismatch = 1e-4;
    double dissipationViolation = 1e-4;
};

inline CheckResult check_certificates(const CertificateReport& rep, const Trajectory& traj,
                                      const Scenario& sc, const MotorParams& p,
                                      const MonitorTolerances& tol = {}) {
    if (rep.diverged) return {false, "diverged"};
    if (rep.maxPowerResidual > tol.powerResidual) return {false, "power"};
    if (lyapunov_monitors_apply(sc, p) && !traj.samples.empty()) {
        const double w0 = traj.samples.front().W;
        const double lyapTol = 1e-9 * w0 + 10.0 * std::pow(sc.dt, 5);
        if (rep.maxLyapunovIncrease > lyapTol) return {false, "lyapunov"};
        if (sc.decimation == 1) {
            if (rep.maxDotWMismatch > tol.dotWMismatch) return {false, "dotw"};
            if (rep.maxDissipationViolation > tol.dissipationViolation) {
                return {false, "dissipation"};
            }
        }
    }
    return {true, {}};
}

}  // namespace pmsm
