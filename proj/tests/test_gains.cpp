#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "pmsm/gains.hpp"
#include "pmsm/sim.hpp"

using namespace pmsm;
using Catch::Approx;

namespace {

const MotorParams kParams = MotorParams::default_params();

Equilibrium operating_point(double x2Star, double omegaStar) {
    Equilibrium eq;
    eq.xStar = MotorState{0.0, x2Star, omegaStar};
    eq.uStar = InputVoltage{0.0, 0.0};
    eq.tauL = 0.0;
    eq.omegaStar = omegaStar;
    return eq;
}

/// Log-uniform draw spanning `decades` decades around a nominal value.
double log_uniform(std::mt19937& rng, double nominal, double decades) {
    std::uniform_real_distribution<double> dist(-decades, decades);
    return nominal * std::pow(10.0, dist(rng));
}

}  // namespace

TEST_CASE("closed-form symmetric eigenvalues match a general solver", "[eig]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        Mat3 A;
        A << dist(rng), 0, 0, dist(rng), dist(rng), 0, dist(rng), dist(rng), dist(rng);
        A = (A + A.transpose()).eval();
        const Vec3 mine = sym_eigenvalues(A);
        Eigen::SelfAdjointEigenSolver<Mat3> es(A);
        const Vec3 ref = es.eigenvalues().reverse();
        REQUIRE((mine - ref).norm() < 1e-12 * (1.0 + A.norm()));

        Mat2 B;
        B << dist(rng), dist(rng), 0, dist(rng);
        B(1, 0) = B(0, 1);
        const Vec2 mine2 = sym_eigenvalues(B);
        Eigen::SelfAdjointEigenSolver<Mat2> es2(B);
        REQUIRE((mine2 - Vec2(es2.eigenvalues().reverse())).norm() < 1e-12 * (1.0 + B.norm()));
    }
}

TEST_CASE("equilibrium at standstill with no load is the origin", "[equilibrium]") {
    const Equilibrium eq = equilibrium(0.0, 0.0, kParams);
    CHECK(eq.xStar.vec().norm() == 0.0);
    CHECK(eq.uStar.vec().norm() == 0.0);
}

TEST_CASE("equilibrium reproduces the nominal operating point", "[equilibrium]") {
    const Equilibrium eq = equilibrium(104.7, 1.0, kParams);
    CHECK(eq.xStar.id == 0.0);
    CHECK(eq.xStar.iq == Approx(4.370056497175141).epsilon(1e-12));
    CHECK(eq.xStar.omega == 104.7);
    CHECK(eq.uStar.vd == Approx(-25.165).margin(1e-3));
    CHECK(eq.uStar.vq == Approx(50.930).margin(1e-3));
    CHECK(dynamics(eq.xStar, eq.uStar, eq.tauL, kParams).norm() < 1e-9);
}

TEST_CASE("equilibrium residual stays tiny over random operating points", "[equilibrium]") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> omega(-300.0, 300.0);
    std::uniform_real_distribution<double> tau(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const Equilibrium eq = equilibrium(omega(rng), tau(rng), kParams);
        REQUIRE(dynamics(eq.xStar, eq.uStar, eq.tauL, kParams).norm() < 1e-9);
    }
}

TEST_CASE("dissipation matrix is diagonal at standstill", "[gains]") {
    const DissipationReport rep = dissipation_matrix(operating_point(0.0, 0.0), 0.0, kParams);
    Mat3 expected = Vec3(12.0, 12.0, 2.0 * 0.02 / 3.0).asDiagonal();
    CHECK((rep.B - expected).norm() == 0.0);
    CHECK(rep.minEig == Approx(2.0 * 0.02 / 3.0).epsilon(1e-12));
    CHECK((rep.B - rep.B.transpose()).norm() == 0.0);
}

TEST_CASE("worst-case point stays passive at zero index, not below the margin", "[gains]") {
    // The margin here is about -2.3 Ohm, so B must still be positive
    // semidefinite at epsilon = 0 and lose definiteness below the margin.
    const Equilibrium worst = operating_point(9.455, 104.72);
    CHECK(dissipation_matrix(worst, 0.0, kParams).minEig > 0.0);
    const double margin = passivity_margin(worst, kParams);
    CHECK(dissipation_matrix(worst, margin - 1.0, kParams).minEig < 0.0);
    CHECK(dissipation_matrix(worst, margin + 1e-6, kParams).minEig >= 0.0);
}

TEST_CASE("passivity margin equals -Rs when the couplings vanish", "[gains]") {
    CHECK(passivity_margin(operating_point(0.0, 0.0), kParams) == Approx(-6.0).margin(1e-9));

    MotorParams nonsalient = kParams;
    nonsalient.Lq = nonsalient.Ld;
    CHECK(passivity_margin(operating_point(0.0, 173.2), nonsalient) ==
          Approx(-6.0).margin(1e-9));
}

TEST_CASE("passivity margin at the worst-case loaded point", "[gains]") {
    const double x2w = worst_case_q_current(104.72, 4.6, kParams);
    CHECK(x2w == Approx(9.455367231638418).epsilon(1e-12));
    const double eps = passivity_margin(operating_point(x2w, 104.72), kParams);
    CHECK(eps == Approx(-2.32).margin(0.05));
}

TEST_CASE("passivity margin rejects an out-of-range bracket", "[gains]") {
    MotorParams p = kParams;
    p.Rm = 1e-9;  // pushes the margin far beyond 1e3 Ohm
    REQUIRE_THROWS_AS(passivity_margin(operating_point(1e4, 104.72), p), std::runtime_error);
}

TEST_CASE("damping matrix structure", "[gains]") {
    const Mat3 rest = damping_matrix(0.0, operating_point(0.0, 0.0), kParams);
    CHECK((rest - Mat3(Vec3(12.0, 12.0, 2.0 * 0.02 / 3.0).asDiagonal())).norm() == 0.0);

    const Equilibrium eq = operating_point(9.455, 104.72);
    const Mat3 diff = damping_matrix(3.5, eq, kParams) - damping_matrix(0.0, eq, kParams);
    CHECK((diff - Mat3(Vec3(7.0, 7.0, 0.0).asDiagonal())).norm() < 1e-12);

    CHECK(min_eigenvalue(damping_matrix(-2.32 + 0.01, eq, kParams)) > 0.0);
}

TEST_CASE("general gain bound reduces to -Rs without load or speed", "[gains]") {
    CHECK(kp_min_general(0.0, 0.0, kParams).kpMin == Approx(-6.0).epsilon(1e-12));
}

TEST_CASE("general gain bound at the nominal worst case", "[gains]") {
    const GainCertificate cert = kp_min_general(104.72, 4.6, kParams);
    CHECK(cert.kpMin == Approx(-2.32).margin(0.05));
    CHECK(cert.tauMax == 4.6);
    CHECK(cert.method == GainMethod::GeneralEigen);
    // R_d is positive definite just above the bound and loses definiteness below.
    const double x2w = worst_case_q_current(104.72, 4.6, kParams);
    CHECK(min_eigenvalue(damping_matrix(cert.kpMin + 1e-6, x2w, 104.72, kParams)) > 0.0);
    CHECK(min_eigenvalue(damping_matrix(cert.kpMin - 1e-6, x2w, 104.72, kParams)) < 0.0);
}

TEST_CASE("closed form matches the eigenvalue route for non-salient machines", "[gains]") {
    MotorParams p = kParams;
    p.Lq = p.Ld = 0.0312;
    const double closedForm = kp_min_nonsalient(104.7, 1.0, p);
    CHECK(closedForm == Approx(-5.302865).margin(1e-3));
    const double general = kp_min_general(104.7, 1.0, p).kpMin;
    CHECK(std::abs(general - closedForm) / (1.0 + std::abs(general)) < 1e-9);
}

TEST_CASE("closed form gain bound scaling", "[gains]") {
    MotorParams p = kParams;
    p.Lq = p.Ld;
    CHECK(kp_min_nonsalient(0.0, 0.0, p) == Approx(-p.Rs).epsilon(1e-12));

    const double base = kp_min_nonsalient(104.7, 1.0, p) + p.Rs;
    MotorParams doubled = p;
    doubled.Phi *= 2.0;
    const double scaled = kp_min_nonsalient(104.7, 1.0, doubled) + p.Rs;
    CHECK(scaled == Approx(base / 4.0).epsilon(1e-12));

    REQUIRE_THROWS_AS(kp_min_nonsalient(104.7, 1.0, kParams), std::invalid_argument);
}

TEST_CASE("gain-bound routes agree over a randomized non-salient sweep", "[gains]") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> omega(0.0, 200.0);
    std::uniform_real_distribution<double> tau(0.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        MotorParams p;
        p.Ld = p.Lq = log_uniform(rng, kParams.Ld, 2.0);
        p.Rs = log_uniform(rng, kParams.Rs, 2.0);
        p.Rm = log_uniform(rng, kParams.Rm, 2.0);
        p.J = log_uniform(rng, kParams.J, 2.0);
        p.np = log_uniform(rng, kParams.np, 2.0);
        p.Phi = log_uniform(rng, kParams.Phi, 2.0);
        const double w = omega(rng);
        const double tl = tau(rng);
        const double general = kp_min_general(w, tl, p).kpMin;
        const double closed = kp_min_nonsalient(w, tl, p);
        REQUIRE(std::abs(general - closed) / (1.0 + std::abs(general)) < 1e-9);
    }
}

TEST_CASE("damping matrix flips definiteness across the certified bound", "[gains]") {
    std::mt19937 rng(43);
    std::uniform_real_distribution<double> omega(0.0, 200.0);
    std::uniform_real_distribution<double> tau(0.0, 5.0);
    const double delta = 1e-4;
    for (int i = 0; i < 100; ++i) {
        MotorParams p;
        p.Ld = log_uniform(rng, kParams.Ld, 2.0);
        p.Lq = log_uniform(rng, kParams.Lq, 2.0);
        p.Rs = log_uniform(rng, kParams.Rs, 2.0);
        p.Rm = log_uniform(rng, kParams.Rm, 2.0);
        p.J = log_uniform(rng, kParams.J, 2.0);
        p.np = log_uniform(rng, kParams.np, 2.0);
        p.Phi = log_uniform(rng, kParams.Phi, 2.0);
        const double w = omega(rng);
        const GainCertificate cert = kp_min_general(w, tau(rng), p);
        const double x2w = worst_case_q_current(w, cert.tauMax, p);
        const Mat3 above = damping_matrix(cert.kpMin + delta, x2w, w, p);
        const Mat3 below = damping_matrix(cert.kpMin - delta, x2w, w, p);
        // Extreme draws can push the definiteness margin below what float64
        // eigenvalues resolve; the sign assertions carry a matched tolerance.
        const double resolution = 1e-12 * (1.0 + above.norm());
        REQUIRE(min_eigenvalue(above) > -resolution);
        REQUIRE(min_eigenvalue(below) < resolution);
    }
    // At the nominal machine the strict version holds, down to delta = 1e-6.
    const GainCertificate cert = kp_min_general(104.72, 4.6, kParams);
    const double x2w = worst_case_q_current(104.72, 4.6, kParams);
    for (double d : {1e-4, 1e-6}) {
        CHECK(min_eigenvalue(damping_matrix(cert.kpMin + d, x2w, 104.72, kParams)) > 0.0);
        CHECK(min_eigenvalue(damping_matrix(cert.kpMin - d, x2w, 104.72, kParams)) < 0.0);
    }
}

TEST_CASE("gain bound and passivity margin solve the same eigenvalue problem", "[gains]") {
    const double x2w = worst_case_q_current(104.72, 4.6, kParams);
    const double eps = passivity_margin(operating_point(x2w, 104.72), kParams);
    const double kpMin = kp_min_general(104.72, 4.6, kParams).kpMin;
    CHECK(std::abs(eps - kpMin) < 1e-9);

    std::mt19937 rng(44);
    std::uniform_real_distribution<double> omega(0.0, 200.0);
    std::uniform_real_distribution<double> tau(0.0, 5.0);
    for (int i = 0; i < 20; ++i) {
        MotorParams p;
        p.Ld = log_uniform(rng, kParams.Ld, 1.0);
        p.Lq = log_uniform(rng, kParams.Lq, 1.0);
        p.Rs = log_uniform(rng, kParams.Rs, 1.0);
        p.Rm = log_uniform(rng, kParams.Rm, 1.0);
        p.J = log_uniform(rng, kParams.J, 1.0);
        p.np = log_uniform(rng, kParams.np, 1.0);
        p.Phi = log_uniform(rng, kParams.Phi, 1.0);
        const double w = omega(rng);
        const double tM = tau(rng);
        const double x2 = worst_case_q_current(w, tM, p);
        const double margin = passivity_margin(operating_point(x2, w), p);
        const double bound = kp_min_general(w, tM, p).kpMin;
        REQUIRE(std::abs(margin - bound) / (1.0 + std::abs(bound)) < 1e-9);
    }
}

TEST_CASE("gain bound grows with the load bound and the speed", "[gains]") {
    double prev = -1e9;
    for (double tauMax : {0.0, 1.0, 2.0, 4.6, 8.0}) {
        const double kp = kp_min_general(104.72, tauMax, kParams).kpMin;
        REQUIRE(kp >= prev);
        prev = kp;
    }
    prev = -1e9;
    for (double w : {0.0, 50.0, 104.72, 150.0, 300.0}) {
        const double kp = kp_min_general(w, 4.6, kParams).kpMin;
        REQUIRE(kp >= prev);
        prev = kp;
        CHECK(kp_min_general(-w, 4.6, kParams).kpMin == Approx(kp).margin(1e-12));
    }
}

TEST_CASE("closed-loop jacobian matches finite differences", "[jacobian]") {
    const Equilibrium eq = equilibrium(104.7, 1.0, kParams);
    const double kp = 15.0;
    const Mat2 KI = 2000.0 * Mat2::Identity();
    const Mat5 A = closed_loop_jacobian(kp, KI, eq, kParams);

    Scenario sc;
    sc.id = ScenarioId::C1;
    sc.speedRef = Profile::constant(104.7);
    sc.loadTorque = Profile::constant(1.0);
    sc.gains.KP = kp * Mat2::Identity();
    sc.gains.KI = KI;

    AugmentedState s0;
    s0.x = eq.xStar;
    s0.xc = controller_equilibrium(KI, eq.uStar);
    const StateVec v0 = pack_state(s0, sc.id);

    const double h = 1e-6;
    for (int j = 0; j < 5; ++j) {
        StateVec vp = v0, vm = v0;
        vp(j) += h;
        vm(j) -= h;
        const StateVec fp = closed_loop_eval(vp, 0.0, sc, kParams).sdot;
        const StateVec fm = closed_loop_eval(vm, 0.0, sc, kParams).sdot;
        for (int i = 0; i < 5; ++i) {
            const double fd = (fp(i) - fm(i)) / (2.0 * h);
            REQUIRE(A(i, j) == Approx(fd).margin(1e-5 * (1.0 + std::abs(fd))));
        }
    }

    CHECK(A.trace() == Approx(A.diagonal().sum()).epsilon(1e-15));
}

TEST_CASE("well-tuned loop is Hurwitz", "[jacobian]") {
    const Equilibrium eq = equilibrium(104.7, 1.0, kParams);
    const Mat5 A = closed_loop_jacobian(15.0, 2000.0 * Mat2::Identity(), eq, kParams);
    CHECK(max_real_eigenvalue(A) < 0.0);
}

TEST_CASE("stability boundary sits below the certified bound", "[jacobian]") {
    const Equilibrium eq = equilibrium(104.7, 1.0, kParams);

    // Default gain set: the local boundary lands near -6.1 Ohm.
    const Mat2 KI = 2000.0 * Mat2::Identity();
    const double boundary = kp_stability_boundary(KI, eq, kParams, -8.0, -4.0);
    CHECK(boundary >= -6.5);
    CHECK(boundary <= -5.0);

    // Softer integral gain pushes the boundary down a little.
    const Mat2 KIsoft = 100.0 * Mat2::Identity();
    const double boundarySoft = kp_stability_boundary(KIsoft, eq, kParams, -8.0, -4.0);
    CHECK(boundarySoft == Approx(-6.52).margin(0.02));

    const double kpMin = kp_min_general(104.7, 1.0, kParams).kpMin;
    CHECK(boundary <= kpMin);
    CHECK(boundarySoft <= kpMin);

    const double wide = kp_stability_boundary(KI, eq, kParams, -20.0, 10.0);
    CHECK(wide == Approx(boundary).margin(2e-3));

    REQUIRE_THROWS_AS(kp_stability_boundary(KI, eq, kParams, 10.0, 20.0), std::runtime_error);
}
