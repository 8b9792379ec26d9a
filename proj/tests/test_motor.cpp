#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pmsm/equilibrium.hpp"
#include "pmsm/motor.hpp"

using namespace pmsm;
using Catch::Approx;

namespace {
const MotorParams kParams = MotorParams::default_params();
}

TEST_CASE("rest state with no input is an equilibrium", "[motor]") {
    const Vec3 xdot = dynamics({0, 0, 0}, {0, 0}, 0.0, kParams);
    REQUIRE(xdot.norm() == 0.0);
}

TEST_CASE("unit d-voltage at rest accelerates only the d current", "[motor]") {
    const Vec3 xdot = dynamics({0, 0, 0}, {1, 0}, 0.0, kParams);
    CHECK(xdot(0) == Approx(1.0 / 0.0312).epsilon(1e-12));  // = 32.0513 A/s
    CHECK(xdot(1) == 0.0);
    CHECK(xdot(2) == 0.0);
}

TEST_CASE("dynamics vanishes at the forced operating point", "[motor]") {
    const Equilibrium eq = equilibrium(104.7, 1.0, kParams);
    const Vec3 xdot = dynamics(eq.xStar, eq.uStar, eq.tauL, kParams);
    CHECK(xdot.norm() < 1e-9);
}

TEST_CASE("dynamics agrees with the compact matrix form", "[motor]") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int i = 0; i < 20; ++i) {
        const MotorState x{dist(rng), dist(rng), 10.0 * dist(rng)};
        const InputVoltage u{dist(rng), dist(rng)};
        const double tauL = 0.3 * dist(rng);
        const SystemMatrices m = system_matrices(kParams, tauL);
        const Vec3 lhs = m.D * dynamics(x, u, tauL, kParams);
        const Vec3 rhs = -(coriolis(x, kParams) + m.R) * x.vec() + m.G * u.vec() + m.d;
        REQUIRE((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }
}

TEST_CASE("coriolis matrix at rest keeps only the flux terms", "[motor]") {
    const Mat3 C = coriolis({0, 0, 0}, kParams);
    Mat3 expected;
    expected << 0, 0, 0,
                0, 0, kParams.Phi,
                0, -kParams.Phi, 0;
    CHECK((C - expected).norm() == 0.0);
}

TEST_CASE("coriolis matrix is exactly skew-symmetric", "[motor]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    for (int i = 0; i < 10; ++i) {
        const MotorState x{dist(rng), dist(rng), dist(rng)};
        const Mat3 C = coriolis(x, kParams);
        REQUIRE((C + C.transpose()).norm() == 0.0);
        const Vec3 z{dist(rng), dist(rng), dist(rng)};
        REQUIRE(std::abs(z.dot(C * z)) < 1e-12 * C.norm() * z.squaredNorm());
    }
}

TEST_CASE("coriolis entries follow the definition", "[motor]") {
    const Mat3 C = coriolis({1, 2, 3}, kParams);
    CHECK(C(0, 2) == Approx(-0.110).margin(1e-15));  // -Lq * iq
    CHECK(C(1, 2) == Approx(kParams.Ld * 1.0 + kParams.Phi).epsilon(1e-15));
}

TEST_CASE("energy is the D-weighted quadratic form", "[motor]") {
    CHECK(energy({0, 0, 0}, kParams) == 0.0);
    CHECK(energy({1, 0, 0}, kParams) == Approx(0.0156).epsilon(1e-12));
    CHECK(energy({0, 1, 1}, kParams) == Approx(0.5 * (0.055 + 3.61e-4 / 3.0)).epsilon(1e-12));
    CHECK(energy({0, 1, 1}, kParams) == Approx(0.0275602).epsilon(1e-5));
}

TEST_CASE("power balance holds along the model vector field", "[motor]") {
    CHECK(power_balance_residual({0, 0, 0}, Vec3::Zero(), {0, 0}, 0.0, kParams) == 0.0);

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const MotorState x{8.0 * dist(rng), 8.0 * dist(rng), 200.0 * dist(rng)};
        const InputVoltage u{60.0 * dist(rng), 60.0 * dist(rng)};
        const double tauL = 4.0 * dist(rng);
        const Vec3 xdot = dynamics(x, u, tauL, kParams);
        REQUIRE(power_balance_residual_normalized(x, xdot, u, tauL, kParams) < 1e-10);
    }
}

TEST_CASE("power balance monitor detects a perturbed derivative", "[motor]") {
    const MotorState x{2.0, -1.0, 50.0};
    const InputVoltage u{10.0, 5.0};
    const double tauL = 1.0;
    Vec3 xdot = dynamics(x, u, tauL, kParams);
    xdot(0) += 1.0;
    const double res = power_balance_residual(x, xdot, u, tauL, kParams);
    CHECK(res == Approx(kParams.Ld * x.id).epsilon(1e-9));
}

TEST_CASE("dynamics is affine in the input", "[motor]") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-20.0, 20.0);
    for (int i = 0; i < 20; ++i) {
        const MotorState x{dist(rng), dist(rng), dist(rng)};
        const InputVoltage u1{dist(rng), dist(rng)};
        const InputVoltage u2{dist(rng), dist(rng)};
        const InputVoltage u12{u1.vd + u2.vd, u1.vq + u2.vq};
        const double tauL = dist(rng) / 10.0;
        const Vec3 lhs = dynamics(x, u12, tauL, kParams) - dynamics(x, u2, tauL, kParams) -
                         dynamics(x, u1, tauL, kParams) + dynamics(x, {0, 0}, tauL, kParams);
        REQUIRE(lhs.norm() < 1e-12);
    }
}

TEST_CASE("inertia and dissipation matrices are positive definite", "[motor]") {
    const SystemMatrices m = system_matrices(kParams, 1.0);
    CHECK((m.D - m.D.transpose()).norm() == 0.0);
    CHECK((m.R - m.R.transpose()).norm() == 0.0);
    CHECK(min_eigenvalue(m.D) > 0.0);
    CHECK(min_eigenvalue(m.R) > 0.0);
}

TEST_CASE("parameter validation names the offending field", "[motor]") {
    MotorParams p = kParams;
    p.Rm = 0.0;
    REQUIRE_THROWS_WITH(p.validate(), Catch::Matchers::ContainsSubstring("Rm"));
}
