#include "btc/mastereq.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <numbers>

using namespace btc;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix projector(const Vector& v) { return v * v.adjoint(); }

// Two atoms written out on C^2 (x) C^2. Bit set = atom in the lower level.
struct TwoQubit {
    Matrix sx, sminus, v;  // v: isometry onto the triplet in Dicke order
};

TwoQubit two_qubit() {
    Matrix sx = Matrix::Zero(4, 4), sm = Matrix::Zero(4, 4);
    for (int b = 0; b < 4; ++b)
        for (int i = 0; i < 2; ++i) {
            const int other = b ^ (1 << i);
            sx(other, b) += 0.5;
            if (((b >> i) & 1) == 0) sm(other, b) += 1.0;
        }
    Matrix v = Matrix::Zero(4, 3);
    v(0, 0) = 1.0;
    v(1, 1) = v(2, 1) = 1.0 / std::sqrt(2.0);
    v(3, 2) = 1.0;
    return {sx, sm, v};
}

Matrix lindblad_full(const TwoQubit& q, double omega, double kappa, const Matrix& rho) {
    const double g = kappa / 2.0;
    const Matrix h = omega * q.sx;
    const Matrix l = q.sminus;
    const Matrix ldl = l.adjoint() * l;
    return -I_unit * (h * rho - rho * h) + g * (2.0 * l * rho * l.adjoint() - ldl * rho - rho * ldl);
}

Matrix random_density(Eigen::Index d, unsigned seed) {
    std::srand(seed);
    const Matrix a = Matrix::Random(d, d);
    Matrix rho = a * a.adjoint();
    return rho / rho.trace();
}

} // namespace

TEST(Liouvillian, DarkStateIsStationaryWithoutDrive) {
    const CollectiveSpinSystem sys(7, 0.0, 1.0);
    const Matrix rho = projector(lowest_weight_state(sys).amplitudes);
    EXPECT_EQ(max_abs(liouvillian_apply(sys, rho)), 0.0);
}

TEST(Liouvillian, TwoQubitOracle) {
    const auto q = two_qubit();
    for (double omega : {0.0, 0.7, 1.9}) {
        const CollectiveSpinSystem sys(2, omega, 1.0);
        for (unsigned seed : {1u, 2u, 3u}) {
            const Matrix rho = random_density(3, seed);
            const Matrix full = lindblad_full(q, omega, 1.0, q.v * rho * q.v.adjoint());
            EXPECT_LT(max_abs(q.v.adjoint() * full * q.v - liouvillian_apply(sys, rho)), 1e-12);
            // The triplet block is closed under the dynamics.
            EXPECT_LT(max_abs(full - q.v * q.v.adjoint() * full * q.v * q.v.adjoint()), 1e-12);
        }
    }
}

TEST(Liouvillian, FullyExcitedPairDecayRate) {
    const CollectiveSpinSystem sys(2, 0.0, 1.0);
    const Matrix rho = projector(highest_weight_state(sys).amplitudes);
    const Matrix drho = liouvillian_apply(sys, rho);
    const double djz = (sys.ops().jz.m * drho).trace().real();
    EXPECT_NEAR(djz, -2.0, 1e-12);
}

TEST(Liouvillian, TracelessAndHermitianPreserving) {
    for (int n : {1, 3, 12}) {
        const CollectiveSpinSystem sys(n, 1.3, 0.8);
        for (unsigned seed = 10; seed < 15; ++seed) {
            const Matrix rho = random_density(sys.dim(), seed);
            const Matrix out = liouvillian_apply(sys, rho);
            EXPECT_LT(std::abs(out.trace()), 1e-12);
            EXPECT_LT(max_abs(out - out.adjoint()), 1e-12);
        }
    }
}

TEST(Liouvillian, VectorizedAgreesWithDense) {
    const CollectiveSpinSystem sys(9, 1.1, 1.0);
    std::srand(5);
    const Matrix x = Matrix::Random(sys.dim(), sys.dim());
    const Matrix via_vec = linalg::unvec(vectorized_liouvillian(sys) * linalg::vec(x), sys.dim());
    EXPECT_LT(max_abs(via_vec - liouvillian_apply(sys, x)), 1e-12);
}

TEST(Liouvillian, DimensionMismatch) {
    const CollectiveSpinSystem sys(3, 1.0, 1.0);
    EXPECT_THROW(liouvillian_apply(sys, Matrix::Identity(3, 3)), std::invalid_argument);
}

TEST(Evolve, DarkStateConstant) {
    const CollectiveSpinSystem sys(6, 0.0, 1.0);
    const Matrix rho0 = projector(lowest_weight_state(sys).amplitudes);
    const auto path = evolve_me(sys, rho0, {2.0, 1e-3, 0.5});
    ASSERT_EQ(path.states.size(), 5u);
    for (const auto& r : path.states) EXPECT_EQ(max_abs(r - rho0), 0.0);
}

TEST(Evolve, MatchesPropagatorExponential) {
    const CollectiveSpinSystem sys(4, 1.2, 1.0);
    const Matrix rho0 = projector(spin_coherent_state(sys, std::numbers::pi / 2, std::numbers::pi / 2).amplitudes);
    const auto path = evolve_me(sys, rho0, {1.0, 1e-3, 1.0});
    const Matrix gen = Matrix(vectorized_liouvillian(sys));
    const Matrix prop = gen.exp();
    const Matrix ref = linalg::unvec(prop * linalg::vec(rho0), sys.dim());
    EXPECT_LT(max_abs(path.states.back() - ref), 1e-8);
}

TEST(Evolve, InvariantsAlongPath) {
    const CollectiveSpinSystem sys(10, 1.5, 1.0);
    const Matrix rho0 = projector(spin_coherent_state(sys, 1.0, 0.3).amplitudes);
    evolve_me(sys, rho0, {5.0, 1e-3, 0.25}, [](double, const Matrix& rho) {
        EXPECT_TRUE(is_valid_density(rho));
    });
}

TEST(Evolve, RelaxesToStationaryBelowThreshold) {
    const CollectiveSpinSystem sys(10, 0.5, 1.0);
    const Matrix rho0 = projector(spin_coherent_state(sys, std::numbers::pi / 2, std::numbers::pi / 2).amplitudes);
    const auto path = evolve_me(sys, rho0, {50.0, 1e-3, 50.0});
    const auto ss = stationary_state(sys);
    EXPECT_NEAR(magnetization(sys, path.states.back()).z, magnetization(sys, ss.rho).z, 1e-3);
}

TEST(Evolve, RejectsLargeStep) {
    const CollectiveSpinSystem sys(4, 1.0, 1.0);
    const Matrix rho0 = projector(highest_weight_state(sys).amplitudes);
    EXPECT_THROW(evolve_me(sys, rho0, {1.0, 0.05, 0.1}), std::invalid_argument);
}

TEST(Stationary, DarkStateWithoutDrive) {
    const CollectiveSpinSystem sys(8, 0.0, 1.0);
    const auto ss = stationary_state(sys);
    EXPECT_LT(max_abs(ss.rho - projector(lowest_weight_state(sys).amplitudes)), 1e-9);
    const auto d = diagnostics(sys, ss.rho);
    EXPECT_LT(d.rmax, 1e-9);
    EXPECT_NEAR(d.purity, 1.0, 1e-9);
}

TEST(Stationary, FixedPointAndValidity) {
    for (double w : {0.3, 1.0, 1.7}) {
        const CollectiveSpinSystem sys(30, w, 1.0);
        const auto ss = stationary_state(sys);
        EXPECT_LE(max_abs(liouvillian_apply(sys, ss.rho)), 1e-9) << w;
        EXPECT_TRUE(is_valid_density(ss.rho)) << w;
    }
}

// Mean-field fixed point m_z = -sqrt(1 - (omega/kappa)^2) below threshold,
// time-averaged m_z = 0 above.
TEST(Stationary, MagnetizationAcrossTransition) {
    const auto below = stationary_row(100, 0.5);
    EXPECT_NEAR(below.m.z, -std::sqrt(0.75), 0.05);
    const auto above = stationary_row(100, 1.5);
    EXPECT_LT(std::abs(above.m.z), 0.2);
}

TEST(Diagnostics, BetaAndSmallResidualBelowThreshold) {
    const auto row = stationary_row(100, 0.5);
    EXPECT_DOUBLE_EQ(row.diag.beta, 25.0);
    const auto deep = stationary_row(100, 0.3);
    EXPECT_LT(deep.diag.rmax, 1e-2);
    EXPECT_LT(1.0 - deep.diag.purity, 1e-2);
    EXPECT_LE(deep.diag.purity, 1.0 + 1e-10);
}

TEST(Diagnostics, SharpeningWithN) {
    double prev_rmax = 1e300, prev_purity = -1.0;
    for (int n : {25, 50, 100}) {
        const auto row = stationary_row(n, 0.5);
        EXPECT_LT(row.diag.rmax, prev_rmax) << n;
        // purity reaches 1 to machine precision already at moderate N
        EXPECT_GE(row.diag.purity, prev_purity - 1e-12) << n;
        prev_rmax = row.diag.rmax;
        prev_purity = row.diag.purity;
    }
}
