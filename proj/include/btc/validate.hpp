// validate.hpp — Fast self-checks against independent constructions

#pragma once

#include "btc/largedev.hpp"
#include "btc/mastereq.hpp"
#include "btc/semiclassical.hpp"
#include "btc/spinops.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace btc::validate {

struct CheckResult {
    std::string name;
    bool passed{false};
    double value{0.0};
    double tolerance{0.0};
    std::string detail;
};

namespace detail {

inline CheckResult bound(std::string name, double value, double tol) {
    CheckResult r{std::move(name), value <= tol, value, tol, {}};
    return r;
}

// Collective spin operators on (C^2)^{\otimes n}, S_a = sum_i sigma_a^{(i)} / 2.
inline std::array<Matrix, 3> tensor_spin(int n) {
    const Eigen::Index dim = Eigen::Index{1} << n;
    std::array<Matrix, 3> s{Matrix::Zero(dim, dim), Matrix::Zero(dim, dim), Matrix::Zero(dim, dim)};
    // bit value 0 is spin up
    for (Eigen::Index b = 0; b < dim; ++b) {
        for (int i = 0; i < n; ++i) {
            const Eigen::Index flipped = b ^ (Eigen::Index{1} << i);
            const bool up = ((b >> i) & 1) == 0;
            s[0](flipped, b) += 0.5;
            s[1](flipped, b) += up ? cplx(0.0, 0.5) : cplx(0.0, -0.5);
            s[2](b, b) += up ? 0.5 : -0.5;
        }
    }
    return s;
}

} // namespace detail

/// Dicke-basis matrices against the symmetric subspace of n spin-1/2.
inline CheckResult symmetric_subspace(int n) {
    const auto s = detail::tensor_spin(n);
    const Eigen::Index dim = Eigen::Index{1} << n;
    const Matrix lower = s[0] - I_unit * s[1];
    Matrix basis(dim, n + 1);
    Vector v = Vector::Zero(dim);
    v(0) = 1.0;
    for (int k = 0; k <= n; ++k) {
        basis.col(k) = v;
        v = lower * v;
        if (v.norm() > 0) v.normalize();
    }
    const CollectiveSpinSystem sys(n, 0.0, 1.0);
    const auto& ops = sys.ops();
    double err = 0.0;
    err = std::max(err, linalg::max_abs(basis.adjoint() * s[0] * basis - ops.jx.m));
    err = std::max(err, linalg::max_abs(basis.adjoint() * s[1] * basis - ops.jy.m));
    err = std::max(err, linalg::max_abs(basis.adjoint() * s[2] * basis - ops.jz.m));
    return detail::bound("symmetric subspace N=" + std::to_string(n), err, 1e-12);
}

inline CheckResult commutators(int n) {
    const CollectiveSpinSystem sys(n, 0.0, 1.0);
    const auto& o = sys.ops();
    auto comm = [](const Matrix& a, const Matrix& b) { return Matrix(a * b - b * a); };
    double err = linalg::max_abs(comm(o.jx.m, o.jy.m) - I_unit * o.jz.m);
    err = std::max(err, linalg::max_abs(comm(o.jy.m, o.jz.m) - I_unit * o.jx.m));
    err = std::max(err, linalg::max_abs(comm(o.jz.m, o.jx.m) - I_unit * o.jy.m));
    const double j = sys.total_spin();
    const Matrix casimir = o.jx.m * o.jx.m + o.jy.m * o.jy.m + o.jz.m * o.jz.m;
    err = std::max(err, linalg::max_abs(casimir - j * (j + 1.0) * Matrix::Identity(sys.dim(), sys.dim())));
    return detail::bound("commutators and Casimir N=" + std::to_string(n), err, 1e-10 * std::max(1.0, j * j));
}

/// Vectorized generator against the dense map on a random matrix, plus
/// trace annihilation.
inline CheckResult vectorization(int n, double w) {
    const CollectiveSpinSystem sys(n, w, 1.0);
    std::srand(7);
    const Matrix x = Matrix::Random(sys.dim(), sys.dim());
    const Matrix dense = liouvillian_apply(sys, x);
    const Matrix sparse = linalg::unvec(vectorized_liouvillian(sys) * linalg::vec(x), sys.dim());
    const double err = std::max(linalg::max_abs(dense - sparse), std::abs(dense.trace()));
    return detail::bound("vectorized generator N=" + std::to_string(n), err, 1e-11);
}

inline CheckResult stationary(int n, double w) {
    const CollectiveSpinSystem sys(n, w, 1.0);
    const auto ss = stationary_state(sys);
    const auto chk = check_density(ss.rho);
    const double res = linalg::max_abs(liouvillian_apply(sys, ss.rho));
    const double err = std::max({res, chk.hermiticity, chk.trace_error, std::max(0.0, -chk.min_eigenvalue)});
    return detail::bound("stationary state N=" + std::to_string(n), err, 1e-9);
}

inline CheckResult mean_field_conservation() {
    const double w = 1.5, kappa = 1.0, dt = 1e-3;
    const semiclassical::MagnetizationPoint m0{0.3, 0.5, std::sqrt(1.0 - 0.34)};
    const double t_final = 20.0;
    const auto path = semiclassical::integrate_mf(m0, w, kappa, t_final, dt, 1.0);
    const auto& end = path.points.back();
    const double dj = std::abs(semiclassical::j_squared(end) - semiclassical::j_squared(m0)) / t_final;
    const double dm = std::abs(semiclassical::conserved_m(end, w, kappa) - semiclassical::conserved_m(m0, w, kappa)) /
                      t_final;
    return detail::bound("mean-field invariants drift per unit time", std::max(dj, dm), 1e-8);
}

inline CheckResult mean_field_orbit() {
    const double w = 1.5, kappa = 1.0, dt = 1e-3;
    const double period = 2.0 * std::numbers::pi / semiclassical::mf_frequency(w, kappa);
    const auto path = semiclassical::integrate_mf({0.0, 1.0, 0.0}, w, kappa, 10.0 * period, dt, 0.1);
    double err = 0.0;
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        const auto [my, mz] = semiclassical::mf_analytic(1.0, 0.0, w, kappa, path.times[i]);
        err = std::max({err, std::abs(my - path.points[i].y), std::abs(mz - path.points[i].z)});
    }
    return detail::bound("closed-form orbit vs RK4 over 10 periods", err, 1e-6);
}

/// Leading eigenvalue of the tilted generator against a dense eigensolver.
inline CheckResult tilted_dense(int n, double w, double s) {
    const CollectiveSpinSystem sys(n, w, 1.0);
    const auto sol = largedev::solve_tilted(sys, s);
    const Matrix dense = Matrix(largedev::build_tilted(sys, s));
    Eigen::ComplexEigenSolver<Matrix> es(dense, false);
    double best = -1e300;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, es.eigenvalues()(i).real());
    std::ostringstream name;
    name << "tilted leading eigenvalue N=" << n << " w=" << w << " s=" << s;
    return detail::bound(name.str(), std::abs(sol.theta - best), 1e-9);
}

inline CheckResult scgf_origin(int n, double w) {
    const CollectiveSpinSystem sys(n, w, 1.0);
    const auto sol = largedev::solve_tilted(sys, 0.0);
    return detail::bound("theta(0) = 0 N=" + std::to_string(n), std::abs(sol.theta), 1e-9);
}

inline CheckResult activity_cross_check(int n, double w, double s) {
    const CollectiveSpinSystem sys(n, w, 1.0);
    auto sol = largedev::solve_tilted(sys, s);
    const double hf = largedev::hellmann_feynman_activity(sys, sol);
    const auto plus = largedev::solve_tilted(sys, s + 1e-3, {}, &sol);
    const auto minus = largedev::solve_tilted(sys, s - 1e-3, {}, &sol);
    const double fd = -(plus.theta - minus.theta) / 2e-3;
    std::ostringstream name;
    name << "activity Hellmann-Feynman vs difference N=" << n << " s=" << s;
    return detail::bound(name.str(), std::abs(hf - fd), 1e-4);
}

inline CheckResult doob_trace(int n, double w, double s) {
    const CollectiveSpinSystem sys(n, w, 1.0);
    const auto sol = largedev::solve_tilted(sys, s);
    const auto doob = largedev::doob_transform(sys, sol);
    const double res = largedev::doob_trace_residual(sys, sol, doob);
    std::srand(11);
    const Matrix x = linalg::hermitian_part(Matrix::Random(sys.dim(), sys.dim()));
    const double gen = linalg::max_abs(largedev::doob_apply(doob, x) - largedev::doob_apply_similarity(sys, doob, x));
    std::ostringstream name;
    name << "Doob generator trace preservation N=" << n << " s=" << s;
    return detail::bound(name.str(), std::max(res, gen), 1e-8);
}

inline std::vector<CheckResult> run_all() {
    std::vector<std::function<CheckResult()>> checks{
        [] { return symmetric_subspace(1); },
        [] { return symmetric_subspace(2); },
        [] { return symmetric_subspace(3); },
        [] { return symmetric_subspace(4); },
        [] { return commutators(7); },
        [] { return commutators(40); },
        [] { return vectorization(6, 1.3); },
        [] { return stationary(10, 0.5); },
        [] { return stationary(10, 1.5); },
        [] { return mean_field_conservation(); },
        [] { return mean_field_orbit(); },
        [] { return tilted_dense(6, 1.5, -0.2); },
        [] { return tilted_dense(6, 0.5, 0.3); },
        [] { return scgf_origin(12, 1.5); },
        [] { return activity_cross_check(12, 1.5, 0.1); },
        [] { return doob_trace(10, 1.5, -0.1); },
    };
    std::vector<CheckResult> out;
    for (auto& c : checks) {
        try {
            out.push_back(c());
        } catch (const std::exception& e) {
            CheckResult r;
            r.name = "check threw";
            r.detail = e.what();
            out.push_back(r);
        }
    }
    return out;
}

} // namespace btc::validate
