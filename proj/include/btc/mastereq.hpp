// mastereq.hpp — Lindblad evolution, stationary state and its purity diagnostics
//
//   d rho/dt = -i omega [Jx, rho] + (kappa/N) (2 J- rho J+ - J+J- rho - rho J+J-)

#pragma once

#include "btc/linalg.hpp"
#include "btc/spinops.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

namespace btc {

struct DensityMatrix {
    Matrix rho;

    static DensityMatrix pure(const QuantumState& s) {
        return {s.amplitudes * s.amplitudes.adjoint()};
    }
};

struct DensityCheck {
    double hermiticity{0.0};   // max |rho - rho^dagger|
    double trace_error{0.0};   // |Tr rho - 1|
    double min_eigenvalue{0.0};
};

inline DensityCheck check_density(const Matrix& rho) {
    return {linalg::max_abs(rho - rho.adjoint()), std::abs(rho.trace() - 1.0), linalg::min_eigenvalue(rho)};
}

inline bool is_valid_density(const Matrix& rho, double herm_tol = 1e-10, double trace_tol = 1e-10,
                             double positivity_tol = 1e-8) {
    const auto c = check_density(rho);
    return c.hermiticity <= herm_tol && c.trace_error <= trace_tol && c.min_eigenvalue >= -positivity_tol;
}

inline double purity(const Matrix& rho) {
    return (rho * rho).trace().real();
}

inline Matrix liouvillian_apply(const CollectiveSpinSystem& sys, const Matrix& rho) {
    require(rho.rows() == sys.dim() && rho.cols() == sys.dim(), "liouvillian_apply: dimension mismatch");
    const auto& sp = sys.sparse_ops();
    Matrix out = (-I_unit * sys.omega()) * (sp.jx * rho - rho * sp.jx);
    const Matrix jm_rho = sp.jminus * rho;
    out += sys.decay_rate() *
           (2.0 * (jm_rho * sp.jplus) - sp.jplus_jminus * rho - rho * sp.jplus_jminus);
    return out;
}

/// Vectorized generator (column stacking, see linalg.hpp):
///   -i omega (I kron Jx - Jx^T kron I)
///   + (kappa/N) (2 J+^T kron J- - I kron J+J- - (J+J-)^T kron I)
inline SparseMatrix vectorized_liouvillian(const CollectiveSpinSystem& sys) {
    using namespace linalg;
    const auto& sp = sys.sparse_ops();
    SparseMatrix l = (-I_unit * sys.omega()) * (left_multiplication(sp.jx) - right_multiplication(sp.jx));
    l += sys.decay_rate() * (2.0 * sandwich(sp.jminus, sp.jplus) - left_multiplication(sp.jplus_jminus) -
                             right_multiplication(sp.jplus_jminus));
    l.makeCompressed();
    return l;
}

struct MasterPath {
    std::vector<double> times;
    std::vector<Matrix> states;
};

struct EvolveOptions {
    double t_final{1.0};
    double dt{1e-3};
    double sample_every{0.1};   // output spacing; rounded to a whole number of steps
    double positivity_abort{1e-6};
};

/// Fourth-order Runge-Kutta integration of the master equation. Every output
/// sample is Hermitized and checked; loss of positivity beyond the abort
/// threshold means the step is too large for the spectrum at hand.
inline void evolve_me(const CollectiveSpinSystem& sys, const Matrix& rho0, const EvolveOptions& opt,
                      const std::function<void(double, const Matrix&)>& observer) {
    require(rho0.rows() == sys.dim() && rho0.cols() == sys.dim(), "evolve_me: dimension mismatch");
    require(opt.dt > 0.0 && opt.dt * sys.kappa() <= 1e-2 + 1e-15, "evolve_me: requires 0 < dt*kappa <= 1e-2");
    require(opt.t_final >= 0.0, "evolve_me: negative final time");
    const long steps = std::lround(opt.t_final / opt.dt);
    const long stride = std::max(1L, std::lround(opt.sample_every / opt.dt));

    const SparseMatrix gen = vectorized_liouvillian(sys);
    const Eigen::Index d = sys.dim();
    Vector v = linalg::vec(rho0);
    Vector k1(v.size()), k2(v.size()), k3(v.size()), k4(v.size()), tmp(v.size());
    Matrix rho;
    auto emit = [&](long step) {
        rho = linalg::hermitian_part(linalg::unvec(v, d));
        v = linalg::vec(rho);
        const double lam = linalg::min_eigenvalue(rho);
        if (lam < -opt.positivity_abort) {
            std::ostringstream os;
            os << "evolve_me: positivity lost (min eigenvalue " << lam << ") at t=" << step * opt.dt
               << "; reduce dt";
            throw NumericalError(os.str());
        }
        observer(step * opt.dt, rho);
    };
    emit(0);
    const double h = opt.dt;
    for (long step = 1; step <= steps; ++step) {
        k1.noalias() = gen * v;
        tmp = v + (0.5 * h) * k1;
        k2.noalias() = gen * tmp;
        tmp = v + (0.5 * h) * k2;
        k3.noalias() = gen * tmp;
        tmp = v + h * k3;
        k4.noalias() = gen * tmp;
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (step % stride == 0 || step == steps) emit(step);
    }
}

inline MasterPath evolve_me(const CollectiveSpinSystem& sys, const Matrix& rho0, const EvolveOptions& opt) {
    MasterPath path;
    evolve_me(sys, rho0, opt, [&](double t, const Matrix& rho) {
        path.times.push_back(t);
        path.states.push_back(rho);
    });
    return path;
}

/// Null vector of the vectorized generator via shifted inverse iteration,
/// reshaped, Hermitized and trace-normalized.
inline DensityMatrix stationary_state(const CollectiveSpinSystem& sys, double residual_tol = 1e-9) {
    const Eigen::Index d = sys.dim();
    const SparseMatrix l = vectorized_liouvillian(sys);
    const double scale = std::max(1.0, linalg::norm_inf(l));
    // tiny positive shift: nearest eigenvalue is 0 (all others have Re < 0)
    const double shift = 1e-10 * scale;

    Vector start = linalg::vec(Matrix::Identity(d, d) / static_cast<double>(d));
    auto it = linalg::inverse_iteration(l, shift, start, 1e-13 * scale, 20);

    Matrix rho = linalg::unvec(it.vector, d);
    const cplx tr = rho.trace();
    if (std::abs(tr) < 1e-12) throw NumericalError("stationary_state: null vector has vanishing trace");
    rho = linalg::hermitian_part(rho / tr);
    rho /= rho.trace().real();

    const double res = linalg::max_abs(liouvillian_apply(sys, rho));
    if (res > residual_tol) {
        std::ostringstream os;
        os << "stationary_state: residual " << res << " exceeds " << residual_tol
           << " (degenerate or unresolved null space)";
        throw NumericalError(os.str());
    }
    return {rho};
}

struct StationaryDiagnostics {
    double rmax{0.0};
    double purity{1.0};
    double beta{0.0};
};

/// rmax = max_ij |(J- rho - <J-> rho)_ij| measures how close rho_ss is to a
/// J- eigenstate; beta = omega N / (2 kappa) is the matching eigenvalue
/// magnitude of the approximate coherent state.
inline StationaryDiagnostics diagnostics(const CollectiveSpinSystem& sys, const Matrix& rho_ss) {
    const auto& jm = sys.sparse_ops().jminus;
    const Matrix jm_rho = jm * rho_ss;
    const cplx mean_jm = jm_rho.trace();
    StationaryDiagnostics d;
    d.rmax = linalg::max_abs(jm_rho - mean_jm * rho_ss);
    d.purity = purity(rho_ss);
    d.beta = sys.omega() * sys.n() / (2.0 * sys.kappa());
    return d;
}

struct StationaryRow {
    int n;
    double omega_over_kappa;
    Magnetization m;
    StationaryDiagnostics diag;
};

inline StationaryRow stationary_row(int n, double omega_over_kappa, double kappa = 1.0) {
    const CollectiveSpinSystem sys(n, omega_over_kappa * kappa, kappa);
    const DensityMatrix ss = stationary_state(sys);
    return {n, omega_over_kappa, magnetization(sys, ss.rho), diagnostics(sys, ss.rho)};
}

} // namespace btc
