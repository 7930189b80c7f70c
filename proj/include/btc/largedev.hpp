// largedev.hpp — Tilted generator for the integrated homodyne current, its
// leading eigenpair (SCGF theta(s)), the activity k(s) and the Doob transform
//
//   L_s rho = L rho - s sqrt(2 kappa/N) (J- rho + rho J+) + (s^2/2) rho

#pragma once

#include "btc/linalg.hpp"
#include "btc/mastereq.hpp"
#include "btc/spinops.hpp"
#include "btc/unravel.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace btc::largedev {

inline double tilt_coupling(const CollectiveSpinSystem& sys, double s) {
    return s * std::sqrt(2.0 * sys.kappa() / sys.n());
}

inline SparseMatrix build_tilted(const CollectiveSpinSystem& sys, double s) {
    using namespace linalg;
    const auto& sp = sys.sparse_ops();
    SparseMatrix ls = vectorized_liouvillian(sys);
    if (s != 0.0) {
        ls -= tilt_coupling(sys, s) * (left_multiplication(sp.jminus) + right_multiplication(sp.jplus));
        ls += (0.5 * s * s) * sparse_identity(ls.rows());
    }
    ls.makeCompressed();
    return ls;
}

/// Dense application of L_s to an arbitrary (not necessarily Hermitian) X.
inline Matrix tilted_apply(const CollectiveSpinSystem& sys, double s, const Matrix& x) {
    const auto& sp = sys.sparse_ops();
    Matrix out = liouvillian_apply(sys, x);
    out -= tilt_coupling(sys, s) * (sp.jminus * x + x * sp.jplus);
    out += (0.5 * s * s) * x;
    return out;
}

/// Dense application of the Hilbert-Schmidt adjoint L_s^dagger.
inline Matrix tilted_adjoint_apply(const CollectiveSpinSystem& sys, double s, const Matrix& y) {
    const auto& sp = sys.sparse_ops();
    Matrix out = (I_unit * sys.omega()) * (sp.jx * y - y * sp.jx);
    const Matrix jp_y = sp.jplus * y;
    out += sys.decay_rate() * (2.0 * (jp_y * sp.jminus) - sp.jplus_jminus * y - y * sp.jplus_jminus);
    out -= tilt_coupling(sys, s) * (y * sp.jminus + jp_y);
    out += (0.5 * s * s) * y;
    return out;
}

struct EigenOptions {
    linalg::ArnoldiOptions arnoldi{60, 4, 1e-10, 300};
    double shift_offset{0.05};      // distance of the shift-invert pole to the right of the estimate
    double refine_offset{1e-7};     // relative offset for the final inverse-iteration polish
    double residual_tol{1e-10};     // on ||L_s r - theta r|| / max(1, ||L_s||_inf), ||r|| = 1
    double imag_tol{1e-9};
    int max_shift_moves{12};
};

struct TiltedEigenSolution {
    double s{0.0};
    double theta{0.0};
    Matrix r0;      // Tr r0 = 1
    Matrix l0;      // Tr[l0 r0] = 1
    double k{std::numeric_limits<double>::quiet_NaN()};
    double k_fd{std::numeric_limits<double>::quiet_NaN()};
    double residual{0.0};       // relative, right eigenvector
    double left_residual{0.0};  // relative, left eigenvector
    int restarts{0};
    bool converged{false};
};

/// Eigenvalue of L_s with the largest real part together with the right and
/// left eigenmatrices.
///
/// Spectral transformation is shift-invert with a real pole sigma placed to
/// the right of the current estimate. For sigma > theta the leading (real)
/// eigenvalue is the one closest to sigma, i.e. the dominant eigenvalue of
/// (L_s - sigma)^-1. If Arnoldi reports any Ritz value at or beyond the pole
/// the pole is moved right of it and the solve repeated.
inline TiltedEigenSolution leading_eigenpair(const SparseMatrix& ls, double s, const EigenOptions& opt = {},
                                             const TiltedEigenSolution* warm = nullptr,
                                             std::optional<double> theta_guess = std::nullopt) {
    require(ls.rows() == ls.cols(), "leading_eigenpair: operator must be square");
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(ls.rows()))));
    require(d * d == ls.rows(), "leading_eigenpair: operator is not a vectorized superoperator");
    const double scale = std::max(1.0, linalg::norm_inf(ls));

    double guess = theta_guess ? *theta_guess : (warm ? warm->theta : 0.5 * s * s);
    double offset = opt.shift_offset;
    double sigma = guess + offset;
    const Vector start = warm ? linalg::vec(warm->r0) : linalg::vec(Matrix::Identity(d, d));

    cplx best{};
    Vector best_vec;
    int restarts = 0;
    bool placed = false;
    for (int move = 0; move <= opt.max_shift_moves; ++move) {
        const linalg::ShiftedSolver solver(ls, sigma);
        auto arn = linalg::arnoldi([&](const Vector& v) { return solver.solve(v); }, start, opt.arnoldi);
        restarts += arn.restarts;
        if (!arn.converged || arn.pairs.empty()) {
            std::ostringstream os;
            os << "leading_eigenpair: Arnoldi not converged at s=" << s << " after " << arn.restarts
               << " restarts (residual " << (arn.pairs.empty() ? -1.0 : arn.pairs.front().residual) << ")";
            throw NumericalError(os.str());
        }
        int pick = 0;
        for (int i = 0; i < static_cast<int>(arn.pairs.size()); ++i) {
            const auto& p = arn.pairs[i];
            if (p.residual > 1e-3 * std::abs(p.value)) continue;
            const cplx lam = sigma + 1.0 / p.value;
            if (lam.real() > (sigma + 1.0 / arn.pairs[pick].value).real()) pick = i;
        }
        best = sigma + 1.0 / arn.pairs[pick].value;
        best_vec = arn.pairs[pick].vector;
        if (pick == 0 && best.real() < sigma) {
            placed = true;
            break;
        }
        sigma = best.real() + offset;
        offset *= 2.0;
    }
    if (!placed) throw NumericalError("leading_eigenpair: could not place the shift right of the spectrum");
    if (std::abs(best.imag()) > std::max(opt.imag_tol, 1e-6 * std::abs(best.real()))) {
        std::ostringstream os;
        os << "leading_eigenpair: leading eigenvalue " << best << " at s=" << s << " is not real";
        throw NumericalError(os.str());
    }

    // Polish both eigenvectors by inverse iteration next to the eigenvalue.
    const double pole = best.real() + opt.refine_offset * scale;
    auto right = linalg::inverse_iteration(ls, pole, best_vec, 1e-3 * opt.residual_tol * scale, 30);
    const SparseMatrix lsa = ls.adjoint();
    const Vector left_start = warm ? linalg::vec(warm->l0) : linalg::vec(Matrix::Identity(d, d));
    auto left = linalg::inverse_iteration(lsa, pole, left_start, 1e-3 * opt.residual_tol * scale, 30);

    TiltedEigenSolution sol;
    sol.s = s;
    sol.restarts = restarts;
    Matrix r = linalg::unvec(right.vector, d);
    const cplx tr = r.trace();
    if (std::abs(tr) < 1e-14) throw NumericalError("leading_eigenpair: right eigenmatrix has vanishing trace");
    sol.r0 = linalg::hermitian_part(r / tr);
    Matrix l = linalg::unvec(left.vector, d);
    const cplx overlap = (l * sol.r0).trace();
    if (std::abs(overlap) < 1e-14) throw NumericalError("leading_eigenpair: left/right eigenmatrices are orthogonal");
    sol.l0 = linalg::hermitian_part(l / overlap);
    sol.l0 /= (sol.l0 * sol.r0).trace().real();

    const Vector rv = linalg::vec(sol.r0);
    const Vector lv = linalg::vec(sol.l0);
    const Vector lsr = ls * rv;
    const cplx rayleigh = lv.dot(lsr) / lv.dot(rv);
    sol.theta = rayleigh.real();
    sol.residual = (lsr - sol.theta * rv).norm() / rv.norm() / scale;
    sol.left_residual = (lsa * lv - sol.theta * lv).norm() / lv.norm() / scale;
    sol.converged = sol.residual <= opt.residual_tol && sol.left_residual <= opt.residual_tol;
    return sol;
}

inline TiltedEigenSolution solve_tilted(const CollectiveSpinSystem& sys, double s, const EigenOptions& opt = {},
                                        const TiltedEigenSolution* warm = nullptr) {
    std::optional<double> guess;
    if (s == 0.0) guess = 0.0;  // trace preservation fixes theta(0) = 0
    return leading_eigenpair(build_tilted(sys, s), s, opt, warm, guess);
}

/// k = -d theta/ds from first-order perturbation theory:
/// k = sqrt(2 kappa/N) Tr[L0 (J- R0 + R0 J+)] - s.
inline double hellmann_feynman_activity(const CollectiveSpinSystem& sys, const TiltedEigenSolution& sol) {
    const auto& sp = sys.sparse_ops();
    const Matrix op = sp.jminus * sol.r0 + sol.r0 * sp.jplus;
    return std::sqrt(2.0 * sys.kappa() / sys.n()) * (sol.l0 * op).trace().real() - sol.s;
}

struct ActivityOptions {
    double fd_step{1e-3};
    double tolerance{1e-4};  // in units of kappa
    EigenOptions eigen{};
};

/// Hellmann-Feynman activity, cross-checked against the five-point central
/// difference of theta with spacing fd_step. Stores both values in `sol`.
inline double activity(const CollectiveSpinSystem& sys, TiltedEigenSolution& sol, const ActivityOptions& opt = {}) {
    const double hf = hellmann_feynman_activity(sys, sol);
    const double h = opt.fd_step;
    auto theta_at = [&](double s) { return solve_tilted(sys, s, opt.eigen, &sol).theta; };
    const double fd = -(-theta_at(sol.s + 2.0 * h) + 8.0 * theta_at(sol.s + h) - 8.0 * theta_at(sol.s - h) +
                        theta_at(sol.s - 2.0 * h)) /
                      (12.0 * h);
    sol.k = hf;
    sol.k_fd = fd;
    if (std::abs(hf - fd) > opt.tolerance * sys.kappa()) {
        std::ostringstream os;
        os << "activity: Hellmann-Feynman k=" << hf << " and finite-difference k=" << fd << " disagree at s="
           << sol.s;
        throw NumericalError(os.str());
    }
    return hf;
}

struct ThetaRow {
    double omega_over_kappa{0.0};
    double s{0.0};
    double theta{std::numeric_limits<double>::quiet_NaN()};
    double k{std::numeric_limits<double>::quiet_NaN()};
    double k_fd{std::numeric_limits<double>::quiet_NaN()};
    bool converged{false};
    double residual{std::numeric_limits<double>::quiet_NaN()};
    std::string error;
};

/// theta(s) and k(s) on a grid. Within one omega row the s points are solved
/// in order, each warm-started from its predecessor; failures are recorded in
/// the row and do not stop the scan.
inline std::vector<ThetaRow> theta_row(int n, double kappa, double omega_over_kappa, const std::vector<double>& s_grid,
                                       const ActivityOptions& opt = {}) {
    const CollectiveSpinSystem sys(n, omega_over_kappa * kappa, kappa);
    std::vector<ThetaRow> rows;
    std::optional<TiltedEigenSolution> prev;
    for (double s : s_grid) {
        ThetaRow row;
        row.omega_over_kappa = omega_over_kappa;
        row.s = s;
        try {
            auto sol = solve_tilted(sys, s, opt.eigen, prev ? &*prev : nullptr);
            row.theta = sol.theta;
            row.residual = sol.residual;
            row.converged = sol.converged;
            try {
                activity(sys, sol, opt);
            } catch (const NumericalError& e) {
                row.converged = false;
                row.error = e.what();
            }
            row.k = sol.k;
            row.k_fd = sol.k_fd;
            prev = std::move(sol);
        } catch (const NumericalError& e) {
            row.converged = false;
            row.error = e.what();
            prev.reset();
        }
        rows.push_back(row);
    }
    return rows;
}

/// Doob-transformed dynamics for bias s. The generator
///   L_D rho = L0^{1/2} L_s[L0^{-1/2} rho L0^{-1/2}] L0^{1/2} - theta rho
/// is written in Lindblad form with jump operator J~- = L0^{1/2} J- L0^{-1/2}
/// (rate kappa/N) and Hamiltonian h_d.
struct DoobSystem {
    double s{0.0};
    double theta{0.0};
    Matrix jminus_tilde;
    Matrix h_d;
    Matrix l0_half;
    Matrix l0_half_inv;
    double rate{0.0};
};

/// Exact: Hamiltonian of the Lindblad form of the transformed generator.
/// RotatedDrive: omega J~x - s sqrt(2 kappa/N) J~y built from J~- alone, which
/// drops the remaining similarity-transform terms.
enum class DoobHamiltonianForm { Exact, RotatedDrive };

struct DoobOptions {
    double eigen_floor{1e-12};       // relative floor for L0 eigenvalues
    double negativity_tol{1e-8};     // relative; more negative L0 eigenvalues are an error
    DoobHamiltonianForm form{DoobHamiltonianForm::Exact};
};

/// Hamiltonian that appears when the similarity-transformed generator is
/// brought to Lindblad form. The transformed no-jump part is
/// K = L0^{1/2} G L0^{-1/2} - theta/2 with G = -i omega Jx - (kappa/N) J+J-
/// - s sqrt(2 kappa/N) J- + s^2/4, and h_d = i (K - K^dagger) / 2.
inline Matrix doob_hamiltonian(const CollectiveSpinSystem& sys, double s, double theta, const Matrix& l0_half,
                               const Matrix& l0_half_inv) {
    const auto& ops = sys.ops();
    const Eigen::Index d = sys.dim();
    Matrix g = (-I_unit * sys.omega()) * ops.jx.m - sys.decay_rate() * (ops.jplus.m * ops.jminus.m) -
               tilt_coupling(sys, s) * ops.jminus.m;
    g += (0.25 * s * s) * Matrix::Identity(d, d);
    const Matrix k = l0_half * g * l0_half_inv - (0.5 * theta) * Matrix::Identity(d, d);
    return linalg::hermitian_part(0.5 * I_unit * (k - k.adjoint()));
}

/// omega J~x - s sqrt(2 kappa/N) J~y with J~x = (J~+ + J~-)/2, J~y = i(J~- - J~+)/2.
inline Matrix doob_hamiltonian_rotated_drive(const CollectiveSpinSystem& sys, double s, const Matrix& jminus_tilde) {
    const Matrix jp = jminus_tilde.adjoint();
    const Matrix jx = 0.5 * (jp + jminus_tilde);
    const Matrix jy = 0.5 * I_unit * (jminus_tilde - jp);
    return sys.omega() * jx - tilt_coupling(sys, s) * jy;
}

inline DoobSystem doob_transform(const CollectiveSpinSystem& sys, const TiltedEigenSolution& sol,
                                 const DoobOptions& opt = {}) {
    require(sol.l0.rows() == sys.dim(), "doob_transform: eigen solution does not match the system");
    Eigen::SelfAdjointEigenSolver<Matrix> es(linalg::hermitian_part(sol.l0));
    const RealVector& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    if (top <= 0.0 || ev.minCoeff() < -opt.negativity_tol * top) {
        std::ostringstream os;
        os << "doob_transform: L0 is not positive (eigenvalues in [" << ev.minCoeff() << ", " << top << "])";
        throw NumericalError(os.str());
    }
    RealVector sq(ev.size()), isq(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double lam = std::max(ev(i), opt.eigen_floor * top);
        sq(i) = std::sqrt(lam);
        isq(i) = 1.0 / sq(i);
    }
    const Matrix& v = es.eigenvectors();
    DoobSystem doob;
    doob.s = sol.s;
    doob.theta = sol.theta;
    doob.rate = sys.decay_rate();
    doob.l0_half = v * sq.cast<cplx>().asDiagonal() * v.adjoint();
    doob.l0_half_inv = v * isq.cast<cplx>().asDiagonal() * v.adjoint();
    doob.jminus_tilde = doob.l0_half * sys.ops().jminus.m * doob.l0_half_inv;
    doob.h_d = opt.form == DoobHamiltonianForm::Exact
                   ? doob_hamiltonian(sys, sol.s, sol.theta, doob.l0_half, doob.l0_half_inv)
                   : doob_hamiltonian_rotated_drive(sys, sol.s, doob.jminus_tilde);
    return doob;
}

/// Lindblad-form Doob generator applied to rho.
inline Matrix doob_apply(const DoobSystem& doob, const Matrix& rho) {
    const Matrix& a = doob.jminus_tilde;
    const Matrix ada = a.adjoint() * a;
    Matrix out = -I_unit * (doob.h_d * rho - rho * doob.h_d);
    out += doob.rate * (2.0 * a * rho * a.adjoint() - ada * rho - rho * ada);
    return out;
}

/// Similarity-transform form of the same generator, straight from L_s.
inline Matrix doob_apply_similarity(const CollectiveSpinSystem& sys, const DoobSystem& doob, const Matrix& rho) {
    const Matrix inner = doob.l0_half_inv * rho * doob.l0_half_inv;
    return doob.l0_half * tilted_apply(sys, doob.s, inner) * doob.l0_half - doob.theta * rho;
}

/// max |L_D^dagger(I)| = max |L0^{-1/2} (L_s^dagger L0 - theta L0) L0^{-1/2}|;
/// zero exactly when the transformed dynamics preserves the trace.
inline double doob_trace_residual(const CollectiveSpinSystem& sys, const TiltedEigenSolution& sol,
                                  const DoobSystem& doob) {
    const Matrix defect = tilted_adjoint_apply(sys, sol.s, sol.l0) - sol.theta * sol.l0;
    return linalg::max_abs(doob.l0_half_inv * defect * doob.l0_half_inv);
}

inline HomodyneModel<Matrix> doob_homodyne_model(const DoobSystem& doob) {
    return {doob.h_d, doob.jminus_tilde, Matrix(doob.jminus_tilde.adjoint() * doob.jminus_tilde), doob.rate};
}

/// Homodyne unraveling of the Doob dynamics monitoring x~ = J~+ + J~-.
/// Records the untransformed magnetization and <x~>/N.
inline TrajectoryRecord doob_homodyne_trajectory(const CollectiveSpinSystem& sys, const DoobSystem& doob,
                                                 const QuantumState& psi0, const TrajectoryOptions& opt,
                                                 std::uint64_t seed) {
    detail::check_psi0(sys, psi0);
    TrajectoryRecord rec;
    rec.scheme = Scheme::DoobHomodyne;
    rec.seed = seed;
    rec.n = sys.n();
    rec.omega = sys.omega();
    rec.kappa = sys.kappa();
    rec.dt = opt.dt;
    rec.t_final = opt.t_final;
    rec.s = doob.s;
    rec.current_dt = detail::record_stride(opt) * opt.dt;
    const Matrix x_tilde = doob.jminus_tilde + doob.jminus_tilde.adjoint();
    bool first = true;
    run_homodyne(doob_homodyne_model(doob), psi0.amplitudes, opt, seed,
                 [&](double t, const Vector& psi, double current) {
                     rec.times.push_back(t);
                     rec.magnetizations.push_back(detail::expectations(sys, psi));
                     rec.transformed_x.push_back(psi.dot(x_tilde * psi).real() / sys.n());
                     if (!first) rec.raw_current.push_back(current);
                     first = false;
                 });
    return rec;
}

} // namespace btc::largedev
