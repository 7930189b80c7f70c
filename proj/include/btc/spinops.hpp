// spinops.hpp — Collective spin operators in the symmetric (Dicke) sector
//
// Basis convention, used everywhere in the library: index k = 0..N holds
// |J, m = J - k> with J = N/2, i.e. the highest-weight (fully excited) state
// sits at index 0 and J- moves amplitude from index k to k+1.

#pragma once

#include "btc/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <memory>
#include <numbers>

namespace btc {

enum class OperatorLabel { Jx, Jy, Jz, Jplus, Jminus, Custom };

struct DenseOperator {
    Matrix m;
    OperatorLabel label{OperatorLabel::Custom};
};

struct CollectiveOps {
    DenseOperator jx, jy, jz, jplus, jminus;
};

// Sparse copies of the same operators plus J+J- (diagonal). The trajectory
// engines only ever touch these; the dense set is for algebra and diagnostics.
struct SparseCollectiveOps {
    SparseMatrix jx, jy, jz, jplus, jminus, jplus_jminus;
};

// <k+1| J- |k> = sqrt(J(J+1) - m(m-1)) with m = J - k, k = 0..N-1.
inline RealVector ladder_coefficients(int n) {
    require(n >= 1, "ladder_coefficients: N must be >= 1");
    const double j = 0.5 * n;
    RealVector a(n);
    for (int k = 0; k < n; ++k) {
        const double m = j - k;
        a(k) = std::sqrt(j * (j + 1.0) - m * (m - 1.0));
    }
    return a;
}

inline CollectiveOps build_collective_ops(int n) {
    require(n >= 1, "build_collective_ops: N must be >= 1");
    const Eigen::Index d = n + 1;
    const RealVector a = ladder_coefficients(n);
    const double j = 0.5 * n;

    CollectiveOps ops;
    ops.jminus = {Matrix::Zero(d, d), OperatorLabel::Jminus};
    for (int k = 0; k < n; ++k) ops.jminus.m(k + 1, k) = a(k);
    ops.jplus = {ops.jminus.m.adjoint(), OperatorLabel::Jplus};
    ops.jx = {0.5 * (ops.jplus.m + ops.jminus.m), OperatorLabel::Jx};
    ops.jy = {(ops.jplus.m - ops.jminus.m) / (2.0 * I_unit), OperatorLabel::Jy};
    ops.jz = {Matrix::Zero(d, d), OperatorLabel::Jz};
    for (Eigen::Index k = 0; k < d; ++k) ops.jz.m(k, k) = j - static_cast<double>(k);
    return ops;
}

/// N two-level atoms with Rabi frequency omega and collective rate kappa.
/// Owns its operators; immutable after construction so it can be shared
/// read-only between trajectory workers.
class CollectiveSpinSystem {
public:
    CollectiveSpinSystem(int n, double omega, double kappa)
        : n_(n), omega_(omega), kappa_(kappa) {
        require(n >= 1, "CollectiveSpinSystem: N must be a positive integer");
        require(std::isfinite(omega) && omega >= 0.0, "CollectiveSpinSystem: omega must be finite and >= 0");
        require(std::isfinite(kappa) && kappa > 0.0, "CollectiveSpinSystem: kappa must be finite and > 0");
        auto dense = std::make_shared<CollectiveOps>(build_collective_ops(n));
        auto sparse = std::make_shared<SparseCollectiveOps>();
        sparse->jx = dense->jx.m.sparseView();
        sparse->jy = dense->jy.m.sparseView();
        sparse->jz = dense->jz.m.sparseView();
        sparse->jplus = dense->jplus.m.sparseView();
        sparse->jminus = dense->jminus.m.sparseView();
        sparse->jplus_jminus = (dense->jplus.m * dense->jminus.m).sparseView();
        dense_ = std::move(dense);
        sparse_ = std::move(sparse);
    }

    // Accepts a real-valued atom count (config files, CLI) and rejects
    // anything that is not a positive integer.
    static CollectiveSpinSystem from_real(double n, double omega, double kappa) {
        require(std::isfinite(n) && n >= 1.0 && std::floor(n) == n,
                "CollectiveSpinSystem: N must be a positive integer");
        return CollectiveSpinSystem(static_cast<int>(n), omega, kappa);
    }

    int n() const noexcept { return n_; }
    double omega() const noexcept { return omega_; }
    double kappa() const noexcept { return kappa_; }
    Eigen::Index dim() const noexcept { return n_ + 1; }
    double total_spin() const noexcept { return 0.5 * n_; }
    double decay_rate() const noexcept { return kappa_ / n_; }  // kappa/N in front of the dissipator

    const CollectiveOps& ops() const noexcept { return *dense_; }
    const SparseCollectiveOps& sparse_ops() const noexcept { return *sparse_; }

private:
    int n_;
    double omega_;
    double kappa_;
    std::shared_ptr<const CollectiveOps> dense_;
    std::shared_ptr<const SparseCollectiveOps> sparse_;
};

struct QuantumState {
    Vector amplitudes;
    bool normalized{false};

    static QuantumState basis(Eigen::Index dim, Eigen::Index k) {
        QuantumState s{Vector::Zero(dim), true};
        s.amplitudes(k) = 1.0;
        return s;
    }
};

inline QuantumState highest_weight_state(const CollectiveSpinSystem& sys) {
    return QuantumState::basis(sys.dim(), 0);
}

inline QuantumState lowest_weight_state(const CollectiveSpinSystem& sys) {
    return QuantumState::basis(sys.dim(), sys.n());
}

/// |theta, phi> = exp[i theta (Jx sin(phi) - Jy cos(phi))] |J, J>.
/// The generator is Hermitian, so the exponential is taken through its
/// eigendecomposition.
inline QuantumState spin_coherent_state(const CollectiveSpinSystem& sys, double theta, double phi) {
    constexpr double pi = std::numbers::pi;
    require(theta >= 0.0 && theta <= pi, "spin_coherent_state: theta must lie in [0, pi]");
    require(phi >= 0.0 && phi <= 2.0 * pi, "spin_coherent_state: phi must lie in [0, 2 pi]");
    const auto& ops = sys.ops();
    const Matrix gen = std::sin(phi) * ops.jx.m - std::cos(phi) * ops.jy.m;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gen);
    const Matrix& v = es.eigenvectors();
    Vector phases(sys.dim());
    for (Eigen::Index i = 0; i < sys.dim(); ++i) phases(i) = std::exp(I_unit * theta * es.eigenvalues()(i));
    // Only the first column of exp(...) is needed: exp(...) e_0 = V diag(phases) V^dagger e_0.
    Vector psi = v * phases.cwiseProduct(v.row(0).adjoint());
    psi.normalize();
    return {psi, true};
}

struct Magnetization {
    double x{0.0}, y{0.0}, z{0.0};
};

inline constexpr double kNormTolerance = 1e-10;

inline Magnetization magnetization(const CollectiveSpinSystem& sys, const QuantumState& state) {
    require(state.amplitudes.size() == sys.dim(), "magnetization: dimension mismatch");
    require(std::abs(state.amplitudes.squaredNorm() - 1.0) <= 2.0 * kNormTolerance,
            "magnetization: state is not normalized");
    const auto& sp = sys.sparse_ops();
    const Vector& psi = state.amplitudes;
    const double scale = 1.0 / sys.total_spin();
    return {scale * psi.dot(sp.jx * psi).real(),
            scale * psi.dot(sp.jy * psi).real(),
            scale * psi.dot(sp.jz * psi).real()};
}

inline Magnetization magnetization(const CollectiveSpinSystem& sys, const Matrix& rho) {
    require(rho.rows() == sys.dim() && rho.cols() == sys.dim(), "magnetization: dimension mismatch");
    require(std::abs(rho.trace() - 1.0) <= kNormTolerance, "magnetization: density matrix trace is not 1");
    const auto& ops = sys.ops();
    const double scale = 1.0 / sys.total_spin();
    return {scale * (ops.jx.m * rho).trace().real(),
            scale * (ops.jy.m * rho).trace().real(),
            scale * (ops.jz.m * rho).trace().real()};
}

} // namespace btc
