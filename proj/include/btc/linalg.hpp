// linalg.hpp — Superoperator vectorization and sparse spectral solvers
//
// Vectorization is column stacking: vec(A X B) = (B^T kron A) vec(X), and the
// element X(i, j) lands at position i + j * dim.

#pragma once

#include "btc/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace btc::linalg {

inline SparseMatrix sparse_identity(Eigen::Index d) {
    SparseMatrix id(d, d);
    id.setIdentity();
    return id;
}

inline SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
    SparseMatrix out = Eigen::kroneckerProduct(a, b).eval();
    out.makeCompressed();
    return out;
}

// vec(left * X) -> (I kron left) vec(X)
inline SparseMatrix left_multiplication(const SparseMatrix& left) {
    return kron(sparse_identity(left.rows()), left);
}

// vec(X * right) -> (right^T kron I) vec(X)
inline SparseMatrix right_multiplication(const SparseMatrix& right) {
    return kron(SparseMatrix(right.transpose()), sparse_identity(right.rows()));
}

// vec(left * X * right)
inline SparseMatrix sandwich(const SparseMatrix& left, const SparseMatrix& right) {
    return kron(SparseMatrix(right.transpose()), left);
}

inline Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index d) {
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

// max absolute row sum
inline double norm_inf(const SparseMatrix& a) {
    RealVector rows = RealVector::Zero(a.rows());
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) rows(it.row()) += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
}

inline double max_abs(const Matrix& m) {
    return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

inline Matrix hermitian_part(const Matrix& m) {
    return 0.5 * (m + m.adjoint());
}

/// Trace distance 1/2 ||a - b||_1 for Hermitian arguments.
inline double trace_distance(const Matrix& a, const Matrix& b) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a - b), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double min_eigenvalue(const Matrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// (A - shift I) factorized once, solved many times.
class ShiftedSolver {
public:
    ShiftedSolver(const SparseMatrix& a, cplx shift) {
        SparseMatrix m = a - shift * sparse_identity(a.rows());
        m.makeCompressed();
        lu_.analyzePattern(m);
        lu_.factorize(m);
        if (lu_.info() != Eigen::Success) {
            std::ostringstream os;
            os << "sparse LU factorization failed at shift " << shift << ": " << lu_.lastErrorMessage();
            throw NumericalError(os.str());
        }
    }

    Vector solve(const Vector& rhs) const {
        Vector x = lu_.solve(rhs);
        if (!x.allFinite()) throw NumericalError("sparse LU solve produced non-finite values");
        return x;
    }

private:
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

struct InverseIterationResult {
    Vector vector;        // unit 2-norm
    cplx rayleigh;        // v^H A v
    double residual{0.0}; // ||A v - rayleigh v||_2
    int iterations{0};
};

/// Inverse iteration on (A - shift). Converges to the eigenvector whose
/// eigenvalue is nearest to the shift.
inline InverseIterationResult inverse_iteration(const SparseMatrix& a, cplx shift, Vector start,
                                                double tol, int max_iter = 50) {
    ShiftedSolver solver(a, shift);
    InverseIterationResult r;
    Vector v = start.normalized();
    for (int it = 1; it <= max_iter; ++it) {
        v = solver.solve(v);
        v.normalize();
        const Vector av = a * v;
        r.rayleigh = v.dot(av);
        r.residual = (av - r.rayleigh * v).norm();
        r.iterations = it;
        if (r.residual <= tol) break;
    }
    r.vector = std::move(v);
    return r;
}

struct RitzPair {
    cplx value;       // eigenvalue of the operator handed to arnoldi()
    Vector vector;    // unit 2-norm
    double residual;  // Arnoldi residual estimate |h_{m+1,m} y_m|
};

struct ArnoldiOptions {
    int krylov_dim{60};
    int wanted{4};
    double tol{1e-10};  // on |h_{m+1,m} y_m| / |ritz value|
    int max_restarts{300};
};

struct ArnoldiResult {
    std::vector<RitzPair> pairs;  // sorted by decreasing |value|
    int restarts{0};
    bool converged{false};
};

/// Restarted Arnoldi for the largest-magnitude eigenvalues of a linear map.
/// Convergence is judged on the dominant pair; the other wanted pairs come
/// back with their residual estimates. Each restart seeds the next Krylov
/// space with the sum of the wanted Ritz vectors. Paired with a shift-invert
/// map, one or two cycles usually suffice.
template <class Apply>
ArnoldiResult arnoldi(Apply&& apply, Vector start, const ArnoldiOptions& opt) {
    const Eigen::Index n = start.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, n));
    const int wanted = std::min(opt.wanted, m);
    ArnoldiResult result;

    Matrix v(n, m + 1);
    Matrix h(m + 1, m);
    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
        v.setZero();
        h.setZero();
        v.col(0) = start.normalized();
        int steps = m;
        for (int j = 0; j < m; ++j) {
            Vector w = apply(Vector(v.col(j)));
            // classical Gram-Schmidt, repeated once for stability
            for (int pass = 0; pass < 2; ++pass) {
                const Vector coeff = v.leftCols(j + 1).adjoint() * w;
                w -= v.leftCols(j + 1) * coeff;
                h.col(j).head(j + 1) += coeff;
            }
            const double beta = w.norm();
            h(j + 1, j) = beta;
            if (beta <= 1e-14 * h.col(j).head(j + 1).norm()) {  // invariant subspace
                steps = j + 1;
                break;
            }
            v.col(j + 1) = w / beta;
        }

        Eigen::ComplexEigenSolver<Matrix> es(h.topLeftCorner(steps, steps));
        std::vector<int> order(steps);
        for (int i = 0; i < steps; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            return std::abs(es.eigenvalues()(x)) > std::abs(es.eigenvalues()(y));
        });

        result.pairs.clear();
        bool all_ok = true;
        const double hnext = steps < m || steps == n ? 0.0 : std::abs(h(steps, steps - 1));
        const int keep = std::min(wanted, steps);
        Vector next = Vector::Zero(n);
        for (int i = 0; i < keep; ++i) {
            const int idx = order[i];
            const Vector y = es.eigenvectors().col(idx).normalized();
            const cplx val = es.eigenvalues()(idx);
            const double res = hnext * std::abs(y(steps - 1));
            Vector x = v.leftCols(steps) * y;
            x.normalize();
            result.pairs.push_back({val, x, res});
            if (i == 0 && res > opt.tol * std::max(1e-300, std::abs(val))) all_ok = false;
            next += x;
        }
        result.restarts = restart;
        if (all_ok) {
            result.converged = true;
            return result;
        }
        start = next.norm() > 0 ? next : Vector(v.col(0));
    }
    return result;
}

} // namespace btc::linalg
