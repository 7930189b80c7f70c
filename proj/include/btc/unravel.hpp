// unravel.hpp — Quantum-jump and homodyne unravelings plus signal conventions
//
// Both engines advance a pure state on a fixed step dt and report the state
// on a coarser output grid (record_every). The homodyne engine is generic in
// the operator type so the Doob-transformed dynamics can reuse it with dense
// operators.

#pragma once

#include "btc/random.hpp"
#include "btc/spinops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <type_traits>
#include <utility>
#include <vector>

namespace btc {

enum class Scheme { Jump, Homodyne, DoobHomodyne };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Jump: return "jump";
        case Scheme::Homodyne: return "homodyne";
        case Scheme::DoobHomodyne: return "doob";
    }
    return "?";
}

struct TrajectoryOptions {
    double t_final{10.0};
    double dt{1e-3};
    double record_every{0.01};
    double max_jump_probability{0.1};
    double max_norm_drift{0.1};
};

struct TrajectoryRecord {
    Scheme scheme{Scheme::Jump};
    std::vector<double> times;
    std::vector<Magnetization> magnetizations;
    std::vector<double> jump_times;       // jump scheme only
    std::vector<double> raw_current;      // homodyne: mean of I_x over each output interval
    std::vector<double> transformed_x;    // Doob only: <x~>/N
    double current_dt{0.0};               // sampling interval of raw_current
    std::uint64_t seed{0};
    int n{0};
    double omega{0.0}, kappa{1.0}, dt{0.0}, t_final{0.0};
    double s{0.0};
};

namespace detail {

inline long record_stride(const TrajectoryOptions& opt) {
    require(opt.dt > 0.0, "trajectory: dt must be positive");
    require(opt.t_final >= 0.0, "trajectory: negative final time");
    return std::max(1L, std::lround(opt.record_every / opt.dt));
}

inline void check_psi0(const CollectiveSpinSystem& sys, const QuantumState& psi0) {
    require(psi0.amplitudes.size() == sys.dim(), "trajectory: initial state has wrong dimension");
    require(std::abs(psi0.amplitudes.norm() - 1.0) <= 1e-8, "trajectory: initial state must be normalized");
}

// Observers may return bool; false stops the run after the current sample.
template <class F, class... Args>
bool keep_going(F& f, Args&&... args) {
    if constexpr (std::is_same_v<std::invoke_result_t<F&, Args...>, bool>) {
        return f(std::forward<Args>(args)...);
    } else {
        f(std::forward<Args>(args)...);
        return true;
    }
}

inline Magnetization expectations(const CollectiveSpinSystem& sys, const Vector& psi) {
    const auto& sp = sys.sparse_ops();
    const double scale = 1.0 / sys.total_spin();
    return {scale * psi.dot(sp.jx * psi).real(), scale * psi.dot(sp.jy * psi).real(),
            scale * psi.dot(sp.jz * psi).real()};
}

} // namespace detail

/// Photon-counting unraveling. Per step the jump probability is
/// p = dt (2 kappa/N) <J+J->; a jump maps psi -> J- psi / |J- psi|. The state
/// then follows d psi/dt = (-i omega Jx - (kappa/N) J+J-) psi over the whole
/// step (RK4) and is renormalized, so jump steps do not lose coherent
/// evolution time.
///
/// on_sample(t, psi) fires at t = 0 and on the output grid; on_jump(t) at each
/// detection, stamped with the end of the step. Returning false from
/// on_sample ends the run.
template <class OnSample, class OnJump>
void run_jump(const CollectiveSpinSystem& sys, const QuantumState& psi0, const TrajectoryOptions& opt,
              std::uint64_t seed, OnSample&& on_sample, OnJump&& on_jump) {
    detail::check_psi0(sys, psi0);
    const long stride = detail::record_stride(opt);
    const long steps = std::lround(opt.t_final / opt.dt);
    const auto& sp = sys.sparse_ops();
    const SparseMatrix generator = (-I_unit * sys.omega()) * sp.jx - sys.decay_rate() * sp.jplus_jminus;
    RealVector pp_diag = RealVector::Zero(sys.dim());
    for (Eigen::Index k = 0; k < sys.dim(); ++k) pp_diag(k) = sp.jplus_jminus.coeff(k, k).real();
    const double h = opt.dt;
    const double rate = 2.0 * sys.decay_rate();

    Rng rng = task_rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vector psi = psi0.amplitudes;
    Vector k1, k2, k3, k4;
    if (!detail::keep_going(on_sample, 0.0, static_cast<const Vector&>(psi))) return;
    for (long step = 1; step <= steps; ++step) {
        const double pp = pp_diag.dot(psi.cwiseAbs2());
        const double p = h * rate * pp;
        if (p > opt.max_jump_probability) {
            std::ostringstream os;
            os << "jump_trajectory: jump probability " << p << " per step exceeds "
               << opt.max_jump_probability << "; reduce dt";
            throw NumericalError(os.str());
        }
        if (uniform(rng) < p) {
            psi = sp.jminus * psi;
            psi.normalize();
            on_jump(step * h);
        }
        k1 = generator * psi;
        k2 = generator * (psi + 0.5 * h * k1);
        k3 = generator * (psi + 0.5 * h * k2);
        k4 = generator * (psi + h * k3);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        psi.normalize();
        if (step % stride == 0 && !detail::keep_going(on_sample, step * h, static_cast<const Vector&>(psi)))
            return;
    }
}

inline TrajectoryRecord jump_trajectory(const CollectiveSpinSystem& sys, const QuantumState& psi0,
                                        const TrajectoryOptions& opt, std::uint64_t seed) {
    TrajectoryRecord rec;
    rec.scheme = Scheme::Jump;
    rec.seed = seed;
    rec.n = sys.n();
    rec.omega = sys.omega();
    rec.kappa = sys.kappa();
    rec.dt = opt.dt;
    rec.t_final = opt.t_final;
    run_jump(
        sys, psi0, opt, seed,
        [&](double t, const Vector& psi) {
            rec.times.push_back(t);
            rec.magnetizations.push_back(detail::expectations(sys, psi));
        },
        [&](double t) { rec.jump_times.push_back(t); });
    return rec;
}

/// Diffusive unraveling monitoring x = L + L^dagger:
///   d psi = { -i H dt - g [L^dag L - <x> L + <x/2>^2] dt + sqrt(2 g) [L - <x>/2] dW } psi
/// with g the dissipator rate (kappa/N here). The current is
/// I = sqrt(2 g) <x> + dW/dt.
template <class Op>
struct HomodyneModel {
    Op hamiltonian;
    Op jump;
    Op jump_dag_jump;
    double rate{0.0};
};

inline HomodyneModel<SparseMatrix> homodyne_model(const CollectiveSpinSystem& sys) {
    const auto& sp = sys.sparse_ops();
    return {SparseMatrix(sys.omega() * sp.jx), sp.jminus, sp.jplus_jminus, sys.decay_rate()};
}

/// Euler-Maruyama step of the nonlinear SSE followed by renormalization.
/// on_sample(t, psi, mean_current) fires at t = 0 (mean_current = 0) and on the
/// output grid, with the homodyne current averaged over the elapsed interval.
template <class Op, class OnSample>
void run_homodyne(const HomodyneModel<Op>& model, const Vector& psi0, const TrajectoryOptions& opt,
                  std::uint64_t seed, OnSample&& on_sample) {
    require(std::abs(psi0.norm() - 1.0) <= 1e-8, "homodyne: initial state must be normalized");
    const long stride = detail::record_stride(opt);
    const long steps = std::lround(opt.t_final / opt.dt);
    const double h = opt.dt;
    const double g = model.rate;
    const double noise_amp = std::sqrt(2.0 * g);
    const double sqrt_h = std::sqrt(h);

    Rng rng = task_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector psi = psi0;
    Vector lpsi, hpsi, llpsi;
    double integrated = 0.0;
    if (!detail::keep_going(on_sample, 0.0, static_cast<const Vector&>(psi), 0.0)) return;
    for (long step = 1; step <= steps; ++step) {
        lpsi = model.jump * psi;
        hpsi = model.hamiltonian * psi;
        llpsi = model.jump_dag_jump * psi;
        const double x_mean = 2.0 * psi.dot(lpsi).real();
        const double dw = sqrt_h * gauss(rng);
        integrated += noise_amp * x_mean * h + dw;

        const double half_x = 0.5 * x_mean;
        Vector dpsi = (-I_unit * h) * hpsi - (g * h) * (llpsi - x_mean * lpsi + (half_x * half_x) * psi);
        dpsi += (noise_amp * dw) * (lpsi - half_x * psi);
        psi += dpsi;
        const double norm = psi.norm();
        if (!std::isfinite(norm) || std::abs(norm - 1.0) > opt.max_norm_drift) {
            std::ostringstream os;
            os << "homodyne_trajectory: norm drift " << norm - 1.0 << " in one step exceeds "
               << opt.max_norm_drift << "; reduce dt";
            throw NumericalError(os.str());
        }
        psi /= norm;
        if (step % stride == 0) {
            const double mean_current = integrated / (stride * h);
            integrated = 0.0;
            if (!detail::keep_going(on_sample, step * h, static_cast<const Vector&>(psi), mean_current)) return;
        }
    }
}

inline TrajectoryRecord homodyne_trajectory(const CollectiveSpinSystem& sys, const QuantumState& psi0,
                                            const TrajectoryOptions& opt, std::uint64_t seed) {
    detail::check_psi0(sys, psi0);
    TrajectoryRecord rec;
    rec.scheme = Scheme::Homodyne;
    rec.seed = seed;
    rec.n = sys.n();
    rec.omega = sys.omega();
    rec.kappa = sys.kappa();
    rec.dt = opt.dt;
    rec.t_final = opt.t_final;
    rec.current_dt = detail::record_stride(opt) * opt.dt;
    bool first = true;
    run_homodyne(homodyne_model(sys), psi0.amplitudes, opt, seed, [&](double t, const Vector& psi, double current) {
        rec.times.push_back(t);
        rec.magnetizations.push_back(detail::expectations(sys, psi));
        if (!first) rec.raw_current.push_back(current);
        first = false;
    });
    return rec;
}

enum class BinMode { Tumbling, Sliding };

struct BinnedSignal {
    double window{0.5};
    std::vector<double> centers;
    std::vector<double> values;
};

/// Photon counts per window. Tumbling bins tile [0, t_final); sliding windows
/// are centered on a grid of spacing `step` running from window/2 to
/// t_final - window/2. Windows are half-open [a, b).
inline BinnedSignal bin_counts(const std::vector<double>& jump_times, double t_final, double window = 0.5,
                               BinMode mode = BinMode::Tumbling, double step = 0.01) {
    require(window > 0.0, "bin_counts: window must be positive");
    require(std::is_sorted(jump_times.begin(), jump_times.end()), "bin_counts: jump times must be sorted");
    BinnedSignal out;
    out.window = window;
    auto count_in = [&](double a, double b) {
        const auto lo = std::lower_bound(jump_times.begin(), jump_times.end(), a);
        const auto hi = std::lower_bound(jump_times.begin(), jump_times.end(), b);
        return static_cast<double>(hi - lo);
    };
    if (mode == BinMode::Tumbling) {
        const long nbins = static_cast<long>(std::floor(t_final / window + 1e-9));
        for (long k = 0; k < nbins; ++k) {
            out.centers.push_back((k + 0.5) * window);
            out.values.push_back(count_in(k * window, (k + 1) * window));
        }
    } else {
        require(step > 0.0, "bin_counts: sliding step must be positive");
        const long nsamples = static_cast<long>(std::floor((t_final - window) / step + 1e-9)) + 1;
        for (long k = 0; k < nsamples; ++k) {
            const double c = 0.5 * window + k * step;
            out.centers.push_back(c);
            out.values.push_back(count_in(c - 0.5 * window, c + 0.5 * window));
        }
    }
    return out;
}

/// Centered moving average of the raw homodyne current over `window`,
/// rescaled by 1/sqrt(2N). With kappa = 1 this tracks the conditioned m_x.
/// Sample i of the input covers ((i) dt_sample, (i+1) dt_sample].
inline BinnedSignal smooth_current(const std::vector<double>& raw, double sample_dt, int n, double window = 0.5) {
    require(sample_dt > 0.0, "smooth_current: sample spacing must be positive");
    require(n >= 1, "smooth_current: N must be positive");
    const long w = std::lround(window / sample_dt);
    require(w >= 10, "smooth_current: window must span at least 10 samples");
    BinnedSignal out;
    out.window = w * sample_dt;
    const double scale = 1.0 / (static_cast<double>(w) * std::sqrt(2.0 * n));
    const long len = static_cast<long>(raw.size());
    double acc = 0.0;
    for (long i = 0; i < len; ++i) {
        acc += raw[i];
        if (i >= w) acc -= raw[i - w];
        if (i >= w - 1) {
            out.centers.push_back((i + 1 - 0.5 * w) * sample_dt);
            out.values.push_back(acc * scale);
        }
    }
    return out;
}

} // namespace btc
