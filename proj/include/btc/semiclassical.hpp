// semiclassical.hpp — Mean-field flow, its closed-form M = 0 orbit, and the noisy phase model

#pragma once

#include "btc/random.hpp"
#include "btc/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace btc::semiclassical {

struct MagnetizationPoint {
    double x{0.0}, y{0.0}, z{0.0};

    MagnetizationPoint operator+(const MagnetizationPoint& o) const { return {x + o.x, y + o.y, z + o.z}; }
    MagnetizationPoint operator*(double a) const { return {a * x, a * y, a * z}; }
};

inline double j_squared(const MagnetizationPoint& m) { return m.x * m.x + m.y * m.y + m.z * m.z; }

// M = m_x / (m_y - omega/kappa); singular where m_y crosses omega/kappa.
inline double conserved_m(const MagnetizationPoint& m, double omega, double kappa) {
    return m.x / (m.y - omega / kappa);
}

inline MagnetizationPoint mf_rhs(const MagnetizationPoint& m, double omega, double kappa) {
    return {kappa * m.x * m.z,
            -omega * m.z + kappa * m.y * m.z,
            omega * m.y - kappa * (m.x * m.x + m.y * m.y)};
}

inline MagnetizationPoint rk4_step(const MagnetizationPoint& m, double omega, double kappa, double h) {
    const auto k1 = mf_rhs(m, omega, kappa);
    const auto k2 = mf_rhs(m + k1 * (0.5 * h), omega, kappa);
    const auto k3 = mf_rhs(m + k2 * (0.5 * h), omega, kappa);
    const auto k4 = mf_rhs(m + k3 * h, omega, kappa);
    return m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
}

struct MeanFieldPath {
    std::vector<double> times;
    std::vector<MagnetizationPoint> points;
};

inline MeanFieldPath integrate_mf(const MagnetizationPoint& m0, double omega, double kappa, double t_final,
                                  double dt, double sample_every = 0.0) {
    require(dt > 0.0 && dt * kappa <= 1e-2 + 1e-15, "integrate_mf: requires 0 < dt*kappa <= 1e-2");
    const long steps = std::lround(t_final / dt);
    const long stride = sample_every > 0.0 ? std::max(1L, std::lround(sample_every / dt)) : 1L;
    MeanFieldPath path;
    MagnetizationPoint m = m0;
    path.times.push_back(0.0);
    path.points.push_back(m);
    for (long k = 1; k <= steps; ++k) {
        m = rk4_step(m, omega, kappa, dt);
        if (k % stride == 0 || k == steps) {
            path.times.push_back(k * dt);
            path.points.push_back(m);
        }
    }
    return path;
}

inline double mf_frequency(double omega, double kappa) {
    require(omega > kappa, "mf_frequency: requires omega > kappa");
    return std::sqrt(omega * omega - kappa * kappa);
}

/// Closed-form M = 0 orbit above threshold, starting from (0, my0, mz0) on
/// the unit circle. Returns (m_y, m_z) at time t.
inline std::pair<double, double> mf_analytic(double my0, double mz0, double omega, double kappa, double t) {
    require(omega > kappa, "mf_analytic: requires omega > kappa");
    require(std::abs(my0 * my0 + mz0 * mz0 - 1.0) <= 1e-10, "mf_analytic: initial point must lie on the unit circle");
    const double w = omega / kappa;
    const double big_omega = mf_frequency(omega, kappa);
    const double sin_phi0 = big_omega * mz0 / (omega - kappa * my0);
    const double cos_phi0 = (1.0 - w * my0) / (w - my0);
    const double phi0 = std::atan2(sin_phi0, cos_phi0);
    const double arg = big_omega * t - phi0;
    const double c = std::cos(arg);
    const double my = w + (w * w - 1.0) / (c - w);
    const double mz = big_omega * std::sin(arg) / (kappa * c - omega);
    return {my, mz};
}

inline std::pair<double, double> phase_to_magnetization(double phi) {
    return {std::sin(phi), std::cos(phi)};
}

struct PhaseParams {
    double n{100.0};        // sets noise strength 2/N
    double omega{1.0};
    double kappa{1.0};
    double dt{1e-3};
    bool noise{true};       // false gives the N -> infinity flow
};

/// Euler-Maruyama integration of d phi = (-omega + kappa sin phi) dt + sqrt(2/N) dW.
/// phi stays unwrapped. `observer(t, phi)` runs every step and returns false
/// to stop early; the function returns the number of steps taken.
template <class Observer>
long simulate_phase(double phi0, const PhaseParams& p, double t_final, std::uint64_t seed, Observer&& observer) {
    require(p.dt > 0.0, "simulate_phase: dt must be positive");
    require(p.n > 0.0, "simulate_phase: N must be positive");
    Rng rng = task_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double amp = p.noise ? std::sqrt(2.0 * p.dt / p.n) : 0.0;
    const long steps = std::isfinite(t_final) ? std::lround(t_final / p.dt) : -1;
    double phi = phi0;
    if (!observer(0.0, phi)) return 0;
    for (long k = 1; steps < 0 || k <= steps; ++k) {
        const double drift = -p.omega + p.kappa * std::sin(phi);
        phi += drift * p.dt;
        if (p.noise) phi += amp * gauss(rng);
        if (!observer(k * p.dt, phi)) return k;
    }
    return steps;
}

struct PhasePath {
    std::vector<double> times;
    std::vector<double> phi;
    double n{0.0};
    std::uint64_t seed{0};
};

inline PhasePath simulate_phase(double phi0, const PhaseParams& p, double t_final, std::uint64_t seed,
                                double sample_every = 0.0) {
    const long stride = sample_every > 0.0 ? std::max(1L, std::lround(sample_every / p.dt)) : 1L;
    PhasePath path;
    path.n = p.n;
    path.seed = seed;
    long k = 0;
    simulate_phase(phi0, p, t_final, seed, [&](double t, double phi) {
        if (k++ % stride == 0) {
            path.times.push_back(t);
            path.phi.push_back(phi);
        }
        return true;
    });
    return path;
}

/// Fixed points of the noiseless phase flow on [0, 2 pi): two below
/// threshold, one (marginal, phi = pi/2) at threshold, none above.
inline std::vector<double> phase_fixed_points(double omega, double kappa, double tol = 1e-12) {
    constexpr double pi = std::numbers::pi;
    const double r = omega / kappa;
    if (r > 1.0 + tol) return {};
    if (std::abs(r - 1.0) <= tol) return {pi / 2.0};
    const double a = std::asin(r);
    return {a, pi - a};
}

} // namespace btc::semiclassical
