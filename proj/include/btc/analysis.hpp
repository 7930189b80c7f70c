// analysis.hpp — Large-fluctuation events, waiting-time scaling, counting spectra, sign dwell

#pragma once

#include "btc/parallel.hpp"
#include "btc/semiclassical.hpp"
#include "btc/unravel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace btc::analysis {

struct EventSeries {
    std::vector<double> event_times;
    double threshold{0.8};
    double rearm_level{0.9};
    double burn_in{0.0};
    double t_end{0.0};

    std::size_t count() const { return event_times.size(); }
    bool reliable() const { return event_times.size() >= 10; }

    /// Mean gap between successive events (NaN with fewer than two events).
    double tau() const {
        if (event_times.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        return (event_times.back() - event_times.front()) / static_cast<double>(event_times.size() - 1);
    }

    double tau_stderr() const {
        const std::size_t gaps = event_times.size() < 2 ? 0 : event_times.size() - 1;
        if (gaps < 2) return std::numeric_limits<double>::quiet_NaN();
        const double mean = tau();
        double ss = 0.0;
        for (std::size_t i = 1; i < event_times.size(); ++i) {
            const double g = event_times[i] - event_times[i - 1] - mean;
            ss += g * g;
        }
        return std::sqrt(ss / static_cast<double>(gaps - 1) / static_cast<double>(gaps));
    }
};

/// Hysteresis detector for dips of m_y. An event fires when the signal drops
/// below `threshold` while armed; the detector then stays disarmed until the
/// signal climbs back above `rearm`. It starts disarmed, so a series that
/// begins inside a dip does not produce a spurious event.
class EventDetector {
public:
    EventDetector(double threshold = 0.8, double rearm = 0.9, double burn_in = 0.0) {
        series_.threshold = threshold;
        series_.rearm_level = rearm;
        series_.burn_in = burn_in;
        require(rearm >= threshold, "EventDetector: rearm level must not be below the threshold");
    }

    void push(double t, double m_y) {
        series_.t_end = t;
        if (armed_) {
            if (m_y < series_.threshold) {
                armed_ = false;
                if (t > series_.burn_in) series_.event_times.push_back(t);
            }
        } else if (m_y > series_.rearm_level) {
            armed_ = true;
        }
    }

    bool armed() const { return armed_; }
    const EventSeries& series() const { return series_; }

private:
    EventSeries series_;
    bool armed_{false};
};

inline EventSeries detect_events(const std::vector<double>& times, const std::vector<double>& m_y,
                                 double threshold = 0.8, double rearm = 0.9, double burn_in = 0.0) {
    require(times.size() == m_y.size(), "detect_events: times and values differ in length");
    EventDetector det(threshold, rearm, burn_in);
    for (std::size_t i = 0; i < times.size(); ++i) det.push(times[i], m_y[i]);
    return det.series();
}

struct PowerLawFit {
    double exponent{0.0};
    double amplitude{0.0};
    double std_error{0.0};
    int n_points{0};
};

/// Unweighted least squares of log y against log x: y = amplitude * x^exponent.
inline PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "fit_power_law: x and y differ in length");
    require(x.size() >= 4, "fit_power_law: at least 4 points are required");
    const auto n = static_cast<double>(x.size());
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, "fit_power_law: data must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    require(sxx > 0.0, "fit_power_law: x values must not all coincide");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    fit.amplitude = std::exp(intercept);
    double ssr = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - intercept - fit.exponent * lx[i];
        ssr += r * r;
    }
    fit.std_error = std::sqrt(ssr / (n - 2.0) / sxx);
    fit.n_points = static_cast<int>(x.size());
    return fit;
}

enum class EventModel { Phase, Jump };

struct TauScalingOptions {
    double dt{1e-3};              // phase model step; jump model uses jump_dt
    double jump_dt{1e-3};
    double record_every{0.01};    // jump model: m_y sampling grid
    double burn_in{50.0};
    double threshold{0.8};
    double rearm{0.9};
    double max_time{1e7};         // per N; reaching it flags a partial result
    std::uint64_t seed{1};
    unsigned workers{1};
};

struct TauPoint {
    int n{0};
    double tau{std::numeric_limits<double>::quiet_NaN()};
    double tau_stderr{std::numeric_limits<double>::quiet_NaN()};
    std::size_t n_events{0};
    double simulated_time{0.0};
    bool complete{false};   // events_target reached before max_time
    std::uint64_t seed{0};
};

struct TauScalingResult {
    std::vector<TauPoint> points;
    PowerLawFit fit;
    bool complete{false};
};

/// Waiting time between large dips of m_y for one N. The phase model feeds
/// sin(phi) every integration step; the jump model feeds the conditioned
/// <m_y> on the output grid. Both start at m_y = 1 (phi = pi/2, or the spin
/// coherent state theta = phi = pi/2) and discard `burn_in`.
inline TauPoint measure_tau(EventModel model, int n, double omega, double kappa, std::size_t events_target,
                            const TauScalingOptions& opt, std::uint64_t seed) {
    EventDetector det(opt.threshold, opt.rearm, opt.burn_in);
    const std::size_t wanted = events_target + 1;  // events_target gaps
    TauPoint pt;
    pt.n = n;
    pt.seed = seed;
    double last_t = 0.0;
    if (model == EventModel::Phase) {
        semiclassical::PhaseParams p{static_cast<double>(n), omega, kappa, opt.dt, true};
        semiclassical::simulate_phase(std::numbers::pi / 2.0, p, opt.max_time, seed, [&](double t, double phi) {
            det.push(t, std::sin(phi));
            last_t = t;
            return det.series().count() < wanted;
        });
    } else {
        const CollectiveSpinSystem sys(n, omega, kappa);
        const QuantumState psi0 = spin_coherent_state(sys, std::numbers::pi / 2.0, std::numbers::pi / 2.0);
        TrajectoryOptions topt;
        topt.t_final = opt.max_time;
        topt.dt = opt.jump_dt;
        topt.record_every = opt.record_every;
        const auto& jy = sys.sparse_ops().jy;
        const double scale = 1.0 / sys.total_spin();
        run_jump(
            sys, psi0, topt, seed,
            [&](double t, const Vector& psi) {
                det.push(t, scale * psi.dot(jy * psi).real());
                last_t = t;
                return det.series().count() < wanted;
            },
            [](double) {});
    }
    const auto& ev = det.series();
    pt.n_events = ev.count();
    pt.simulated_time = last_t;
    pt.complete = ev.count() >= wanted;
    pt.tau = ev.tau();
    pt.tau_stderr = ev.tau_stderr();
    return pt;
}

/// tau(N) over N_list and its power-law fit. Each N gets seed master + index.
inline TauScalingResult tau_scaling(EventModel model, const std::vector<int>& n_list, double omega, double kappa,
                                    std::size_t events_target, const TauScalingOptions& opt = {}) {
    TauScalingResult res;
    res.points.resize(n_list.size());
    parallel_for(n_list.size(), opt.workers, [&](std::size_t i) {
        res.points[i] = measure_tau(model, n_list[i], omega, kappa, events_target, opt, opt.seed + i);
    });
    res.complete = std::all_of(res.points.begin(), res.points.end(), [](const TauPoint& p) { return p.complete; });
    std::vector<double> xs, ys;
    for (const auto& p : res.points) {
        if (std::isfinite(p.tau)) {
            xs.push_back(p.n);
            ys.push_back(p.tau);
        }
    }
    if (xs.size() >= 4) res.fit = fit_power_law(xs, ys);
    return res;
}

struct Spectrum {
    std::vector<double> axis;        // angular frequency, divided by Omega when rescaled
    std::vector<double> magnitude;   // |DFT| for k = 0 .. n/2
    double bin_width{0.0};           // spacing of `axis`
    std::size_t samples{0};
};

/// Magnitude of the DFT of a uniformly sampled signal with its mean removed
/// (rectangular window). Only the non-negative half is returned.
inline Spectrum dft_magnitude(const std::vector<double>& signal, double sample_dt) {
    require(sample_dt > 0.0, "dft_magnitude: sample spacing must be positive");
    const std::size_t n = signal.size();
    require(n >= 2, "dft_magnitude: signal too short");
    const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(n);

    struct Free {
        void operator()(void* p) const { fftw_free(p); }
    };
    std::unique_ptr<double, Free> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    const std::size_t half = n / 2 + 1;
    std::unique_ptr<fftw_complex, Free> out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * half)));
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = signal[i] - mean;
    static std::mutex planner_mutex;  // FFTW planning is not thread-safe
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex);
        fftw_destroy_plan(plan);
    }

    Spectrum sp;
    sp.samples = n;
    sp.bin_width = 2.0 * std::numbers::pi / (static_cast<double>(n) * sample_dt);
    sp.axis.resize(half);
    sp.magnitude.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
        sp.axis[k] = k * sp.bin_width;
        sp.magnitude[k] = std::hypot(out.get()[k][0], out.get()[k][1]);
    }
    return sp;
}

/// Spectrum of a binned counting signal with the frequency axis in units of
/// the mean-field frequency Omega = sqrt(omega^2 - kappa^2).
inline Spectrum count_spectrum(const BinnedSignal& binned, double omega, double kappa) {
    require(omega > kappa, "count_spectrum: Omega rescaling requires omega > kappa");
    require(binned.values.size() >= 1024, "count_spectrum: need at least 2^10 samples");
    require(binned.centers.size() == binned.values.size(), "count_spectrum: malformed binned signal");
    const double step = binned.centers[1] - binned.centers[0];
    for (std::size_t i = 2; i < binned.centers.size(); ++i)
        require(std::abs(binned.centers[i] - binned.centers[i - 1] - step) <= 1e-9 * std::max(1.0, step) + 1e-12,
                "count_spectrum: bins must be uniform");
    Spectrum sp = dft_magnitude(binned.values, step);
    const double big_omega = semiclassical::mf_frequency(omega, kappa);
    for (auto& a : sp.axis) a /= big_omega;
    sp.bin_width /= big_omega;
    return sp;
}

/// Index of the largest magnitude among k >= 1.
inline std::size_t dominant_peak(const Spectrum& sp) {
    require(sp.magnitude.size() >= 2, "dominant_peak: spectrum too short");
    return static_cast<std::size_t>(std::max_element(sp.magnitude.begin() + 1, sp.magnitude.end()) -
                                    sp.magnitude.begin());
}

/// Largest magnitude within +-1 bin of axis value `at`, divided by the median
/// magnitude over 0 < axis <= band.
inline double peak_to_background(const Spectrum& sp, double at = 1.0, double band = 4.0) {
    std::vector<double> bg;
    double peak = 0.0;
    for (std::size_t k = 1; k < sp.axis.size(); ++k) {
        if (sp.axis[k] <= band) bg.push_back(sp.magnitude[k]);
        if (std::abs(sp.axis[k] - at) <= sp.bin_width * (1.0 + 1e-9)) peak = std::max(peak, sp.magnitude[k]);
    }
    require(!bg.empty(), "peak_to_background: empty background band");
    std::nth_element(bg.begin(), bg.begin() + bg.size() / 2, bg.end());
    return peak / bg[bg.size() / 2];
}

struct DwellStats {
    double positive_fraction{0.0};
    double mean_dwell{0.0};    // mean length of constant-sign stretches (time units)
    std::size_t switch_count{0};
};

/// Sign-dwell statistics of a uniformly sampled signal (burn-in already
/// removed). Exact zeros inherit the previous sign.
inline DwellStats dwell_stats(const std::vector<double>& values, double sample_dt) {
    require(!values.empty(), "dwell_stats: empty signal");
    DwellStats st;
    std::size_t positive = 0;
    int sign = 0;
    for (double v : values) {
        int cur = v > 0.0 ? 1 : (v < 0.0 ? -1 : sign);
        if (cur == 0) cur = 1;
        if (sign != 0 && cur != sign) ++st.switch_count;
        sign = cur;
        if (cur > 0) ++positive;
    }
    st.positive_fraction = static_cast<double>(positive) / static_cast<double>(values.size());
    st.mean_dwell = values.size() * sample_dt / static_cast<double>(st.switch_count + 1);
    return st;
}

} // namespace btc::analysis
