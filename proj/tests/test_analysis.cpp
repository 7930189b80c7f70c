#include "btc/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace btc;
using namespace btc::analysis;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> grid(std::size_t n, double dt) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = i * dt;
    return t;
}

} // namespace

TEST(Events, ConstantSignalHasNone) {
    const auto t = grid(1000, 0.01);
    const auto ev = detect_events(t, std::vector<double>(t.size(), 1.0));
    EXPECT_EQ(ev.count(), 0u);
    EXPECT_FALSE(ev.reliable());
    EXPECT_TRUE(std::isnan(ev.tau()));
}

TEST(Events, TwoSquareDips) {
    const auto t = grid(1000, 0.01);
    std::vector<double> y(t.size(), 1.0);
    for (std::size_t i = 200; i < 250; ++i) y[i] = 0.5;
    for (std::size_t i = 600; i < 650; ++i) y[i] = 0.5;
    const auto ev = detect_events(t, y);
    ASSERT_EQ(ev.count(), 2u);
    EXPECT_DOUBLE_EQ(ev.event_times[0], 2.0);
    EXPECT_DOUBLE_EQ(ev.event_times[1], 6.0);
    EXPECT_DOUBLE_EQ(ev.tau(), 4.0);
}

TEST(Events, HysteresisSuppressesChatter) {
    const auto t = grid(100, 0.1);
    std::vector<double> y(t.size(), 1.0);
    // Oscillates around the threshold without reaching the re-arm level.
    for (std::size_t i = 10; i < 60; ++i) y[i] = (i % 2) ? 0.79 : 0.85;
    EXPECT_EQ(detect_events(t, y).count(), 1u);
    EXPECT_EQ(detect_events(t, y, 0.8, 0.8).count(), 25u);
}

TEST(Events, StartsDisarmedAndHonorsBurnIn) {
    const auto t = grid(100, 0.1);
    std::vector<double> y(t.size(), 1.0);
    for (std::size_t i = 0; i < 5; ++i) y[i] = 0.0;  // begins inside a dip
    for (std::size_t i = 30; i < 35; ++i) y[i] = 0.0;
    for (std::size_t i = 70; i < 75; ++i) y[i] = 0.0;
    EXPECT_EQ(detect_events(t, y).count(), 2u);
    const auto late = detect_events(t, y, 0.8, 0.9, 5.0);
    ASSERT_EQ(late.count(), 1u);
    EXPECT_GT(late.event_times[0], 5.0);
    EXPECT_THROW(detect_events(t, y, 0.9, 0.8), std::invalid_argument);
    EXPECT_THROW(detect_events(t, std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST(Events, ReliabilityNeedsTenEvents) {
    EventSeries s;
    s.event_times = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_FALSE(s.reliable());
    s.event_times.push_back(10);
    EXPECT_TRUE(s.reliable());
    EXPECT_DOUBLE_EQ(s.tau(), 1.0);
    EXPECT_DOUBLE_EQ(s.tau_stderr(), 0.0);
}

// Each detected dip in the phase model at N = 200 belongs to a full 2 pi
// slip of the unwrapped phase on the same path.
TEST(Events, MatchPhaseSlips) {
    const semiclassical::PhaseParams p{200.0, 1.0, 1.0, 1e-3, true};
    const auto path = semiclassical::simulate_phase(pi / 2, p, 4000.0, 12);
    std::vector<double> my(path.phi.size());
    for (std::size_t i = 0; i < my.size(); ++i) my[i] = std::sin(path.phi[i]);
    const auto ev = detect_events(path.times, my);
    ASSERT_GE(ev.count(), 30u);

    // Slip k completes when phi first drops below pi/2 - 2 pi k - pi.
    std::vector<double> slips;
    for (std::size_t i = 0; i < path.phi.size(); ++i)
        if (path.phi[i] < pi / 2 - pi - 2.0 * pi * static_cast<double>(slips.size())) slips.push_back(path.times[i]);
    std::size_t matched = 0;
    for (double te : ev.event_times) {
        const auto it = std::lower_bound(slips.begin(), slips.end(), te);
        if (it != slips.end() && *it - te < 20.0) ++matched;
    }
    EXPECT_EQ(matched, ev.count());
    EXPECT_EQ(ev.count(), slips.size());
}

namespace {

std::pair<EventSeries, EventSeries> coarse_and_fine(const semiclassical::PhaseParams& p, double t_final,
                                                    std::uint64_t seed) {
    const auto fine = semiclassical::simulate_phase(pi / 2, p, t_final, seed, 0.005);
    std::vector<double> tf, yf, tc, yc;
    for (std::size_t i = 0; i < fine.phi.size(); ++i) {
        tf.push_back(fine.times[i]);
        yf.push_back(std::sin(fine.phi[i]));
        if (i % 2 == 0) {
            tc.push_back(fine.times[i]);
            yc.push_back(std::sin(fine.phi[i]));
        }
    }
    return {detect_events(tc, yc), detect_events(tf, yf)};
}

} // namespace

// Smooth path (noiseless flow just above threshold, periodic dips): doubling
// the sampling rate keeps the count and moves each event by less than one
// coarse sample.
TEST(Events, ResamplingInvarianceSmoothPath) {
    const semiclassical::PhaseParams p{100.0, 1.05, 1.0, 1e-3, false};
    const auto [a, b] = coarse_and_fine(p, 2000.0, 1);
    ASSERT_GT(a.count(), 10u);
    ASSERT_EQ(a.count(), b.count());
    for (std::size_t i = 0; i < a.count(); ++i) EXPECT_LT(std::abs(a.event_times[i] - b.event_times[i]), 0.01);
}

// Noisy path at large N, where every dip is a full slip: the count is unchanged.
// Event times can move by more than a coarse sample because a Brownian path
// recrosses the threshold between samples.
TEST(Events, ResamplingKeepsSlipCount) {
    const semiclassical::PhaseParams p{800.0, 1.0, 1.0, 1e-3, true};
    const auto [a, b] = coarse_and_fine(p, 4000.0, 4);
    ASSERT_GT(a.count(), 10u);
    EXPECT_EQ(a.count(), b.count());
    for (std::size_t i = 0; i < a.count(); ++i) EXPECT_LT(std::abs(a.event_times[i] - b.event_times[i]), 1.0);
}

TEST(Events, HalvesAgree) {
    const semiclassical::PhaseParams p{100.0, 1.0, 1.0, 1e-3, true};
    EventDetector first(0.8, 0.9, 50.0), second(0.8, 0.9, 0.0);
    const double half = 30000.0;
    semiclassical::simulate_phase(pi / 2, p, 2.0 * half, 77, [&](double t, double phi) {
        (t <= half ? first : second).push(t, std::sin(phi));
        return true;
    });
    const auto& a = first.series();
    const auto& b = second.series();
    ASSERT_TRUE(a.reliable() && b.reliable());
    const double combined = std::hypot(a.tau_stderr(), b.tau_stderr());
    EXPECT_LT(std::abs(a.tau() - b.tau()), 3.0 * combined);
}

TEST(PowerLaw, RecoversPlantedExponent) {
    std::vector<double> n{50, 100, 200, 400, 800}, tau;
    for (double x : n) tau.push_back(2.0 * std::pow(x, 0.5));
    const auto fit = fit_power_law(n, tau);
    EXPECT_NEAR(fit.exponent, 0.5, 1e-12);
    EXPECT_NEAR(fit.amplitude, 2.0, 1e-10);
    EXPECT_NEAR(fit.std_error, 0.0, 1e-10);
    EXPECT_EQ(fit.n_points, 5);
}

TEST(PowerLaw, NoisyDataToThreeDecimals) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1e-4);
    std::vector<double> n, tau;
    for (int i = 0; i < 12; ++i) {
        n.push_back(20.0 * std::pow(2.0, i * 0.5));
        tau.push_back(0.7 * std::pow(n.back(), 0.36) * std::exp(g(rng)));
    }
    EXPECT_NEAR(fit_power_law(n, tau).exponent, 0.36, 5e-4);
}

TEST(PowerLaw, Rejections) {
    EXPECT_THROW(fit_power_law({1, 2, 3}, {1, 2, 3}), std::invalid_argument);
    EXPECT_THROW(fit_power_law({1, 2, 3, 4}, {1, 2, -3, 4}), std::invalid_argument);
    EXPECT_THROW(fit_power_law({2, 2, 2, 2}, {1, 2, 3, 4}), std::invalid_argument);
}

TEST(TauScaling, PhasePointsAndPartialFlag) {
    TauScalingOptions opt;
    opt.burn_in = 10.0;
    const auto full = measure_tau(EventModel::Phase, 50, 1.0, 1.0, 20, opt, 3);
    EXPECT_TRUE(full.complete);
    EXPECT_EQ(full.n_events, 21u);
    EXPECT_GT(full.tau, 0.0);
    opt.max_time = 30.0;
    const auto partial = measure_tau(EventModel::Phase, 50, 1.0, 1.0, 1000, opt, 3);
    EXPECT_FALSE(partial.complete);
    EXPECT_LE(partial.simulated_time, 30.0 + 1e-9);
}

TEST(TauScaling, WorkerCountDoesNotChangeResults) {
    TauScalingOptions opt;
    opt.burn_in = 10.0;
    const std::vector<int> ns{50, 100, 200, 400};
    opt.workers = 1;
    const auto a = tau_scaling(EventModel::Phase, ns, 1.0, 1.0, 30, opt);
    opt.workers = 3;
    const auto b = tau_scaling(EventModel::Phase, ns, 1.0, 1.0, 30, opt);
    ASSERT_TRUE(a.complete && b.complete);
    for (std::size_t i = 0; i < ns.size(); ++i) EXPECT_EQ(a.points[i].tau, b.points[i].tau);
    EXPECT_EQ(a.fit.exponent, b.fit.exponent);
    EXPECT_EQ(a.fit.n_points, 4);
}

TEST(TauScaling, JumpModelRuns) {
    TauScalingOptions opt;
    opt.burn_in = 10.0;
    const auto pt = measure_tau(EventModel::Jump, 10, 1.0, 1.0, 5, opt, 1);
    EXPECT_TRUE(pt.complete);
    EXPECT_GT(pt.tau, 0.0);
}

TEST(Spectrum, ParsevalAgainstSignalEnergy) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t n : {1024u, 1025u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = g(rng);
        const auto sp = dft_magnitude(x, 0.1);
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double energy = 0.0;
        for (double v : x) energy += (v - mean) * (v - mean);
        // One-sided spectrum: interior bins count twice, DC and Nyquist once.
        double spec = 0.0;
        for (std::size_t k = 0; k < sp.magnitude.size(); ++k) {
            const bool single = k == 0 || (n % 2 == 0 && k == n / 2);
            spec += (single ? 1.0 : 2.0) * sp.magnitude[k] * sp.magnitude[k];
        }
        EXPECT_NEAR(spec / n, energy, 1e-8 * energy);
    }
}

TEST(Spectrum, MatchesNaiveTransform) {
    std::vector<double> x(64);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * i * i) + 0.2;
    const auto sp = dft_magnitude(x, 1.0);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 64.0;
    for (std::size_t k = 0; k <= 32; ++k) {
        std::complex<double> acc{};
        for (std::size_t j = 0; j < 64; ++j) acc += (x[j] - mean) * std::polar(1.0, -2.0 * pi * k * j / 64.0);
        EXPECT_NEAR(sp.magnitude[k], std::abs(acc), 1e-10);
        EXPECT_NEAR(sp.axis[k], 2.0 * pi * k / 64.0, 1e-14);
    }
}

TEST(Spectrum, CosineAtOmegaPeaksAtOne) {
    const double w = 1.5, big = std::sqrt(w * w - 1.0);
    BinnedSignal b;
    const double step = 0.01;
    for (int i = 0; i < 100000; ++i) {
        b.centers.push_back(0.25 + i * step);
        b.values.push_back(3.0 + std::cos(big * b.centers.back()));
    }
    const auto sp = count_spectrum(b, w, 1.0);
    const auto k = dominant_peak(sp);
    EXPECT_LE(std::abs(sp.axis[k] - 1.0), sp.bin_width);
    EXPECT_GT(peak_to_background(sp), 100.0);
}

TEST(Spectrum, Rejections) {
    BinnedSignal b;
    for (int i = 0; i < 2000; ++i) {
        b.centers.push_back(i * 0.5);
        b.values.push_back(i % 3);
    }
    EXPECT_THROW(count_spectrum(b, 1.0, 1.0), std::invalid_argument);
    EXPECT_NO_THROW(count_spectrum(b, 1.5, 1.0));
    BinnedSignal shortb;
    shortb.centers.assign(b.centers.begin(), b.centers.begin() + 1000);
    shortb.values.assign(b.values.begin(), b.values.begin() + 1000);
    EXPECT_THROW(count_spectrum(shortb, 1.5, 1.0), std::invalid_argument);
    b.centers[100] += 0.1;
    EXPECT_THROW(count_spectrum(b, 1.5, 1.0), std::invalid_argument);
}

TEST(Dwell, ConstantPositive) {
    const auto st = dwell_stats(std::vector<double>(100, 0.3), 0.1);
    EXPECT_EQ(st.positive_fraction, 1.0);
    EXPECT_EQ(st.switch_count, 0u);
    EXPECT_NEAR(st.mean_dwell, 10.0, 1e-12);
}

TEST(Dwell, SquareWave) {
    std::vector<double> v;
    for (int i = 0; i < 400; ++i) v.push_back((i / 100) % 2 ? -1.0 : 1.0);
    const auto st = dwell_stats(v, 0.5);
    EXPECT_DOUBLE_EQ(st.positive_fraction, 0.5);
    EXPECT_EQ(st.switch_count, 3u);
    EXPECT_DOUBLE_EQ(st.mean_dwell, 50.0);
    EXPECT_THROW(dwell_stats({}, 1.0), std::invalid_argument);
}
