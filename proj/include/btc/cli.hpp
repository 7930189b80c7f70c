// cli.hpp — Batch driver: one subcommand per pipeline, a manifest per output directory
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#pragma once

#include "CLI11.hpp"

#include "btc/analysis.hpp"
#include "btc/io.hpp"
#include "btc/largedev.hpp"
#include "btc/mastereq.hpp"
#include "btc/parallel.hpp"
#include "btc/semiclassical.hpp"
#include "btc/unravel.hpp"
#include "btc/validate.hpp"

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace btc::cli {

using io::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

// Largest N accepted by commands that work with (N+1)^2-dimensional
// density matrices.
inline constexpr int kMaxDensityN = 600;

struct Common {
    int n{100};
    double omega{1.5};   // omega/kappa
    double kappa{1.0};
    std::uint64_t seed{1};
    unsigned workers{1};
    std::string out;
    bool force{false};
    std::string config;
};

/// Collects the files written by one command and emits the manifest.
class Run {
public:
    Run(std::string command, const Common& c) : command_(std::move(command)), dir_(c.out) {
        if (c.out.empty()) throw std::invalid_argument("--out is required");
        io::prepare_output_dir(dir_, c.force);
    }

    io::CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
        files_.push_back(name);
        return io::CsvWriter(dir_ / name, header);
    }

    json& results() { return results_; }

    void finish(const json& config) {
        json m;
        m["tool"] = "btc";
        m["build_hash"] = io::build_hash();
        m["command"] = command_;
        m["config"] = config;
        m["results"] = results_;
        m["files"] = files_;
        io::write_json(dir_ / io::kManifestName, m);
    }

private:
    std::string command_;
    io::fs::path dir_;
    std::vector<std::string> files_;
    json results_ = json::object();
};

inline json common_json(const Common& c) {
    // Worker count is left out: it does not change any output.
    return json{{"n", c.n}, {"omega_over_kappa", c.omega}, {"kappa", c.kappa}, {"seed", c.seed}};
}

inline std::vector<double> grid(double lo, double hi, double step) {
    require(step > 0.0, "grid step must be positive");
    require(hi >= lo, "grid upper end must not be below the lower end");
    const long count = std::lround(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> g(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = lo + static_cast<double>(i) * step;
    return g;
}

inline void add_common(CLI::App* app, Common& c, bool with_n = true) {
    if (with_n) app->add_option("--n", c.n, "number of spins N")->capture_default_str();
    app->add_option("--omega", c.omega, "drive omega/kappa")->capture_default_str();
    app->add_option("--kappa", c.kappa, "decay rate kappa (sets units)")->capture_default_str();
    app->add_option("--seed", c.seed, "master seed")->capture_default_str();
    app->add_option("--workers", c.workers, "worker threads")->capture_default_str();
    app->add_option("--out", c.out, "output directory")->required();
    app->add_flag("--force", c.force, "overwrite an existing run in --out");
    app->add_option("--config", c.config, "key = value file with option defaults");
}

inline void check_density_n(int n) {
    if (n < 1 || n > kMaxDensityN)
        throw std::invalid_argument("N = " + std::to_string(n) + " is outside the supported range [1, " +
                                    std::to_string(kMaxDensityN) + "] for density-matrix commands");
}

// ---------------------------------------------------------------- steady

struct SteadyArgs {
    Common c;
    double omega_min{0.0}, omega_max{2.0}, omega_step{0.05};
    std::vector<double> omega_list;
};

inline void cmd_steady(const SteadyArgs& a) {
    check_density_n(a.c.n);
    const auto ws = a.omega_list.empty() ? grid(a.omega_min, a.omega_max, a.omega_step) : a.omega_list;
    std::vector<StationaryRow> rows(ws.size());
    parallel_for(ws.size(), a.c.workers, [&](std::size_t i) { rows[i] = stationary_row(a.c.n, ws[i], a.c.kappa); });

    Run run("steady", a.c);
    auto csv = run.csv("steady.csv", {"n", "omega_over_kappa", "m_x", "m_y", "m_z", "mf_m_z", "rmax", "purity", "beta"});
    for (const auto& r : rows) {
        const double w = r.omega_over_kappa;
        const double mf = w < 1.0 ? -std::sqrt(1.0 - w * w) : 0.0;
        csv.row({static_cast<double>(a.c.n), w, r.m.x, r.m.y, r.m.z, mf, r.diag.rmax, r.diag.purity, r.diag.beta});
    }
    json cfg = common_json(a.c);
    cfg.erase("omega_over_kappa");
    cfg.erase("seed");
    cfg["omega_over_kappa_grid"] = ws;
    run.finish(cfg);
}

// ---------------------------------------------------------------- traj

struct TrajArgs {
    Common c;
    std::string scheme{"jump"};
    double t_final{10.0};
    std::optional<double> dt;
    double record_every{0.01};
    double theta{std::numbers::pi / 2.0};
    double phi{std::numbers::pi / 2.0};
    double bin_window{0.5};
    std::string bin_mode{"tumbling"};
    double bin_step{0.01};
    double s{-0.1};
    std::string doob_form{"exact"};
    double burn_in{0.0};
    int trajectories{1};
};

inline Scheme parse_scheme(const std::string& s) {
    if (s == "jump") return Scheme::Jump;
    if (s == "homodyne") return Scheme::Homodyne;
    if (s == "doob") return Scheme::DoobHomodyne;
    throw std::invalid_argument("unknown scheme '" + s + "' (jump|homodyne|doob)");
}

inline BinMode parse_bin_mode(const std::string& s) {
    if (s == "tumbling") return BinMode::Tumbling;
    if (s == "sliding") return BinMode::Sliding;
    throw std::invalid_argument("unknown bin mode '" + s + "' (tumbling|sliding)");
}

inline largedev::DoobHamiltonianForm parse_doob_form(const std::string& s) {
    if (s == "exact") return largedev::DoobHamiltonianForm::Exact;
    if (s == "rotated") return largedev::DoobHamiltonianForm::RotatedDrive;
    throw std::invalid_argument("unknown Doob Hamiltonian form '" + s + "' (exact|rotated)");
}

inline std::vector<double> after_burn_in(const BinnedSignal& sig, double burn_in) {
    std::vector<double> v;
    for (std::size_t i = 0; i < sig.values.size(); ++i)
        if (sig.centers[i] >= burn_in) v.push_back(sig.values[i]);
    return v;
}

inline json dwell_json(const analysis::DwellStats& d) {
    return json{{"positive_fraction", d.positive_fraction}, {"mean_dwell", d.mean_dwell},
                {"switch_count", d.switch_count}};
}

inline void write_trajectory_files(Run& run, const std::string& suffix, const TrajectoryRecord& rec,
                                   const TrajArgs& a, json& summary) {
    const bool doob = rec.scheme == Scheme::DoobHomodyne;
    std::vector<std::string> header{"t", "m_x", "m_y", "m_z"};
    if (doob) header.push_back("x_tilde_over_n");
    auto traj = run.csv("trajectory" + suffix + ".csv", header);
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        const auto& m = rec.magnetizations[i];
        std::vector<double> row{rec.times[i], m.x, m.y, m.z};
        if (doob) row.push_back(rec.transformed_x[i]);
        traj.row(row);
    }
    summary["seed"] = rec.seed;
    if (rec.scheme == Scheme::Jump) {
        auto jumps = run.csv("jumps" + suffix + ".csv", {"t"});
        for (double t : rec.jump_times) jumps.row(std::vector<double>{t});
        const auto counts = bin_counts(rec.jump_times, rec.t_final, a.bin_window, parse_bin_mode(a.bin_mode), a.bin_step);
        auto cc = run.csv("counts" + suffix + ".csv", {"t_center", "count"});
        for (std::size_t i = 0; i < counts.values.size(); ++i) cc.row({counts.centers[i], counts.values[i]});
        summary["jump_count"] = rec.jump_times.size();
        summary["jump_rate"] = rec.t_final > 0 ? rec.jump_times.size() / rec.t_final : 0.0;
    } else {
        auto raw = run.csv("current" + suffix + ".csv", {"t_end", "current"});
        for (std::size_t i = 0; i < rec.raw_current.size(); ++i)
            raw.row({rec.times[i + 1], rec.raw_current[i]});
        if (static_cast<double>(rec.raw_current.size()) * rec.current_dt >= a.bin_window &&
            std::lround(a.bin_window / rec.current_dt) >= 10) {
            const auto sm = smooth_current(rec.raw_current, rec.current_dt, rec.n, a.bin_window);
            auto sc = run.csv("current_smoothed" + suffix + ".csv", {"t_center", "value"});
            for (std::size_t i = 0; i < sm.values.size(); ++i) sc.row({sm.centers[i], sm.values[i]});
            const auto tail = after_burn_in(sm, a.burn_in);
            if (!tail.empty()) summary["smoothed_current_dwell"] = dwell_json(analysis::dwell_stats(tail, rec.current_dt));
        }
        std::vector<double> mx;
        for (std::size_t i = 0; i < rec.times.size(); ++i)
            if (rec.times[i] >= a.burn_in) mx.push_back(rec.magnetizations[i].x);
        if (!mx.empty()) summary["m_x_dwell"] = dwell_json(analysis::dwell_stats(mx, a.record_every));
    }
}

inline void cmd_traj(const TrajArgs& a) {
    const Scheme scheme = parse_scheme(a.scheme);
    parse_bin_mode(a.bin_mode);
    require(a.trajectories >= 1, "--trajectories must be at least 1");
    const CollectiveSpinSystem sys(a.c.n, a.c.omega * a.c.kappa, a.c.kappa);
    const QuantumState psi0 = spin_coherent_state(sys, a.theta, a.phi);
    TrajectoryOptions opt;
    opt.t_final = a.t_final;
    opt.dt = a.dt.value_or(scheme == Scheme::Jump ? 1e-3 : 1e-4);
    opt.record_every = a.record_every;

    std::optional<largedev::DoobSystem> doob;
    json doob_info;
    if (scheme == Scheme::DoobHomodyne) {
        check_density_n(a.c.n);
        const auto sol = largedev::solve_tilted(sys, a.s);
        largedev::DoobOptions dopt;
        dopt.form = parse_doob_form(a.doob_form);
        doob = largedev::doob_transform(sys, sol, dopt);
        doob_info = json{{"s", a.s},
                         {"theta", sol.theta},
                         {"eigen_residual", sol.residual},
                         {"hamiltonian_form", a.doob_form},
                         {"trace_residual", largedev::doob_trace_residual(sys, sol, *doob)}};
    }

    std::vector<TrajectoryRecord> recs(static_cast<std::size_t>(a.trajectories));
    parallel_for(recs.size(), a.c.workers, [&](std::size_t i) {
        const std::uint64_t seed = a.c.seed + i;
        switch (scheme) {
        case Scheme::Jump: recs[i] = jump_trajectory(sys, psi0, opt, seed); break;
        case Scheme::Homodyne: recs[i] = homodyne_trajectory(sys, psi0, opt, seed); break;
        case Scheme::DoobHomodyne: recs[i] = largedev::doob_homodyne_trajectory(sys, *doob, psi0, opt, seed); break;
        }
    });

    Run run("traj", a.c);
    json per = json::array();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        json summary;
        std::string suffix;
        if (recs.size() > 1) {
            std::ostringstream os;
            os << '_' << i;
            suffix = os.str();
        }
        write_trajectory_files(run, suffix, recs[i], a, summary);
        per.push_back(summary);
    }
    run.results()["trajectories"] = per;
    if (!doob_info.is_null()) run.results()["doob"] = doob_info;

    json cfg = common_json(a.c);
    cfg["scheme"] = a.scheme;
    cfg["t_final"] = a.t_final;
    cfg["dt"] = opt.dt;
    cfg["record_every"] = a.record_every;
    cfg["theta"] = a.theta;
    cfg["phi"] = a.phi;
    cfg["bin_window"] = a.bin_window;
    cfg["bin_mode"] = a.bin_mode;
    cfg["bin_step"] = a.bin_step;
    cfg["burn_in"] = a.burn_in;
    cfg["trajectories"] = a.trajectories;
    if (scheme == Scheme::DoobHomodyne) {
        cfg["s"] = a.s;
        cfg["doob_form"] = a.doob_form;
    }
    run.finish(cfg);
}

// ---------------------------------------------------------------- tilt

struct TiltArgs {
    Common c;
    std::vector<int> n_list;
    std::vector<double> omega_list{0.5, 1.5};
    double s_min{-0.5}, s_max{0.5}, s_step{0.05};
    std::vector<double> s_list;
    double fd_step{1e-3};
    double tolerance{1e-4};
};

inline void cmd_tilt(const TiltArgs& a) {
    const auto ns = a.n_list.empty() ? std::vector<int>{a.c.n} : a.n_list;
    for (int n : ns) check_density_n(n);
    const auto ss = a.s_list.empty() ? grid(a.s_min, a.s_max, a.s_step) : a.s_list;
    struct Task {
        int n;
        double w;
    };
    std::vector<Task> tasks;
    for (int n : ns)
        for (double w : a.omega_list) tasks.push_back({n, w});
    largedev::ActivityOptions aopt;
    aopt.fd_step = a.fd_step;
    aopt.tolerance = a.tolerance;
    std::vector<std::vector<largedev::ThetaRow>> out(tasks.size());
    parallel_for(tasks.size(), a.c.workers,
                 [&](std::size_t i) { out[i] = largedev::theta_row(tasks[i].n, a.c.kappa, tasks[i].w, ss, aopt); });

    Run run("tilt", a.c);
    auto csv = run.csv("theta.csv", {"n", "omega_over_kappa", "s", "theta", "k", "k_fd", "converged", "residual"});
    std::size_t failures = 0;
    json errors = json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        for (const auto& r : out[i]) {
            csv.row(std::vector<std::string>{std::to_string(tasks[i].n), io::format_double(r.omega_over_kappa),
                                             io::format_double(r.s), io::format_double(r.theta), io::format_double(r.k),
                                             io::format_double(r.k_fd), r.converged ? "1" : "0",
                                             io::format_double(r.residual)});
            if (!r.converged) {
                ++failures;
                errors.push_back(json{{"n", tasks[i].n}, {"omega_over_kappa", r.omega_over_kappa}, {"s", r.s},
                                      {"error", r.error}});
            }
        }
    }
    run.results()["unconverged_points"] = failures;
    run.results()["errors"] = errors;
    json cfg = common_json(a.c);
    cfg.erase("n");
    cfg.erase("omega_over_kappa");
    cfg.erase("seed");
    cfg["n_list"] = ns;
    cfg["omega_over_kappa_list"] = a.omega_list;
    cfg["s_grid"] = ss;
    cfg["fd_step"] = a.fd_step;
    cfg["tolerance"] = a.tolerance;
    run.finish(cfg);
}

// ---------------------------------------------------------------- doob

struct DoobArgs {
    Common c;
    double s{-0.1};
    double t_final{200.0};
    double dt{1e-4};
    double record_every{0.01};
    double burn_in{20.0};
    double window{0.5};
    std::string form{"exact"};
    double theta{std::numbers::pi / 2.0};
    double phi{std::numbers::pi / 2.0};
};

inline void cmd_doob(const DoobArgs& a) {
    check_density_n(a.c.n);
    const CollectiveSpinSystem sys(a.c.n, a.c.omega * a.c.kappa, a.c.kappa);
    const auto sol = largedev::solve_tilted(sys, a.s);
    largedev::DoobOptions dopt;
    dopt.form = parse_doob_form(a.form);
    const auto doob = largedev::doob_transform(sys, sol, dopt);
    TrajectoryOptions opt;
    opt.t_final = a.t_final;
    opt.dt = a.dt;
    opt.record_every = a.record_every;
    const auto rec =
        largedev::doob_homodyne_trajectory(sys, doob, spin_coherent_state(sys, a.theta, a.phi), opt, a.c.seed);

    Run run("doob", a.c);
    auto csv = run.csv("trajectory.csv", {"t", "m_x", "m_y", "m_z", "x_tilde_over_n"});
    std::vector<double> mx;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        const auto& m = rec.magnetizations[i];
        csv.row({rec.times[i], m.x, m.y, m.z, rec.transformed_x[i]});
        if (rec.times[i] >= a.burn_in) mx.push_back(m.x);
    }
    auto cur = run.csv("current.csv", {"t_end", "current"});
    for (std::size_t i = 0; i < rec.raw_current.size(); ++i) cur.row({rec.times[i + 1], rec.raw_current[i]});

    Matrix probe = Matrix::Identity(sys.dim(), sys.dim()) / static_cast<double>(sys.dim());
    probe(0, 1) = probe(1, 0) = 0.1 / sys.dim();
    auto& r = run.results();
    r["theta"] = sol.theta;
    r["eigen_residual"] = sol.residual;
    r["trace_residual"] = largedev::doob_trace_residual(sys, sol, doob);
    r["generator_mismatch"] = linalg::max_abs(largedev::doob_apply(doob, probe) -
                                              largedev::doob_apply_similarity(sys, doob, probe));
    if (!mx.empty()) r["m_x_dwell"] = dwell_json(analysis::dwell_stats(mx, a.record_every));

    json cfg = common_json(a.c);
    cfg["s"] = a.s;
    cfg["t_final"] = a.t_final;
    cfg["dt"] = a.dt;
    cfg["record_every"] = a.record_every;
    cfg["burn_in"] = a.burn_in;
    cfg["form"] = a.form;
    cfg["theta"] = a.theta;
    cfg["phi"] = a.phi;
    run.finish(cfg);
}

// ---------------------------------------------------------------- scaling

struct ScalingArgs {
    Common c;
    std::string model{"phase"};
    std::vector<int> n_list;
    std::optional<std::size_t> events;
    double dt{1e-3};
    double threshold{0.8};
    double rearm{0.9};
    double burn_in{50.0};
    double max_time{1e9};
};

inline void cmd_scaling(const ScalingArgs& a) {
    analysis::EventModel model;
    if (a.model == "phase")
        model = analysis::EventModel::Phase;
    else if (a.model == "jump")
        model = analysis::EventModel::Jump;
    else
        throw std::invalid_argument("unknown model '" + a.model + "' (phase|jump)");
    const bool phase = model == analysis::EventModel::Phase;
    const auto ns = !a.n_list.empty() ? a.n_list
                    : phase           ? std::vector<int>{50, 100, 200, 400, 800, 1600, 3200}
                                      : std::vector<int>{20, 40, 80, 160};
    const std::size_t events = a.events.value_or(phase ? 10000 : 1000);
    analysis::TauScalingOptions opt;
    opt.dt = a.dt;
    opt.jump_dt = a.dt;
    opt.threshold = a.threshold;
    opt.rearm = a.rearm;
    opt.burn_in = a.burn_in;
    opt.max_time = a.max_time;
    opt.seed = a.c.seed;
    opt.workers = a.c.workers;
    const auto res = analysis::tau_scaling(model, ns, a.c.omega * a.c.kappa, a.c.kappa, events, opt);

    Run run("scaling", a.c);
    auto csv = run.csv("tau.csv", {"n", "tau", "tau_stderr", "events", "simulated_time", "complete", "seed"});
    for (const auto& p : res.points)
        csv.row(std::vector<std::string>{std::to_string(p.n), io::format_double(p.tau * a.c.kappa),
                                         io::format_double(p.tau_stderr * a.c.kappa), std::to_string(p.n_events),
                                         io::format_double(p.simulated_time), p.complete ? "1" : "0",
                                         std::to_string(p.seed)});
    auto& r = run.results();
    r["complete"] = res.complete;
    if (res.fit.n_points >= 4)
        r["fit"] = json{{"exponent", res.fit.exponent},
                        {"amplitude", res.fit.amplitude},
                        {"stderr", res.fit.std_error},
                        {"n_points", res.fit.n_points}};
    else
        r["fit"] = nullptr;

    json cfg = common_json(a.c);
    cfg.erase("n");
    cfg["model"] = a.model;
    cfg["n_list"] = ns;
    cfg["events_target"] = events;
    cfg["dt"] = a.dt;
    cfg["threshold"] = a.threshold;
    cfg["rearm"] = a.rearm;
    cfg["burn_in"] = a.burn_in;
    cfg["max_time"] = a.max_time;
    run.finish(cfg);
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
    Common c;
    double t_final{1000.0};
    double dt{1e-3};
    double bin_window{0.5};
    std::string bin_mode{"sliding"};
    double bin_step{0.01};
    std::string jumps_file;
    double band{4.0};
};

inline void cmd_spectrum(const SpectrumArgs& a) {
    const BinMode mode = parse_bin_mode(a.bin_mode);
    std::vector<double> jump_times;
    std::size_t seed_used = a.c.seed;
    if (!a.jumps_file.empty()) {
        for (const auto& row : io::read_csv(a.jumps_file)) {
            if (row.empty()) throw std::invalid_argument("empty row in " + a.jumps_file);
            jump_times.push_back(row[0]);
        }
    } else {
        const CollectiveSpinSystem sys(a.c.n, a.c.omega * a.c.kappa, a.c.kappa);
        TrajectoryOptions opt;
        opt.t_final = a.t_final;
        opt.dt = a.dt;
        opt.record_every = 1.0;
        run_jump(
            sys, spin_coherent_state(sys, std::numbers::pi / 2.0, std::numbers::pi / 2.0), opt, a.c.seed,
            [](double, const Vector&) {}, [&](double t) { jump_times.push_back(t); });
    }
    const auto binned = bin_counts(jump_times, a.t_final, a.bin_window, mode, a.bin_step);
    const auto sp = analysis::count_spectrum(binned, a.c.omega * a.c.kappa, a.c.kappa);
    const std::size_t peak = analysis::dominant_peak(sp);

    Run run("spectrum", a.c);
    auto csv = run.csv("spectrum.csv", {"freq_over_Omega", "magnitude"});
    for (std::size_t k = 0; k < sp.axis.size(); ++k) csv.row({sp.axis[k], sp.magnitude[k]});
    auto cc = run.csv("counts.csv", {"t_center", "count"});
    for (std::size_t i = 0; i < binned.values.size(); ++i) cc.row({binned.centers[i], binned.values[i]});
    auto& r = run.results();
    r["jump_count"] = jump_times.size();
    r["bin_width_over_Omega"] = sp.bin_width;
    r["dominant_peak_over_Omega"] = sp.axis[peak];
    r["peak_to_background"] = analysis::peak_to_background(sp, 1.0, a.band);

    json cfg = common_json(a.c);
    cfg["seed"] = seed_used;
    cfg["t_final"] = a.t_final;
    cfg["dt"] = a.dt;
    cfg["bin_window"] = a.bin_window;
    cfg["bin_mode"] = a.bin_mode;
    cfg["bin_step"] = a.bin_step;
    cfg["band"] = a.band;
    if (!a.jumps_file.empty()) cfg["jumps_file"] = a.jumps_file;
    run.finish(cfg);
}

// ---------------------------------------------------------------- validate

inline int cmd_validate() {
    bool ok = true;
    for (const auto& r : validate::run_all()) {
        ok = ok && r.passed;
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  value=" << r.value << " tol=" << r.tolerance;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << '\n';
    }
    return ok ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------- entry

namespace detail {

// Splices `key = value` pairs from --config in front of the explicit
// arguments of the subcommand. Keys the user also passed are skipped so the
// command line wins.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || args.size() < 2) return args;
    std::set<std::string> given;
    for (const auto& a : args)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos
                                                                                              : a.find('=') - 2));
    std::vector<std::string> out{args[0], args[1]};
    for (const auto& [key, value] : io::load_config(path)) {
        if (given.count(key) || key == "config") continue;
        if (value == "true" || value == "false") {
            if (value == "true") out.push_back("--" + key);
            continue;
        }
        out.push_back("--" + key);
        out.push_back(value);
    }
    out.insert(out.end(), args.begin() + 2, args.end());
    return out;
}

} // namespace detail

inline int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    try {
        args = detail::expand_config(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    CLI::App app{"Collective-spin time-crystal simulations: stationary states, trajectories, "
                 "large deviations and fluctuation statistics"};
    app.require_subcommand(1);

    SteadyArgs steady;
    auto* sc_steady = app.add_subcommand("steady", "stationary magnetization over an omega/kappa grid");
    add_common(sc_steady, steady.c);
    sc_steady->add_option("--omega-min", steady.omega_min)->capture_default_str();
    sc_steady->add_option("--omega-max", steady.omega_max)->capture_default_str();
    sc_steady->add_option("--omega-step", steady.omega_step)->capture_default_str();
    sc_steady->add_option("--omega-list", steady.omega_list, "explicit omega/kappa values")->delimiter(',');

    TrajArgs traj;
    auto* sc_traj = app.add_subcommand("traj", "conditioned trajectories (jump, homodyne, doob)");
    add_common(sc_traj, traj.c);
    sc_traj->add_option("--scheme", traj.scheme, "jump|homodyne|doob")->capture_default_str();
    sc_traj->add_option("--t-final", traj.t_final)->capture_default_str();
    sc_traj->add_option("--dt", traj.dt, "step (default 1e-3 jump, 1e-4 diffusive)");
    sc_traj->add_option("--record-every", traj.record_every)->capture_default_str();
    sc_traj->add_option("--theta", traj.theta, "spin-coherent polar angle")->capture_default_str();
    sc_traj->add_option("--phi", traj.phi, "spin-coherent azimuth")->capture_default_str();
    sc_traj->add_option("--bin-window", traj.bin_window)->capture_default_str();
    sc_traj->add_option("--bin-mode", traj.bin_mode, "tumbling|sliding")->capture_default_str();
    sc_traj->add_option("--bin-step", traj.bin_step, "sliding window spacing")->capture_default_str();
    sc_traj->add_option("--s", traj.s, "bias for the doob scheme")->capture_default_str();
    sc_traj->add_option("--doob-form", traj.doob_form, "exact|rotated")->capture_default_str();
    sc_traj->add_option("--burn-in", traj.burn_in)->capture_default_str();
    sc_traj->add_option("--trajectories", traj.trajectories)->capture_default_str();

    TiltArgs tilt;
    tilt.c.n = 60;
    auto* sc_tilt = app.add_subcommand("tilt", "SCGF theta(s) and activity k(s)");
    add_common(sc_tilt, tilt.c);
    sc_tilt->add_option("--n-list", tilt.n_list)->delimiter(',');
    sc_tilt->add_option("--omega-list", tilt.omega_list)->delimiter(',')->capture_default_str();
    sc_tilt->add_option("--s-min", tilt.s_min)->capture_default_str();
    sc_tilt->add_option("--s-max", tilt.s_max)->capture_default_str();
    sc_tilt->add_option("--s-step", tilt.s_step)->capture_default_str();
    sc_tilt->add_option("--s-list", tilt.s_list)->delimiter(',');
    sc_tilt->add_option("--fd-step", tilt.fd_step)->capture_default_str();
    sc_tilt->add_option("--tolerance", tilt.tolerance, "HF vs difference tolerance (units of kappa)")
        ->capture_default_str();

    DoobArgs doob;
    doob.c.n = 30;
    auto* sc_doob = app.add_subcommand("doob", "Doob-transformed homodyne trajectory at bias s");
    add_common(sc_doob, doob.c);
    sc_doob->add_option("--s", doob.s)->capture_default_str();
    sc_doob->add_option("--t-final", doob.t_final)->capture_default_str();
    sc_doob->add_option("--dt", doob.dt)->capture_default_str();
    sc_doob->add_option("--record-every", doob.record_every)->capture_default_str();
    sc_doob->add_option("--burn-in", doob.burn_in)->capture_default_str();
    sc_doob->add_option("--form", doob.form, "exact|rotated")->capture_default_str();
    sc_doob->add_option("--theta", doob.theta)->capture_default_str();
    sc_doob->add_option("--phi", doob.phi)->capture_default_str();

    ScalingArgs scaling;
    scaling.c.omega = 1.0;
    auto* sc_scaling = app.add_subcommand("scaling", "waiting time between large dips vs N");
    add_common(sc_scaling, scaling.c, false);
    sc_scaling->add_option("--model", scaling.model, "phase|jump")->capture_default_str();
    sc_scaling->add_option("--n-list", scaling.n_list)->delimiter(',');
    sc_scaling->add_option("--events", scaling.events, "events per N (default 10000 phase, 1000 jump)");
    sc_scaling->add_option("--dt", scaling.dt)->capture_default_str();
    sc_scaling->add_option("--threshold", scaling.threshold)->capture_default_str();
    sc_scaling->add_option("--rearm", scaling.rearm)->capture_default_str();
    sc_scaling->add_option("--burn-in", scaling.burn_in)->capture_default_str();
    sc_scaling->add_option("--max-time", scaling.max_time)->capture_default_str();

    SpectrumArgs spectrum;
    auto* sc_spectrum = app.add_subcommand("spectrum", "DFT of the binned photon-count signal");
    add_common(sc_spectrum, spectrum.c);
    sc_spectrum->add_option("--t-final", spectrum.t_final)->capture_default_str();
    sc_spectrum->add_option("--dt", spectrum.dt)->capture_default_str();
    sc_spectrum->add_option("--bin-window", spectrum.bin_window)->capture_default_str();
    sc_spectrum->add_option("--bin-mode", spectrum.bin_mode)->capture_default_str();
    sc_spectrum->add_option("--bin-step", spectrum.bin_step)->capture_default_str();
    sc_spectrum->add_option("--jumps", spectrum.jumps_file, "jumps.csv from a traj run instead of simulating");
    sc_spectrum->add_option("--band", spectrum.band, "background band upper edge (units of Omega)")
        ->capture_default_str();

    app.add_subcommand("validate", "run the built-in oracle checks");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(std::move(rev));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sc_steady) cmd_steady(steady);
        else if (*sc_traj) cmd_traj(traj);
        else if (*sc_tilt) cmd_tilt(tilt);
        else if (*sc_doob) cmd_doob(doob);
        else if (*sc_scaling) cmd_scaling(scaling);
        else if (*sc_spectrum) cmd_spectrum(spectrum);
        else return cmd_validate();
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitOk;
}

} // namespace btc::cli
