// clocksync: command-line front end of the clock-synchronization laboratory.
//
//   clocksync simulate SCENARIO [--out DIR] [--seed N|auto] [--set key=value]...
//   clocksync allan    (--alpha A --epsilon E | --trajectory CSV) --T 0.1,0.5,1
//   clocksync fit      ALLAN_CSV
//   clocksync replay   TRACE --scenario SCENARIO [--protocol P]
//   clocksync smooth   GRAPH_CSV [--tol X] [--schedule sweep|random]
//   clocksync degrade  SCENARIO
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "clocksync/clock_model.hpp"
#include "clocksync/csv.hpp"
#include "clocksync/protocol.hpp"
#include "clocksync/scenario.hpp"
#include "clocksync/simulator.hpp"
#include "clocksync/smoothing.hpp"

namespace fs = std::filesystem;
using namespace clocksync;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string seed;  // empty, a number, or "auto"
    std::vector<std::string> overrides;
    std::string protocol;
    int jobs = 1;
    bool gnuplot_hints = false;
};

std::vector<std::string> scenario_overrides(const CommonOptions& common) {
    std::vector<std::string> out = common.overrides;
    if (!common.seed.empty()) {
        if (common.seed == "auto") {
            std::random_device rd;
            const auto seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
            std::cerr << "seed = " << (seed >> 1) << '\n';
            out.push_back("seed=" + std::to_string(seed >> 1));
        } else {
            out.push_back("seed=" + common.seed);
        }
    }
    if (!common.protocol.empty()) out.push_back("protocol=" + common.protocol);
    return out;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

void hint(bool enabled, const std::string& text) {
    if (enabled) std::cerr << "# gnuplot\n" << text << '\n';
}

// --- simulate ----------------------------------------------------------------

struct SimulateOptions {
    std::string scenario;
    std::string out_dir = ".";
    int replications = 1;
    bool no_trace = false;
};

int cmd_simulate(const SimulateOptions& opt, const CommonOptions& common) {
    const Scenario sc = load_scenario(opt.scenario, scenario_overrides(common));
    fs::create_directories(opt.out_dir);

    if (opt.replications <= 1) {
        const RunResult res = run_scenario(sc);
        auto metrics = open_output(fs::path(opt.out_dir) / "metrics.csv");
        write_metrics_csv(metrics, res.report);
        if (!opt.no_trace) {
            auto trace = open_output(fs::path(opt.out_dir) / "trace.csv");
            write_trace(trace, res.trace);
        }
        std::cout << "protocol=" << to_string(sc.protocol) << " seed=" << sc.seed
                  << " packets=" << res.report.packets_sent << " delivered=" << res.report.packets_delivered
                  << " collisions=" << res.report.collisions << " out_of_order=" << res.report.out_of_order << '\n'
                  << "offset_mae=" << res.report.mean_offset_mae()
                  << " offset_nosync=" << res.report.mean_offset_nosync()
                  << " skew_mae=" << res.report.mean_skew_mae() << " skew_nosync=" << res.report.mean_skew_nosync()
                  << " pred_mae=" << res.report.mean_pred_mae() << '\n';
        hint(common.gnuplot_hints,
             "set datafile separator ','\n"
             "plot '" + (fs::path(opt.out_dir) / "metrics.csv").string() +
                 "' using 1:3 with linespoints title 'skew MAE', '' using 1:6 with linespoints title 'no sync'");
        return 0;
    }

    // independent replications, seed_k = seed XOR k
    std::vector<MetricsReport> reports(opt.replications);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int k = next++; k < opt.replications; k = next++) {
            try {
                Scenario rep = sc;
                rep.seed = replication_seed(sc.seed, static_cast<std::uint64_t>(k));
                reports[k] = run_scenario(rep).report;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, common.jobs); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    auto summary = open_output(fs::path(opt.out_dir) / "summary.csv");
    summary << "replication,seed,protocol,offset_mae,skew_mae,pred_mae,offset_nosync,skew_nosync\n";
    for (int k = 0; k < opt.replications; ++k) {
        const auto& r = reports[k];
        summary << k << ',' << replication_seed(sc.seed, static_cast<std::uint64_t>(k)) << ','
                << to_string(sc.protocol) << ',' << csv::format(r.mean_offset_mae()) << ','
                << csv::format(r.mean_skew_mae()) << ',' << csv::format(r.mean_pred_mae()) << ','
                << csv::format(r.mean_offset_nosync()) << ',' << csv::format(r.mean_skew_nosync()) << '\n';
    }
    std::cout << "wrote " << opt.replications << " replications to "
              << (fs::path(opt.out_dir) / "summary.csv").string() << '\n';
    return 0;
}

// --- allan -------------------------------------------------------------------

struct AllanOptions {
    double alpha = NAN;
    double epsilon = NAN;
    std::string trajectory;
    std::vector<double> T;
    int samples = 1000;
    double dt = 1e-3;
    int quad_steps = kDefaultAllanQuadSteps;
};

int cmd_allan(const AllanOptions& opt, const CommonOptions& common) {
    if (opt.T.empty()) throw ConfigError("--T: at least one averaging interval is required");
    for (const double T : opt.T)
        if (!(T > 0.0)) throw ConfigError("--T: averaging intervals must be positive");
    const bool have_params = !std::isnan(opt.alpha) || !std::isnan(opt.epsilon);
    if (!have_params && opt.trajectory.empty()) throw ConfigError("give --alpha/--epsilon or --trajectory");
    ClockParams p{std::isnan(opt.alpha) ? 10.0 : opt.alpha, std::isnan(opt.epsilon) ? 1.0 : opt.epsilon};
    if (have_params) {
        try {
            validate(p);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    std::uint64_t seed = 1;
    if (!common.seed.empty() && common.seed != "auto") seed = static_cast<std::uint64_t>(csv::parse_int(common.seed));
    if (common.seed == "auto") seed = std::random_device{}();

    ClockTrajectory traj;
    if (!opt.trajectory.empty()) {
        std::ifstream in(opt.trajectory);
        if (!in) throw ConfigError("cannot open trajectory '" + opt.trajectory + "'");
        try {
            traj = read_trajectory_csv(in);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(opt.trajectory + ": " + e.what());
        }
        if (!(traj.dt > 0.0)) throw ConfigError(opt.trajectory + ": needs at least two rows");
    } else {
        const double horizon = static_cast<double>(opt.samples) * *std::max_element(opt.T.begin(), opt.T.end());
        traj = simulate_clock(p, horizon, opt.dt, seed);
    }

    std::cout << "T,analytic,empirical\n";
    for (const double T : opt.T) {
        const auto stride = static_cast<std::size_t>(std::llround(T / traj.dt));
        if (stride == 0 || std::abs(stride * traj.dt - T) > 1e-9 * T)
            throw ConfigError("--T: " + csv::format(T) + " is not a multiple of the grid step");
        std::vector<double> samples;
        for (std::size_t k = 0; k < traj.size() && samples.size() <= static_cast<std::size_t>(opt.samples);
             k += stride)
            samples.push_back(traj.displays[k]);
        const double empirical = samples.size() >= 3 ? allan_variance_empirical(samples, T) : NAN;
        const double analytic = have_params ? allan_variance_analytic(T, p, opt.quad_steps) : NAN;
        std::cout << csv::format(T) << ',' << csv::format(analytic) << ',' << csv::format(empirical) << '\n';
    }
    hint(common.gnuplot_hints,
         "set datafile separator ','; set logscale xy\n"
         "plot '<clocksync allan ...>' using 1:2 with lines title 'analytic', '' using 1:3 with points title "
         "'empirical'");
    return 0;
}

// --- fit ---------------------------------------------------------------------

int cmd_fit(const std::string& path, int starts, const CommonOptions& common) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open Allan CSV '" + path + "'");
    std::vector<AllanPoint> points;
    try {
        points = read_allan_csv(in);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    FitOptions fo;
    fo.starts = starts;
    if (!common.seed.empty() && common.seed != "auto") fo.seed = static_cast<std::uint64_t>(csv::parse_int(common.seed));
    FitResult fit;
    try {
        fit = fit_params_from_allan(points, fo);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::cout << "alpha,epsilon,residual\n"
              << csv::format(fit.params.alpha) << ',' << csv::format(fit.params.epsilon) << ','
              << csv::format(fit.residual) << '\n';
    return 0;
}

// --- replay ------------------------------------------------------------------

int cmd_replay(const std::string& trace_path, const std::string& scenario, const std::string& out,
               const CommonOptions& common) {
    const Scenario sc = load_scenario(scenario, scenario_overrides(common));
    std::ifstream in(trace_path);
    if (!in) throw ConfigError("cannot open trace '" + trace_path + "'");
    std::vector<Packet> trace;
    try {
        trace = read_trace(in);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(trace_path + ": " + e.what());
    }
    const MetricsReport report = trace_replay(trace, sc);
    if (out.empty()) {
        write_metrics_csv(std::cout, report);
    } else {
        auto os = open_output(out);
        write_metrics_csv(os, report);
    }
    return 0;
}

// --- smooth ------------------------------------------------------------------

struct SmoothCliOptions {
    std::string graph;
    double tol = 1e-9;
    int max_iter = 100000;
    std::string schedule = "sweep";
};

int cmd_smooth(const SmoothCliOptions& opt, const CommonOptions& common) {
    std::ifstream in(opt.graph);
    if (!in) throw ConfigError("cannot open graph CSV '" + opt.graph + "'");
    SyncGraph g;
    std::vector<double> rel;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = csv::trim(line);
        if (body.empty() || body.front() == '#' || body.rfind("i,", 0) == 0) continue;
        const auto f = csv::split(body);
        if (f.size() != 3) throw ConfigError(opt.graph + ": line " + std::to_string(lineno) + ": expected i,j,value");
        try {
            const int i = static_cast<int>(csv::parse_int(f[0]));
            const int j = static_cast<int>(csv::parse_int(f[1]));
            g.edges.emplace_back(i, j);
            g.n = std::max({g.n, i, j});
            rel.push_back(csv::parse_double(f[2]));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(opt.graph + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    SmoothOptions so;
    so.tol = opt.tol;
    so.max_iter = opt.max_iter;
    if (opt.schedule == "sweep") {
        so.schedule = Schedule::sweep;
    } else if (opt.schedule == "random") {
        so.schedule = Schedule::random;
    } else {
        throw ConfigError("--schedule: expected sweep or random");
    }
    if (!common.seed.empty() && common.seed != "auto") so.seed = static_cast<std::uint64_t>(csv::parse_int(common.seed));
    try {
        validate(g);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(opt.graph + ": " + e.what());
    }
    const SmoothResult res = smooth(g, rel, so);
    const std::vector<double> blue = blue_solve(g, rel);
    std::cout << "node,jacobi,blue\n";
    for (int m = 0; m <= g.n; ++m)
        std::cout << m << ',' << csv::format(res.values[m]) << ',' << csv::format(blue[m]) << '\n';
    std::cerr << "iterations=" << res.iterations << " converged=" << (res.converged ? "true" : "false") << '\n';
    return 0;
}

// --- degrade -----------------------------------------------------------------

int cmd_degrade(const std::string& scenario, const std::string& out, const CommonOptions& common) {
    const Scenario sc = load_scenario(scenario, scenario_overrides(common));
    const auto rows = run_degrade(sc);
    if (out.empty()) {
        write_degrade_csv(std::cout, rows);
    } else {
        auto os = open_output(out);
        write_degrade_csv(os, rows);
    }
    hint(common.gnuplot_hints,
         "set datafile separator ','\n"
         "plot 'degrade.csv' using 1:2 with lines title 'optimal', '' using 1:3 with lines title 'distributed'");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clock-synchronization laboratory: stochastic clocks, Kalman filters, smoothing and a "
                 "network simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "clocksync 1.0");

    CommonOptions common;
    auto add_common = [&](CLI::App* cmd, bool scenario_keys) {
        cmd->add_option("--seed", common.seed, "Master seed (integer or 'auto')");
        cmd->add_option("--jobs", common.jobs, "Worker threads for independent replications")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--gnuplot-hints", common.gnuplot_hints, "Print gnuplot snippets to stderr");
        if (scenario_keys) {
            cmd->add_option("--set", common.overrides, "Scenario override key=value (repeatable)");
            cmd->add_option("--protocol", common.protocol, "Protocol override: ss, hybrid or mbcsp");
        }
    };

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario; writes metrics.csv and trace.csv");
    simulate->add_option("scenario", sim.scenario, "Scenario file")->required();
    simulate->add_option("--out", sim.out_dir, "Output directory");
    simulate->add_option("--replications", sim.replications, "Independent replications (seed XOR k)")
        ->check(CLI::PositiveNumber);
    simulate->add_flag("--no-trace", sim.no_trace, "Do not write trace.csv");
    add_common(simulate, true);

    AllanOptions al;
    auto* allan = app.add_subcommand("allan", "Analytic and empirical Allan variance: T,analytic,empirical");
    allan->add_option("--alpha", al.alpha, "Mean-reversion rate");
    allan->add_option("--epsilon", al.epsilon, "Diffusion coefficient");
    allan->add_option("--trajectory", al.trajectory, "Trajectory CSV (t,x,skew,display) for the empirical column");
    allan->add_option("--T", al.T, "Averaging intervals")->delimiter(',')->required();
    allan->add_option("--samples", al.samples, "Number of averaging windows N")->check(CLI::Range(2, 100000000));
    allan->add_option("--dt", al.dt, "Simulation grid step")->check(CLI::PositiveNumber);
    allan->add_option("--quad-steps", al.quad_steps, "Quadrature intervals per axis")->check(CLI::Range(64, 1 << 20));
    add_common(allan, false);

    std::string fit_path;
    int fit_starts = 8;
    auto* fit = app.add_subcommand("fit", "Fit (alpha, epsilon) to Allan points (CSV T,sigma2)");
    fit->add_option("allan_csv", fit_path, "Allan CSV")->required();
    fit->add_option("--starts", fit_starts, "Multi-start count")->check(CLI::PositiveNumber);
    add_common(fit, false);

    std::string replay_trace, replay_scenario, replay_out;
    auto* replay = app.add_subcommand("replay", "Run a protocol estimator over a recorded trace");
    replay->add_option("trace", replay_trace, "Trace CSV")->required();
    replay->add_option("--scenario", replay_scenario, "Scenario file giving nodes, edges and clock parameters")
        ->required();
    replay->add_option("--out", replay_out, "Metrics CSV path (default stdout)");
    add_common(replay, true);

    SmoothCliOptions sm;
    auto* smooth_cmd = app.add_subcommand("smooth", "Smooth relative edge values (CSV i,j,value) into nodal values");
    smooth_cmd->add_option("graph", sm.graph, "Edge CSV")->required();
    smooth_cmd->add_option("--tol", sm.tol, "Convergence tolerance");
    smooth_cmd->add_option("--max-iter", sm.max_iter, "Maximum sweeps")->check(CLI::PositiveNumber);
    smooth_cmd->add_option("--schedule", sm.schedule, "sweep or random");
    add_common(smooth_cmd, false);

    std::string degrade_scenario, degrade_out;
    auto* degrade = app.add_subcommand("degrade", "Optimal vs distributed network filter: t,trace_opt,trace_dist,ratio");
    degrade->add_option("scenario", degrade_scenario, "Scenario file")->required();
    degrade->add_option("--out", degrade_out, "CSV path (default stdout)");
    add_common(degrade, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim, common);
        if (*allan) return cmd_allan(al, common);
        if (*fit) return cmd_fit(fit_path, fit_starts, common);
        if (*replay) return cmd_replay(replay_trace, replay_scenario, replay_out, common);
        if (*smooth_cmd) return cmd_smooth(sm, common);
        if (*degrade) return cmd_degrade(degrade_scenario, degrade_out, common);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
