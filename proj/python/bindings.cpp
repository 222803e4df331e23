// Python bindings for the clocksync library.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "clocksync/clock_model.hpp"
#include "clocksync/mac.hpp"
#include "clocksync/measurement.hpp"
#include "clocksync/network_filter.hpp"
#include "clocksync/pairwise_filter.hpp"
#include "clocksync/scenario.hpp"
#include "clocksync/simulator.hpp"
#include "clocksync/smoothing.hpp"

namespace py = pybind11;
using namespace clocksync;

namespace {

std::string metrics_csv(const MetricsReport& r) {
    std::ostringstream os;
    write_metrics_csv(os, r);
    return os.str();
}

std::string trace_csv(const std::vector<Packet>& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

std::vector<Packet> parse_trace_csv(const std::string& text) {
    std::istringstream is(text);
    return read_trace(is);
}

}  // namespace

PYBIND11_MODULE(_clocksync, m) {
    m.doc() = "Stochastic clock model, Kalman-filter clock synchronization and protocol simulation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    // --- clock model ---
    py::class_<ClockParams>(m, "ClockParams")
        .def(py::init<>())
        .def(py::init([](double alpha, double epsilon) { return ClockParams{alpha, epsilon}; }), py::arg("alpha"),
             py::arg("epsilon"))
        .def_readwrite("alpha", &ClockParams::alpha)
        .def_readwrite("epsilon", &ClockParams::epsilon)
        .def("__repr__", [](const ClockParams& p) {
            return "ClockParams(alpha=" + std::to_string(p.alpha) + ", epsilon=" + std::to_string(p.epsilon) + ")";
        });

    py::class_<ClockTrajectory>(m, "ClockTrajectory")
        .def_readonly("dt", &ClockTrajectory::dt)
        .def_readonly("states", &ClockTrajectory::states)
        .def_readonly("skews", &ClockTrajectory::skews)
        .def_readonly("displays", &ClockTrajectory::displays)
        .def_readonly("seed", &ClockTrajectory::seed)
        .def("__len__", &ClockTrajectory::size);

    py::class_<RelParams>(m, "RelParams")
        .def_readonly("alpha", &RelParams::alpha)
        .def_readonly("eps_i", &RelParams::eps_i)
        .def_readonly("eps_j", &RelParams::eps_j)
        .def_readonly("eps_ij", &RelParams::eps_ij)
        .def_readonly("c_ij_inf", &RelParams::c_ij_inf)
        .def("c_ij", &RelParams::c_ij)
        .def("c_ji", &RelParams::c_ji)
        .def("stationary_variance", &RelParams::stationary_variance)
        .def("reversed", &RelParams::reversed);

    py::class_<Moments>(m, "Moments").def_readonly("mean", &Moments::mean).def_readonly("variance", &Moments::variance);
    py::class_<VarianceBounds>(m, "VarianceBounds")
        .def_readonly("lower", &VarianceBounds::lower)
        .def_readonly("upper", &VarianceBounds::upper);

    m.def("ou_step_exact", &ou_step_exact, py::arg("x"), py::arg("dt"), py::arg("params"), py::arg("z"));
    m.def("ou_step_euler", &ou_step_euler, py::arg("x"), py::arg("dt"), py::arg("params"), py::arg("z"));
    m.def("skew_scale", &skew_scale, py::arg("t"), py::arg("params"));
    m.def("simulate_clock", &simulate_clock, py::arg("params"), py::arg("horizon"), py::arg("dt"), py::arg("seed"));
    m.def("ou_variance", &ou_variance, py::arg("t"), py::arg("params"));
    m.def("skew_moments", &skew_moments, py::arg("t"), py::arg("params"));
    m.def("display_variance_bounds", &display_variance_bounds, py::arg("t"), py::arg("params"));
    m.def("allan_variance_analytic", &allan_variance_analytic, py::arg("T"), py::arg("params"),
          py::arg("quad_steps") = kDefaultAllanQuadSteps);
    m.def(
        "allan_variance_empirical",
        [](const std::vector<double>& displays, double T) { return allan_variance_empirical(displays, T); },
        py::arg("displays"), py::arg("T"));
    m.def(
        "fit_params_from_allan",
        [](const std::vector<std::pair<double, double>>& points, int starts) {
            std::vector<AllanPoint> pts;
            for (const auto& [T, s2] : points) pts.push_back({T, s2});
            FitOptions opts;
            opts.starts = starts;
            const FitResult r = fit_params_from_allan(pts, opts);
            return py::make_tuple(r.params, r.residual);
        },
        py::arg("points"), py::arg("starts") = 8, "Fit (alpha, epsilon) to (T, sigma2) pairs; returns (params, residual).");
    m.def("relative_params", &relative_params, py::arg("pi"), py::arg("pj"));

    // --- measurement ---
    m.def("noise_variance", [](double delta_s, double mean, double spread, double floor) {
        DelayModel d;
        d.mean = mean;
        d.spread = spread;
        return noise_variance(delta_s, d, floor);
    }, py::arg("delta_s"), py::arg("delay_mean") = 5e-3, py::arg("delay_spread") = 5e-3, py::arg("floor") = 1e-6,
       "Skew-measurement noise variance for uniform delays.");
    m.def("predict_receipt", &predict_receipt, py::arg("s0"), py::arg("r0"), py::arg("s1"), py::arg("a_hat"));

    py::class_<Measurement>(m, "Measurement")
        .def(py::init([](int i, int j, double t_k, double y, double sigma2) { return Measurement{i, j, t_k, y, sigma2}; }),
             py::arg("i"), py::arg("j"), py::arg("t_k"), py::arg("y"), py::arg("sigma2"))
        .def_readwrite("i", &Measurement::i)
        .def_readwrite("j", &Measurement::j)
        .def_readwrite("t_k", &Measurement::t_k)
        .def_readwrite("y", &Measurement::y)
        .def_readwrite("sigma2", &Measurement::sigma2);

    // --- pairwise filter ---
    py::class_<PairwiseFilterState>(m, "PairwiseFilterState")
        .def_readwrite("x_hat", &PairwiseFilterState::x_hat)
        .def_readwrite("P", &PairwiseFilterState::P)
        .def_readwrite("t_last", &PairwiseFilterState::t_last)
        .def_readonly("rel", &PairwiseFilterState::rel);
    m.def("make_pairwise_filter", &make_pairwise_filter, py::arg("rel"), py::arg("t0") = 0.0);
    m.def("predict", &predict, py::arg("state"), py::arg("dt"));
    m.def("update", &update, py::arg("state"), py::arg("measurement"));
    m.def(
        "relative_skew_estimate",
        [](const PairwiseFilterState& st, double t) {
            const auto r = relative_skew_estimate(st, t);
            return py::make_tuple(r.a_ij, r.a_ji);
        },
        py::arg("state"), py::arg("t"));
    m.def("variance_upper_bound", &variance_upper_bound, py::arg("T_bar"), py::arg("Sigma2"), py::arg("rel"));

    // --- network filter ---
    py::class_<NetworkFilterState>(m, "NetworkFilterState")
        .def_readwrite("x_hat", &NetworkFilterState::x_hat)
        .def_readwrite("P", &NetworkFilterState::P)
        .def_readonly("t_last", &NetworkFilterState::t_last)
        .def("nodes", &NetworkFilterState::nodes);
    m.def("make_network_filter", &make_network_filter, py::arg("params"), py::arg("t0") = 0.0);
    m.def("net_predict", &net_predict, py::arg("state"), py::arg("dt"));
    m.def("net_update_optimal", &net_update_optimal, py::arg("state"), py::arg("measurement"));
    m.def("net_update_distributed", &net_update_distributed, py::arg("state"), py::arg("measurement"));
    m.def("nodal_skew_estimate", &nodal_skew_estimate, py::arg("state"), py::arg("node"), py::arg("t"));

    // --- smoothing ---
    m.def(
        "blue_solve",
        [](int n, const std::vector<std::pair<int, int>>& edges, const std::vector<double>& rel) {
            return blue_solve(SyncGraph{n, edges}, rel);
        },
        py::arg("n"), py::arg("edges"), py::arg("rel"));
    m.def(
        "smooth",
        [](int n, const std::vector<std::pair<int, int>>& edges, const std::vector<double>& rel, double tol,
           int max_iter, const std::string& schedule, std::uint64_t seed) {
            SmoothOptions opts;
            opts.tol = tol;
            opts.max_iter = max_iter;
            if (schedule == "sweep") opts.schedule = Schedule::sweep;
            else if (schedule == "random") opts.schedule = Schedule::random;
            else throw py::value_error("schedule must be 'sweep' or 'random'");
            opts.seed = seed;
            const auto r = smooth(SyncGraph{n, edges}, rel, opts);
            return py::make_tuple(r.values, r.iterations, r.converged);
        },
        py::arg("n"), py::arg("edges"), py::arg("rel"), py::arg("tol") = 1e-9, py::arg("max_iter") = 100000,
        py::arg("schedule") = "random", py::arg("seed") = 1, "Jacobi smoothing; returns (values, iterations, converged).");

    // --- MAC ---
    m.def(
        "mac_arbitrate",
        [](const std::vector<std::pair<int, int>>& pending, std::uint64_t seed) {
            Rng rng(seed);
            return mac_arbitrate(pending, rng);
        },
        py::arg("pending"), py::arg("seed") = 1);

    // --- scenarios and simulation ---
    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("nodes", &Scenario::nodes)
        .def_readwrite("edges", &Scenario::edges)
        .def_readwrite("dt", &Scenario::dt)
        .def_readwrite("horizon", &Scenario::horizon)
        .def_readwrite("seed", &Scenario::seed)
        .def_property(
            "protocol", [](const Scenario& s) { return to_string(s.protocol); },
            [](Scenario& s, const std::string& p) { s.protocol = parse_protocol(p); });
    m.def("load_scenario", &load_scenario, py::arg("path"), py::arg("overrides") = std::vector<std::string>{},
          "Load a scenario file (empty path for defaults) with key=value overrides.");

    py::class_<NodeMetrics>(m, "NodeMetrics")
        .def_readonly("offset_mae", &NodeMetrics::offset_mae)
        .def_readonly("skew_mae", &NodeMetrics::skew_mae)
        .def_readonly("pred_mae", &NodeMetrics::pred_mae)
        .def_readonly("offset_nosync", &NodeMetrics::offset_nosync)
        .def_readonly("skew_nosync", &NodeMetrics::skew_nosync)
        .def_readonly("offset_samples", &NodeMetrics::offset_samples)
        .def_readonly("skew_samples", &NodeMetrics::skew_samples);
    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("nodes", &MetricsReport::nodes)
        .def_readonly("packets_sent", &MetricsReport::packets_sent)
        .def_readonly("packets_delivered", &MetricsReport::packets_delivered)
        .def_readonly("collisions", &MetricsReport::collisions)
        .def_readonly("timeouts", &MetricsReport::timeouts)
        .def_readonly("out_of_order", &MetricsReport::out_of_order)
        .def("mean_offset_mae", &MetricsReport::mean_offset_mae)
        .def("mean_skew_mae", &MetricsReport::mean_skew_mae)
        .def("mean_pred_mae", &MetricsReport::mean_pred_mae)
        .def("mean_offset_nosync", &MetricsReport::mean_offset_nosync)
        .def("mean_skew_nosync", &MetricsReport::mean_skew_nosync)
        .def("to_csv", &metrics_csv);

    m.def(
        "run_scenario",
        [](const Scenario& sc) {
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run_scenario(sc);
            }
            return py::make_tuple(r.report, trace_csv(r.trace));
        },
        py::arg("scenario"), "Simulate a scenario; returns (MetricsReport, trace CSV text).");
    m.def(
        "trace_replay",
        [](const std::string& trace_text, const Scenario& sc) { return trace_replay(parse_trace_csv(trace_text), sc); },
        py::arg("trace_csv"), py::arg("scenario"));
    m.def(
        "run_degrade",
        [](const Scenario& sc) {
            std::vector<std::tuple<double, double, double, double>> rows;
            for (const auto& r : run_degrade(sc)) rows.emplace_back(r.t, r.trace_opt, r.trace_dist, r.ratio());
            return rows;
        },
        py::arg("scenario"), "Optimal vs distributed covariance traces: list of (t, trace_opt, trace_dist, ratio).");
}
