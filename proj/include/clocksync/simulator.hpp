// Discrete-event network simulator: ground-truth clocks on the grid, random
// exchange starts, primary-interference MAC per mini-slot, random link delays,
// the protocol estimator, metrics, trace replay and the filter-degradation study.
#pragma once

#include <iosfwd>
#include <vector>

#include "clocksync/protocol.hpp"
#include "clocksync/scenario.hpp"

namespace clocksync {

/// Aligned per-node series. Truth series may be empty (trace replay), in
/// which case the error columns are NaN.
struct NodeSeries {
    std::vector<double> offset_truth, offset_est;
    std::vector<double> skew_truth, skew_est;
    std::vector<double> pred_error;
};

struct NodeMetrics {
    double offset_mae = 0.0;
    double skew_mae = 0.0;
    double pred_mae = 0.0;
    double offset_nosync = 0.0;  ///< MAE of the zero offset estimate
    double skew_nosync = 0.0;    ///< MAE of the unit skew estimate
    double offset_est_mean_abs = 0.0;
    double skew_est_mean = 0.0;
    std::size_t offset_samples = 0;
    std::size_t skew_samples = 0;
    std::size_t pred_samples = 0;
};

struct MetricsReport {
    std::vector<NodeMetrics> nodes;
    std::size_t packets_sent = 0;
    std::size_t packets_delivered = 0;
    std::size_t collisions = 0;
    std::size_t timeouts = 0;
    std::size_t out_of_order = 0;
    std::size_t skipped = 0;

    /// Averages over the non-reference nodes (nodes 1..n).
    double mean_offset_mae() const;
    double mean_skew_mae() const;
    double mean_offset_nosync() const;
    double mean_skew_nosync() const;
    /// Average prediction MAE over all nodes that saw predictions.
    double mean_pred_mae() const;
};

/// Per-node MAEs; throws "length mismatch" when series are not aligned.
MetricsReport compute_metrics(const std::vector<NodeSeries>& series);

/// Header `node,offset_mae,skew_mae,pred_mae,offset_nosync,skew_nosync`
/// followed by estimate summaries and sample counts.
void write_metrics_csv(std::ostream& os, const MetricsReport& report);

struct RunResult {
    MetricsReport report;
    std::vector<Packet> trace;  ///< delivered packets in processing order
};

RunResult run_scenario(const Scenario& sc);
MetricsReport run_protocol_ss(Scenario sc);
MetricsReport run_protocol_hybrid(Scenario sc);
MetricsReport run_protocol_mbcsp(Scenario sc);

/// Runs the scenario's protocol estimator over recorded packets only.
MetricsReport trace_replay(const std::vector<Packet>& trace, const Scenario& sc);

/// Stamp quantization used by the simulator: 12 significant digits, then the
/// optional accuracy quantum (round half to even).
double quantize_stamp(double value, double accuracy);

struct DegradeRow {
    double t = 0.0;
    double trace_opt = 0.0;
    double trace_dist = 0.0;
    double ratio() const { return trace_opt > 0.0 ? trace_dist / trace_opt : 1.0; }
};

/// Optimal and distributed network filters side by side on one measurement
/// stream: every degrade.period a uniformly chosen edge is measured with noise
/// variance degrade.sigma2.
std::vector<DegradeRow> run_degrade(const Scenario& sc);

/// Header `t,trace_opt,trace_dist,ratio`.
void write_degrade_csv(std::ostream& os, const std::vector<DegradeRow>& rows);

}  // namespace clocksync
