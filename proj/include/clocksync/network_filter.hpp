// Whole-network estimation of the log-skews X_1..X_n (node 0 is the reference
// and is not part of the state): the optimal centralized continuous-discrete
// Kalman filter, the distributed filter whose gains touch only the two
// endpoints of the measured link, and the nodal / relative skew read-outs.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "clocksync/clock_model.hpp"
#include "clocksync/measurement.hpp"

namespace clocksync {

struct NetworkFilterState {
    Eigen::VectorXd x_hat;        ///< entry m-1 estimates X_m
    Eigen::MatrixXd P;
    double t_last = 0.0;
    std::vector<ClockParams> params;  ///< nodes 0..n; params[0] is the reference

    int nodes() const { return static_cast<int>(params.size()); }
    double alpha() const { return params.empty() ? 0.0 : params[0].alpha; }
};

/// Zero state and covariance for nodes 0..params.size()-1; all alphas must agree.
NetworkFilterState make_network_filter(const std::vector<ClockParams>& params, double t0 = 0.0);

/// Exact prediction of every component over dt.
NetworkFilterState net_predict(const NetworkFilterState& st, double dt);

/// In-place prediction of node m's component only (its own elapsed time dt):
/// x_m and row/column m decay, P_mm gains its process noise. Applying this to
/// every node with the same dt equals net_predict.
void net_predict_node(NetworkFilterState& st, int node, double dt);

/// Optimal update with a measurement of X_j - X_i.
NetworkFilterState net_update_optimal(const NetworkFilterState& st, const Measurement& m);

/// Distributed update: only x_i, x_j move; covariance by the Joseph form.
NetworkFilterState net_update_distributed(const NetworkFilterState& st, const Measurement& m);

/// c_i(t) e^{x_i + P_ii / 2}; exactly 1 for the reference node.
double nodal_skew_estimate(const NetworkFilterState& st, int node, double t);

struct RelativeSkewReadout {
    double a_ij = 1.0;
    double a_ji = 1.0;
    double a_ij_sym = 1.0;  ///< sqrt(a_ij / a_ji)
};

RelativeSkewReadout relative_skew_readout(const NetworkFilterState& st, int i, int j, double t);

/// Writes P as a headerless CSV matrix, one row per line.
void write_covariance_csv(std::ostream& os, const Eigen::MatrixXd& P);

}  // namespace clocksync
