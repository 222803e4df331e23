// Continuous-discrete Kalman filter for one link's log relative skew X_ij:
// exact closed-form prediction between measurements, scalar updates, the
// relative-skew read-out, the steady-state variance bound and the
// implementable (local-time, gain-capped) variant.
#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "clocksync/clock_model.hpp"
#include "clocksync/measurement.hpp"

namespace clocksync {

struct PairwiseFilterState {
    double x_hat = 0.0;
    double P = 0.0;
    double t_last = 0.0;
    RelParams rel;
};

PairwiseFilterState make_pairwise_filter(const RelParams& rel, double t0 = 0.0);

/// x <- e^{-alpha dt} x, P <- e^{-2 alpha dt} P + E (1 - e^{-2 alpha dt}), E = eps_ij^2 / (2 alpha).
PairwiseFilterState predict(const PairwiseFilterState& st, double dt);

/// Scalar Kalman update; K = P / (P + sigma2).
PairwiseFilterState update(const PairwiseFilterState& st, const Measurement& m);

/// Gain the optimal update would apply.
double kalman_gain(const PairwiseFilterState& st, const Measurement& m);

struct RelativeSkew {
    double a_ij = 1.0;
    double a_ji = 1.0;
};

/// a_ij = c_ij(t) e^{x + P/2}, a_ji = c_ji(t) e^{-x + P/2}.
RelativeSkew relative_skew_estimate(const PairwiseFilterState& st, double t);

/// Steady-state bound on P for inter-measurement gaps <= T_bar and noise variances <= Sigma2.
double variance_upper_bound(double T_bar, double Sigma2, const RelParams& rel);

struct SubOptConfig {
    enum class FMode { unity, conditional_mean };
    FMode f_mode = FMode::unity;
    /// Upper cap on the applied gain.
    double gain_cap = 0.99;
};

/// Propagation by elapsed local time d_tau, rescaled by f. Under `unity` f = 1;
/// under `conditional_mean` f is the filter's current skew read-out a_ij
/// (the receiver's conditional-mean skew when the sender is the reference).
PairwiseFilterState suboptimal_predict(const PairwiseFilterState& st, double d_tau, const SubOptConfig& cfg);

/// Gain min(P / (P + sigma2), cap) clipped to [0, 1]; variance (1-k)^2 P + k^2 sigma2.
PairwiseFilterState suboptimal_update(const PairwiseFilterState& st, const Measurement& m, const SubOptConfig& cfg,
                                      double* gain_out = nullptr);

struct FilterTraceRow {
    double t = 0.0;
    double x_hat = 0.0;
    double P = 0.0;
    double y = 0.0;
    double sigma2 = 0.0;
    double gain = 0.0;
};

/// Header `t,x_hat,P,y,sigma2,gain`.
void write_filter_trace_csv(std::ostream& os, const std::vector<FilterTraceRow>& rows);

}  // namespace clocksync
