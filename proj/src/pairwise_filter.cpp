#include "clocksync/pairwise_filter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "clocksync/csv.hpp"

namespace clocksync {

PairwiseFilterState make_pairwise_filter(const RelParams& rel, double t0) {
    PairwiseFilterState st;
    st.rel = rel;
    st.t_last = t0;
    return st;
}

namespace {

PairwiseFilterState propagate(const PairwiseFilterState& st, double dt) {
    PairwiseFilterState out = st;
    if (dt == 0.0) return out;
    const double decay2 = std::exp(-2.0 * st.rel.alpha * dt);
    out.x_hat = std::exp(-st.rel.alpha * dt) * st.x_hat;
    // P e^{-2a dt} + E (1 - e^{-2a dt}) == E + (P - E) e^{-2a dt}
    const double E = st.rel.stationary_variance();
    out.P = decay2 * st.P - E * std::expm1(-2.0 * st.rel.alpha * dt);
    return out;
}

}  // namespace

PairwiseFilterState predict(const PairwiseFilterState& st, double dt) {
    if (dt < 0.0) throw std::invalid_argument("time went backwards");
    PairwiseFilterState out = propagate(st, dt);
    out.t_last = st.t_last + dt;
    return out;
}

double kalman_gain(const PairwiseFilterState& st, const Measurement& m) {
    if (!(m.sigma2 > 0.0)) throw std::invalid_argument("noise variance must be positive");
    if (std::isinf(m.sigma2)) return 0.0;
    return st.P / (st.P + m.sigma2);
}

PairwiseFilterState update(const PairwiseFilterState& st, const Measurement& m) {
    const double K = kalman_gain(st, m);
    PairwiseFilterState out = st;
    if (K == 0.0) return out;
    out.x_hat = st.x_hat + K * (m.y - st.x_hat);
    out.P = m.sigma2 * st.P / (st.P + m.sigma2);
    return out;
}

RelativeSkew relative_skew_estimate(const PairwiseFilterState& st, double t) {
    if (t < 0.0) throw std::invalid_argument("time must be non-negative");
    const double log_c = st.rel.log_c_ij(t);
    return {std::exp(log_c + st.x_hat + 0.5 * st.P), std::exp(-log_c - st.x_hat + 0.5 * st.P)};
}

double variance_upper_bound(double T_bar, double Sigma2, const RelParams& rel) {
    if (!(T_bar > 0.0) || !(Sigma2 > 0.0)) throw std::invalid_argument("T_bar and Sigma2 must be positive");
    const double E = rel.stationary_variance();
    const double one_minus_A = -std::expm1(-2.0 * rel.alpha * T_bar);
    const double d = one_minus_A * (Sigma2 - E);
    const double disc = d * d + 4.0 * one_minus_A * E * Sigma2;
    // 0.5 (-d + sqrt(disc)), rationalized when d > 0 to avoid cancellation
    if (d > 0.0) return 2.0 * one_minus_A * E * Sigma2 / (d + std::sqrt(disc));
    return 0.5 * (-d + std::sqrt(disc));
}

PairwiseFilterState suboptimal_predict(const PairwiseFilterState& st, double d_tau, const SubOptConfig& cfg) {
    if (d_tau < 0.0) throw std::invalid_argument("time went backwards");
    double f = 1.0;
    if (cfg.f_mode == SubOptConfig::FMode::conditional_mean)
        f = relative_skew_estimate(st, std::max(st.t_last, 0.0)).a_ij;
    if (!(f > 0.0) || !std::isfinite(f)) throw std::domain_error("non-finite state");
    PairwiseFilterState out = propagate(st, d_tau / f);
    out.t_last = st.t_last + d_tau;
    return out;
}

PairwiseFilterState suboptimal_update(const PairwiseFilterState& st, const Measurement& m, const SubOptConfig& cfg,
                                      double* gain_out) {
    if (!(m.sigma2 > 0.0)) throw std::invalid_argument("noise variance must be positive");
    double k = std::isinf(m.sigma2) ? 0.0 : st.P / (st.P + m.sigma2);
    k = std::clamp(std::min(k, cfg.gain_cap), 0.0, 1.0);
    if (gain_out) *gain_out = k;
    PairwiseFilterState out = st;
    if (k == 0.0) return out;
    out.x_hat = st.x_hat + k * (m.y - st.x_hat);
    out.P = (1.0 - k) * (1.0 - k) * st.P + k * k * m.sigma2;
    return out;
}

void write_filter_trace_csv(std::ostream& os, const std::vector<FilterTraceRow>& rows) {
    os << "t,x_hat,P,y,sigma2,gain\n";
    for (const auto& r : rows) {
        os << csv::format(r.t) << ',' << csv::format(r.x_hat) << ',' << csv::format(r.P) << ','
           << csv::format(r.y) << ',' << csv::format(r.sigma2) << ',' << csv::format(r.gain) << '\n';
    }
}

}  // namespace clocksync
