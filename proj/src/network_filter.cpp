#include "clocksync/network_filter.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "clocksync/csv.hpp"

namespace clocksync {

namespace {

void check_node(const NetworkFilterState& st, int node) {
    if (node < 0 || node >= st.nodes()) throw std::out_of_range("node " + std::to_string(node) + " out of range");
}

// Selector M with -1 at i and +1 at j; the reference contributes no entry.
Eigen::VectorXd selector(const NetworkFilterState& st, int i, int j) {
    Eigen::VectorXd M = Eigen::VectorXd::Zero(st.nodes() - 1);
    if (i > 0) M[i - 1] -= 1.0;
    if (j > 0) M[j - 1] += 1.0;
    return M;
}

void check_measurement(const NetworkFilterState& st, const Measurement& m) {
    check_node(st, m.i);
    check_node(st, m.j);
    if (m.i == m.j) throw std::invalid_argument("measurement link must join two distinct nodes");
    if (!(m.sigma2 > 0.0)) throw std::invalid_argument("noise variance must be positive");
}

double stationary(const NetworkFilterState& st, int node) {
    const auto& p = st.params[node];
    return p.epsilon * p.epsilon / (2.0 * p.alpha);
}

}  // namespace

NetworkFilterState make_network_filter(const std::vector<ClockParams>& params, double t0) {
    if (params.size() < 2) throw std::invalid_argument("network needs at least two nodes");
    for (const auto& p : params) {
        validate(p);
        if (std::abs(p.alpha - params[0].alpha) > 1e-12 * params[0].alpha)
            throw std::invalid_argument("alpha convention violated");
    }
    NetworkFilterState st;
    st.params = params;
    st.t_last = t0;
    const auto n = static_cast<Eigen::Index>(params.size() - 1);
    st.x_hat = Eigen::VectorXd::Zero(n);
    st.P = Eigen::MatrixXd::Zero(n, n);
    return st;
}

NetworkFilterState net_predict(const NetworkFilterState& st, double dt) {
    if (dt < 0.0) throw std::invalid_argument("time went backwards");
    NetworkFilterState out = st;
    out.t_last = st.t_last + dt;
    if (dt == 0.0) return out;
    const double a = st.alpha();
    out.x_hat *= std::exp(-a * dt);
    out.P *= std::exp(-2.0 * a * dt);
    const double growth = -std::expm1(-2.0 * a * dt);
    for (int m = 1; m < st.nodes(); ++m) out.P(m - 1, m - 1) += growth * stationary(st, m);
    return out;
}

void net_predict_node(NetworkFilterState& st, int node, double dt) {
    check_node(st, node);
    if (dt < 0.0) throw std::invalid_argument("time went backwards");
    if (node == 0 || dt == 0.0) return;
    const double a = st.alpha();
    const double decay = std::exp(-a * dt);
    const auto k = node - 1;
    st.x_hat[k] *= decay;
    // off-diagonal entries pick up one factor per endpoint, the diagonal two
    st.P.row(k) *= decay;
    st.P.col(k) *= decay;
    st.P(k, k) -= std::expm1(-2.0 * a * dt) * stationary(st, node);
}

NetworkFilterState net_update_optimal(const NetworkFilterState& st, const Measurement& m) {
    check_measurement(st, m);
    const Eigen::VectorXd M = selector(st, m.i, m.j);
    const Eigen::VectorXd PM = st.P * M;
    const double c = M.dot(PM) + m.sigma2;
    if (!(c > 0.0) || !std::isfinite(c)) {
        if (std::isinf(m.sigma2)) return st;
        throw std::domain_error("covariance degenerate");
    }
    const Eigen::VectorXd K = PM / c;
    NetworkFilterState out = st;
    out.x_hat += K * (m.y - M.dot(st.x_hat));
    out.P -= K * PM.transpose();
    out.P = 0.5 * (out.P + out.P.transpose()).eval();
    return out;
}

NetworkFilterState net_update_distributed(const NetworkFilterState& st, const Measurement& m) {
    check_measurement(st, m);
    const Eigen::VectorXd M = selector(st, m.i, m.j);
    const Eigen::VectorXd PM = st.P * M;
    const double a = M.dot(PM) + m.sigma2;
    if (!(a > 0.0) || !std::isfinite(a)) {
        if (std::isinf(m.sigma2)) return st;
        throw std::domain_error("covariance degenerate");
    }
    // optimal gain restricted to the two endpoints
    Eigen::VectorXd K = Eigen::VectorXd::Zero(M.size());
    if (m.i > 0) K[m.i - 1] = PM[m.i - 1] / a;
    if (m.j > 0) K[m.j - 1] = PM[m.j - 1] / a;

    NetworkFilterState out = st;
    out.x_hat += K * (m.y - M.dot(st.x_hat));
    const Eigen::MatrixXd G = Eigen::MatrixXd::Identity(M.size(), M.size()) - K * M.transpose();
    out.P = G * st.P * G.transpose() + m.sigma2 * K * K.transpose();
    out.P = 0.5 * (out.P + out.P.transpose()).eval();
    return out;
}

double nodal_skew_estimate(const NetworkFilterState& st, int node, double t) {
    check_node(st, node);
    if (node == 0) return 1.0;
    const auto k = node - 1;
    return skew_scale(t, st.params[node]) * std::exp(st.x_hat[k] + 0.5 * st.P(k, k));
}

RelativeSkewReadout relative_skew_readout(const NetworkFilterState& st, int i, int j, double t) {
    check_node(st, i);
    check_node(st, j);
    const double xi = i > 0 ? st.x_hat[i - 1] : 0.0;
    const double xj = j > 0 ? st.x_hat[j - 1] : 0.0;
    const double Pii = i > 0 ? st.P(i - 1, i - 1) : 0.0;
    const double Pjj = j > 0 ? st.P(j - 1, j - 1) : 0.0;
    const double Pij = (i > 0 && j > 0) ? st.P(i - 1, j - 1) : 0.0;
    const double var = Pii + Pjj - 2.0 * Pij;
    const double log_c = relative_params(st.params[i], st.params[j]).log_c_ij(t);

    RelativeSkewReadout out;
    out.a_ij = std::exp(log_c + xj - xi + 0.5 * var);
    out.a_ji = std::exp(-log_c - xj + xi + 0.5 * var);
    out.a_ij_sym = std::exp(log_c + xj - xi);  // sqrt(a_ij / a_ji), variance terms cancel
    return out;
}

void write_covariance_csv(std::ostream& os, const Eigen::MatrixXd& P) {
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        for (Eigen::Index c = 0; c < P.cols(); ++c) {
            if (c) os << ',';
            os << csv::format(P(r, c));
        }
        os << '\n';
    }
}

}  // namespace clocksync
