#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "clocksync/network_filter.hpp"
#include "clocksync/pairwise_filter.hpp"

using namespace clocksync;

namespace {

std::vector<ClockParams> line_params(int nodes) {
    std::vector<ClockParams> p(nodes, ClockParams{10.0, 1.0});
    p[0].epsilon = 0.0;
    return p;
}

Eigen::VectorXd selector(int n, int i, int j) {
    Eigen::VectorXd M = Eigen::VectorXd::Zero(n);
    if (i > 0) M[i - 1] -= 1;
    if (j > 0) M[j - 1] += 1;
    return M;
}

// A random valid covariance with a nonzero mean.
NetworkFilterState random_state(int nodes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    auto st = make_network_filter(line_params(nodes));
    const int n = nodes - 1;
    Eigen::MatrixXd L(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) L(r, c) = 0.1 * n01(rng);
    st.P = L * L.transpose() + 0.01 * Eigen::MatrixXd::Identity(n, n);
    for (int r = 0; r < n; ++r) st.x_hat[r] = 0.1 * n01(rng);
    return st;
}

}  // namespace

TEST(NetworkFilter, PredictMatchesDiagonalLyapunov) {
    const auto st = random_state(4, 1);
    const double dt = 0.02, a = 10.0;
    const auto out = net_predict(st, dt);
    const double A = std::exp(-a * dt);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(3, 3);
    for (int m = 0; m < 3; ++m) Q(m, m) = (1.0 / 20.0) * (1 - A * A);
    EXPECT_TRUE(out.P.isApprox(A * A * st.P + Q, 1e-13));
    EXPECT_TRUE(out.x_hat.isApprox(A * st.x_hat, 1e-14));
}

TEST(NetworkFilter, PerNodePredictionComposesToFullPrediction) {
    const auto st = random_state(5, 2);
    auto node_wise = st;
    for (int m = 1; m < 5; ++m) net_predict_node(node_wise, m, 0.03);
    const auto full = net_predict(st, 0.03);
    EXPECT_TRUE(node_wise.P.isApprox(full.P, 1e-13));
    EXPECT_TRUE(node_wise.x_hat.isApprox(full.x_hat, 1e-14));
    net_predict_node(node_wise, 0, 1.0);  // reference: no state
    EXPECT_THROW(net_predict_node(node_wise, 1, -1.0), std::invalid_argument);
    EXPECT_THROW(net_predict_node(node_wise, 7, 1.0), std::out_of_range);
}

TEST(NetworkFilter, OptimalUpdateMatchesTextbookKalman) {
    const auto st = random_state(5, 3);
    const Measurement m{2, 4, 0.0, 0.37, 0.05};
    const Eigen::VectorXd H = selector(4, 2, 4);
    const double S = (H.transpose() * st.P * H)(0, 0) + m.sigma2;
    const Eigen::MatrixXd P_ref = st.P - st.P * H * (1.0 / S) * H.transpose() * st.P;
    const Eigen::VectorXd x_ref = st.x_hat + st.P * H / S * (m.y - H.dot(st.x_hat));
    const auto out = net_update_optimal(st, m);
    EXPECT_TRUE(out.P.isApprox(P_ref, 1e-12));
    EXPECT_TRUE(out.x_hat.isApprox(x_ref, 1e-12));
}

TEST(NetworkFilter, DistributedUpdateIsJosephWithEndpointGain) {
    const auto st = random_state(5, 4);
    const Measurement m{1, 3, 0.0, -0.2, 0.02};
    const Eigen::VectorXd H = selector(4, 1, 3);
    const double S = (H.transpose() * st.P * H)(0, 0) + m.sigma2;
    const Eigen::VectorXd K_full = st.P * H / S;
    Eigen::VectorXd K = Eigen::VectorXd::Zero(4);
    K[0] = K_full[0];
    K[2] = K_full[2];
    const Eigen::MatrixXd G = Eigen::MatrixXd::Identity(4, 4) - K * H.transpose();
    const Eigen::MatrixXd P_ref = G * st.P * G.transpose() + m.sigma2 * K * K.transpose();
    const auto out = net_update_distributed(st, m);
    EXPECT_TRUE(out.P.isApprox(P_ref, 1e-12));
    EXPECT_TRUE(out.x_hat.isApprox(st.x_hat + K * (m.y - H.dot(st.x_hat)), 1e-12));
    // only the endpoints' estimates move
    EXPECT_EQ(out.x_hat[1], st.x_hat[1]);
    EXPECT_EQ(out.x_hat[3], st.x_hat[3]);
}

TEST(NetworkFilter, TwoNodeReducesToPairwise) {
    auto net = make_network_filter(line_params(2));
    auto pw = make_pairwise_filter(relative_params({10.0, 0.0}, {10.0, 1.0}));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 300; ++k) {
        const double dt = 0.001 + 0.05 * std::abs(n01(rng));
        net = net_predict(net, dt);
        pw = predict(pw, dt);
        const Measurement m{0, 1, pw.t_last, 0.3 * n01(rng), 0.01 + std::abs(n01(rng))};
        net = (k % 2) ? net_update_optimal(net, m) : net_update_distributed(net, m);
        pw = update(pw, m);
        ASSERT_NEAR(net.x_hat[0], pw.x_hat, 1e-12);
        ASSERT_NEAR(net.P(0, 0), pw.P, 1e-12);
    }
}

TEST(NetworkFilter, DistributedDominatesOptimalAndDiagonalsShrink) {
    auto opt = make_network_filter(line_params(6));
    auto dist = opt;
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> edge(0, 4);
    for (int k = 0; k < 400; ++k) {
        opt = net_predict(opt, 0.002);
        dist = net_predict(dist, 0.002);
        const int e = edge(rng);
        const Measurement m{e, e + 1, 0.0, 0.0, 1e-2};
        const auto before = dist.P;
        opt = net_update_optimal(opt, m);
        dist = net_update_distributed(dist, m);
        for (int d = 0; d < 5; ++d) ASSERT_LE(dist.P(d, d), before(d, d) + 1e-15);
        ASSERT_LE(opt.P.trace(), dist.P.trace() + 1e-12);
        ASSERT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dist.P).eigenvalues().minCoeff(), -1e-9);
    }
}

TEST(NetworkFilter, Readouts) {
    auto st = random_state(3, 7);
    const double t = 0.4;
    const auto r = relative_skew_readout(st, 1, 2, t);
    EXPECT_NEAR(r.a_ij_sym, std::sqrt(r.a_ij / r.a_ji), 1e-12);
    EXPECT_NEAR(r.a_ij * r.a_ji, std::exp(st.P(0, 0) + st.P(1, 1) - 2 * st.P(0, 1)), 1e-12);
    EXPECT_NEAR(nodal_skew_estimate(st, 2, t),
                skew_scale(t, st.params[2]) * std::exp(st.x_hat[1] + 0.5 * st.P(1, 1)), 1e-14);
    EXPECT_EQ(nodal_skew_estimate(st, 0, t), 1.0);
    // readout against the reference is the nodal skew
    EXPECT_NEAR(relative_skew_readout(st, 0, 2, t).a_ij, nodal_skew_estimate(st, 2, t), 1e-12);
}

TEST(NetworkFilter, Validation) {
    auto params = line_params(3);
    params[2].alpha = 5.0;
    EXPECT_THROW(make_network_filter(params), std::invalid_argument);
    const auto st = make_network_filter(line_params(3));
    EXPECT_THROW(net_update_optimal(st, Measurement{1, 1, 0.0, 0.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(net_update_distributed(st, Measurement{0, 5, 0.0, 0.0, 1.0}), std::out_of_range);
    // zero prior and reference link: nothing to learn, no failure
    EXPECT_NO_THROW(net_update_optimal(st, Measurement{0, 1, 0.0, 0.1, 1.0}));
}
