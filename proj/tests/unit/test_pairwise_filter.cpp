#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "clocksync/pairwise_filter.hpp"

using namespace clocksync;

namespace {

const RelParams kRel = relative_params({10.0, 1.0}, {10.0, 0.5});

// RK4 integration of the variance ODE dP/dt = -2 alpha P + eps^2.
double variance_ode(double P, double alpha, double eps2, double dt, int steps = 2000) {
    const double h = dt / steps;
    auto f = [&](double p) { return -2.0 * alpha * p + eps2; };
    for (int k = 0; k < steps; ++k) {
        const double k1 = f(P), k2 = f(P + 0.5 * h * k1), k3 = f(P + 0.5 * h * k2), k4 = f(P + h * k3);
        P += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
    }
    return P;
}

Measurement meas(double y, double sigma2, double t = 0.0) { return Measurement{0, 1, t, y, sigma2}; }

}  // namespace

TEST(PairwiseFilter, StartsAtKnownState) {
    const auto st = make_pairwise_filter(kRel, 0.0);
    EXPECT_EQ(st.x_hat, 0.0);
    EXPECT_EQ(st.P, 0.0);
}

TEST(PairwiseFilter, PredictMatchesMomentOde) {
    auto st = make_pairwise_filter(kRel);
    st.x_hat = 0.4;
    st.P = 0.05;
    for (double dt : {1e-4, 0.01, 0.3}) {
        const auto out = predict(st, dt);
        EXPECT_NEAR(out.x_hat, 0.4 * std::exp(-kRel.alpha * dt), 1e-15);
        EXPECT_NEAR(out.P, variance_ode(0.05, kRel.alpha, kRel.eps_ij * kRel.eps_ij, dt), 1e-12);
        EXPECT_NEAR(out.t_last, dt, 1e-15);
    }
    EXPECT_THROW(predict(st, -1e-3), std::invalid_argument);
    EXPECT_NEAR(predict(st, 100.0).P, kRel.stationary_variance(), 1e-15);
}

TEST(PairwiseFilter, UpdateIsGaussianProduct) {
    auto st = make_pairwise_filter(kRel);
    st.x_hat = 0.1;
    st.P = 0.2;
    const double y = -0.3, s2 = 0.05;
    const double post_prec = 1.0 / st.P + 1.0 / s2;
    const auto out = update(st, meas(y, s2));
    EXPECT_NEAR(out.P, 1.0 / post_prec, 1e-15);
    EXPECT_NEAR(out.x_hat, (st.x_hat / st.P + y / s2) / post_prec, 1e-15);
    EXPECT_NEAR(kalman_gain(st, meas(y, s2)), 0.2 / 0.25, 1e-15);
    EXPECT_THROW(update(st, meas(y, 0.0)), std::invalid_argument);
    // infinite noise: no-op
    const auto same = update(st, meas(y, INFINITY));
    EXPECT_EQ(same.x_hat, st.x_hat);
    EXPECT_EQ(same.P, st.P);
}

TEST(PairwiseFilter, ReversedLinkIsAntisymmetric) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    auto a = make_pairwise_filter(kRel);
    auto b = make_pairwise_filter(kRel.reversed());
    double t = 0.0;
    for (int k = 0; k < 500; ++k) {
        const double dt = 0.001 + 0.01 * std::abs(n01(rng));
        t += dt;
        a = predict(a, dt);
        b = predict(b, dt);
        const double y = 0.3 * n01(rng), s2 = 0.01 + std::abs(n01(rng));
        a = update(a, meas(y, s2, t));
        b = update(b, meas(-y, s2, t));
        ASSERT_NEAR(a.x_hat, -b.x_hat, 1e-12);
        ASSERT_NEAR(a.P, b.P, 1e-12);
        const auto ra = relative_skew_estimate(a, t), rb = relative_skew_estimate(b, t);
        ASSERT_NEAR(ra.a_ij, rb.a_ji, 1e-12);
        ASSERT_NEAR(ra.a_ij * ra.a_ji, std::exp(a.P), 1e-12);
    }
}

TEST(PairwiseFilter, BoundIsRiccatiFixedPoint) {
    for (double T : {1e-3, 2e-3, 0.1, 1.0}) {
        for (double S : {1e-6, 1e-2, 1.0, 100.0}) {
            // iterate prior -> posterior -> prior at the worst gap and noise
            const double A = std::exp(-2.0 * kRel.alpha * T), E = kRel.stationary_variance();
            double Q = E;
            for (int k = 0; k < 200000; ++k) {
                const double post = S * Q / (Q + S);
                const double next = A * post + E * (1 - A);
                if (std::abs(next - Q) < 1e-18) break;
                Q = next;
            }
            EXPECT_NEAR(variance_upper_bound(T, S, kRel), Q, 1e-10 * (1 + Q)) << T << " " << S;
            EXPECT_LE(variance_upper_bound(T, S, kRel), E * (1 + 1e-12));
        }
    }
    EXPECT_THROW(variance_upper_bound(0.0, 1.0, kRel), std::invalid_argument);
}

TEST(PairwiseFilter, VarianceNeverExceedsStationary) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto st = make_pairwise_filter(kRel);
    const double E = kRel.stationary_variance();
    for (int k = 0; k < 10000; ++k) {
        st = predict(st, 0.1 * u(rng));
        ASSERT_LE(st.P, E * (1 + 1e-12));
        st = update(st, meas(u(rng) - 0.5, 1e-3 + u(rng)));
        ASSERT_LE(st.P, E * (1 + 1e-12));
        ASSERT_GE(st.P, 0.0);
    }
}

TEST(PairwiseFilter, SuboptimalUpdateAgreesBelowCap) {
    auto st = make_pairwise_filter(kRel);
    st.x_hat = 0.2;
    st.P = 0.01;
    const Measurement m = meas(0.5, 0.04);
    double k = 0.0;
    const auto sub = suboptimal_update(st, m, SubOptConfig{}, &k);
    const auto opt = update(st, m);
    EXPECT_NEAR(k, 0.2, 1e-15);
    EXPECT_NEAR(sub.x_hat, opt.x_hat, 1e-15);
    EXPECT_NEAR(sub.P, opt.P, 1e-15);
}

TEST(PairwiseFilter, SuboptimalUpdateCapsGain) {
    auto st = make_pairwise_filter(kRel);
    st.P = 1.0;
    const Measurement m = meas(1.0, 1e-4);
    SubOptConfig cfg;
    cfg.gain_cap = 0.5;
    double k = 0.0;
    const auto out = suboptimal_update(st, m, cfg, &k);
    EXPECT_EQ(k, 0.5);
    EXPECT_NEAR(out.x_hat, 0.5, 1e-15);
    EXPECT_NEAR(out.P, 0.25 * 1.0 + 0.25 * 1e-4, 1e-15);  // Joseph form at the applied gain
}

TEST(PairwiseFilter, SuboptimalPredictRescalesTime) {
    auto st = make_pairwise_filter(kRel);
    st.x_hat = 0.3;
    st.P = 0.02;
    SubOptConfig unity;
    const auto u = suboptimal_predict(st, 0.05, unity);
    const auto ref = predict(st, 0.05);
    EXPECT_NEAR(u.x_hat, ref.x_hat, 1e-15);
    EXPECT_NEAR(u.P, ref.P, 1e-15);

    SubOptConfig cm{SubOptConfig::FMode::conditional_mean, 0.99};
    const double f = relative_skew_estimate(st, 0.0).a_ij;
    const auto c = suboptimal_predict(st, 0.05, cm);
    EXPECT_NEAR(c.x_hat, predict(st, 0.05 / f).x_hat, 1e-15);
    EXPECT_NEAR(c.t_last, 0.05, 1e-15);
    EXPECT_THROW(suboptimal_predict(st, -1.0, unity), std::invalid_argument);
}

TEST(PairwiseFilter, TraceCsvHeader) {
    std::ostringstream os;
    write_filter_trace_csv(os, {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}});
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,x_hat,P,y,sigma2,gain");
}
