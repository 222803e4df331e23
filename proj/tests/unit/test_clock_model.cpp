#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "clocksync/clock_model.hpp"
#include "oracles.hpp"

using namespace clocksync;

namespace {

double ou_var_oracle(double t, double alpha, double eps) {
    return eps * eps * (1.0 - std::exp(-2.0 * alpha * t)) / (2.0 * alpha);
}

}  // namespace

TEST(ClockModel, ExactStepIsDecayPlusScaledNoise) {
    const ClockParams p{10.0, 2.0};
    const double dt = 0.03;
    EXPECT_DOUBLE_EQ(ou_step_exact(0.7, dt, p, 0.0), std::exp(-p.alpha * dt) * 0.7);
    const double sd = std::sqrt(ou_var_oracle(dt, p.alpha, p.epsilon));
    EXPECT_NEAR(ou_step_exact(0.0, dt, p, 1.0), sd, 1e-15);
    EXPECT_NEAR(ou_step_exact(0.0, dt, p, -2.0), -2.0 * sd, 1e-15);
}

TEST(ClockModel, EulerStepAndStabilityGuard) {
    const ClockParams p{10.0, 1.0};
    EXPECT_NEAR(ou_step_euler(0.5, 0.01, p, 0.3), 0.9 * 0.5 + 0.1 * 0.3, 1e-15);
    EXPECT_THROW(ou_step_euler(0.5, 0.1, p, 0.0), std::domain_error);
    EXPECT_THROW(ou_step_exact(NAN, 0.1, p, 0.0), std::domain_error);
    EXPECT_THROW(ou_step_exact(0.0, 0.0, p, 0.0), std::invalid_argument);
}

TEST(ClockModel, InvalidParamsRejected) {
    EXPECT_THROW(validate(ClockParams{0.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(validate(ClockParams{1.0, -1.0}), std::invalid_argument);
    EXPECT_NO_THROW(validate(ClockParams{1.0, 0.0}));
}

TEST(ClockModel, SkewScaleNormalizesMeanToOne) {
    const ClockParams p{10.0, 3.0};
    for (double t : {0.0, 0.01, 0.1, 1.0, 5.0}) {
        const double v = ou_var_oracle(t, p.alpha, p.epsilon);
        EXPECT_NEAR(skew_scale(t, p), std::exp(-0.5 * v), 1e-14) << t;
        EXPECT_NEAR(ou_variance(t, p), v, 1e-14) << t;
    }
}

TEST(ClockModel, SkewMomentsMatchGaussianQuadrature) {
    for (const ClockParams p : {ClockParams{10.0, 1.0}, ClockParams{10.0, 3.0}, ClockParams{2.0, 0.5}}) {
        for (double t : {0.1, 1.0, 5.0}) {
            const double v = ou_var_oracle(t, p.alpha, p.epsilon);
            const double c = std::exp(-0.5 * v);
            const double m1 = oracle::gaussian_expectation([&](double x) { return c * std::exp(x); }, v);
            const double m2 = oracle::gaussian_expectation([&](double x) { return c * c * std::exp(2 * x); }, v);
            const Moments mo = skew_moments(t, p);
            EXPECT_NEAR(mo.mean, m1, 1e-9);
            EXPECT_NEAR(mo.variance, m2 - m1 * m1, 1e-8 * (1.0 + m2));
        }
    }
}

TEST(ClockModel, AutocorrelationDiagonalIsSecondMoment) {
    const ClockParams p{10.0, 1.0};
    for (double t : {0.1, 1.0}) {
        EXPECT_NEAR(skew_autocorrelation(t, t, p), 1.0 + skew_moments(t, p).variance, 1e-12);
    }
    // long separation: uncorrelated, E[a(r) a(s)] -> 1
    EXPECT_NEAR(skew_autocorrelation(1.0, 5.0, p), 1.0, 1e-12);
}

TEST(ClockModel, DisplayVarianceInsideBounds) {
    // Var tau(t) = int int (E[a(r)a(s)] - 1) dr ds with the lognormal kernel
    for (const ClockParams p : {ClockParams{10.0, 1.0}, ClockParams{10.0, 3.0}}) {
        const double b = p.epsilon * p.epsilon / (2.0 * p.alpha);
        for (double t : {0.05, 0.5, 2.0}) {
            auto inner = [&](double r) {
                return oracle::simpson(
                    [&](double s) {
                        return std::expm1(b * (std::exp(-p.alpha * std::abs(r - s)) - std::exp(-p.alpha * (r + s))));
                    },
                    0.0, t, 400);
            };
            const double var = oracle::simpson(inner, 0.0, t, 400);
            const VarianceBounds vb = display_variance_bounds(t, p);
            EXPECT_LE(vb.lower, var * (1 + 1e-6)) << t;
            EXPECT_GE(vb.upper, var * (1 - 1e-6)) << t;
        }
    }
}

TEST(ClockModel, DisplayBoundSeriesContinuous) {
    const ClockParams p{10.0, 1.0};
    const double t = 1e-3 / p.alpha;
    const auto below = display_variance_bounds(t * (1 - 1e-9), p);
    const auto above = display_variance_bounds(t * (1 + 1e-9), p);
    EXPECT_NEAR(below.lower / above.lower, 1.0, 1e-6);
}

TEST(ClockModel, TrajectoryDisplaysAreTrapezoidIntegrals) {
    const ClockParams p{10.0, 1.0};
    const auto traj = simulate_clock(p, 0.5, 1e-3, 42);
    ASSERT_EQ(traj.size(), 501u);
    EXPECT_EQ(traj.skews[0], 1.0);
    EXPECT_EQ(traj.displays[0], 0.0);
    double tau = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        tau += 0.5 * (traj.skews[k] + traj.skews[k - 1]) * traj.dt;
        ASSERT_NEAR(traj.displays[k], tau, 1e-12);
        ASSERT_NEAR(traj.skews[k], skew_scale(traj.time(k), p) * std::exp(traj.states[k]), 1e-12);
    }
}

TEST(ClockModel, TrajectoryDeterministicPerSeed) {
    const ClockParams p{10.0, 1.0};
    const auto a = simulate_clock(p, 0.2, 1e-3, 7);
    const auto b = simulate_clock(p, 0.2, 1e-3, 7);
    const auto c = simulate_clock(p, 0.2, 1e-3, 8);
    EXPECT_EQ(a.states, b.states);
    EXPECT_NE(a.states, c.states);
}

TEST(ClockModel, ZeroNoiseClockIsPerfect) {
    const auto traj = simulate_clock(ClockParams{10.0, 0.0}, 1.0, 1e-2, 1);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        EXPECT_EQ(traj.skews[k], 1.0);
        EXPECT_NEAR(traj.displays[k], traj.time(k), 1e-12);
    }
}

TEST(ClockModel, AllanAnalyticMatchesLagIntegral) {
    for (const ClockParams p : {ClockParams{10.0, 1.0}, ClockParams{66.4, 4.15e-5}, ClockParams{1.0, 0.3}}) {
        for (double T : {0.01, 0.1, 0.5, 1.0, 3.0}) {
            const double ref = oracle::allan_stationary(T, p.alpha, p.epsilon);
            const double coarse = std::abs(allan_variance_analytic(T, p, 256) - ref);
            const double fine = std::abs(allan_variance_analytic(T, p, 1024) - ref);
            if (p.alpha * T / 256 <= 0.05) {
                // grid resolves the correlation time
                EXPECT_NEAR(allan_variance_analytic(T, p), ref, 1e-3 * ref) << p.alpha << " " << T;
            }
            // composite trapezoid: second order in the grid spacing
            EXPECT_LT(fine, coarse / 10.0 + 1e-12 * ref) << p.alpha << " " << T;
        }
    }
    EXPECT_EQ(allan_variance_analytic(0.5, ClockParams{10.0, 0.0}), 0.0);
    EXPECT_THROW(allan_variance_analytic(0.0, ClockParams{}), std::invalid_argument);
    EXPECT_THROW(allan_variance_analytic(1.0, ClockParams{}, 16), std::invalid_argument);
}

TEST(ClockModel, AllanSmallAndLargeTLimits) {
    const ClockParams p{10.0, 1.0};
    // T << 1/alpha: the skew behaves like a random walk, whose window averages
    // differ with two thirds of the point-difference variance
    const double T = 1e-3;
    EXPECT_NEAR(allan_variance_analytic(T, p) / asymptotic_skew_difference_variance(T, p), 2.0 / 3.0, 0.02);
    // T >> 1/alpha: averaging suppresses the variance, point differences do not
    EXPECT_LT(allan_variance_analytic(2.0, p), 0.2 * asymptotic_skew_difference_variance(2.0, p));
}

TEST(ClockModel, AllanEmpiricalOnKnownSequence) {
    // displays of piecewise-constant rates 1, 3, 2: averages 1, 3, 2
    const std::vector<double> displays{0.0, 1.0, 4.0, 6.0};
    EXPECT_NEAR(allan_variance_empirical(displays, 1.0), ((3 - 1) * (3 - 1) + (2 - 3) * (2 - 3)) / 4.0, 1e-15);
    const std::vector<double> two{0.0, 1.0};
    EXPECT_THROW(allan_variance_empirical(two, 1.0), std::invalid_argument);
}

TEST(ClockModel, FitRecoversParameters) {
    const ClockParams truth{66.4, 4.15e-5};
    std::vector<AllanPoint> pts;
    for (double T : {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) pts.push_back({T, allan_variance_analytic(T, truth)});
    const FitResult fit = fit_params_from_allan(pts);
    EXPECT_NEAR(fit.params.alpha, truth.alpha, 0.05 * truth.alpha);
    EXPECT_NEAR(fit.params.epsilon, truth.epsilon, 0.05 * truth.epsilon);
    const std::vector<AllanPoint> one{{0.1, 1e-9}};
    EXPECT_THROW(fit_params_from_allan(one), std::invalid_argument);
}

TEST(ClockModel, RelativeParams) {
    const RelParams rel = relative_params(ClockParams{10.0, 1.0}, ClockParams{10.0, 2.0});
    EXPECT_NEAR(rel.eps_ij, std::sqrt(5.0), 1e-15);
    EXPECT_NEAR(rel.stationary_variance(), 5.0 / 20.0, 1e-15);
    // c_ij(t) = c_j(t) / c_i(t)
    for (double t : {0.0, 0.05, 1.0}) {
        const double ratio = skew_scale(t, {10.0, 2.0}) / skew_scale(t, {10.0, 1.0});
        EXPECT_NEAR(rel.c_ij(t), ratio, 1e-14);
        EXPECT_NEAR(rel.c_ji(t) * rel.c_ij(t), 1.0, 1e-14);
        EXPECT_NEAR(std::exp(rel.log_c_ij(t)), ratio, 1e-14);
    }
    EXPECT_NEAR(rel.reversed().c_ij(0.3), rel.c_ji(0.3), 1e-15);
    EXPECT_THROW(relative_params(ClockParams{10.0, 1.0}, ClockParams{5.0, 1.0}), std::invalid_argument);
}

TEST(ClockModel, CsvRoundTrip) {
    const auto traj = simulate_clock(ClockParams{10.0, 1.0}, 0.05, 1e-3, 3);
    std::stringstream ss;
    write_trajectory_csv(ss, traj);
    const auto back = read_trajectory_csv(ss);
    ASSERT_EQ(back.size(), traj.size());
    EXPECT_NEAR(back.dt, traj.dt, 1e-15);
    for (std::size_t k = 0; k < traj.size(); ++k) EXPECT_NEAR(back.displays[k], traj.displays[k], 1e-11);

    const std::vector<AllanPoint> pts{{0.1, 1e-3}, {0.5, 2e-4}};
    std::stringstream as;
    write_allan_csv(as, pts);
    const auto pts2 = read_allan_csv(as);
    ASSERT_EQ(pts2.size(), 2u);
    EXPECT_DOUBLE_EQ(pts2[1].sigma2, 2e-4);

    std::stringstream bad("T,sigma2\n0.1\n");
    EXPECT_THROW(read_allan_csv(bad), std::invalid_argument);
}
