// Stochastic clock model: an Ornstein-Uhlenbeck log-skew X(t), the skew
// a(t) = c(t) e^{X(t)} with c(t) chosen so that E[a(t)] = 1, and the display
// tau(t) = integral of a over [0, t]. Also the closed-form moments, Allan
// variance (analytic and empirical), parameter fitting from Allan points and
// the parameters of the relative (link) process between two clocks.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "clocksync/rng.hpp"

namespace clocksync {

/// Per-clock OU parameters: mean-reversion rate alpha (1/time) and diffusion
/// coefficient epsilon (1/sqrt(time)). epsilon == 0 describes the reference clock.
struct ClockParams {
    double alpha = 10.0;
    double epsilon = 1.0;
};

/// Throws std::invalid_argument unless alpha > 0 and epsilon >= 0 (both finite).
void validate(const ClockParams& p);

/// Ground-truth sample path on the grid t_k = k * dt.
struct ClockTrajectory {
    double dt = 0.0;
    std::vector<double> states;    ///< X(t_k)
    std::vector<double> skews;     ///< a(t_k)
    std::vector<double> displays;  ///< tau(t_k)
    std::uint64_t seed = 0;

    std::size_t size() const { return states.size(); }
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }
};

/// Parameters of the relative process X_ij = X_j - X_i between clocks i and j
/// (shared alpha). The relative skew is a_ij(t) = c_ij(t) e^{X_ij(t)}.
struct RelParams {
    double alpha = 0.0;
    double eps_i = 0.0;
    double eps_j = 0.0;
    double eps_ij = 0.0;    ///< sqrt(eps_i^2 + eps_j^2)
    double c_ij_inf = 1.0;  ///< limit of c_ij(t) as t -> infinity

    /// c_ij(t) = c_j(t) / c_i(t).
    double c_ij(double t) const;
    /// c_ji(t) = 1 / c_ij(t).
    double c_ji(double t) const;
    /// log c_ij(t), the additive correction between log a_ij and X_ij.
    double log_c_ij(double t) const;
    /// Stationary variance eps_ij^2 / (2 alpha) of X_ij.
    double stationary_variance() const { return eps_ij * eps_ij / (2.0 * alpha); }
    /// Same parameters seen from the other end of the link.
    RelParams reversed() const;
};

struct AllanPoint {
    double T = 0.0;
    double sigma2 = 0.0;
};

// --- OU transitions -------------------------------------------------------

/// Exact OU transition over dt driven by the standard normal draw z.
double ou_step_exact(double x, double dt, const ClockParams& p, double z);

/// Euler-Maruyama transition (1 - alpha dt) x + eps sqrt(dt) z; requires alpha dt < 1.
double ou_step_euler(double x, double dt, const ClockParams& p, double z);

/// c(t) = exp(-(eps^2 / (4 alpha)) (1 - e^{-2 alpha t})).
double skew_scale(double t, const ClockParams& p);

/// Incremental generator of one clock on a fixed grid. Used by simulate_clock
/// and by the network simulator, which needs clocks advanced lazily.
class ClockStepper {
public:
    ClockStepper(const ClockParams& p, double dt, std::uint64_t seed);

    void step();

    std::size_t index() const { return k_; }
    double time() const { return static_cast<double>(k_) * dt_; }
    double state() const { return x_; }
    double skew() const { return skew_; }
    /// tau(t_k), kept as t_k + offset so that a perfect clock reads exactly k * dt.
    double display() const { return time() + offset_; }
    double offset() const { return offset_; }
    double dt() const { return dt_; }
    const ClockParams& params() const { return p_; }

private:
    ClockParams p_;
    double dt_;
    double decay_;
    double noise_sd_;
    Rng rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::size_t k_ = 0;
    double x_ = 0.0;
    double skew_ = 1.0;
    double offset_ = 0.0;
};

/// Simulates X, a and tau on [0, horizon] with step dt (trapezoidal display).
ClockTrajectory simulate_clock(const ClockParams& p, double horizon, double dt, std::uint64_t seed);

// --- Closed-form moments --------------------------------------------------

/// Var X(t) = (eps^2 / (2 alpha)) (1 - e^{-2 alpha t}).
double ou_variance(double t, const ClockParams& p);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean (always 1) and variance e^{Var X(t)} - 1 of the skew a(t).
Moments skew_moments(double t, const ClockParams& p);

/// E[a(r) a(s)].
double skew_autocorrelation(double r, double s, const ClockParams& p);

struct VarianceBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Jensen lower bound and quadratic upper bound on Var tau(t).
VarianceBounds display_variance_bounds(double t, const ClockParams& p);

// --- Allan variance -------------------------------------------------------

inline constexpr int kDefaultAllanQuadSteps = 256;

/// Model Allan variance at averaging interval T, by composite 2-D trapezoidal
/// quadrature with `quad_steps` intervals per axis.
double allan_variance_analytic(double T, const ClockParams& p, int quad_steps = kDefaultAllanQuadSteps);

/// lim (1/2) E[(a(t+T) - a(t))^2] = e^{b} - e^{b e^{-alpha T}}, b = eps^2/(2 alpha).
double asymptotic_skew_difference_variance(double T, const ClockParams& p);

/// Allan variance estimate from displays sampled with period T (tau(0), tau(T), ...).
double allan_variance_empirical(std::span<const double> displays, double T);

struct FitOptions {
    int starts = 8;
    double alpha_lo = 1e-1, alpha_hi = 1e3;      ///< start box for alpha
    double eps_lo = 1e-6, eps_hi = 1e1;          ///< start box for epsilon
    double alpha_min = 1e-4, alpha_max = 1e6;    ///< hard search bounds
    double eps_min = 1e-12, eps_max = 1e3;
    int max_evals_per_start = 4000;
    double min_step = 1e-7;                      ///< in log units
    int quad_steps = kDefaultAllanQuadSteps;
    std::uint64_t seed = 0x5eedULL;
};

struct FitResult {
    ClockParams params;
    double residual = 0.0;  ///< mean absolute error of the fitted curve
    int evaluations = 0;
};

/// Least mean-absolute-error fit of (alpha, epsilon) to measured Allan points.
FitResult fit_params_from_allan(std::span<const AllanPoint> points, const FitOptions& opts = {});

// --- Relative parameters --------------------------------------------------

RelParams relative_params(const ClockParams& pi, const ClockParams& pj);

// --- CSV ------------------------------------------------------------------

/// Header `t,x,skew,display`.
void write_trajectory_csv(std::ostream& os, const ClockTrajectory& traj, std::size_t stride = 1);
/// Header `T,sigma2`.
void write_allan_csv(std::ostream& os, std::span<const AllanPoint> points);
std::vector<AllanPoint> read_allan_csv(std::istream& is);
/// Reads `t,x,skew,display` rows back; dt is taken from the first two rows.
ClockTrajectory read_trajectory_csv(std::istream& is);

}  // namespace clocksync
