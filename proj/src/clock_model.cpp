#include "clocksync/clock_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "clocksync/csv.hpp"

namespace clocksync {

namespace {

double half_eps2_over_alpha(const ClockParams& p) { return p.epsilon * p.epsilon / (2.0 * p.alpha); }

void require_positive_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step must be positive");
}

}  // namespace

void validate(const ClockParams& p) {
    if (!(p.alpha > 0.0) || !std::isfinite(p.alpha))
        throw std::invalid_argument("alpha must be positive");
    if (!(p.epsilon >= 0.0) || !std::isfinite(p.epsilon))
        throw std::invalid_argument("epsilon must be non-negative");
}

double ou_step_exact(double x, double dt, const ClockParams& p, double z) {
    require_positive_dt(dt);
    if (!std::isfinite(x) || !std::isfinite(z)) throw std::domain_error("non-finite state");
    const double decay = std::exp(-p.alpha * dt);
    const double sd = p.epsilon * std::sqrt(-std::expm1(-2.0 * p.alpha * dt) / (2.0 * p.alpha));
    return decay * x + sd * z;
}

double ou_step_euler(double x, double dt, const ClockParams& p, double z) {
    require_positive_dt(dt);
    if (p.alpha * dt >= 1.0) throw std::domain_error("unstable step");
    if (!std::isfinite(x) || !std::isfinite(z)) throw std::domain_error("non-finite state");
    return (1.0 - p.alpha * dt) * x + p.epsilon * std::sqrt(dt) * z;
}

double skew_scale(double t, const ClockParams& p) {
    // -(eps^2/4alpha)(1 - e^{-2 alpha t}) written with expm1 for small t
    return std::exp(p.epsilon * p.epsilon / (4.0 * p.alpha) * std::expm1(-2.0 * p.alpha * t));
}

ClockStepper::ClockStepper(const ClockParams& p, double dt, std::uint64_t seed)
    : p_(p), dt_(dt), rng_(seed) {
    validate(p);
    require_positive_dt(dt);
    decay_ = std::exp(-p.alpha * dt);
    noise_sd_ = p.epsilon * std::sqrt(-std::expm1(-2.0 * p.alpha * dt) / (2.0 * p.alpha));
}

void ClockStepper::step() {
    const double z = noise_sd_ > 0.0 ? normal_(rng_) : 0.0;
    x_ = decay_ * x_ + noise_sd_ * z;
    ++k_;
    const double next_skew = skew_scale(time(), p_) * std::exp(x_);
    offset_ += dt_ * (0.5 * (skew_ + next_skew) - 1.0);
    skew_ = next_skew;
}

ClockTrajectory simulate_clock(const ClockParams& p, double horizon, double dt, std::uint64_t seed) {
    validate(p);
    require_positive_dt(dt);
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));

    ClockTrajectory traj;
    traj.dt = dt;
    traj.seed = seed;
    traj.states.reserve(steps + 1);
    traj.skews.reserve(steps + 1);
    traj.displays.reserve(steps + 1);

    ClockStepper clock(p, dt, seed);
    traj.states.push_back(clock.state());
    traj.skews.push_back(clock.skew());
    traj.displays.push_back(clock.display());
    for (std::size_t k = 0; k < steps; ++k) {
        clock.step();
        traj.states.push_back(clock.state());
        traj.skews.push_back(clock.skew());
        traj.displays.push_back(clock.display());
    }
    return traj;
}

double ou_variance(double t, const ClockParams& p) {
    if (t < 0.0) throw std::invalid_argument("time must be non-negative");
    return -half_eps2_over_alpha(p) * std::expm1(-2.0 * p.alpha * t);
}

Moments skew_moments(double t, const ClockParams& p) {
    return {1.0, std::expm1(ou_variance(t, p))};
}

double skew_autocorrelation(double r, double s, const ClockParams& p) {
    if (r < 0.0 || s < 0.0) throw std::invalid_argument("time must be non-negative");
    const double b = half_eps2_over_alpha(p);
    return std::exp(b * (std::exp(-p.alpha * std::abs(r - s)) - std::exp(-p.alpha * (r + s))));
}

VarianceBounds display_variance_bounds(double t, const ClockParams& p) {
    if (!(t > 0.0)) throw std::invalid_argument("time must be positive");
    const double u = p.alpha * t;
    // alpha * (t + (1 - e^{-2u})/(2 alpha) - (2/alpha)(1 - e^{-u})), series near 0
    double alpha_bracket;
    if (u < 1e-3) {
        alpha_bracket = u * u * u * (1.0 / 3.0 - u / 4.0 + 7.0 * u * u / 60.0);
    } else {
        alpha_bracket = u - 0.5 * std::expm1(-2.0 * u) + 2.0 * std::expm1(-u);
    }
    const double h = p.epsilon * p.epsilon / (p.alpha * p.alpha * p.alpha * t * t) * alpha_bracket;
    return {std::expm1(h) * t * t, std::expm1(half_eps2_over_alpha(p)) * t * t};
}

namespace {

// Lag weights of the composite trapezoid rule on a uniform (n+1)-node grid.
// For a kernel depending only on |t - s| (same-window) or on t - s with the
// windows adjacent, the 2-D trapezoid sum collapses to a sum over lags.
struct AllanQuadrature {
    int n;
    std::vector<double> same_window;      // lag 0..n, unit spacing
    std::vector<double> adjacent_window;  // lag 0..2n

    explicit AllanQuadrature(int steps) : n(steps), same_window(steps + 1, 0.0), adjacent_window(2 * steps + 1, 0.0) {
        std::vector<double> w(n + 1, 1.0);
        w.front() = w.back() = 0.5;
        for (int i = 0; i <= n; ++i) {
            for (int l = 0; l <= n; ++l) {
                same_window[std::abs(i - l)] += w[i] * w[l];
                adjacent_window[i + l] += w[i] * w[l];
            }
        }
    }

    double evaluate(double T, const ClockParams& p) const {
        const double b = half_eps2_over_alpha(p);
        if (b == 0.0) return 0.0;
        const double h = T / n;
        // integrand e^{b e^{-alpha u}} - 1; the -1 cancels between the two windows
        auto kernel = [&](int lag) { return std::expm1(b * std::exp(-p.alpha * h * lag)); };
        double same = 0.0;
        double adjacent = 0.0;
        for (int m = 0; m <= 2 * n; ++m) {
            const double k = kernel(m);
            if (m <= n) same += same_window[m] * k;
            adjacent += adjacent_window[m] * k;
        }
        return (same - adjacent) * h * h / (T * T);
    }
};

}  // namespace

double allan_variance_analytic(double T, const ClockParams& p, int quad_steps) {
    if (!(T > 0.0)) throw std::invalid_argument("averaging interval must be positive");
    if (quad_steps < 64) throw std::invalid_argument("quad_steps must be at least 64");
    validate(p);
    return AllanQuadrature(quad_steps).evaluate(T, p);
}

double asymptotic_skew_difference_variance(double T, const ClockParams& p) {
    const double b = half_eps2_over_alpha(p);
    return std::exp(b) - std::exp(b * std::exp(-p.alpha * T));
}

double allan_variance_empirical(std::span<const double> displays, double T) {
    if (displays.size() < 3) throw std::invalid_argument("insufficient samples");
    if (!(T > 0.0)) throw std::invalid_argument("averaging interval must be positive");
    double prev_avg = (displays[1] - displays[0]) / T;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 2; k < displays.size(); ++k) {
        const double avg = (displays[k] - displays[k - 1]) / T;
        const double d = avg - prev_avg;
        sum += d * d;
        ++count;
        prev_avg = avg;
    }
    return sum / (2.0 * static_cast<double>(count));
}

FitResult fit_params_from_allan(std::span<const AllanPoint> points, const FitOptions& opts) {
    if (points.size() < 2) throw std::invalid_argument("at least two Allan points are required");
    for (std::size_t a = 0; a < points.size(); ++a) {
        if (!(points[a].T > 0.0)) throw std::invalid_argument("averaging intervals must be positive");
        for (std::size_t b = a + 1; b < points.size(); ++b)
            if (points[a].T == points[b].T) throw std::invalid_argument("averaging intervals must be distinct");
    }

    const AllanQuadrature quad(opts.quad_steps);
    int evals = 0;
    auto objective = [&](double log_alpha, double log_eps) {
        ++evals;
        const ClockParams p{std::exp(log_alpha), std::exp(log_eps)};
        double sum = 0.0;
        for (const auto& pt : points) sum += std::abs(quad.evaluate(pt.T, p) - pt.sigma2);
        const double mae = sum / static_cast<double>(points.size());
        return std::isfinite(mae) ? mae : std::numeric_limits<double>::infinity();
    };

    const std::array<double, 2> lo{std::log(opts.alpha_min), std::log(opts.eps_min)};
    const std::array<double, 2> hi{std::log(opts.alpha_max), std::log(opts.eps_max)};
    // coordinate directions first, then the two diagonals (alpha and eps are
    // strongly coupled once alpha T >> 1)
    constexpr std::array<std::array<double, 2>, 4> directions{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};

    Rng rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    FitResult best{{}, std::numeric_limits<double>::infinity(), 0};
    for (int start = 0; start < opts.starts; ++start) {
        std::array<double, 2> theta{
            std::log(opts.alpha_lo) + unit(rng) * (std::log(opts.alpha_hi) - std::log(opts.alpha_lo)),
            std::log(opts.eps_lo) + unit(rng) * (std::log(opts.eps_hi) - std::log(opts.eps_lo))};
        double f = objective(theta[0], theta[1]);
        double step = 1.0;
        int used = 1;
        while (step > opts.min_step && used < opts.max_evals_per_start) {
            bool improved = false;
            for (const auto& dir : directions) {
                for (double sign : {1.0, -1.0}) {
                    std::array<double, 2> cand{std::clamp(theta[0] + sign * step * dir[0], lo[0], hi[0]),
                                               std::clamp(theta[1] + sign * step * dir[1], lo[1], hi[1])};
                    if (cand == theta) continue;
                    const double fc = objective(cand[0], cand[1]);
                    ++used;
                    if (fc < f) {
                        theta = cand;
                        f = fc;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (f < best.residual) {
            best.params = {std::exp(theta[0]), std::exp(theta[1])};
            best.residual = f;
        }
    }
    best.evaluations = evals;
    if (!std::isfinite(best.residual)) throw std::runtime_error("fit failed");
    return best;
}

double RelParams::log_c_ij(double t) const {
    return (eps_j * eps_j - eps_i * eps_i) / (4.0 * alpha) * std::expm1(-2.0 * alpha * t);
}

double RelParams::c_ij(double t) const { return std::exp(log_c_ij(t)); }

double RelParams::c_ji(double t) const { return std::exp(-log_c_ij(t)); }

RelParams RelParams::reversed() const {
    return {alpha, eps_j, eps_i, eps_ij, 1.0 / c_ij_inf};
}

RelParams relative_params(const ClockParams& pi, const ClockParams& pj) {
    validate(pi);
    validate(pj);
    if (std::abs(pi.alpha - pj.alpha) > 1e-12 * std::max(pi.alpha, pj.alpha))
        throw std::invalid_argument("alpha convention violated");
    RelParams rel;
    rel.alpha = pi.alpha;
    rel.eps_i = pi.epsilon;
    rel.eps_j = pj.epsilon;
    rel.eps_ij = std::hypot(pi.epsilon, pj.epsilon);
    rel.c_ij_inf = std::exp(-(pj.epsilon * pj.epsilon - pi.epsilon * pi.epsilon) / (4.0 * pi.alpha));
    return rel;
}

void write_trajectory_csv(std::ostream& os, const ClockTrajectory& traj, std::size_t stride) {
    if (stride == 0) stride = 1;
    os << "t,x,skew,display\n";
    for (std::size_t k = 0; k < traj.size(); k += stride) {
        os << csv::format(traj.time(k)) << ',' << csv::format(traj.states[k]) << ','
           << csv::format(traj.skews[k]) << ',' << csv::format(traj.displays[k]) << '\n';
    }
}

void write_allan_csv(std::ostream& os, std::span<const AllanPoint> points) {
    os << "T,sigma2\n";
    for (const auto& pt : points) os << csv::format(pt.T) << ',' << csv::format(pt.sigma2) << '\n';
}

std::vector<AllanPoint> read_allan_csv(std::istream& is) {
    std::vector<AllanPoint> points;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto body = csv::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (lineno == 1 && body.rfind("T", 0) == 0) continue;
        const auto fields = csv::split(body);
        if (fields.size() < 2) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected T,sigma2");
        try {
            points.push_back({csv::parse_double(fields[0]), csv::parse_double(fields[1])});
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return points;
}

ClockTrajectory read_trajectory_csv(std::istream& is) {
    ClockTrajectory traj;
    std::string line;
    int lineno = 0;
    std::vector<double> times;
    while (std::getline(is, line)) {
        ++lineno;
        const auto body = csv::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (lineno == 1 && body.rfind("t,", 0) == 0) continue;
        const auto f = csv::split(body);
        if (f.size() < 4) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected t,x,skew,display");
        try {
            times.push_back(csv::parse_double(f[0]));
            traj.states.push_back(csv::parse_double(f[1]));
            traj.skews.push_back(csv::parse_double(f[2]));
            traj.displays.push_back(csv::parse_double(f[3]));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (times.size() >= 2) traj.dt = times[1] - times[0];
    return traj;
}

}  // namespace clocksync
