#include "clocksync/measurement.hpp"

#include <algorithm>
#include <stdexcept>

namespace clocksync {

double DelayModel::effective_bound() const {
    if (bound > 0.0) return bound;
    switch (kind) {
        case Kind::constant: return mean;
        case Kind::uniform: return mean + spread;
        case Kind::truncated_normal: return mean + 4.0 * spread;
    }
    return mean;
}

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double DelayModel::variance() const {
    switch (kind) {
        case Kind::constant: return 0.0;
        case Kind::uniform: {
            // uniform on (max(0, mean - spread), min(D, mean + spread)]
            const double lo = std::max(0.0, mean - spread);
            const double hi = std::min(effective_bound(), mean + spread);
            return (hi - lo) * (hi - lo) / 12.0;
        }
        case Kind::truncated_normal: {
            if (spread == 0.0) return 0.0;
            const double a = (0.0 - mean) / spread;
            const double b = (effective_bound() - mean) / spread;
            const double z = normal_cdf(b) - normal_cdf(a);
            const double pa = normal_pdf(a), pb = normal_pdf(b);
            const double m1 = (pa - pb) / z;
            return spread * spread * (1.0 + (a * pa - b * pb) / z - m1 * m1);
        }
    }
    return 0.0;
}

void validate(const DelayModel& m) {
    if (!(m.mean > 0.0) || !std::isfinite(m.mean)) throw std::invalid_argument("delay mean must be positive");
    if (!(m.spread >= 0.0) || !std::isfinite(m.spread))
        throw std::invalid_argument("delay spread must be non-negative");
    if (m.bound < 0.0) throw std::invalid_argument("delay bound must be non-negative");
    const double D = m.effective_bound();
    switch (m.kind) {
        case DelayModel::Kind::constant:
            if (D < m.mean) throw std::invalid_argument("delay bound below the constant delay");
            break;
        case DelayModel::Kind::uniform:
            if (m.spread > m.mean) throw std::invalid_argument("uniform delay spread exceeds the mean");
            if (D <= std::max(0.0, m.mean - m.spread))
                throw std::invalid_argument("delay bound below the uniform support");
            break;
        case DelayModel::Kind::truncated_normal:
            if (!(m.spread > 0.0)) throw std::invalid_argument("truncated-normal delay needs spread > 0");
            break;
    }
}

DelayModel::Kind parse_delay_kind(const std::string& name) {
    if (name == "constant") return DelayModel::Kind::constant;
    if (name == "uniform") return DelayModel::Kind::uniform;
    if (name == "truncated-normal" || name == "truncated_normal") return DelayModel::Kind::truncated_normal;
    throw std::invalid_argument("unknown delay kind '" + name + "'");
}

std::string to_string(DelayModel::Kind kind) {
    switch (kind) {
        case DelayModel::Kind::constant: return "constant";
        case DelayModel::Kind::uniform: return "uniform";
        case DelayModel::Kind::truncated_normal: return "truncated-normal";
    }
    return "?";
}

double draw_delay(const DelayModel& m, Rng& rng) {
    const double D = m.effective_bound();
    switch (m.kind) {
        case DelayModel::Kind::constant: return m.mean;
        case DelayModel::Kind::uniform: {
            const double lo = std::max(0.0, m.mean - m.spread);
            const double hi = std::min(D, m.mean + m.spread);
            return lo + (hi - lo) * uniform_open0(rng);  // (lo, hi]
        }
        case DelayModel::Kind::truncated_normal: {
            std::normal_distribution<double> normal(m.mean, m.spread);
            for (;;) {
                const double d = normal(rng);
                if (d > 0.0 && d <= D) return d;
            }
        }
    }
    return m.mean;
}

double noise_variance(double delta_s, const DelayModel& m, double floor) {
    if (!(delta_s > 0.0)) throw std::invalid_argument("send separation must be positive");
    return floor + 2.0 * m.variance() / (delta_s * delta_s);
}

Measurement skew_measurement(const StampRecord& rec, const RelParams& rel, double t_k, double sigma2) {
    if (!(rec.s[1] > rec.s[0])) throw std::invalid_argument("non-increasing send stamps");
    if (rec.r[1] == rec.r[0]) throw std::invalid_argument("degenerate receive stamps");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("noise variance must be positive");
    const double ratio = (rec.r[1] - rec.r[0]) / (rec.s[1] - rec.s[0]);
    Measurement m;
    m.i = rec.i;
    m.j = rec.j;
    m.t_k = t_k;
    m.y = std::log(std::abs(ratio)) - rel.log_c_ij(std::max(t_k, 0.0));
    m.sigma2 = sigma2;
    return m;
}

Measurement skew_measurement(const StampRecord& rec, const RelParams& rel, double t_k,
                             const DelayModel& delay, double floor) {
    if (!(rec.s[1] > rec.s[0])) throw std::invalid_argument("non-increasing send stamps");
    return skew_measurement(rec, rel, t_k, noise_variance(rec.s[1] - rec.s[0], delay, floor));
}

OffsetEstimate offset_delay_estimate(const StampRecord& rec, double a_ij_hat, double a_ji_hat) {
    if (!(a_ij_hat > 0.0) || !(a_ji_hat > 0.0) || !std::isfinite(a_ij_hat) || !std::isfinite(a_ji_hat))
        throw std::invalid_argument("invalid skew estimate");
    const double s_i = rec.s[0], r_ij = rec.r[0], s_j = rec.s[1], r_ji = rec.r[1];
    OffsetEstimate est;
    // the bracket over 2 a_ji is the delay in j's units; convert it back to i's
    const double d_in_j = std::max(0.0, ((r_ji - s_j) + (r_ij - s_i) + (s_j - r_ij) * (1.0 - a_ji_hat)) / (2.0 * a_ji_hat));
    est.d_ji = d_in_j / a_ij_hat;
    est.d_ij = a_ij_hat * est.d_ji;
    est.tau_ij = -r_ji + s_j + a_ij_hat * est.d_ji;
    est.tau_ji = -est.tau_ij;
    return est;
}

double predict_receipt(double s0, double r0, double s1, double a_hat) { return r0 + a_hat * (s1 - s0); }

}  // namespace clocksync
