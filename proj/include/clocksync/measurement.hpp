// Link observations built from packet time-stamps: the delay model, the
// log relative-skew measurement of a packet pair with its modeled noise
// variance, the two-way offset/delay estimator and the receipt-time predictor.
#pragma once

#include <array>
#include <cmath>
#include <string>

#include "clocksync/clock_model.hpp"
#include "clocksync/rng.hpp"

namespace clocksync {

/// Per-packet link delay. Draws are i.i.d. and always lie in (0, bound].
struct DelayModel {
    enum class Kind { constant, uniform, truncated_normal };

    Kind kind = Kind::uniform;
    double mean = 5e-3;
    /// uniform: half-width around the mean; truncated_normal: standard deviation.
    double spread = 5e-3;
    /// Upper bound D; 0 selects mean + spread (uniform), mean (constant) or
    /// mean + 4 spread (truncated normal).
    double bound = 0.0;

    double effective_bound() const;
    /// Variance of one draw.
    double variance() const;
};

void validate(const DelayModel& m);
DelayModel::Kind parse_delay_kind(const std::string& name);
std::string to_string(DelayModel::Kind kind);

double draw_delay(const DelayModel& m, Rng& rng);

/// Four time-stamps of one exchange on the link i -> j.
///   skew pair:        (s[0], r[0]) and (s[1], r[1]) are the two packets i -> j
///   offset roundtrip: s[0] = send at i, r[0] = receipt at j,
///                     s[1] = reply send at j, r[1] = reply receipt at i
/// Send stamps are in the sender's clock, receive stamps in the receiver's.
struct StampRecord {
    enum class Kind { skew_pair, offset_roundtrip };

    int i = 0;
    int j = 1;
    Kind kind = Kind::skew_pair;
    std::array<double, 2> s{};
    std::array<double, 2> r{};
    /// Ground-truth reference send times (simulation only, NaN otherwise).
    std::array<double, 2> true_send{NAN, NAN};
};

/// One observation y of X_ij = X_j - X_i at epoch t_k with noise variance sigma2.
struct Measurement {
    int i = 0;
    int j = 1;
    double t_k = 0.0;
    double y = 0.0;
    double sigma2 = 1.0;
};

/// Modeled measurement noise floor + 2 Var_d / delta_s^2.
double noise_variance(double delta_s, const DelayModel& m, double floor = 1e-6);

/// log|(r1 - r0)/(s1 - s0)| - log c_ij(t_k): an observation of X_ij(t_k).
/// `rel` must be relative_params(p_i, p_j) for the record's link.
Measurement skew_measurement(const StampRecord& rec, const RelParams& rel, double t_k, double sigma2);

/// Convenience overload computing sigma2 from the send separation.
Measurement skew_measurement(const StampRecord& rec, const RelParams& rel, double t_k,
                             const DelayModel& delay, double floor = 1e-6);

struct OffsetEstimate {
    double tau_ij = 0.0;  ///< estimate of tau_j - tau_i at the reply receipt
    double tau_ji = 0.0;  ///< always -tau_ij
    double d_ji = 0.0;    ///< reply delay, in i's clock units
    double d_ij = 0.0;    ///< a_ij_hat * d_ji
};

/// Two-way offset/delay estimate from an offset round-trip record.
OffsetEstimate offset_delay_estimate(const StampRecord& rec, double a_ij_hat, double a_ji_hat);

/// r0 + a_hat (s1 - s0).
double predict_receipt(double s0, double r0, double s1, double a_hat);

}  // namespace clocksync
