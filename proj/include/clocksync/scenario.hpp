// Simulation scenario: topology, clocks, delays, exchange rates and protocol,
// read from a line-oriented `key = value` file with `[section]` headers.
//
// Grammar:
//   line    := blank | comment | section | setting
//   comment := ('#' | ';') any
//   section := '[' name ']'          -- later keys are read as name.key
//   setting := key '=' value
//
// Keys (section-qualified form):
//   nodes, edges ("0-1, 1-0, ..."; directed), alpha, epsilon, epsilon_<i>,
//   dt, horizon, protocol (ss | hybrid | mbcsp), seed,
//   delay.kind (constant | uniform | truncated-normal), delay.mean,
//   delay.spread (number or "full" = mean), delay.bound,
//   rates.skew, rates.offset, rates.per_edge (true | false),
//   separations.skew, separations.roundtrip (grid steps),
//   noise.floor, ss.forgetting, mac.timeout_factor, replay.accuracy,
//   degrade.period, degrade.sigma2
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clocksync/clock_model.hpp"
#include "clocksync/measurement.hpp"
#include "clocksync/smoothing.hpp"

namespace clocksync {

/// Configuration error (bad key, bad value, inconsistent scenario).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Protocol { ss, hybrid, mbcsp };

Protocol parse_protocol(const std::string& name);
std::string to_string(Protocol p);

struct Scenario {
    int nodes = 2;                               ///< including the reference node 0
    std::vector<std::pair<int, int>> edges;      ///< directed links
    std::vector<ClockParams> clocks;             ///< one per node; clocks[0] is the reference
    DelayModel delay;
    double dt = 1e-5;
    double horizon = 120.0;
    double rate_skew = 1.0;                      ///< skew-pair exchanges per unit time
    double rate_offset = 6.0;                    ///< offset round-trips per unit time
    bool rates_per_edge = true;                  ///< multiply rates by the directed edge count
    int sep_skew = 40;                           ///< grid steps between the two skew packets
    int sep_roundtrip = 20;                      ///< grid steps between receipt and reply
    Protocol protocol = Protocol::mbcsp;
    std::uint64_t seed = 1;
    double noise_floor = 1e-6;
    double ss_forgetting = 0.05;                 ///< per-update weight of the SS average
    double timeout_factor = 10.0;                ///< exchange timeout in mean delays
    double replay_accuracy = 0.0;                ///< stamp quantum (0 = none)
    double degrade_period = 0.002;
    double degrade_sigma2 = 1e-2;

    double skew_exchange_rate() const;
    double offset_exchange_rate() const;
    /// Undirected links (min, max) in first-appearance order.
    std::vector<std::pair<int, int>> links() const;
    /// Graph over the undirected links, oriented min -> max.
    SyncGraph link_graph() const;
};

/// Throws ConfigError on any invariant violation.
void validate(const Scenario& sc);

/// Ordered raw settings; keys are section-qualified.
using Settings = std::map<std::string, std::string>;

Settings read_settings(std::istream& is);
Settings read_settings_file(const std::string& path);
/// Parses "key=value" (used for command-line overrides).
std::pair<std::string, std::string> parse_override(const std::string& text);

/// Builds and validates a scenario; unknown keys are rejected by name.
Scenario build_scenario(const Settings& settings);
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});

std::vector<std::pair<int, int>> parse_edges(const std::string& text);

}  // namespace clocksync
