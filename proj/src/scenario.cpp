#include "clocksync/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "clocksync/csv.hpp"

namespace clocksync {

Protocol parse_protocol(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "ss") return Protocol::ss;
    if (lower == "hybrid") return Protocol::hybrid;
    if (lower == "mbcsp") return Protocol::mbcsp;
    throw ConfigError("protocol: unknown protocol '" + name + "' (expected ss, hybrid or mbcsp)");
}

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::ss: return "ss";
        case Protocol::hybrid: return "hybrid";
        case Protocol::mbcsp: return "mbcsp";
    }
    return "?";
}

double Scenario::skew_exchange_rate() const {
    return rates_per_edge ? rate_skew * static_cast<double>(edges.size()) : rate_skew;
}

double Scenario::offset_exchange_rate() const {
    return rates_per_edge ? rate_offset * static_cast<double>(edges.size()) : rate_offset;
}

std::vector<std::pair<int, int>> Scenario::links() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [i, j] : edges) {
        const std::pair<int, int> link{std::min(i, j), std::max(i, j)};
        if (std::find(out.begin(), out.end(), link) == out.end()) out.push_back(link);
    }
    return out;
}

SyncGraph Scenario::link_graph() const { return SyncGraph{nodes - 1, links()}; }

void validate(const Scenario& sc) {
    if (sc.nodes < 2) throw ConfigError("nodes: at least two nodes are required");
    if (sc.edges.empty()) throw ConfigError("edges: at least one edge is required");
    for (const auto& [i, j] : sc.edges) {
        if (i < 0 || j < 0 || i >= sc.nodes || j >= sc.nodes)
            throw ConfigError("edges: edge " + std::to_string(i) + "-" + std::to_string(j) + " out of range");
        if (i == j) throw ConfigError("edges: self-loop at node " + std::to_string(i));
    }
    try {
        validate(sc.link_graph());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("edges: ") + e.what());
    }
    if (static_cast<int>(sc.clocks.size()) != sc.nodes) throw ConfigError("clock parameters missing for some node");
    for (std::size_t m = 0; m < sc.clocks.size(); ++m) {
        try {
            validate(sc.clocks[m]);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("node " + std::to_string(m) + ": " + e.what());
        }
        if (sc.clocks[m].alpha != sc.clocks[0].alpha) throw ConfigError("alpha convention violated");
    }
    try {
        validate(sc.delay);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("delay: ") + e.what());
    }
    if (!(sc.dt > 0.0)) throw ConfigError("dt: must be positive");
    if (!(sc.horizon > 0.0)) throw ConfigError("horizon: must be positive");
    if (!(sc.rate_skew > 0.0)) throw ConfigError("rates.skew: must be positive");
    if (!(sc.rate_offset > 0.0)) throw ConfigError("rates.offset: must be positive");
    if (sc.skew_exchange_rate() * sc.dt > 1.0 || sc.offset_exchange_rate() * sc.dt > 1.0)
        throw ConfigError("rates: more than one exchange per grid step");
    if (sc.sep_skew < 1) throw ConfigError("separations.skew: must be at least one grid step");
    if (sc.sep_roundtrip < 1) throw ConfigError("separations.roundtrip: must be at least one grid step");
    if (!(sc.noise_floor >= 0.0)) throw ConfigError("noise.floor: must be non-negative");
    if (!(sc.ss_forgetting > 0.0 && sc.ss_forgetting <= 1.0)) throw ConfigError("ss.forgetting: must be in (0, 1]");
    if (!(sc.timeout_factor > 0.0)) throw ConfigError("mac.timeout_factor: must be positive");
    if (!(sc.replay_accuracy >= 0.0)) throw ConfigError("replay.accuracy: must be non-negative");
    if (!(sc.degrade_period > 0.0)) throw ConfigError("degrade.period: must be positive");
    if (!(sc.degrade_sigma2 > 0.0)) throw ConfigError("degrade.sigma2: must be positive");
}

Settings read_settings(std::istream& is) {
    Settings out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto body = std::string(csv::trim(line));
        if (body.empty() || body.front() == '#' || body.front() == ';') continue;
        if (body.front() == '[') {
            if (body.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = std::string(csv::trim(std::string_view(body).substr(1, body.size() - 2)));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const auto key = std::string(csv::trim(std::string_view(body).substr(0, eq)));
        auto value = std::string(csv::trim(std::string_view(body).substr(eq + 1)));
        // trailing comments
        if (const auto hash = value.find(" #"); hash != std::string::npos) value = std::string(csv::trim(value.substr(0, hash)));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

Settings read_settings_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    return read_settings(in);
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + text + "' is not of the form key=value");
    return {std::string(csv::trim(std::string_view(text).substr(0, eq))),
            std::string(csv::trim(std::string_view(text).substr(eq + 1)))};
}

std::vector<std::pair<int, int>> parse_edges(const std::string& text) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& item : csv::split(text, ',')) {
        if (item.empty()) continue;
        const auto dash = item.find('-');
        if (dash == std::string::npos) throw ConfigError("edges: expected i-j, got '" + item + "'");
        try {
            edges.emplace_back(static_cast<int>(csv::parse_int(item.substr(0, dash))),
                               static_cast<int>(csv::parse_int(item.substr(dash + 1))));
        } catch (const std::invalid_argument&) {
            throw ConfigError("edges: expected i-j, got '" + item + "'");
        }
    }
    return edges;
}

namespace {

double number(const std::string& key, const std::string& value) {
    try {
        const double x = csv::parse_double(value);
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite");
        return x;
    } catch (const std::invalid_argument&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

long long integer(const std::string& key, const std::string& value) {
    try {
        return csv::parse_int(value);
    } catch (const std::invalid_argument&) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
}

bool boolean(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

}  // namespace

Scenario build_scenario(const Settings& settings) {
    Scenario sc;
    double alpha = 10.0;
    double epsilon = 1.0;
    std::map<int, double> node_eps;
    bool spread_full = false;
    bool have_edges = false;

    for (const auto& [key, value] : settings) {
        if (key == "nodes") {
            sc.nodes = static_cast<int>(integer(key, value));
        } else if (key == "edges") {
            sc.edges = parse_edges(value);
            have_edges = true;
        } else if (key == "alpha") {
            alpha = number(key, value);
        } else if (key == "epsilon") {
            epsilon = number(key, value);
        } else if (key.rfind("epsilon_", 0) == 0) {
            const auto idx = integer(key, key.substr(8));
            node_eps[static_cast<int>(idx)] = number(key, value);
        } else if (key == "dt") {
            sc.dt = number(key, value);
        } else if (key == "horizon") {
            sc.horizon = number(key, value);
        } else if (key == "protocol") {
            sc.protocol = parse_protocol(value);
        } else if (key == "seed") {
            const auto s = integer(key, value);
            if (s < 0) throw ConfigError("seed: must be non-negative");
            sc.seed = static_cast<std::uint64_t>(s);
        } else if (key == "delay.kind") {
            try {
                sc.delay.kind = parse_delay_kind(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("delay.kind: ") + e.what());
            }
        } else if (key == "delay.mean") {
            sc.delay.mean = number(key, value);
        } else if (key == "delay.spread") {
            if (value == "full") {
                spread_full = true;
            } else {
                spread_full = false;
                sc.delay.spread = number(key, value);
            }
        } else if (key == "delay.bound") {
            sc.delay.bound = number(key, value);
        } else if (key == "rates.skew") {
            sc.rate_skew = number(key, value);
        } else if (key == "rates.offset") {
            sc.rate_offset = number(key, value);
        } else if (key == "rates.per_edge") {
            sc.rates_per_edge = boolean(key, value);
        } else if (key == "separations.skew") {
            sc.sep_skew = static_cast<int>(integer(key, value));
        } else if (key == "separations.roundtrip") {
            sc.sep_roundtrip = static_cast<int>(integer(key, value));
        } else if (key == "noise.floor") {
            sc.noise_floor = number(key, value);
        } else if (key == "ss.forgetting") {
            sc.ss_forgetting = number(key, value);
        } else if (key == "mac.timeout_factor") {
            sc.timeout_factor = number(key, value);
        } else if (key == "replay.accuracy") {
            sc.replay_accuracy = number(key, value);
        } else if (key == "degrade.period") {
            sc.degrade_period = number(key, value);
        } else if (key == "degrade.sigma2") {
            sc.degrade_sigma2 = number(key, value);
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }

    if (spread_full) sc.delay.spread = sc.delay.mean;
    if (!have_edges) {
        // default: every node linked to the reference in both directions
        for (int m = 1; m < sc.nodes; ++m) {
            sc.edges.emplace_back(0, m);
            sc.edges.emplace_back(m, 0);
        }
    }
    if (sc.nodes < 2) throw ConfigError("nodes: at least two nodes are required");
    sc.clocks.assign(sc.nodes, ClockParams{alpha, epsilon});
    sc.clocks[0].epsilon = 0.0;  // reference clock unless overridden
    for (const auto& [idx, eps] : node_eps) {
        if (idx < 0 || idx >= sc.nodes) throw ConfigError("epsilon_" + std::to_string(idx) + ": no such node");
        sc.clocks[idx].epsilon = eps;
    }
    validate(sc);
    return sc;
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
    Settings settings = path.empty() ? Settings{} : read_settings_file(path);
    for (const auto& text : overrides) {
        auto [key, value] = parse_override(text);
        settings[key] = value;
    }
    return build_scenario(settings);
}

}  // namespace clocksync
