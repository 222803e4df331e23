// Primary-interference MAC: transmissions starting in the same mini-slot may
// only proceed if they form a matching (no node takes part in two of them,
// whether as sender or receiver).
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "clocksync/rng.hpp"

namespace clocksync {

/// Greedy admission in uniformly random order. Returns one flag per pending
/// transmission (src, dst); non-admitted transmissions are collisions.
std::vector<bool> mac_arbitrate(std::span<const std::pair<int, int>> pending, Rng& rng);

/// True if the flagged transmissions share no endpoint.
bool is_matching(std::span<const std::pair<int, int>> pending, const std::vector<bool>& admitted);

}  // namespace clocksync
