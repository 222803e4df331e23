#include "clocksync/mac.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace clocksync {

std::vector<bool> mac_arbitrate(std::span<const std::pair<int, int>> pending, Rng& rng) {
    std::vector<bool> admitted(pending.size(), false);
    if (pending.empty()) return admitted;
    std::vector<std::size_t> order(pending.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (order.size() > 1) std::shuffle(order.begin(), order.end(), rng);

    std::unordered_set<int> busy;
    for (const auto idx : order) {
        const auto [src, dst] = pending[idx];
        if (src == dst || busy.count(src) || busy.count(dst)) continue;
        busy.insert(src);
        busy.insert(dst);
        admitted[idx] = true;
    }
    return admitted;
}

bool is_matching(std::span<const std::pair<int, int>> pending, const std::vector<bool>& admitted) {
    std::unordered_set<int> used;
    for (std::size_t k = 0; k < pending.size(); ++k) {
        if (!admitted[k]) continue;
        const auto [src, dst] = pending[k];
        if (src == dst || !used.insert(src).second || !used.insert(dst).second) return false;
    }
    return true;
}

}  // namespace clocksync
