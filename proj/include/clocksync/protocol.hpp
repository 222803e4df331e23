// Protocol estimators driven purely by delivered, time-stamped packets. The
// same Estimator runs inside the live simulator and in trace replay, so a
// replayed trace reproduces the live estimates exactly.
//
// Exchanges (seq identifies one exchange):
//   skew pair:  skew0, skew1 (i -> j, sep_skew grid steps apart), skew_ack (j -> i)
//   round trip: offset_fwd (i -> j), offset_rev (j -> i), offset_ack (i -> j)
//
// Protocols:
//   mbcsp  - shared network filter state, each node's component propagated
//            by its own clock, distributed (two-endpoint) updates
//   hybrid - one pairwise filter per undirected link, nodal skews by smoothing
//   ss     - exponentially forgetting average of the log skew ratio per link,
//            nodal skews by smoothing
// All protocols share the two-way offset estimator and offset smoothing.
#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clocksync/measurement.hpp"
#include "clocksync/network_filter.hpp"
#include "clocksync/pairwise_filter.hpp"
#include "clocksync/scenario.hpp"
#include "clocksync/smoothing.hpp"

namespace clocksync {

enum class PacketKind { skew0, skew1, skew_ack, offset_fwd, offset_rev, offset_ack };

std::string to_string(PacketKind kind);
PacketKind parse_packet_kind(const std::string& name);

/// One delivered packet: stamps are local clock readings (sender / receiver).
struct Packet {
    PacketKind kind = PacketKind::skew0;
    int src = 0;
    int dst = 1;
    std::uint64_t seq = 0;
    double s = 0.0;
    double r = 0.0;
    double true_send = NAN;   ///< reference send time (simulation only)
    double true_delay = NAN;  ///< reference delay (simulation only)
};

/// Header `kind,src,dst,seq,s_stamp,r_stamp,true_send_t,true_delay`; numbers
/// with 12 significant digits, unknown ground truth left blank.
void write_trace_header(std::ostream& os);
void write_trace_line(std::ostream& os, const Packet& p);
void write_trace(std::ostream& os, const std::vector<Packet>& trace);
/// Throws std::invalid_argument("line N: ...") on malformed input.
std::vector<Packet> read_trace(std::istream& is);

/// What one packet did to the estimates.
struct EstimatorEvent {
    std::vector<std::pair<int, double>> skews;    ///< (node, nodal skew estimate) refreshed
    std::vector<std::pair<int, double>> offsets;  ///< (node, nodal offset estimate) refreshed
    std::vector<std::pair<int, double>> predictions;  ///< (node, |r1 - predicted r1|)
    bool skew_update = false;
    bool offset_update = false;
    bool out_of_order = false;
    bool skipped = false;  ///< exchange incomplete or degenerate
};

class Estimator {
public:
    explicit Estimator(const Scenario& sc);

    EstimatorEvent on_packet(const Packet& p);

    Protocol protocol() const { return protocol_; }
    /// Current nodal estimates (skew at the node's last local stamp).
    double nodal_skew(int node) const;
    double nodal_offset(int node) const { return v_offset_.at(node); }
    const NetworkFilterState& network_state() const { return net_; }
    const std::vector<PairwiseFilterState>& link_filters() const { return link_filters_; }

private:
    struct PendingFirst {  // one stamped packet awaiting its partner
        int src, dst;
        double s, r;
    };

    int link_index(int a, int b) const;
    /// Symmetrized relative skew a_ij (receiver units per sender unit) at the
    /// given stamps, after propagating the estimator to them.
    double relative_skew(int i, int j, double stamp_i, double stamp_j, double t);
    void propagate(int i, int j, double stamp_i, double stamp_j);
    void skew_update(int i, int j, const StampRecord& rec, double t_k, EstimatorEvent& ev);
    double nodal_skew_at(int node, double t) const;
    double smooth_node(std::vector<double>& v, const std::vector<double>& rel, int node) const;

    Protocol protocol_;
    std::vector<ClockParams> clocks_;
    DelayModel delay_;
    double noise_floor_;
    double ss_lambda_;
    SyncGraph graph_;  // undirected links oriented min -> max
    std::map<std::pair<int, int>, int> link_of_;

    // mbcsp
    NetworkFilterState net_;
    std::vector<double> node_stamp_;  // last local stamp each node's component was propagated to
    // hybrid
    std::vector<PairwiseFilterState> link_filters_;
    std::vector<double> link_stamp_;
    // ss
    std::vector<double> ss_mean_;
    std::vector<double> ss_weight_;
    // hybrid / ss nodal skews by smoothing of per-link log skews
    std::vector<double> link_log_skew_;
    std::vector<double> v_log_skew_;
    // offsets (all protocols)
    std::vector<double> link_offset_;  // tau_max - tau_min
    std::vector<double> v_offset_;

    std::map<std::uint64_t, std::pair<std::optional<PendingFirst>, std::optional<PendingFirst>>> skew_pairs_;
    std::map<std::uint64_t, PendingFirst> offset_fwd_;
    std::map<std::uint64_t, double> offset_done_;  // seq -> tau_ij awaiting ack
};

}  // namespace clocksync
