#include "clocksync/protocol.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "clocksync/csv.hpp"

namespace clocksync {

std::string to_string(PacketKind kind) {
    switch (kind) {
        case PacketKind::skew0: return "skew0";
        case PacketKind::skew1: return "skew1";
        case PacketKind::skew_ack: return "skew_ack";
        case PacketKind::offset_fwd: return "offset_fwd";
        case PacketKind::offset_rev: return "offset_rev";
        case PacketKind::offset_ack: return "offset_ack";
    }
    return "?";
}

PacketKind parse_packet_kind(const std::string& name) {
    if (name == "skew0") return PacketKind::skew0;
    if (name == "skew1") return PacketKind::skew1;
    if (name == "skew_ack") return PacketKind::skew_ack;
    if (name == "offset_fwd") return PacketKind::offset_fwd;
    if (name == "offset_rev") return PacketKind::offset_rev;
    if (name == "offset_ack") return PacketKind::offset_ack;
    throw std::invalid_argument("unknown packet kind '" + name + "'");
}

void write_trace_header(std::ostream& os) { os << "kind,src,dst,seq,s_stamp,r_stamp,true_send_t,true_delay\n"; }

void write_trace_line(std::ostream& os, const Packet& p) {
    auto optional = [](double x) { return std::isnan(x) ? std::string() : csv::format_sig(x, 12); };
    os << to_string(p.kind) << ',' << p.src << ',' << p.dst << ',' << p.seq << ',' << csv::format_sig(p.s, 12) << ','
       << csv::format_sig(p.r, 12) << ',' << optional(p.true_send) << ',' << optional(p.true_delay) << '\n';
}

void write_trace(std::ostream& os, const std::vector<Packet>& trace) {
    write_trace_header(os);
    for (const auto& p : trace) write_trace_line(os, p);
}

std::vector<Packet> read_trace(std::istream& is) {
    std::vector<Packet> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto body = csv::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (body.rfind("kind,", 0) == 0) continue;
        const auto f = csv::split(body);
        const auto where = "line " + std::to_string(lineno) + ": ";
        if (f.size() != 6 && f.size() != 8) throw std::invalid_argument(where + "expected 6 or 8 fields");
        try {
            Packet p;
            p.kind = parse_packet_kind(f[0]);
            p.src = static_cast<int>(csv::parse_int(f[1]));
            p.dst = static_cast<int>(csv::parse_int(f[2]));
            const auto seq = csv::parse_int(f[3]);
            if (p.src < 0 || p.dst < 0 || seq < 0) throw std::invalid_argument("negative node or sequence number");
            p.seq = static_cast<std::uint64_t>(seq);
            p.s = csv::parse_double(f[4]);
            p.r = csv::parse_double(f[5]);
            if (!std::isfinite(p.s) || !std::isfinite(p.r)) throw std::invalid_argument("non-finite stamp");
            if (f.size() == 8) {
                if (!f[6].empty()) p.true_send = csv::parse_double(f[6]);
                if (!f[7].empty()) p.true_delay = csv::parse_double(f[7]);
            }
            out.push_back(p);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
    }
    return out;
}

Estimator::Estimator(const Scenario& sc)
    : protocol_(sc.protocol),
      clocks_(sc.clocks),
      delay_(sc.delay),
      noise_floor_(sc.noise_floor),
      ss_lambda_(1.0 - sc.ss_forgetting),
      graph_(sc.link_graph()) {
    validate(graph_);
    const auto links = graph_.edges.size();
    for (std::size_t l = 0; l < links; ++l) link_of_[graph_.edges[l]] = static_cast<int>(l);
    net_ = make_network_filter(clocks_);
    node_stamp_.assign(clocks_.size(), 0.0);
    for (const auto& [lo, hi] : graph_.edges)
        link_filters_.push_back(make_pairwise_filter(relative_params(clocks_[lo], clocks_[hi])));
    link_stamp_.assign(links, 0.0);
    ss_mean_.assign(links, 0.0);
    ss_weight_.assign(links, 0.0);
    link_log_skew_.assign(links, 0.0);
    v_log_skew_.assign(clocks_.size(), 0.0);
    link_offset_.assign(links, 0.0);
    v_offset_.assign(clocks_.size(), 0.0);
}

int Estimator::link_index(int a, int b) const {
    const auto it = link_of_.find({std::min(a, b), std::max(a, b)});
    if (it == link_of_.end())
        throw std::invalid_argument("no link between " + std::to_string(a) + " and " + std::to_string(b));
    return it->second;
}

void Estimator::propagate(int i, int j, double stamp_i, double stamp_j) {
    if (protocol_ == Protocol::mbcsp) {
        for (const auto& [node, stamp] : {std::pair{i, stamp_i}, std::pair{j, stamp_j}}) {
            if (node == 0 || !(stamp > node_stamp_[node])) continue;
            net_predict_node(net_, node, stamp - node_stamp_[node]);
            node_stamp_[node] = stamp;
        }
    } else if (protocol_ == Protocol::hybrid) {
        const int l = link_index(i, j);
        // the link filter runs on the clock of its higher-numbered endpoint
        const double owner_stamp = std::max(i, j) == i ? stamp_i : stamp_j;
        if (owner_stamp > link_stamp_[l]) {
            link_filters_[l] = predict(link_filters_[l], owner_stamp - link_stamp_[l]);
            link_stamp_[l] = owner_stamp;
        }
    }
}

double Estimator::relative_skew(int i, int j, double stamp_i, double stamp_j, double t) {
    propagate(i, j, stamp_i, stamp_j);
    switch (protocol_) {
        case Protocol::mbcsp: return relative_skew_readout(net_, i, j, t).a_ij_sym;
        case Protocol::hybrid: {
            const auto& f = link_filters_[link_index(i, j)];
            const double log_lo_hi = f.rel.log_c_ij(t) + f.x_hat;
            return std::exp(i < j ? log_lo_hi : -log_lo_hi);
        }
        case Protocol::ss: {
            const double mean = ss_mean_[link_index(i, j)];
            return std::exp(i < j ? mean : -mean);
        }
    }
    return 1.0;
}

double Estimator::smooth_node(std::vector<double>& v, const std::vector<double>& rel, int node) const {
    v[node] = jacobi_step(node, v, graph_, rel);
    return v[node];
}

double Estimator::nodal_skew_at(int node, double t) const {
    if (node == 0) return 1.0;
    if (protocol_ == Protocol::mbcsp) return nodal_skew_estimate(net_, node, t);
    return std::exp(v_log_skew_[node]);
}

double Estimator::nodal_skew(int node) const { return nodal_skew_at(node, node_stamp_.at(node)); }

void Estimator::skew_update(int i, int j, const StampRecord& rec, double t_k, EstimatorEvent& ev) {
    const double s0 = rec.s[0], s1 = rec.s[1], r0 = rec.r[0], r1 = rec.r[1];

    // receipt-time prediction with the estimate held before this measurement
    const double a_hat = relative_skew(i, j, s1, std::max(r0, r1), t_k);
    const double err = std::abs(r1 - predict_receipt(s0, r0, s1, a_hat));
    ev.predictions = {{i, err}, {j, err}};

    const double sigma2 = noise_variance(s1 - s0, delay_, noise_floor_);
    const Measurement m = skew_measurement(rec, relative_params(clocks_[i], clocks_[j]), t_k, sigma2);

    if (protocol_ == Protocol::mbcsp) {
        net_ = net_update_distributed(net_, m);
    } else {
        const int l = link_index(i, j);
        const double sign = i < j ? 1.0 : -1.0;
        if (protocol_ == Protocol::hybrid) {
            auto& f = link_filters_[l];
            f = update(f, Measurement{graph_.edges[l].first, graph_.edges[l].second, t_k, sign * m.y, sigma2});
            link_log_skew_[l] = f.rel.log_c_ij(t_k) + f.x_hat + 0.5 * f.P;  // log a_hat(lo, hi)
        } else {
            const double x = sign * std::log(std::abs((r1 - r0) / (s1 - s0)));
            ss_weight_[l] = ss_lambda_ * ss_weight_[l] + 1.0;
            ss_mean_[l] += (x - ss_mean_[l]) / ss_weight_[l];
            link_log_skew_[l] = ss_mean_[l];
        }
        for (const int node : {i, j})
            if (node != 0) smooth_node(v_log_skew_, link_log_skew_, node);
    }

    for (const int node : {i, j})
        if (node != 0) ev.skews.emplace_back(node, nodal_skew_at(node, t_k));
    ev.skew_update = true;
}

EstimatorEvent Estimator::on_packet(const Packet& p) {
    EstimatorEvent ev;
    if (p.src < 0 || p.dst < 0 || p.src >= static_cast<int>(clocks_.size()) ||
        p.dst >= static_cast<int>(clocks_.size()) || p.src == p.dst) {
        throw std::invalid_argument("packet between invalid nodes " + std::to_string(p.src) + " -> " +
                                    std::to_string(p.dst));
    }
    switch (p.kind) {
        case PacketKind::skew0:
        case PacketKind::skew1: {
            // either packet of a pair may arrive first; the pair completes on the later one
            auto& pair = skew_pairs_[p.seq];
            (p.kind == PacketKind::skew0 ? pair.first : pair.second) = PendingFirst{p.src, p.dst, p.s, p.r};
            if (!pair.first || !pair.second) break;
            const PendingFirst first = *pair.first, second = *pair.second;
            skew_pairs_.erase(p.seq);
            if (first.src != second.src || first.dst != second.dst) {
                ev.skipped = true;
                break;
            }
            StampRecord rec;
            rec.i = first.src;
            rec.j = first.dst;
            rec.kind = StampRecord::Kind::skew_pair;
            rec.s = {first.s, second.s};
            rec.r = {first.r, second.r};
            ev.out_of_order = rec.r[1] < rec.r[0];
            if (!(rec.s[1] > rec.s[0]) || rec.r[1] == rec.r[0]) {
                ev.skipped = true;
                break;
            }
            // epoch proxy: reference time when the sender is the reference, else the later receipt stamp
            const double t_k = rec.i == 0 ? rec.s[0] : std::max(rec.r[0], rec.r[1]);
            skew_update(rec.i, rec.j, rec, t_k, ev);
            break;
        }
        case PacketKind::skew_ack:
            break;
        case PacketKind::offset_fwd:
            offset_fwd_[p.seq] = {p.src, p.dst, p.s, p.r};
            break;
        case PacketKind::offset_rev: {
            const auto it = offset_fwd_.find(p.seq);
            if (it == offset_fwd_.end() || it->second.src != p.dst || it->second.dst != p.src) {
                ev.skipped = true;
                break;
            }
            const int i = p.dst, j = p.src;
            StampRecord rec;
            rec.i = i;
            rec.j = j;
            rec.kind = StampRecord::Kind::offset_roundtrip;
            rec.s = {it->second.s, p.s};
            rec.r = {it->second.r, p.r};
            offset_fwd_.erase(it);
            const double a_ij = relative_skew(i, j, p.r, p.s, p.r);
            const OffsetEstimate est = offset_delay_estimate(rec, a_ij, 1.0 / a_ij);
            const int l = link_index(i, j);
            link_offset_[l] = i < j ? est.tau_ij : est.tau_ji;
            offset_done_[p.seq] = est.tau_ij;
            if (i != 0) ev.offsets.emplace_back(i, smooth_node(v_offset_, link_offset_, i));
            ev.offset_update = true;
            break;
        }
        case PacketKind::offset_ack: {
            const auto it = offset_done_.find(p.seq);
            if (it == offset_done_.end()) {
                ev.skipped = true;
                break;
            }
            offset_done_.erase(it);
            if (p.dst != 0) ev.offsets.emplace_back(p.dst, smooth_node(v_offset_, link_offset_, p.dst));
            ev.offset_update = true;
            break;
        }
    }
    return ev;
}

}  // namespace clocksync
