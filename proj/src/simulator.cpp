#include "clocksync/simulator.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "clocksync/csv.hpp"
#include "clocksync/mac.hpp"

namespace clocksync {

namespace {

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += std::abs(a[k] - b[k]);
    return sum / static_cast<double>(a.size());
}

double mean_abs_from(const std::vector<double>& a, double c) {
    double sum = 0.0;
    for (const double x : a) sum += std::abs(x - c);
    return sum / static_cast<double>(a.size());
}

double mean_of(const std::vector<double>& a) {
    double sum = 0.0;
    for (const double x : a) sum += x;
    return sum / static_cast<double>(a.size());
}

}  // namespace

double MetricsReport::mean_offset_mae() const {
    double s = 0.0;
    for (std::size_t m = 1; m < nodes.size(); ++m) s += nodes[m].offset_mae;
    return nodes.size() > 1 ? s / static_cast<double>(nodes.size() - 1) : 0.0;
}

double MetricsReport::mean_skew_mae() const {
    double s = 0.0;
    for (std::size_t m = 1; m < nodes.size(); ++m) s += nodes[m].skew_mae;
    return nodes.size() > 1 ? s / static_cast<double>(nodes.size() - 1) : 0.0;
}

double MetricsReport::mean_offset_nosync() const {
    double s = 0.0;
    for (std::size_t m = 1; m < nodes.size(); ++m) s += nodes[m].offset_nosync;
    return nodes.size() > 1 ? s / static_cast<double>(nodes.size() - 1) : 0.0;
}

double MetricsReport::mean_skew_nosync() const {
    double s = 0.0;
    for (std::size_t m = 1; m < nodes.size(); ++m) s += nodes[m].skew_nosync;
    return nodes.size() > 1 ? s / static_cast<double>(nodes.size() - 1) : 0.0;
}

double MetricsReport::mean_pred_mae() const {
    double s = 0.0;
    int count = 0;
    for (const auto& n : nodes) {
        if (n.pred_samples == 0) continue;
        s += n.pred_mae;
        ++count;
    }
    return count ? s / count : 0.0;
}

MetricsReport compute_metrics(const std::vector<NodeSeries>& series) {
    MetricsReport report;
    for (const auto& s : series) {
        if (!s.offset_truth.empty() && s.offset_truth.size() != s.offset_est.size())
            throw std::invalid_argument("length mismatch");
        if (!s.skew_truth.empty() && s.skew_truth.size() != s.skew_est.size())
            throw std::invalid_argument("length mismatch");

        NodeMetrics m;
        m.offset_samples = s.offset_est.size();
        m.skew_samples = s.skew_est.size();
        m.pred_samples = s.pred_error.size();
        if (!s.offset_est.empty()) {
            m.offset_est_mean_abs = mean_abs_from(s.offset_est, 0.0);
            m.offset_mae = s.offset_truth.empty() ? NAN : mean_abs_diff(s.offset_est, s.offset_truth);
            m.offset_nosync = s.offset_truth.empty() ? NAN : mean_abs_from(s.offset_truth, 0.0);
        }
        if (!s.skew_est.empty()) {
            m.skew_est_mean = mean_of(s.skew_est);
            m.skew_mae = s.skew_truth.empty() ? NAN : mean_abs_diff(s.skew_est, s.skew_truth);
            m.skew_nosync = s.skew_truth.empty() ? NAN : mean_abs_from(s.skew_truth, 1.0);
        }
        if (!s.pred_error.empty()) m.pred_mae = mean_abs_from(s.pred_error, 0.0);
        report.nodes.push_back(m);
    }
    return report;
}

void write_metrics_csv(std::ostream& os, const MetricsReport& report) {
    os << "node,offset_mae,skew_mae,pred_mae,offset_nosync,skew_nosync,"
          "offset_est_mean_abs,skew_est_mean,offset_samples,skew_samples,pred_samples\n";
    for (std::size_t k = 0; k < report.nodes.size(); ++k) {
        const auto& m = report.nodes[k];
        os << k << ',' << csv::format(m.offset_mae) << ',' << csv::format(m.skew_mae) << ','
           << csv::format(m.pred_mae) << ',' << csv::format(m.offset_nosync) << ',' << csv::format(m.skew_nosync)
           << ',' << csv::format(m.offset_est_mean_abs) << ',' << csv::format(m.skew_est_mean) << ','
           << m.offset_samples << ',' << m.skew_samples << ',' << m.pred_samples << '\n';
    }
}

double quantize_stamp(double value, double accuracy) {
    double v = csv::round_sig12(value);
    if (accuracy > 0.0) v = csv::round_sig12(std::nearbyint(v / accuracy) * accuracy);
    return v;
}

namespace {

// Ground-truth clock advanced lazily; off-grid readings are interpolated
// linearly between neighbouring grid points.
class TruthClock {
public:
    TruthClock(const ClockParams& p, double dt, std::uint64_t seed) : clock_(p, dt, seed) {}

    struct Reading {
        double display;
        double skew;
    };

    Reading at(double t) {
        while (clock_.time() < t) {
            prev_display_ = clock_.display();
            prev_skew_ = clock_.skew();
            clock_.step();
        }
        if (t == clock_.time() || clock_.index() == 0) return {clock_.display(), clock_.skew()};
        const double w = (t - (clock_.time() - clock_.dt())) / clock_.dt();
        if (w < 0.0) throw std::logic_error("time went backwards");
        return {prev_display_ + w * (clock_.display() - prev_display_), prev_skew_ + w * (clock_.skew() - prev_skew_)};
    }

private:
    ClockStepper clock_;
    double prev_display_ = 0.0;
    double prev_skew_ = 1.0;
};

struct Transmission {
    PacketKind kind;
    int src;
    int dst;
    std::uint64_t seq;
};

struct Arrival {
    double t;
    std::uint64_t order;
    Packet packet;
    bool operator>(const Arrival& o) const { return t != o.t ? t > o.t : order > o.order; }
};

class Engine {
public:
    explicit Engine(const Scenario& sc)
        : sc_(sc),
          est_(sc),
          sched_rng_(stream_seed(sc.seed, 1)),
          delay_rng_(stream_seed(sc.seed, 2)),
          mac_rng_(stream_seed(sc.seed, 3)),
          series_(sc.nodes) {
        for (int m = 0; m < sc.nodes; ++m) clocks_.emplace_back(sc.clocks[m], sc.dt, stream_seed(sc.seed, 100 + m));
    }

    RunResult run() {
        const auto last_slot = static_cast<std::int64_t>(std::llround(sc_.horizon / sc_.dt));
        std::geometric_distribution<std::int64_t> skew_gap(sc_.skew_exchange_rate() * sc_.dt);
        std::geometric_distribution<std::int64_t> offset_gap(sc_.offset_exchange_rate() * sc_.dt);
        std::uniform_int_distribution<std::size_t> pick_edge(0, sc_.edges.size() - 1);
        std::int64_t next_skew = 1 + skew_gap(sched_rng_);
        std::int64_t next_offset = 1 + offset_gap(sched_rng_);
        const double timeout = sc_.timeout_factor * sc_.delay.mean;

        for (;;) {
            std::int64_t slot = std::min(next_skew, next_offset);
            if (!scheduled_.empty()) slot = std::min(slot, scheduled_.begin()->first);
            if (slot > last_slot) break;
            const double t_slot = static_cast<double>(slot) * sc_.dt;
            // deliveries first: they may schedule replies earlier than `slot`
            if (!arrivals_.empty() && arrivals_.top().t <= t_slot) {
                Arrival a = arrivals_.top();
                arrivals_.pop();
                deliver(a.t, a.packet);
                continue;
            }

            std::vector<Transmission> txs;
            if (auto it = scheduled_.find(slot); it != scheduled_.end()) {
                txs = std::move(it->second);
                scheduled_.erase(it);
            }
            if (next_skew == slot) {
                const auto [i, j] = sc_.edges[pick_edge(sched_rng_)];
                const auto seq = next_seq_++;
                deadline_[seq] = t_slot + sc_.sep_skew * sc_.dt + timeout;
                txs.push_back({PacketKind::skew0, i, j, seq});
                scheduled_[slot + sc_.sep_skew].push_back({PacketKind::skew1, i, j, seq});
                next_skew += 1 + skew_gap(sched_rng_);
            }
            if (next_offset == slot) {
                const auto [i, j] = sc_.edges[pick_edge(sched_rng_)];
                const auto seq = next_seq_++;
                deadline_[seq] = t_slot + sc_.sep_roundtrip * sc_.dt + timeout;
                txs.push_back({PacketKind::offset_fwd, i, j, seq});
                next_offset += 1 + offset_gap(sched_rng_);
            }
            transmit(slot, txs);
        }
        deliver_until(sc_.horizon);

        RunResult result;
        result.report = compute_metrics(series_);
        result.report.packets_sent = sent_;
        result.report.packets_delivered = trace_.size();
        result.report.collisions = collisions_;
        result.report.timeouts = timeouts_;
        result.report.out_of_order = out_of_order_;
        result.report.skipped = skipped_;
        result.trace = std::move(trace_);
        return result;
    }

private:
    void transmit(std::int64_t slot, const std::vector<Transmission>& txs) {
        if (txs.empty()) return;
        std::vector<std::pair<int, int>> links;
        links.reserve(txs.size());
        for (const auto& tx : txs) links.emplace_back(tx.src, tx.dst);
        const auto admitted = mac_arbitrate(links, mac_rng_);
        const double t_slot = static_cast<double>(slot) * sc_.dt;
        for (std::size_t k = 0; k < txs.size(); ++k) {
            ++sent_;
            if (!admitted[k]) {
                ++collisions_;
                continue;
            }
            const auto& tx = txs[k];
            Packet p;
            p.kind = tx.kind;
            p.src = tx.src;
            p.dst = tx.dst;
            p.seq = tx.seq;
            p.s = quantize_stamp(clocks_[tx.src].at(t_slot).display, sc_.replay_accuracy);
            p.true_send = t_slot;
            p.true_delay = draw_delay(sc_.delay, delay_rng_);
            arrivals_.push({t_slot + p.true_delay, arrival_order_++, p});
        }
    }

    void deliver_until(double t_limit) {
        while (!arrivals_.empty() && arrivals_.top().t <= t_limit) {
            Arrival a = arrivals_.top();
            arrivals_.pop();
            deliver(a.t, a.packet);
        }
    }

    void deliver(double t, Packet p) {
        if (t > deadline_.at(p.seq)) {
            ++timeouts_;
            return;
        }
        p.r = quantize_stamp(clocks_[p.dst].at(t).display, sc_.replay_accuracy);
        // keep the recorded ground truth at the trace's precision
        p.true_send = csv::round_sig12(p.true_send);
        p.true_delay = csv::round_sig12(p.true_delay);
        trace_.push_back(p);

        const EstimatorEvent ev = est_.on_packet(p);
        if (ev.out_of_order) ++out_of_order_;
        if (ev.skipped) ++skipped_;
        for (const auto& [node, a_hat] : ev.skews) {
            series_[node].skew_est.push_back(a_hat);
            series_[node].skew_truth.push_back(clocks_[node].at(t).skew);
        }
        for (const auto& [node, v] : ev.offsets) {
            series_[node].offset_est.push_back(v);
            series_[node].offset_truth.push_back(clocks_[node].at(t).display - t);
        }
        for (const auto& [node, err] : ev.predictions) series_[node].pred_error.push_back(err);

        const auto next_slot = static_cast<std::int64_t>(std::floor(t / sc_.dt)) + 1;
        if (ev.skew_update) scheduled_[next_slot].push_back({PacketKind::skew_ack, p.dst, p.src, p.seq});
        switch (p.kind) {
            case PacketKind::offset_fwd: {
                const auto reply = static_cast<std::int64_t>(std::ceil(t / sc_.dt)) + sc_.sep_roundtrip;
                scheduled_[reply].push_back({PacketKind::offset_rev, p.dst, p.src, p.seq});
                break;
            }
            case PacketKind::offset_rev:
                if (ev.offset_update) scheduled_[next_slot].push_back({PacketKind::offset_ack, p.dst, p.src, p.seq});
                break;
            default:
                break;
        }
    }

    const Scenario& sc_;
    Estimator est_;
    Rng sched_rng_;
    Rng delay_rng_;
    Rng mac_rng_;
    std::vector<TruthClock> clocks_;
    std::vector<NodeSeries> series_;
    std::map<std::int64_t, std::vector<Transmission>> scheduled_;
    std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> arrivals_;
    std::map<std::uint64_t, double> deadline_;
    std::vector<Packet> trace_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t arrival_order_ = 0;
    std::size_t sent_ = 0, collisions_ = 0, timeouts_ = 0, out_of_order_ = 0, skipped_ = 0;
};

}  // namespace

RunResult run_scenario(const Scenario& sc) {
    validate(sc);
    return Engine(sc).run();
}

MetricsReport run_protocol_ss(Scenario sc) {
    sc.protocol = Protocol::ss;
    return run_scenario(sc).report;
}

MetricsReport run_protocol_hybrid(Scenario sc) {
    sc.protocol = Protocol::hybrid;
    return run_scenario(sc).report;
}

MetricsReport run_protocol_mbcsp(Scenario sc) {
    sc.protocol = Protocol::mbcsp;
    return run_scenario(sc).report;
}

MetricsReport trace_replay(const std::vector<Packet>& trace, const Scenario& sc) {
    validate(sc);
    Estimator est(sc);
    std::vector<NodeSeries> series(sc.nodes);
    MetricsReport tail;
    for (const auto& p : trace) {
        if (p.src >= sc.nodes || p.dst >= sc.nodes)
            throw std::invalid_argument("trace references node beyond the scenario's " + std::to_string(sc.nodes));
        const EstimatorEvent ev = est.on_packet(p);
        if (ev.out_of_order) ++tail.out_of_order;
        if (ev.skipped) ++tail.skipped;
        for (const auto& [node, a_hat] : ev.skews) series[node].skew_est.push_back(a_hat);
        for (const auto& [node, v] : ev.offsets) series[node].offset_est.push_back(v);
        for (const auto& [node, err] : ev.predictions) series[node].pred_error.push_back(err);
    }
    MetricsReport report = compute_metrics(series);
    report.packets_delivered = trace.size();
    report.out_of_order = tail.out_of_order;
    report.skipped = tail.skipped;
    return report;
}

std::vector<DegradeRow> run_degrade(const Scenario& sc) {
    validate(sc);
    const double T = sc.degrade_period;
    const auto steps = static_cast<std::size_t>(std::llround(sc.horizon / T));
    Rng truth_rng(stream_seed(sc.seed, 4));
    Rng pick_rng(stream_seed(sc.seed, 5));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_edge(0, sc.edges.size() - 1);

    std::vector<double> x(sc.nodes, 0.0);
    NetworkFilterState opt = make_network_filter(sc.clocks);
    NetworkFilterState dist = opt;
    const double noise_sd = std::sqrt(sc.degrade_sigma2);

    std::vector<DegradeRow> rows;
    rows.reserve(steps);
    for (std::size_t k = 1; k <= steps; ++k) {
        for (int m = 0; m < sc.nodes; ++m) x[m] = ou_step_exact(x[m], T, sc.clocks[m], normal(truth_rng));
        opt = net_predict(opt, T);
        dist = net_predict(dist, T);
        const auto [i, j] = sc.edges[pick_edge(pick_rng)];
        const double t = static_cast<double>(k) * T;
        const Measurement m{i, j, t, x[j] - x[i] + noise_sd * normal(truth_rng), sc.degrade_sigma2};
        opt = net_update_optimal(opt, m);
        dist = net_update_distributed(dist, m);
        rows.push_back({t, opt.P.trace(), dist.P.trace()});
    }
    return rows;
}

void write_degrade_csv(std::ostream& os, const std::vector<DegradeRow>& rows) {
    os << "t,trace_opt,trace_dist,ratio\n";
    for (const auto& r : rows)
        os << csv::format(r.t) << ',' << csv::format(r.trace_opt) << ',' << csv::format(r.trace_dist) << ','
           << csv::format(r.ratio()) << '\n';
}

}  // namespace clocksync
