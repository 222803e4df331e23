#include "clocksync/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace clocksync {

void validate(const SyncGraph& g) {
    if (g.n < 1) throw std::invalid_argument("graph needs at least one non-reference node");
    std::vector<int> parent(g.n + 1);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [i, j] : g.edges) {
        if (i < 0 || j < 0 || i > g.n || j > g.n)
            throw std::invalid_argument("edge " + std::to_string(i) + "-" + std::to_string(j) + " out of range");
        if (i == j) throw std::invalid_argument("self-loop at node " + std::to_string(i));
        parent[find(i)] = find(j);
    }
    const int root = find(0);
    for (int m = 1; m <= g.n; ++m)
        if (find(m) != root) throw std::invalid_argument("graph not connected");
}

Eigen::MatrixXd reduced_incidence(const SyncGraph& g) {
    validate(g);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.edges.size()), g.n);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto [i, j] = g.edges[e];
        if (i > 0) B(static_cast<Eigen::Index>(e), i - 1) = -1.0;
        if (j > 0) B(static_cast<Eigen::Index>(e), j - 1) = 1.0;
    }
    return B;
}

std::vector<double> blue_solve(const SyncGraph& g, const std::vector<double>& rel) {
    if (rel.size() != g.edges.size()) throw std::invalid_argument("one relative estimate per edge is required");
    const Eigen::MatrixXd B = reduced_incidence(g);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(rel.data(), static_cast<Eigen::Index>(rel.size()));
    const Eigen::LLT<Eigen::MatrixXd> llt(B.transpose() * B);
    if (llt.info() != Eigen::Success) throw std::runtime_error("normal equations are singular");
    const Eigen::VectorXd v = llt.solve(B.transpose() * x);
    std::vector<double> out(g.n + 1, 0.0);
    for (int m = 1; m <= g.n; ++m) out[m] = v[m - 1];
    return out;
}

double jacobi_step(int i, const std::vector<double>& v, const SyncGraph& g, const std::vector<double>& rel) {
    if (i <= 0 || i > g.n) throw std::invalid_argument("jacobi step needs a non-reference node");
    if (v.size() != static_cast<std::size_t>(g.n + 1)) throw std::invalid_argument("value vector size mismatch");
    if (rel.size() != g.edges.size()) throw std::invalid_argument("one relative estimate per edge is required");
    double sum = 0.0;
    int degree = 0;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto [a, b] = g.edges[e];
        if (b == i) {
            sum += v[a] + rel[e];  // v_i ~ v_a + x_ai
        } else if (a == i) {
            sum += v[b] - rel[e];  // v_i ~ v_b - x_ib
        } else {
            continue;
        }
        ++degree;
    }
    if (degree == 0) throw std::invalid_argument("node " + std::to_string(i) + " is isolated");
    return sum / degree;
}

SmoothResult smooth(const SyncGraph& g, const std::vector<double>& rel, const SmoothOptions& opts,
                    const std::vector<double>& init) {
    validate(g);
    if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    SmoothResult res;
    res.values = init.empty() ? std::vector<double>(g.n + 1, 0.0) : init;
    if (res.values.size() != static_cast<std::size_t>(g.n + 1))
        throw std::invalid_argument("initial value vector size mismatch");
    res.values[0] = 0.0;
    if (std::isinf(opts.tol)) {
        res.converged = true;
        return res;
    }

    std::mt19937_64 rng(opts.seed);
    std::vector<int> order(g.n);
    std::iota(order.begin(), order.end(), 1);

    while (res.iterations < opts.max_iter) {
        ++res.iterations;
        double max_change = 0.0;
        if (opts.schedule == Schedule::random) std::shuffle(order.begin(), order.end(), rng);
        for (const int node : order) {
            const double next = jacobi_step(node, res.values, g, rel);
            max_change = std::max(max_change, std::abs(next - res.values[node]));
            res.values[node] = next;
        }
        if (max_change < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace clocksync
