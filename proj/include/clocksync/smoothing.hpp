// Least-squares smoothing of relative (per-edge) estimates x_ij ~ v_j - v_i
// into nodal values v with v_0 = 0: the direct normal-equation solve and the
// asynchronous Jacobi / Gauss-Seidel iteration that converges to it.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace clocksync {

struct SyncGraph {
    int n = 0;  ///< number of non-reference nodes; nodes are 0..n
    std::vector<std::pair<int, int>> edges;  ///< directed (i, j)

    int node_count() const { return n + 1; }
};

/// Throws "graph not connected" or std::invalid_argument for bad edges.
void validate(const SyncGraph& g);

/// |E| x n matrix, row per edge with -1 at i and +1 at j; the reference column is dropped.
Eigen::MatrixXd reduced_incidence(const SyncGraph& g);

/// Least-squares nodal values; result has n+1 entries with v[0] = 0.
std::vector<double> blue_solve(const SyncGraph& g, const std::vector<double>& rel);

/// Jacobi value of node i: (1/d_i) sum over incident edges of (v_nbr +/- x_edge).
double jacobi_step(int i, const std::vector<double>& v, const SyncGraph& g, const std::vector<double>& rel);

enum class Schedule { sweep, random };

struct SmoothOptions {
    double tol = 1e-9;
    int max_iter = 100000;
    Schedule schedule = Schedule::random;
    std::uint64_t seed = 1;
};

struct SmoothResult {
    std::vector<double> values;
    int iterations = 0;
    bool converged = false;
};

/// Repeats sweeps (every node once, in index or shuffled order) until the
/// largest change in a sweep is below tol. Starts from `init` or zeros.
SmoothResult smooth(const SyncGraph& g, const std::vector<double>& rel, const SmoothOptions& opts = {},
                    const std::vector<double>& init = {});

}  // namespace clocksync
