#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rsmdp/model.hpp"

namespace rsmdp {

// States reachable from x (including x) along positive-probability
// transitions under f; sorted ascending.
std::vector<int> reachable_set(const Mdp& m, const StationaryPolicy& f, int x);

// Maximal strongly connected components of a digraph given as adjacency
// lists over vertices 0..n-1, in topological order of the condensation
// (sources first).  Each component is sorted ascending.
std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj);

// Expected first positive arrival time E_x[T_z] under f for every start x.
// Entries are +infinity where the chain avoids z forever with positive
// probability; the finite part solves the one-step linear system by direct
// elimination.
ValueFunction expected_hitting_time(const Mdp& m, const StationaryPolicy& f, int z);

// Simultaneous Doeblin condition report: sup over policies and start states
// of E_x^f[T_z].
struct DoeblinReport {
    bool pass = false;
    std::optional<double> bound_M;                // the sup, when finite
    std::optional<StationaryPolicy> worst_policy; // witness with E = inf, when !pass
    std::optional<int> worst_state;
    std::uint64_t policies_checked = 0;
};

// Exhaustive check over all stationary policies (cap guards the product
// |F|; exceeding it raises BudgetError rather than subsampling).  The
// witness reported on failure is the first in enumeration order.
DoeblinReport check_doeblin(const Mdp& m, int z, std::uint64_t policy_cap = kDefaultPolicyCap);

// Square nonnegative matrix over a recorded subset of model states.
struct NonnegativeMatrix {
    std::vector<int> states;      // row/column labels, size n
    std::vector<double> entries;  // row-major, size n*n
    int size() const { return static_cast<int>(states.size()); }
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * states.size() + j]; }
};

// Spectral radius to relative tolerance 1e-10: per-SCC shifted power
// iteration (shift removes periodicity) carried out in log space; the zero
// matrix returns 0.
double spectral_radius(const NonnegativeMatrix& q);

// Same computation on log-domain entries (-infinity encodes a zero entry);
// returns log of the spectral radius, -infinity for the zero matrix.  This
// is the overflow-safe form used for twisted kernels e^{lambda C} p.
double log_spectral_radius(int n, const std::vector<double>& log_entries);

// Geometric tail envelope for the arrival time: P_x[T >= k] <= beta0 *
// beta^k for k = 0..|S| (for this policy only; no uniformity over policies
// is claimed).  beta is the spectral radius of the taboo matrix, < 1
// whenever the precondition holds.
struct TailBound {
    double beta0 = 1.0;
    double beta = 0.0;
};

// Precondition: expected_hitting_time(m, f, z) is finite everywhere (throws
// PreconditionError otherwise).  When beta = 0 (z reached in one step
// surely) the envelope degenerates; beta0 = 1 covers every k except k = 1,
// where P[T >= 1] = 1 by definition.
TailBound tail_bound(const Mdp& m, const StationaryPolicy& f, int z);

} // namespace rsmdp
