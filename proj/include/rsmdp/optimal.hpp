#pragma once

#include <cstdint>
#include <vector>

#include "rsmdp/model.hpp"

namespace rsmdp {

// Shared knobs for the fixed-point computations in this module and in
// certify.  Values are cost units.
struct IterationConfig {
    double tol = 1e-9;            // sup-norm / span convergence threshold
    long max_iter = 100000;       // iteration budget
    double divergence_cap = 1e6;  // iterate magnitude treated as divergent
};

// Convergence metadata attached to every fixed-point computation.
struct SolveReport {
    long iterations = 0;
    double residual = 0.0; // final change measure (sup distance or span)
    bool converged = false;
    bool diverged = false;
};

// Values equal within tol collapse to one level; returns the 0-based level
// index per state, ordered by increasing value.  Spectral radii carry
// ~1e-12 relative error, so exact float comparison would fragment levels.
std::vector<int> snap_levels(const ValueFunction& g, double tol = 1e-9);

struct FiniteHorizonSolution {
    ValueFunction value;                  // V_n
    std::vector<StationaryPolicy> policy; // minimizing decision rule per epoch t = 0..n-1
};

// Backward induction on the multiplicative recursion
// V_k(x) = min_a (1/lambda) log[e^{lambda C(x,a)} sum_y p_xy(a) e^{lambda V_{k-1}(y)}]
// with V_0 = 0, all in log space; argmin ties break to the lowest action
// index.
FiniteHorizonSolution optimal_finite_horizon(const Mdp& m, RiskCoefficient lambda, int n);

struct EnumerationOptions {
    std::uint64_t policy_cap = kDefaultPolicyCap;
    int lower_bound_horizon = 500; // N for the V_N/N cross-check
};

struct OptimalSolution {
    ValueFunction jstar;
    // per_state_policy[x] attains jstar[x]; the first such policy in
    // enumeration order, so reports are reproducible.
    std::vector<StationaryPolicy> per_state_policy;
    ValueFunction lower_bound; // V_N/N
    double gap = 0.0;          // max_x (jstar - lower_bound)
    std::uint64_t policies_enumerated = 0;
};

// J*(lambda, x) = min over stationary f of long_run_average(m, f, lambda)(x),
// by exhaustive enumeration of F.  Correctness rests on the certificate
// theory: for every eps some certified g lies within eps of J*, and the
// policy extracted from such a g is stationary with long-run value <= g;
// F is finite, so the per-state min over F attains J*.  Requires the
// simultaneous Doeblin condition (callers run check_doeblin first).
OptimalSolution optimal_average(const Mdp& m, RiskCoefficient lambda,
                                const EnumerationOptions& opts = {});

struct MinMaxCheck {
    bool ok = false;
    // g(x) - min_a max{g(y) | p_xy(a) > 0} per state, in value units.
    std::vector<double> residuals;
};

// Verifies the min-max equation g(x) = min_{a in A(x)} max{g(y) | p_xy(a) > 0}
// for every x, comparing snapped levels exactly.
MinMaxCheck verify_minmax(const Mdp& m, const ValueFunction& g);

struct LevelSets {
    std::vector<double> gammas;         // strictly increasing level values
    std::vector<std::vector<int>> sets; // states at each level
    std::vector<int> level_of;          // per-state level index
    double xi1 = 1.0;                   // min gap between consecutive levels; 1 when single level
};

// Groups jstar values equal within 1e-9 into levels.
LevelSets level_sets(const ValueFunction& jstar);

struct OptimalityEquationResult {
    bool solved = false;
    double gamma = 0.0;
    ValueFunction h;                  // normalized h(z) = 0
    double equation_residual = 0.0;   // max_x |gamma + h - (T h)(x)| on success
    SolveReport report;
    std::string diagnosis;            // reason when !solved
};

// Searches for a solution (gamma, h) of the multiplicative optimality
// equation e^{lambda(gamma + h(x))} = min_a e^{lambda C} sum p e^{lambda h}
// by relative value iteration normalized at z.  A failure report is an
// expected outcome, not an exception: for large lambda no solution exists
// on some Doeblin models, and this routine never claims non-existence.
OptimalityEquationResult solve_optimality_equation(const Mdp& m, RiskCoefficient lambda, int z,
                                                   const IterationConfig& config = {});

struct RelativeValueResult {
    ValueFunction h; // +infinity marks states whose iterates diverge
    SolveReport report;
};

// Relative value function at gain gamma via value iteration of the
// hitting-time operator
//   L u(x) = min_a (C(x,a) - gamma) + (1/lambda) log[p_xz(a) + sum_{y != z} p_xy(a) e^{lambda u(y)}]
// from u = 0.  States are flagged +infinity when their iterates exceed the
// divergence cap or keep climbing through the entire budget (the sum inside
// L then grows without bound; the flags identify exactly those states).
RelativeValueResult relative_value(const Mdp& m, RiskCoefficient lambda, double gamma, int z,
                                   const IterationConfig& config = {});

} // namespace rsmdp
