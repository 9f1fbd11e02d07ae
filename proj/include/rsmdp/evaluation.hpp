#pragma once

#include <utility>
#include <vector>

#include "rsmdp/model.hpp"

namespace rsmdp {

// Finite distribution of a scalar cost: (value, probability) pairs.
// Probabilities must be nonnegative and sum to 1 within kRowSumTol.
using FiniteCostDistribution = std::vector<std::pair<double, double>>;

// Certain equivalent (1/lambda) log E[e^{lambda Y}], computed by
// log-sum-exp.  Monotone in lambda; adding a constant to Y adds it to the
// result.
double certain_equivalent(RiskCoefficient lambda, const FiniteCostDistribution& y);

// Horizons beyond this are rejected (dense per-epoch storage).
inline constexpr int kMaxHorizon = 100000;

// Randomized Markov policy over a finite horizon: one probability row over
// admissible actions per (epoch, state).
struct MarkovPolicy {
    // rows[t][x][j] = probability of admissible(x)[j] at epoch t.
    std::vector<std::vector<std::vector<double>>> rows;

    int horizon() const { return static_cast<int>(rows.size()); }

    // Embeds a stationary policy as constant-in-t deterministic rows.
    static MarkovPolicy stationary(const Mdp& m, const StationaryPolicy& f, int horizon);

    // Throws ModelError if some row is not a distribution over admissible
    // actions or the horizon exceeds kMaxHorizon.
    void validate(const Mdp& m) const;
};

// n-step certain equivalent J_n of the accumulated cost under pi, for every
// start state, by backward recursion carried entirely in log space.  The
// epoch-t row weighs the step taken with n-1-t steps remaining.
ValueFunction finite_horizon_cost(const Mdp& m, const MarkovPolicy& pi, RiskCoefficient lambda,
                                  int n);
ValueFunction finite_horizon_cost(const Mdp& m, const StationaryPolicy& f, RiskCoefficient lambda,
                                  int n);

// Long-run risk-sensitive average of a stationary policy:
// J(lambda, f, x) = (1/lambda) log sp(Q_f restricted to the set reachable
// from x), with Q_f(x,y) = e^{lambda C(x,f(x))} p_xy(f(x)).  The spectral
// radius is taken in log space, per reachable SCC.
ValueFunction long_run_average(const Mdp& m, const StationaryPolicy& f, RiskCoefficient lambda);

// Diagnostic pair (J_n(x)/n, J(x)) confirming that the finite-horizon rate
// approaches the Perron-root value (|J_n/n - J| = O(log n / n)).
std::pair<double, double> verify_growth(const Mdp& m, const StationaryPolicy& f,
                                        RiskCoefficient lambda, int x, int n);

} // namespace rsmdp
