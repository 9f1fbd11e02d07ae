#pragma once

#include <cmath>
#include <vector>

#include "rsmdp/example22.hpp"
#include "rsmdp/model.hpp"
#include "rsmdp/simulate.hpp"

namespace fixtures {

using rsmdp::Mdp;

// Single absorbing state, one action, constant cost c.
inline Mdp single_state(double c = 1.0) {
    return Mdp({"s"}, {"a"}, {{0}}, {{c}}, {{{1.0}}});
}

// Two states, single action each: state 1 falls into absorbing state 0
// with probability q, cost = state index.
inline Mdp two_state(double q = 0.5) {
    return Mdp({"0", "1"}, {"a"}, {{0}, {0}}, {{0.0}, {1.0}},
               {{{1.0, 0.0}}, {{q, 1.0 - q}}});
}

// Variant of the built-in three-state fixture where state 2 is absorbing,
// so it can never reach state 0: the uniform-hitting-time check must fail
// with state 2 as the witness.
inline Mdp example22_absorbing_tail(double rho) {
    std::vector<std::vector<std::vector<double>>> kernel = {
        {{1.0, 0.0, 0.0}},
        {{1.0 - rho, rho, 0.0}, {0.0, 0.0, 1.0}},
        {{0.0, 0.0, 1.0}},
    };
    return Mdp({"0", "1", "2"}, {"0", "1"}, {{0}, {0, 1}, {0}}, {{0.0}, {1.0, 1.0}, {2.0}},
               std::move(kernel));
}

// Model with every action's row carrying mass to every state (dense) plus a
// guaranteed 0.2 floor into state 0, so the uniform hitting-time bound holds
// under every policy.  Costs are drawn from [-1, 1].  Deterministic in seed.
inline Mdp random_doeblin(std::uint64_t seed, int n_states = 4, int n_actions = 2) {
    rsmdp::SplitMix64 rng(seed);
    std::vector<std::string> states, actions;
    for (int x = 0; x < n_states; ++x) states.push_back("s" + std::to_string(x));
    for (int a = 0; a < n_actions; ++a) actions.push_back("a" + std::to_string(a));
    std::vector<std::vector<int>> admissible(n_states);
    std::vector<std::vector<double>> cost(n_states);
    std::vector<std::vector<std::vector<double>>> kernel(n_states);
    for (int x = 0; x < n_states; ++x) {
        for (int a = 0; a < n_actions; ++a) {
            admissible[x].push_back(a);
            cost[x].push_back(2.0 * rng.uniform() - 1.0);
            std::vector<double> row(n_states);
            double total = 0.0;
            for (int y = 0; y < n_states; ++y) {
                row[y] = 0.05 + rng.uniform(); // bounded away from zero
                total += row[y];
            }
            for (int y = 0; y < n_states; ++y) row[y] = 0.8 * row[y] / total;
            row[0] += 0.2;
            kernel[x].push_back(std::move(row));
        }
    }
    return Mdp(std::move(states), std::move(actions), std::move(admissible), std::move(cost),
               std::move(kernel));
}

} // namespace fixtures
