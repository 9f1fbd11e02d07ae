#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsmdp/errors.hpp"

namespace rsmdp {

// Probability rows must sum to 1 within this tolerance.  Rows are never
// renormalized: silent renormalization masks modeling bugs.
inline constexpr double kRowSumTol = 1e-10;

// Default cap on exhaustive policy enumeration.
inline constexpr std::uint64_t kDefaultPolicyCap = 1000000;

// Risk sensitivity coefficient; only the risk-averse range lambda > 0 is
// supported.
class RiskCoefficient {
public:
    explicit RiskCoefficient(double value);
    double value() const { return value_; }

private:
    double value_;
};

// Deterministic stationary policy: one admissible action index per state.
struct StationaryPolicy {
    std::vector<int> choice;
    bool operator==(const StationaryPolicy&) const = default;
};

// Real vector indexed by states.  +infinity marks an entry explicitly
// flagged divergent; everything else is finite.
using ValueFunction = std::vector<double>;

// Finite controlled Markov chain with one cost per admissible state-action
// pair.  States and actions are dense integer indices internally; the
// original string identifiers are kept for file round-trips and reports.
// Immutable after construction, safe to share across workers.
class Mdp {
public:
    // cost[x][j] and kernel[x][j] correspond to admissible[x][j], so the
    // pair set K is exactly what the vectors describe.  Kernel rows have
    // one entry per state.  Throws ModelError naming the offending
    // state/action on any invariant violation.
    Mdp(std::vector<std::string> states, std::vector<std::string> actions,
        std::vector<std::vector<int>> admissible,
        std::vector<std::vector<double>> cost,
        std::vector<std::vector<std::vector<double>>> kernel);

    int num_states() const { return static_cast<int>(states_.size()); }
    int num_actions() const { return static_cast<int>(actions_.size()); }
    const std::string& state_name(int x) const { return states_[x]; }
    const std::string& action_name(int a) const { return actions_[a]; }
    std::optional<int> state_index(const std::string& name) const;
    std::optional<int> action_index(const std::string& name) const;

    // Admissible action indices at x, sorted ascending.
    const std::vector<int>& admissible(int x) const { return admissible_[x]; }
    bool is_admissible(int x, int a) const;

    double cost(int x, int a) const { return cost_[x][slot(x, a)]; }
    // Kernel row p_x.(a), one probability per state.
    const std::vector<double>& row(int x, int a) const { return kernel_[x][slot(x, a)]; }
    // States y with p_xy(a) > 0, sorted ascending.
    const std::vector<int>& support(int x, int a) const { return support_[x][slot(x, a)]; }

    // max |C(x,a)| over admissible pairs.
    double max_cost_norm() const { return cnorm_; }

    bool operator==(const Mdp&) const = default;

private:
    int slot(int x, int a) const; // position of a within admissible(x)

    std::vector<std::string> states_;
    std::vector<std::string> actions_;
    std::vector<std::vector<int>> admissible_;
    std::vector<std::vector<double>> cost_;
    std::vector<std::vector<std::vector<double>>> kernel_;
    std::vector<std::vector<std::vector<int>>> support_;
    std::vector<std::vector<int>> slot_; // slot_[x][a] = index into admissible_[x], or -1
    double cnorm_ = 0.0;
};

// Parses and validates a JSON model document (see README for the schema).
// Missing transition entries mean probability zero.  Throws ModelError with
// the offending state/action named.
Mdp load_model(const std::string& json_text);

// Emits the canonical JSON document for a model; load_model(serialize_model(m))
// reproduces m exactly.  Zero transition probabilities are omitted.
std::string serialize_model(const Mdp& m);

// |F| = prod_x |A(x)|.  Throws BudgetError when the count exceeds cap.
std::uint64_t policy_count(const Mdp& m, std::uint64_t cap = kDefaultPolicyCap);

// k-th policy in lexicographic order: state 0 is the most significant digit
// and actions vary in admissible order, so policy 0 picks the lowest action
// everywhere.
StationaryPolicy policy_at(const Mdp& m, std::uint64_t k);

// Streams all stationary policies in the same order as policy_at(0..|F|-1)
// without materializing the list.
class PolicyEnumerator {
public:
    explicit PolicyEnumerator(const Mdp& m);
    // Fills `out` and returns true, or returns false when exhausted.
    bool next(StationaryPolicy& out);

private:
    const Mdp* m_;
    std::vector<int> digit_; // per-state position within admissible(x)
    bool exhausted_ = false;
    bool started_ = false;
};

} // namespace rsmdp
