#pragma once

#include <cstdint>
#include <vector>

#include "rsmdp/model.hpp"
#include "rsmdp/optimal.hpp"

namespace rsmdp {

// B_g(x): the admissible actions whose transition support cannot raise the
// level of g — the "level-nonincreasing" actions.  Nonempty at every state
// when g passes the min-max check.
using ActionRestriction = std::vector<std::vector<int>>;

// Computes B_g with 1e-9 level snapping.  Throws ContradictionError naming
// the first offending state when g violates the min-max equation.
ActionRestriction action_restriction(const Mdp& m, const ValueFunction& g);

enum class CertStatus { certified, inconclusive };

// Membership certificate for the certified-value family: a value function g
// together with a finite witness h for which every state satisfies
//   e^{lambda(g(x) + h(x))} >= min_{a in B_g(x)} e^{lambda C(x,a)} sum_y p_xy(a) e^{lambda h(y)}.
// `certified` is a machine-checkable proof (residuals >= -1e-9);
// `inconclusive` is NOT a disproof — no refutation procedure exists here.
struct Certificate {
    ValueFunction g;
    CertStatus status = CertStatus::inconclusive;
    ValueFunction h;               // witness, finite when certified
    ActionRestriction restriction; // B_g
    // Per-state slack of the membership inequality at h: h - (one more
    // operator application).  Certified => every entry >= -1e-9.
    std::vector<double> residuals;
    bool minmax_ok = false;        // whether g passed the min-max equation
    SolveReport report;
};

// Semi-decision procedure for membership: verifies the min-max equation,
// then iterates T u(x) = min_{a in B_g(x)} (C(x,a) - g(x)) + (1/lambda) log sum_y p_xy(a) e^{lambda u(y)}
// from u = 0, certifying at the first iterate that satisfies T u <= u + 1e-9
// pointwise (that iterate is itself a valid witness; plain convergence is
// the special case with ~zero slack).  Hitting the divergence cap or the
// budget yields `inconclusive`.  z is carried into reports only; the
// membership conditions do not involve it.
Certificate check_membership(const Mdp& m, RiskCoefficient lambda, const ValueFunction& g, int z,
                             const IterationConfig& config = {});

// g_alpha = alpha * jstar + (1 - alpha) * cnorm, the affine certificate
// family whose infimum over alpha recovers jstar pointwise.
ValueFunction construct_g_alpha(const ValueFunction& jstar, double cnorm, double alpha);

struct DeviationResult {
    // Deviation function in cost units: (1/(lambda alpha)) log of the
    // optimal damped excursion exponential until the arrival at z.
    ValueFunction h;
    // The same quantity in the raw (1/lambda) log normalization = alpha * h;
    // emitted alongside so either convention can be read off directly.
    ValueFunction h_raw;
    SolveReport report;
};

// Deviation function for jstar at damping alpha in (0, 1): fixed point of
//   h(x) = min_{b in B*(x)} (1/(lambda alpha)) log[e^{lambda alpha (C(x,b) - jstar(x))}
//                                                   (p_xz(b) + sum_{y != z} p_xy(b) e^{lambda alpha h(y)})]
// iterated from h = 0.  When the iteration converges the results are
// checked against the guarantees that hold under the Doeblin condition:
// finite everywhere and h(z) <= 0 (+1e-9); violation of either raises
// ContradictionError.  Non-convergence is reported, not thrown.
DeviationResult deviation_function(const Mdp& m, RiskCoefficient lambda, double alpha,
                                   const ValueFunction& jstar, int z,
                                   const IterationConfig& config = {});

struct PolicyExtraction {
    StationaryPolicy policy;
    ValueFunction bound_check; // long_run_average of the extracted policy
};

// Reads a stationary policy off a certified certificate: at each state the
// restricted action minimizing the witness bracket (lowest index on ties).
// The extracted policy's long-run average is verified to satisfy
// bound_check <= g + 1e-8 pointwise; violation raises ContradictionError.
PolicyExtraction extract_policy(const Mdp& m, RiskCoefficient lambda, const Certificate& cert);

// Samples `paths` trajectories of `horizon` steps from x under f and checks
// g(X_{t+1}) <= g(X_t) + 1e-12 along every path.  For f restricted to B_g
// this must always hold; an unrestricted f is expected to fail (useful as a
// negative control), so the precondition is deliberately not enforced.
bool monotone_trajectory_check(const Mdp& m, const ValueFunction& g, const StationaryPolicy& f,
                               int x, int horizon, int paths, std::uint64_t seed);

struct Theorem35Report {
    ValueFunction jstar;
    double cnorm = 0.0;
    std::vector<double> alphas;
    std::vector<Certificate> certificates; // one per alpha
    std::vector<double> max_gaps;          // max_x (g_alpha - jstar)
    bool all_certified = false;
    bool gaps_monotone = false; // gaps nonincreasing along increasing alpha
};

inline const std::vector<double> kDefaultAlphaGrid = {0.5, 0.9, 0.99, 0.999};

// The certificate-family experiment: for each alpha, build g_alpha, certify
// its membership, and record the gap to jstar.  Every alpha must certify
// and every gap must match (1 - alpha) * max_x(cnorm - jstar(x)) within
// 1e-9 — theory guarantees both, so a miss raises ContradictionError.
// jstar is computed internally via optimal_average; callers must have
// check_doeblin passing at z.
Theorem35Report verify_theorem35(const Mdp& m, RiskCoefficient lambda, int z,
                                 const std::vector<double>& alphas = kDefaultAlphaGrid,
                                 const IterationConfig& config = {});

} // namespace rsmdp
