#include "rsmdp/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "rsmdp/chain_analysis.hpp"
#include "rsmdp/errors.hpp"
#include "rsmdp/evaluation.hpp"
#include "rsmdp/numeric.hpp"
#include "rsmdp/simulate.hpp"

namespace rsmdp {

namespace {

void require_value_function(const Mdp& m, const ValueFunction& g, const char* what) {
    if (static_cast<int>(g.size()) != m.num_states())
        throw PreconditionError(std::string(what) + " has " + std::to_string(g.size()) +
                                " entries for a model with " + std::to_string(m.num_states()) +
                                " states");
    for (int x = 0; x < m.num_states(); ++x)
        if (!std::isfinite(g[x]))
            throw PreconditionError(std::string(what) + " is not finite at state '" +
                                    m.state_name(x) + "'");
}

void require_state(const Mdp& m, int z) {
    if (z < 0 || z >= m.num_states())
        throw PreconditionError("state index " + std::to_string(z) + " out of range");
}

// One application of the restricted dynamic-programming bracket at x:
// min over the allowed actions of C(x,a) + (1/lambda) log sum_y p_xy(a) e^{lambda u(y)}.
double restricted_bracket(const Mdp& m, double lambda, const std::vector<int>& allowed, int x,
                          const ValueFunction& u) {
    double best = kInf;
    for (int a : allowed) {
        const auto& p = m.row(x, a);
        LogSumExp acc;
        for (int y : m.support(x, a)) acc.add(std::log(p[y]) + lambda * u[y]);
        double val = m.cost(x, a) + acc.value() / lambda;
        best = std::min(best, val);
    }
    return best;
}

} // namespace

ActionRestriction action_restriction(const Mdp& m, const ValueFunction& g) {
    require_value_function(m, g, "value function");
    const std::vector<int> level = snap_levels(g);
    ActionRestriction restriction(m.num_states());
    for (int x = 0; x < m.num_states(); ++x) {
        int best = std::numeric_limits<int>::max();
        std::vector<std::pair<int, int>> reach; // (max level over support, action)
        for (int a : m.admissible(x)) {
            int top = 0;
            for (int y : m.support(x, a)) top = std::max(top, level[y]);
            reach.emplace_back(top, a);
            best = std::min(best, top);
        }
        if (best != level[x])
            throw ContradictionError("min-max equation fails at state '" + m.state_name(x) +
                                     "': best reachable level " + std::to_string(best) +
                                     " differs from the state's own level " +
                                     std::to_string(level[x]));
        for (const auto& [top, a] : reach)
            if (top <= level[x]) restriction[x].push_back(a);
    }
    return restriction;
}

Certificate check_membership(const Mdp& m, RiskCoefficient lambda, const ValueFunction& g, int z,
                             const IterationConfig& config) {
    require_value_function(m, g, "candidate g");
    require_state(m, z);
    const int n = m.num_states();
    const double lam = lambda.value();

    Certificate cert;
    cert.g = g;
    MinMaxCheck minmax = verify_minmax(m, g);
    cert.minmax_ok = minmax.ok;
    if (!minmax.ok) return cert; // not certifiable; inconclusive, never a refutation
    cert.restriction = action_restriction(m, g);

    // Witness search: iterate u <- T u from u = 0, where
    //   T u(x) = min_{a in B_g(x)} (C(x,a) - g(x)) + (1/lambda) log sum_y p_xy(a) e^{lambda u(y)}.
    // T is monotone and shifts commute (T(u + c) = T u + c), so certification
    // only needs SOME iterate with T u <= u + tol pointwise: that iterate is
    // itself a witness, and a convergent run is the special case with ~zero
    // slack.  Iterates are re-anchored at z each step, which changes nothing
    // about T u - u but keeps them bounded when the whole vector drifts.
    ValueFunction u(n, 0.0), tu(n, 0.0);
    auto apply = [&](const ValueFunction& in, ValueFunction& out) {
        for (int x = 0; x < n; ++x)
            out[x] = restricted_bracket(m, lam, cert.restriction[x], x, in) - g[x];
    };
    for (long it = 1; it <= config.max_iter; ++it) {
        apply(u, tu);
        double worst = kNegInf; // largest violation of T u <= u
        for (int x = 0; x < n; ++x) worst = std::max(worst, tu[x] - u[x]);
        cert.report.iterations = it;
        cert.report.residual = worst;
        if (worst <= config.tol) {
            cert.status = CertStatus::certified;
            cert.report.converged = true;
            cert.h = u;
            cert.residuals.resize(n);
            for (int x = 0; x < n; ++x) cert.residuals[x] = u[x] - tu[x];
            return cert;
        }
        double anchor = tu[z];
        bool blown = false;
        for (int x = 0; x < n; ++x) {
            u[x] = tu[x] - anchor;
            if (std::abs(u[x]) > config.divergence_cap) blown = true;
        }
        if (blown) {
            cert.report.diverged = true;
            break;
        }
    }
    // Inconclusive: report the last iterate and its slack for diagnosis.
    apply(u, tu);
    cert.h = u;
    cert.residuals.resize(n);
    for (int x = 0; x < n; ++x) cert.residuals[x] = u[x] - tu[x];
    return cert;
}

ValueFunction construct_g_alpha(const ValueFunction& jstar, double cnorm, double alpha) {
    ValueFunction g(jstar.size());
    for (std::size_t x = 0; x < jstar.size(); ++x) g[x] = alpha * jstar[x] + (1.0 - alpha) * cnorm;
    return g;
}

DeviationResult deviation_function(const Mdp& m, RiskCoefficient lambda, double alpha,
                                   const ValueFunction& jstar, int z,
                                   const IterationConfig& config) {
    require_value_function(m, jstar, "jstar");
    require_state(m, z);
    if (!(alpha > 0.0 && alpha < 1.0))
        throw PreconditionError("damping alpha must lie strictly inside (0, 1), got " +
                                std::to_string(alpha));
    const int n = m.num_states();
    const double la = lambda.value() * alpha;
    const ActionRestriction restriction = action_restriction(m, jstar);

    // Fixed point of the damped excursion operator, in cost units:
    //   h(x) = min_{b in B*(x)} (1/(lambda alpha)) log[ e^{lambda alpha (C(x,b) - jstar(x))}
    //            (p_xz(b) + sum_{y != z} p_xy(b) e^{lambda alpha h(y)}) ],
    // i.e. the arrival at z ends the excursion with no further weight.
    DeviationResult out;
    ValueFunction h(n, 0.0), nh(n, 0.0);
    for (long it = 1; it <= config.max_iter; ++it) {
        bool blown = false;
        for (int x = 0; x < n; ++x) {
            double best = kInf;
            for (int b : restriction[x]) {
                const auto& p = m.row(x, b);
                LogSumExp acc;
                for (int y : m.support(x, b))
                    acc.add(y == z ? std::log(p[y]) : std::log(p[y]) + la * h[y]);
                double val = (m.cost(x, b) - jstar[x]) + acc.value() / la;
                best = std::min(best, val);
            }
            nh[x] = best;
            if (std::abs(best) > config.divergence_cap) blown = true;
        }
        double change = sup_distance(nh, h);
        h = nh;
        out.report.iterations = it;
        out.report.residual = change;
        if (blown) {
            out.report.diverged = true;
            break;
        }
        if (change < config.tol) {
            out.report.converged = true;
            break;
        }
    }
    out.h = h;
    out.h_raw.resize(n);
    for (int x = 0; x < n; ++x) out.h_raw[x] = alpha * h[x];

    if (out.report.converged) {
        // Guarantees that hold whenever the model mixes to z under every
        // policy: the excursion value is finite everywhere and nonpositive
        // at the reference state itself.
        for (int x = 0; x < n; ++x)
            if (!std::isfinite(h[x]))
                throw ContradictionError("deviation function is not finite at state '" +
                                         m.state_name(x) + "'");
        if (h[z] > 1e-9)
            throw ContradictionError("deviation function is " + std::to_string(h[z]) +
                                     " > 0 at the reference state '" + m.state_name(z) + "'");
    }
    return out;
}

PolicyExtraction extract_policy(const Mdp& m, RiskCoefficient lambda, const Certificate& cert) {
    if (cert.status != CertStatus::certified)
        throw PreconditionError("extract_policy requires a certified certificate");
    const int n = m.num_states();
    const double lam = lambda.value();

    PolicyExtraction out;
    out.policy.choice.resize(n);
    for (int x = 0; x < n; ++x) {
        double best = kInf;
        int pick = -1;
        for (int a : cert.restriction[x]) {
            const auto& p = m.row(x, a);
            LogSumExp acc;
            for (int y : m.support(x, a)) acc.add(std::log(p[y]) + lam * cert.h[y]);
            double val = m.cost(x, a) + acc.value() / lam;
            if (val < best) { // strict: keeps the lowest action index on ties
                best = val;
                pick = a;
            }
        }
        out.policy.choice[x] = pick;
    }
    out.bound_check = long_run_average(m, out.policy, lambda);
    for (int x = 0; x < n; ++x)
        if (!(out.bound_check[x] <= cert.g[x] + 1e-8))
            throw ContradictionError(
                "extracted policy's long-run average " + std::to_string(out.bound_check[x]) +
                " exceeds the certified bound " + std::to_string(cert.g[x]) + " at state '" +
                m.state_name(x) + "'");
    return out;
}

bool monotone_trajectory_check(const Mdp& m, const ValueFunction& g, const StationaryPolicy& f,
                               int x, int horizon, int paths, std::uint64_t seed) {
    require_value_function(m, g, "value function");
    require_state(m, x);
    for (int i = 0; i < paths; ++i) {
        Trajectory traj = sample_trajectory(m, f, x, horizon, substream(seed, i).next());
        for (std::size_t t = 0; t + 1 < traj.states.size(); ++t)
            if (g[traj.states[t + 1]] > g[traj.states[t]] + 1e-12) return false;
    }
    return true;
}

Theorem35Report verify_theorem35(const Mdp& m, RiskCoefficient lambda, int z,
                                 const std::vector<double>& alphas,
                                 const IterationConfig& config) {
    require_state(m, z);
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0))
            throw PreconditionError("alpha grid entry " + std::to_string(a) +
                                    " lies outside (0, 1)");

    Theorem35Report rep;
    OptimalSolution opt = optimal_average(m, lambda);
    rep.jstar = opt.jstar;
    rep.cnorm = m.max_cost_norm();
    rep.alphas = alphas;

    double worst_drop = kNegInf; // max_x (cnorm - jstar)
    for (double j : rep.jstar) worst_drop = std::max(worst_drop, rep.cnorm - j);

    rep.all_certified = true;
    for (double alpha : alphas) {
        ValueFunction g = construct_g_alpha(rep.jstar, rep.cnorm, alpha);
        Certificate cert = check_membership(m, lambda, g, z, config);
        if (cert.status != CertStatus::certified)
            throw ContradictionError("g_alpha failed to certify at alpha = " +
                                     std::to_string(alpha) +
                                     "; the certificate family must contain every g_alpha");
        double gap = kNegInf;
        for (int x = 0; x < m.num_states(); ++x) gap = std::max(gap, g[x] - rep.jstar[x]);
        double predicted = (1.0 - alpha) * worst_drop;
        if (std::abs(gap - predicted) > 1e-9)
            throw ContradictionError("gap " + std::to_string(gap) + " at alpha = " +
                                     std::to_string(alpha) + " does not match the affine form " +
                                     std::to_string(predicted));
        rep.max_gaps.push_back(gap);
        rep.certificates.push_back(std::move(cert));
    }

    // Gap monotonicity is read along increasing alpha regardless of the
    // order the grid was supplied in.
    std::vector<std::size_t> order(alphas.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return alphas[i] < alphas[j]; });
    rep.gaps_monotone = true;
    for (std::size_t k = 1; k < order.size(); ++k)
        if (rep.max_gaps[order[k]] > rep.max_gaps[order[k - 1]] + 1e-12) rep.gaps_monotone = false;
    return rep;
}

} // namespace rsmdp
