#include "rsmdp/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "rsmdp/evaluation.hpp"
#include "rsmdp/numeric.hpp"
#include "parallel.hpp"

namespace rsmdp {

std::vector<int> snap_levels(const ValueFunction& g, double tol) {
    const int n = static_cast<int>(g.size());
    for (double v : g)
        if (!std::isfinite(v)) throw PreconditionError("snap_levels: value function must be finite");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return g[a] < g[b]; });
    std::vector<int> level(n, 0);
    int current = 0;
    for (int i = 1; i < n; ++i) {
        if (g[order[i]] - g[order[i - 1]] > tol) ++current;
        level[order[i]] = current;
    }
    return level;
}

FiniteHorizonSolution optimal_finite_horizon(const Mdp& m, RiskCoefficient lambda, int n) {
    if (n < 1) throw PreconditionError("optimal_finite_horizon: n must be >= 1");
    if (n > kMaxHorizon)
        throw BudgetError("optimal_finite_horizon: horizon exceeds " + std::to_string(kMaxHorizon));
    const double lam = lambda.value();
    const int ns = m.num_states();
    FiniteHorizonSolution out;
    out.policy.assign(n, StationaryPolicy{std::vector<int>(ns, 0)});
    std::vector<double> v(ns, 0.0), v_next(ns, 0.0); // lambda * V_k
    for (int k = 1; k <= n; ++k) {
        // With k steps remaining the decision epoch is n - k.
        StationaryPolicy& rule = out.policy[n - k];
        for (int x = 0; x < ns; ++x) {
            double best = kInf;
            int best_a = -1;
            for (int a : m.admissible(x)) {
                LogSumExp acc;
                const auto& p = m.row(x, a);
                for (int y : m.support(x, a)) acc.add(std::log(p[y]) + v[y]);
                const double val = lam * m.cost(x, a) + acc.value();
                if (val < best) { // strict: ties keep the lowest action index
                    best = val;
                    best_a = a;
                }
            }
            v_next[x] = best;
            rule.choice[x] = best_a;
        }
        std::swap(v, v_next);
    }
    out.value.resize(ns);
    for (int x = 0; x < ns; ++x) out.value[x] = v[x] / lam;
    return out;
}

OptimalSolution optimal_average(const Mdp& m, RiskCoefficient lambda,
                                const EnumerationOptions& opts) {
    const std::uint64_t total = policy_count(m, opts.policy_cap);
    const int ns = m.num_states();

    struct ChunkResult {
        std::uint64_t begin = 0;
        std::vector<double> best;
        std::vector<std::uint64_t> best_index;
    };
    std::vector<ChunkResult> results;
    std::mutex results_mu;

    parallel_chunks(total, [&](unsigned, std::uint64_t begin, std::uint64_t end) {
        ChunkResult local;
        local.begin = begin;
        local.best.assign(ns, kInf);
        local.best_index.assign(ns, 0);
        for (std::uint64_t idx = begin; idx < end; ++idx) {
            const StationaryPolicy f = policy_at(m, idx);
            const ValueFunction j = long_run_average(m, f, lambda);
            for (int x = 0; x < ns; ++x)
                if (j[x] < local.best[x]) { // first attaining policy wins ties
                    local.best[x] = j[x];
                    local.best_index[x] = idx;
                }
        }
        std::lock_guard<std::mutex> lock(results_mu);
        results.push_back(std::move(local));
    });

    std::sort(results.begin(), results.end(),
              [](const ChunkResult& a, const ChunkResult& b) { return a.begin < b.begin; });

    OptimalSolution sol;
    sol.jstar.assign(ns, kInf);
    std::vector<std::uint64_t> argmin(ns, 0);
    for (const ChunkResult& r : results)
        for (int x = 0; x < ns; ++x)
            if (r.best[x] < sol.jstar[x]) {
                sol.jstar[x] = r.best[x];
                argmin[x] = r.best_index[x];
            }
    sol.per_state_policy.reserve(ns);
    for (int x = 0; x < ns; ++x) sol.per_state_policy.push_back(policy_at(m, argmin[x]));
    sol.policies_enumerated = total;

    const int N = opts.lower_bound_horizon;
    const ValueFunction vn = optimal_finite_horizon(m, lambda, N).value;
    sol.lower_bound.resize(ns);
    sol.gap = 0.0;
    for (int x = 0; x < ns; ++x) {
        sol.lower_bound[x] = vn[x] / N;
        sol.gap = std::max(sol.gap, sol.jstar[x] - sol.lower_bound[x]);
    }
    return sol;
}

MinMaxCheck verify_minmax(const Mdp& m, const ValueFunction& g) {
    const int ns = m.num_states();
    if (static_cast<int>(g.size()) != ns)
        throw PreconditionError("verify_minmax: value function size mismatch");
    const std::vector<int> level = snap_levels(g);
    MinMaxCheck check;
    check.ok = true;
    check.residuals.assign(ns, 0.0);
    for (int x = 0; x < ns; ++x) {
        int best_level = std::numeric_limits<int>::max();
        double best_value = kInf;
        for (int a : m.admissible(x)) {
            int max_level = -1;
            double max_value = kNegInf;
            for (int y : m.support(x, a)) {
                max_level = std::max(max_level, level[y]);
                max_value = std::max(max_value, g[y]);
            }
            best_level = std::min(best_level, max_level);
            best_value = std::min(best_value, max_value);
        }
        check.residuals[x] = g[x] - best_value;
        if (level[x] != best_level) check.ok = false;
    }
    return check;
}

LevelSets level_sets(const ValueFunction& jstar) {
    LevelSets ls;
    ls.level_of = snap_levels(jstar);
    const int d1 = *std::max_element(ls.level_of.begin(), ls.level_of.end()) + 1;
    ls.sets.assign(d1, {});
    ls.gammas.assign(d1, kInf);
    for (int x = 0; x < static_cast<int>(jstar.size()); ++x) {
        ls.sets[ls.level_of[x]].push_back(x);
        ls.gammas[ls.level_of[x]] = std::min(ls.gammas[ls.level_of[x]], jstar[x]);
    }
    if (d1 == 1) {
        ls.xi1 = 1.0;
    } else {
        ls.xi1 = kInf;
        for (int i = 1; i < d1; ++i) ls.xi1 = std::min(ls.xi1, ls.gammas[i] - ls.gammas[i - 1]);
    }
    return ls;
}

namespace {

// One application of the minimizing dynamic-programming operator
// (T w)(x) = min_a (1/lambda)[lambda C(x,a) + log sum_y p e^{lambda w(y)}].
void apply_bellman(const Mdp& m, double lam, const std::vector<double>& w,
                   std::vector<double>& out) {
    for (int x = 0; x < m.num_states(); ++x) {
        double best = kInf;
        for (int a : m.admissible(x)) {
            LogSumExp acc;
            const auto& p = m.row(x, a);
            for (int y : m.support(x, a)) acc.add(std::log(p[y]) + lam * w[y]);
            best = std::min(best, m.cost(x, a) + acc.value() / lam);
        }
        out[x] = best;
    }
}

} // namespace

OptimalityEquationResult solve_optimality_equation(const Mdp& m, RiskCoefficient lambda, int z,
                                                   const IterationConfig& config) {
    if (z < 0 || z >= m.num_states())
        throw PreconditionError("solve_optimality_equation: state index out of range");
    const double lam = lambda.value();
    const int ns = m.num_states();
    OptimalityEquationResult res;
    std::vector<double> w(ns, 0.0), tw(ns, 0.0);
    double span = kInf, shift = 0.0;
    long iter = 0;
    for (; iter < config.max_iter; ++iter) {
        apply_bellman(m, lam, w, tw);
        double lo = kInf, hi = kNegInf;
        for (int x = 0; x < ns; ++x) {
            const double d = tw[x] - w[x];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        span = hi - lo;
        shift = tw[z]; // w(z) = 0, so this is the would-be gain
        for (int x = 0; x < ns; ++x) w[x] = tw[x] - shift;
        res.report.iterations = iter + 1;
        res.report.residual = span;
        if (span < config.tol) break;
        bool blown = std::fabs(shift) > config.divergence_cap;
        for (int x = 0; x < ns && !blown; ++x)
            if (std::fabs(w[x]) > config.divergence_cap) blown = true;
        if (blown) {
            res.report.diverged = true;
            break;
        }
    }
    if (res.report.diverged) {
        res.diagnosis = "relative value iteration diverged";
        return res;
    }
    if (span >= config.tol) {
        res.diagnosis = "no solution found within the iteration budget (span " +
                        std::to_string(span) + ")";
        return res;
    }
    res.report.converged = true;
    // Candidate solution: gamma = shift, h = w.  Accept only if the
    // optimality equation itself holds tightly.
    apply_bellman(m, lam, w, tw);
    double residual = 0.0;
    for (int x = 0; x < ns; ++x) residual = std::max(residual, std::fabs(shift + w[x] - tw[x]));
    res.equation_residual = residual;
    if (residual > 1e-8) {
        res.diagnosis = "converged iterate fails the optimality equation (residual " +
                        std::to_string(residual) + ")";
        return res;
    }
    res.solved = true;
    res.gamma = shift;
    res.h = w;
    return res;
}

RelativeValueResult relative_value(const Mdp& m, RiskCoefficient lambda, double gamma, int z,
                                   const IterationConfig& config) {
    if (z < 0 || z >= m.num_states())
        throw PreconditionError("relative_value: state index out of range");
    const double lam = lambda.value();
    const int ns = m.num_states();
    RelativeValueResult res;
    std::vector<double> u(ns, 0.0), lu(ns, 0.0);
    std::vector<double> halfway(ns, 0.0);
    const long half = config.max_iter / 2;
    long iter = 0;
    double change = kInf;
    for (; iter < config.max_iter; ++iter) {
        for (int x = 0; x < ns; ++x) {
            double best = kInf;
            for (int a : m.admissible(x)) {
                const auto& p = m.row(x, a);
                LogSumExp acc;
                if (p[z] > 0.0) acc.add(std::log(p[z]));
                for (int y : m.support(x, a))
                    if (y != z) acc.add(std::log(p[y]) + lam * u[y]);
                best = std::min(best, m.cost(x, a) - gamma + acc.value() / lam);
            }
            // Beyond the cap the iterate is treated as divergent outright;
            // +inf then propagates to every state feeding it.
            lu[x] = best > config.divergence_cap ? kInf : best;
        }
        change = sup_distance(lu, u);
        std::swap(u, lu);
        res.report.iterations = iter + 1;
        res.report.residual = change;
        if (iter + 1 == half) halfway = u;
        if (change < config.tol) {
            res.report.converged = true;
            break;
        }
    }
    if (!res.report.converged) {
        // Distinguish steady climbers from slow-but-bounded iterates: a state
        // that gained more than one cost unit over the second half of the
        // budget is on a linear divergence ramp.
        for (int x = 0; x < ns; ++x)
            if (u[x] == kInf || u[x] - halfway[x] > 1.0) u[x] = kInf;
    }
    for (double v : u)
        if (v == kInf) res.report.diverged = true;
    res.h = std::move(u);
    return res;
}

} // namespace rsmdp
