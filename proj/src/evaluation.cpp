#include "rsmdp/evaluation.hpp"

#include <cmath>

#include "rsmdp/chain_analysis.hpp"
#include "rsmdp/numeric.hpp"

namespace rsmdp {

double certain_equivalent(RiskCoefficient lambda, const FiniteCostDistribution& y) {
    double total = 0.0;
    LogSumExp acc;
    for (const auto& [value, prob] : y) {
        if (!(prob >= 0.0)) throw PreconditionError("certain_equivalent: negative probability");
        total += prob;
        if (prob > 0.0) acc.add(std::log(prob) + lambda.value() * value);
    }
    if (std::fabs(total - 1.0) > kRowSumTol)
        throw PreconditionError("certain_equivalent: probabilities sum to " +
                                std::to_string(total) + ", expected 1");
    return acc.value() / lambda.value();
}

MarkovPolicy MarkovPolicy::stationary(const Mdp& m, const StationaryPolicy& f, int horizon) {
    MarkovPolicy pi;
    std::vector<std::vector<double>> epoch(m.num_states());
    for (int x = 0; x < m.num_states(); ++x) {
        const auto& acts = m.admissible(x);
        epoch[x].assign(acts.size(), 0.0);
        bool found = false;
        for (std::size_t j = 0; j < acts.size(); ++j)
            if (acts[j] == f.choice[x]) {
                epoch[x][j] = 1.0;
                found = true;
            }
        if (!found)
            throw PreconditionError("stationary policy picks inadmissible action at state '" +
                                    m.state_name(x) + "'");
    }
    pi.rows.assign(horizon, epoch);
    return pi;
}

void MarkovPolicy::validate(const Mdp& m) const {
    if (horizon() > kMaxHorizon)
        throw ModelError("policy horizon " + std::to_string(horizon()) + " exceeds the cap of " +
                         std::to_string(kMaxHorizon));
    for (int t = 0; t < horizon(); ++t) {
        if (static_cast<int>(rows[t].size()) != m.num_states())
            throw ModelError("policy epoch " + std::to_string(t) + " must cover every state");
        for (int x = 0; x < m.num_states(); ++x) {
            const auto& row = rows[t][x];
            if (row.size() != m.admissible(x).size())
                throw ModelError("policy row at epoch " + std::to_string(t) + ", state '" +
                                 m.state_name(x) + "' must cover the admissible actions");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0))
                    throw ModelError("negative policy probability at epoch " + std::to_string(t) +
                                     ", state '" + m.state_name(x) + "'");
                sum += p;
            }
            if (std::fabs(sum - 1.0) > kRowSumTol)
                throw ModelError("policy row at epoch " + std::to_string(t) + ", state '" +
                                 m.state_name(x) + "' sums to " + std::to_string(sum));
        }
    }
}

ValueFunction finite_horizon_cost(const Mdp& m, const MarkovPolicy& pi, RiskCoefficient lambda,
                                  int n) {
    if (n < 1) throw PreconditionError("finite_horizon_cost: n must be >= 1");
    if (n > pi.horizon())
        throw PreconditionError("finite_horizon_cost: n exceeds the policy horizon");
    pi.validate(m);
    const double lam = lambda.value();
    const int ns = m.num_states();
    // w holds lambda * W_k; with k steps remaining the decision epoch is
    // n - 1 - k counting the first step as epoch 0.
    std::vector<double> w(ns, 0.0), w_next(ns, 0.0);
    for (int k = 0; k < n; ++k) {
        const auto& epoch = pi.rows[n - 1 - k];
        for (int x = 0; x < ns; ++x) {
            const auto& acts = m.admissible(x);
            LogSumExp over_actions;
            for (std::size_t j = 0; j < acts.size(); ++j) {
                const double pa = epoch[x][j];
                if (pa == 0.0) continue;
                const int a = acts[j];
                LogSumExp over_targets;
                const auto& p = m.row(x, a);
                for (int y : m.support(x, a)) over_targets.add(std::log(p[y]) + w[y]);
                over_actions.add(std::log(pa) + lam * m.cost(x, a) + over_targets.value());
            }
            w_next[x] = over_actions.value();
        }
        std::swap(w, w_next);
    }
    ValueFunction j(ns);
    for (int x = 0; x < ns; ++x) j[x] = w[x] / lam;
    return j;
}

ValueFunction finite_horizon_cost(const Mdp& m, const StationaryPolicy& f, RiskCoefficient lambda,
                                  int n) {
    return finite_horizon_cost(m, MarkovPolicy::stationary(m, f, n), lambda, n);
}

ValueFunction long_run_average(const Mdp& m, const StationaryPolicy& f, RiskCoefficient lambda) {
    const double lam = lambda.value();
    const int n = m.num_states();
    ValueFunction j(n, 0.0);
    for (int x = 0; x < n; ++x) {
        const std::vector<int> reach = reachable_set(m, f, x);
        const int k = static_cast<int>(reach.size());
        // log Q_f = lambda C(v, f(v)) + log p_vy(f(v)) on the reachable set;
        // working with logs keeps lambda * ||C|| out of e^x territory.
        std::vector<double> logq(static_cast<std::size_t>(k) * k, kNegInf);
        for (int i = 0; i < k; ++i) {
            const int v = reach[i];
            const auto& p = m.row(v, f.choice[v]);
            const double lc = lam * m.cost(v, f.choice[v]);
            for (int jj = 0; jj < k; ++jj) {
                const int y = reach[jj];
                if (p[y] > 0.0) logq[static_cast<std::size_t>(i) * k + jj] = lc + std::log(p[y]);
            }
        }
        j[x] = log_spectral_radius(k, logq) / lam;
    }
    return j;
}

std::pair<double, double> verify_growth(const Mdp& m, const StationaryPolicy& f,
                                        RiskCoefficient lambda, int x, int n) {
    if (n < 1) throw PreconditionError("verify_growth: n must be >= 1");
    const ValueFunction jn = finite_horizon_cost(m, f, lambda, n);
    const ValueFunction j = long_run_average(m, f, lambda);
    return {jn[x] / n, j[x]};
}

} // namespace rsmdp
