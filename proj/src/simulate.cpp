#include "rsmdp/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "rsmdp/numeric.hpp"

namespace rsmdp {

SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
    // Decorrelate the (seed, index) pair by running the seed through one
    // mixing step before folding in the index.
    SplitMix64 mixer(seed);
    const std::uint64_t base = mixer.next();
    return SplitMix64(base ^ (index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

namespace {

int draw_from_row(const Mdp& m, int x, int a, double coin) {
    // Inverse CDF in state order; the final supported state absorbs any
    // rounding slack.
    const auto& p = m.row(x, a);
    const auto& supp = m.support(x, a);
    double acc = 0.0;
    for (int y : supp) {
        acc += p[y];
        if (coin < acc) return y;
    }
    return supp.back();
}

} // namespace

Trajectory sample_trajectory(const Mdp& m, const StationaryPolicy& f, int x, int n,
                             std::uint64_t seed) {
    if (x < 0 || x >= m.num_states())
        throw PreconditionError("sample_trajectory: state index out of range");
    if (n < 1) throw PreconditionError("sample_trajectory: n must be >= 1");
    SplitMix64 rng(seed);
    Trajectory tr;
    tr.seed = seed;
    tr.states.reserve(n);
    tr.actions.reserve(n);
    tr.costs.reserve(n);
    int state = x;
    for (int t = 0; t < n; ++t) {
        const int a = f.choice[state];
        tr.states.push_back(state);
        tr.actions.push_back(a);
        tr.costs.push_back(m.cost(state, a));
        state = draw_from_row(m, state, a, rng.uniform());
    }
    return tr;
}

MonteCarloEstimate mc_certain_equivalent(const Mdp& m, const StationaryPolicy& f,
                                         RiskCoefficient lambda, int x, int n, long samples,
                                         std::uint64_t seed) {
    if (samples < 100)
        throw PreconditionError("mc_certain_equivalent: need at least 100 samples");
    const double lam = lambda.value();
    LogSumExp sum_w;   // log sum of weights e^{lambda cost}
    LogSumExp sum_w2;  // log sum of squared weights
    std::vector<double> log_weights;
    log_weights.reserve(samples);
    for (long i = 0; i < samples; ++i) {
        SplitMix64 rng = substream(seed, static_cast<std::uint64_t>(i));
        double path_cost = 0.0;
        int state = x;
        for (int t = 0; t < n; ++t) {
            const int a = f.choice[state];
            path_cost += m.cost(state, a);
            state = draw_from_row(m, state, a, rng.uniform());
        }
        const double lw = lam * path_cost;
        log_weights.push_back(lw);
        sum_w.add(lw);
        sum_w2.add(2.0 * lw);
    }
    MonteCarloEstimate out;
    out.samples = samples;
    const double log_n = std::log(static_cast<double>(samples));
    const double log_mean = sum_w.value() - log_n;
    out.estimate = log_mean / lam;
    // Var(log mean) ~= Var(W) / (n E[W]^2); everything stays in log space
    // until the final ratio, which is safe because it is scale-free.
    const double ratio = std::exp(sum_w2.value() - log_n - 2.0 * log_mean); // E[W^2]/E[W]^2
    const double var_ratio = std::max(0.0, ratio - 1.0);
    out.stderr_log = std::sqrt(var_ratio / static_cast<double>(samples)) / lam;
    // Share of the exp-sum carried by the heaviest 1% of weights.
    const long top = std::max<long>(1, samples / 100);
    std::nth_element(log_weights.begin(), log_weights.begin() + (samples - top),
                     log_weights.end());
    LogSumExp top_sum;
    for (long i = samples - top; i < samples; ++i) top_sum.add(log_weights[i]);
    out.heavy_tail = top_sum.value() - sum_w.value() > std::log(0.5);
    return out;
}

std::vector<std::vector<double>> mc_hitting_tail(const Mdp& m, const StationaryPolicy& f, int z,
                                                 int n, long samples, std::uint64_t seed) {
    if (samples < 100) throw PreconditionError("mc_hitting_tail: need at least 100 samples");
    if (z < 0 || z >= m.num_states())
        throw PreconditionError("mc_hitting_tail: state index out of range");
    const int ns = m.num_states();
    std::vector<std::vector<double>> survival(ns, std::vector<double>(n + 1, 0.0));
    for (int x = 0; x < ns; ++x) {
        std::vector<long> at_least(n + 1, 0);
        for (long i = 0; i < samples; ++i) {
            SplitMix64 rng =
                substream(seed, static_cast<std::uint64_t>(x) * samples + static_cast<std::uint64_t>(i));
            // T = first positive arrival at z, censored at n (T >= n known).
            int state = x;
            int arrival = n;
            for (int t = 1; t <= n; ++t) {
                state = draw_from_row(m, state, f.choice[state], rng.uniform());
                if (state == z) {
                    arrival = t;
                    break;
                }
            }
            for (int k = 0; k <= n && k <= arrival; ++k) ++at_least[k];
        }
        for (int k = 0; k <= n; ++k)
            survival[x][k] = static_cast<double>(at_least[k]) / static_cast<double>(samples);
    }
    return survival;
}

} // namespace rsmdp
