#pragma once

#include <cstdint>
#include <vector>

#include "rsmdp/model.hpp"

namespace rsmdp {

// SplitMix64: the output is a bijective hash of an additively stepped
// counter, so any (seed, index) pair opens an independent stream and
// sampling stays reproducible no matter how work is scheduled.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}
    std::uint64_t next() {
        std::uint64_t x = (state_ += 0x9E3779B97F4A7C15ull);
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }
    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Stream for the index-th trajectory of a run keyed by seed.
SplitMix64 substream(std::uint64_t seed, std::uint64_t index);

struct Trajectory {
    std::vector<int> states;   // X_0 .. X_{n-1}
    std::vector<int> actions;  // A_0 .. A_{n-1}
    std::vector<double> costs; // C(X_t, A_t)
    std::uint64_t seed = 0;
};

// n steps of the chain under f from x; a pure function of its arguments.
Trajectory sample_trajectory(const Mdp& m, const StationaryPolicy& f, int x, int n,
                             std::uint64_t seed);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double stderr_log = 0.0; // delta-method standard error of the log-mean
    long samples = 0;
    // The estimator of E[e^{lambda cost}] degrades when a few paths carry
    // the exponential mass; flagged when the top 1% of weights holds more
    // than half the exp-sum.
    bool heavy_tail = false;
};

// Estimates the n-step certain equivalent from x under f:
// (1/lambda) log of the sample mean of exp(lambda * path cost), accumulated
// with a streaming log-sum-exp.
MonteCarloEstimate mc_certain_equivalent(const Mdp& m, const StationaryPolicy& f,
                                         RiskCoefficient lambda, int x, int n, long samples,
                                         std::uint64_t seed);

// Empirical survival curves of the arrival time to z: out[x][k] estimates
// P_x[T >= k] for k = 0..n, one row per start state.
std::vector<std::vector<double>> mc_hitting_tail(const Mdp& m, const StationaryPolicy& f, int z,
                                                 int n, long samples, std::uint64_t seed);

} // namespace rsmdp
