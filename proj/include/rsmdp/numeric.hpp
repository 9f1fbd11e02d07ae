#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace rsmdp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b) without overflow; -inf encodes a zero term.
inline double log_add_exp(double a, double b) {
    if (a == kInf || b == kInf) return kInf;
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// Streaming log-sum-exp: single pass, rescales whenever a new maximum
// arrives.  value() is -inf for an empty accumulator.
class LogSumExp {
public:
    void add(double term) {
        if (term == kNegInf) return;
        if (term == kInf) { max_ = kInf; sum_ = 1.0; return; }
        if (max_ == kInf) return;
        if (term <= max_) {
            sum_ += std::exp(term - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - term) + 1.0;
            max_ = term;
        }
    }
    double value() const {
        if (max_ == kNegInf) return kNegInf;
        if (max_ == kInf) return kInf;
        return max_ + std::log(sum_);
    }

private:
    double max_ = kNegInf;
    double sum_ = 0.0; // sum of e^(term - max_) over added terms
};

inline double log_sum_exp(std::span<const double> terms) {
    LogSumExp acc;
    for (double t : terms) acc.add(t);
    return acc.value();
}

// Solves the dense system A x = b by Gaussian elimination with partial
// pivoting.  `a` is row-major n-by-n and is consumed.  The systems solved
// here are strictly diagonally dominant after the reachability pre-screens,
// so a vanishing pivot indicates a defect upstream.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b);

// max_i |u[i] - v[i]|, treating two infinities of the same sign as equal.
double sup_distance(std::span<const double> u, std::span<const double> v);

} // namespace rsmdp
