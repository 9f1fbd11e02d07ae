#include "rsmdp/numeric.hpp"

#include <cstdlib>
#include <stdexcept>

namespace rsmdp {

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::logic_error("solve_dense: dimension mismatch");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        if (std::fabs(a[pivot * n + col]) < 1e-300)
            throw std::logic_error("solve_dense: singular system (defect in caller's pre-screen)");
        if (pivot != col) {
            for (std::size_t c = col; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] / a[col * n + col];
            if (factor == 0.0) continue;
            a[r * n + col] = 0.0;
            for (std::size_t c = col + 1; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
    return x;
}

double sup_distance(std::span<const double> u, std::span<const double> v) {
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] == v[i]) continue; // covers equal infinities
        const double di = std::fabs(u[i] - v[i]);
        if (di > d) d = di;
    }
    return d;
}

} // namespace rsmdp
