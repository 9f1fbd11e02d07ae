#include "rsmdp/chain_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "rsmdp/numeric.hpp"
#include "parallel.hpp"

namespace rsmdp {

namespace {

void require_state(const Mdp& m, int x, const char* what) {
    if (x < 0 || x >= m.num_states())
        throw PreconditionError(std::string(what) + ": state index out of range");
}

std::vector<std::vector<int>> successor_lists(const Mdp& m, const StationaryPolicy& f) {
    std::vector<std::vector<int>> succ(m.num_states());
    for (int x = 0; x < m.num_states(); ++x) succ[x] = m.support(x, f.choice[x]);
    return succ;
}

} // namespace

std::vector<int> reachable_set(const Mdp& m, const StationaryPolicy& f, int x) {
    require_state(m, x, "reachable_set");
    std::vector<char> seen(m.num_states(), 0);
    std::vector<int> stack = {x};
    seen[x] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int y : m.support(v, f.choice[v]))
            if (!seen[y]) {
                seen[y] = 1;
                stack.push_back(y);
            }
    }
    std::vector<int> out;
    for (int y = 0; y < m.num_states(); ++y)
        if (seen[y]) out.push_back(y);
    return out;
}

std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj) {
    // Iterative Tarjan.  Components come out in reverse topological order of
    // the condensation; the list is reversed before returning so sources
    // come first.
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), lowlink(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> sccs;
    int next_index = 0;

    struct Frame {
        int v;
        std::size_t edge;
    };
    std::vector<Frame> call;
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.push_back({root, 0});
        index[root] = lowlink[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& fr = call.back();
            if (fr.edge < adj[fr.v].size()) {
                const int w = adj[fr.v][fr.edge++];
                if (index[w] == -1) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    lowlink[fr.v] = std::min(lowlink[fr.v], index[w]);
                }
            } else {
                if (lowlink[fr.v] == index[fr.v]) {
                    std::vector<int> comp;
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp.push_back(w);
                    } while (w != fr.v);
                    std::sort(comp.begin(), comp.end());
                    sccs.push_back(std::move(comp));
                }
                const int v = fr.v;
                call.pop_back();
                if (!call.empty())
                    lowlink[call.back().v] = std::min(lowlink[call.back().v], lowlink[v]);
            }
        }
    }
    std::reverse(sccs.begin(), sccs.end());
    return sccs;
}

ValueFunction expected_hitting_time(const Mdp& m, const StationaryPolicy& f, int z) {
    require_state(m, z, "expected_hitting_time");
    const int n = m.num_states();
    const auto succ = successor_lists(m, f);
    std::vector<std::vector<int>> pred(n);
    for (int x = 0; x < n; ++x)
        for (int y : succ[x]) pred[y].push_back(x);

    // can_reach[x]: a positive-probability path of length >= 1 from x to z.
    std::vector<char> can_reach(n, 0);
    {
        std::vector<int> queue = pred[z];
        for (int x : queue) can_reach[x] = 1;
        while (!queue.empty()) {
            const int y = queue.back();
            queue.pop_back();
            for (int x : pred[y])
                if (!can_reach[x]) {
                    can_reach[x] = 1;
                    queue.push_back(x);
                }
        }
    }

    // E_x[T] is infinite exactly when, avoiding z, the chain can enter the
    // closed set of states that never reach z.  Badness propagates backward
    // but never through z: arriving at z means T already happened.
    std::vector<char> bad(n, 0);
    std::vector<int> queue;
    for (int x = 0; x < n; ++x)
        if (!can_reach[x]) {
            bad[x] = 1;
            queue.push_back(x);
        }
    while (!queue.empty()) {
        const int y = queue.back();
        queue.pop_back();
        if (y == z) continue;
        for (int x : pred[y])
            if (!bad[x]) {
                bad[x] = 1;
                queue.push_back(x);
            }
    }

    // Unknowns: finite states other than z.  Every taboo successor of a
    // finite state is again finite, so the system is closed, and each row is
    // strictly substochastic along some path, making I - Q nonsingular.
    std::vector<int> unknown;
    std::vector<int> pos(n, -1);
    for (int x = 0; x < n; ++x)
        if (!bad[x] && x != z) {
            pos[x] = static_cast<int>(unknown.size());
            unknown.push_back(x);
        }
    const std::size_t k = unknown.size();
    std::vector<double> a(k * k, 0.0), b(k, 1.0);
    for (std::size_t i = 0; i < k; ++i) {
        const int x = unknown[i];
        a[i * k + i] = 1.0;
        const auto& p = m.row(x, f.choice[x]);
        for (int y : succ[x])
            if (y != z) a[i * k + pos[y]] -= p[y];
    }
    const std::vector<double> u = k ? solve_dense(std::move(a), std::move(b)) : std::vector<double>{};

    ValueFunction result(n, kInf);
    for (std::size_t i = 0; i < k; ++i) result[unknown[i]] = u[i];
    if (!bad[z]) {
        double uz = 1.0;
        const auto& p = m.row(z, f.choice[z]);
        for (int y : succ[z])
            if (y != z) uz += p[y] * result[y];
        result[z] = uz;
    }
    return result;
}

DoeblinReport check_doeblin(const Mdp& m, int z, std::uint64_t policy_cap) {
    require_state(m, z, "check_doeblin");
    const std::uint64_t total = policy_count(m, policy_cap);

    struct ChunkResult {
        std::uint64_t begin = 0;
        double max_u = 0.0;
        std::uint64_t checked = 0;
        std::uint64_t fail_index = 0;
        int fail_state = -1;
        bool failed = false;
    };
    std::vector<ChunkResult> results;
    std::mutex results_mu;

    parallel_chunks(total, [&](unsigned, std::uint64_t begin, std::uint64_t end) {
        ChunkResult local;
        local.begin = begin;
        for (std::uint64_t idx = begin; idx < end && !local.failed; ++idx) {
            const StationaryPolicy f = policy_at(m, idx);
            const ValueFunction u = expected_hitting_time(m, f, z);
            ++local.checked;
            for (int x = 0; x < m.num_states(); ++x) {
                if (u[x] == kInf) {
                    local.failed = true;
                    local.fail_index = idx;
                    local.fail_state = x;
                    break;
                }
                local.max_u = std::max(local.max_u, u[x]);
            }
        }
        std::lock_guard<std::mutex> lock(results_mu);
        results.push_back(std::move(local));
    });

    // Merge in chunk order so the report is independent of worker count and
    // completion order.
    std::sort(results.begin(), results.end(),
              [](const ChunkResult& a, const ChunkResult& b) { return a.begin < b.begin; });

    DoeblinReport report;
    double max_u = 0.0;
    for (const ChunkResult& r : results) {
        if (r.failed) {
            report.pass = false;
            report.worst_policy = policy_at(m, r.fail_index);
            report.worst_state = r.fail_state;
            // Serial-equivalent count: everything up to the first failure.
            report.policies_checked = r.fail_index + 1;
            return report;
        }
        max_u = std::max(max_u, r.max_u);
        report.policies_checked += r.checked;
    }
    report.pass = true;
    report.bound_M = max_u;
    return report;
}

namespace {

// log spectral radius of one irreducible block (local indices), by power
// iteration on the rescaled, shifted block Q' + I.  The shift makes the
// block primitive, so the Rayleigh estimate converges for any positive
// start; rescaling by the largest entry keeps the shift numerically
// meaningful when entries are huge or tiny.
double log_block_radius(const std::vector<double>& logq, int n, const std::vector<int>& block) {
    const int k = static_cast<int>(block.size());
    double scale = kNegInf;
    for (int i : block)
        for (int j : block) scale = std::max(scale, logq[static_cast<std::size_t>(i) * n + j]);
    std::vector<double> lv(k, 0.0), lw(k, 0.0);
    double estimate = 0.0, prev = kInf;
    const long max_iter = 100000;
    for (long iter = 0; iter < max_iter; ++iter) {
        double norm_old = kNegInf, norm_new = kNegInf;
        for (int i = 0; i < k; ++i) norm_old = log_add_exp(norm_old, lv[i]);
        for (int i = 0; i < k; ++i) {
            LogSumExp acc;
            acc.add(lv[i]); // + 1 * v(i), the shift term
            const double* row = &logq[static_cast<std::size_t>(block[i]) * n];
            for (int j = 0; j < k; ++j) {
                const double e = row[block[j]];
                if (e != kNegInf) acc.add(e - scale + lv[j]);
            }
            lw[i] = acc.value();
            norm_new = log_add_exp(norm_new, lw[i]);
        }
        estimate = norm_new - norm_old;
        double top = kNegInf;
        for (int i = 0; i < k; ++i) top = std::max(top, lw[i]);
        for (int i = 0; i < k; ++i) lv[i] = lw[i] - top;
        if (std::fabs(estimate - prev) <= 1e-12 * std::max(1.0, std::fabs(estimate))) break;
        prev = estimate;
    }
    // estimate = log sp(Q' + I); sp(Q') = expm1(estimate), exact as the
    // radius approaches 0.
    return scale + std::log(std::expm1(estimate));
}

} // namespace

double log_spectral_radius(int n, const std::vector<double>& log_entries) {
    if (static_cast<std::size_t>(n) * n != log_entries.size())
        throw PreconditionError("log_spectral_radius: dimension mismatch");
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (log_entries[static_cast<std::size_t>(i) * n + j] != kNegInf) adj[i].push_back(j);
    double best = kNegInf;
    for (const auto& block : strongly_connected_components(adj)) {
        if (block.size() == 1) {
            const int i = block[0];
            best = std::max(best, log_entries[static_cast<std::size_t>(i) * n + i]);
        } else {
            best = std::max(best, log_block_radius(log_entries, n, block));
        }
    }
    return best;
}

double spectral_radius(const NonnegativeMatrix& q) {
    const int n = q.size();
    if (q.entries.size() != static_cast<std::size_t>(n) * n)
        throw PreconditionError("spectral_radius: entries must form a square matrix");
    std::vector<double> logq(q.entries.size());
    for (std::size_t i = 0; i < q.entries.size(); ++i) {
        if (!(q.entries[i] >= 0.0))
            throw PreconditionError("spectral_radius: negative entry");
        logq[i] = q.entries[i] > 0.0 ? std::log(q.entries[i]) : kNegInf;
    }
    const double lr = log_spectral_radius(n, logq);
    return lr == kNegInf ? 0.0 : std::exp(lr);
}

TailBound tail_bound(const Mdp& m, const StationaryPolicy& f, int z) {
    require_state(m, z, "tail_bound");
    const ValueFunction u = expected_hitting_time(m, f, z);
    for (int x = 0; x < m.num_states(); ++x)
        if (u[x] == kInf)
            throw PreconditionError("tail_bound: E[T] is infinite from state '" +
                                    m.state_name(x) + "'");
    const int n = m.num_states();
    std::vector<double> logq(static_cast<std::size_t>(n) * n, kNegInf);
    for (int x = 0; x < n; ++x) {
        if (x == z) continue;
        const auto& p = m.row(x, f.choice[x]);
        for (int y : m.support(x, f.choice[x]))
            if (y != z) logq[static_cast<std::size_t>(x) * n + y] = std::log(p[y]);
    }
    const double lbeta = log_spectral_radius(n, logq);
    TailBound tb;
    tb.beta = lbeta == kNegInf ? 0.0 : std::exp(lbeta);
    if (tb.beta == 0.0) {
        tb.beta0 = 1.0; // T <= 1 a.s.; see header note
        return tb;
    }
    // Survival recursion over all starts: s_{k+1}(x) = sum_{y != z} p_xy s_k(y),
    // s_1 = 1.  beta0 = max over k = 0..|S| of s_k / beta^k.
    std::vector<double> s(n, 1.0), s_next(n, 0.0);
    double beta0 = 1.0;
    for (int kstep = 1; kstep <= n; ++kstep) {
        const double denom = std::pow(tb.beta, kstep);
        for (int x = 0; x < n; ++x) beta0 = std::max(beta0, s[x] / denom);
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            const auto& p = m.row(x, f.choice[x]);
            for (int y : m.support(x, f.choice[x]))
                if (y != z) acc += p[y] * s[y];
            s_next[x] = acc;
        }
        std::swap(s, s_next);
    }
    tb.beta0 = beta0;
    return tb;
}

} // namespace rsmdp
