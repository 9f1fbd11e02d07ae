// Command-line front end: file I/O, report generation, and the built-in
// three-state fixture generator.  Exit codes: 0 success, 2 model/input
// invalid, 3 recurrence-assumption failure, 4 theorem contradiction,
// 5 budget exceeded.
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rsmdp/certify.hpp"
#include "rsmdp/chain_analysis.hpp"
#include "rsmdp/errors.hpp"
#include "rsmdp/evaluation.hpp"
#include "rsmdp/example22.hpp"
#include "rsmdp/model.hpp"
#include "rsmdp/optimal.hpp"
#include "rsmdp/simulate.hpp"

using ordered_json = nlohmann::ordered_json;
using namespace rsmdp;

namespace {

struct RunConfig {
    std::string model_path;
    double lambda = 1.0;
    std::vector<double> alphas;
    std::string z_flag; // state name or index; empty means "search"
    double tol = 1e-9;
    long max_iter = 100000;
    std::uint64_t seed = 12345;
    std::string output = "json";
    std::string out_path;
    // example22
    double rho = 0.5;
    // evaluate / simulate
    std::string policy_flag;
    int horizon = 20;
    long samples = 10000;
    std::string start_flag;
};

// Mirrors the library's worker cap: RSMDP_THREADS when set (minimum 1),
// otherwise the hardware concurrency.
int env_threads() {
    const char* tv = std::getenv("RSMDP_THREADS");
    if (tv != nullptr) return std::max(1, std::atoi(tv));
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PreconditionError("cannot write to '" + path + "'");
    out << text;
}

Mdp load_model_file(const std::string& path) { return load_model(read_file(path)); }

IterationConfig iter_config(const RunConfig& cfg) {
    IterationConfig c;
    c.tol = cfg.tol;
    c.max_iter = cfg.max_iter;
    return c;
}

ordered_json provenance(const RunConfig& cfg) {
    ordered_json p;
    p["lambda"] = cfg.lambda;
    p["tol"] = cfg.tol;
    p["max_iter"] = cfg.max_iter;
    p["seed"] = cfg.seed;
    p["threads"] = env_threads();
    p["policy_cap"] = kDefaultPolicyCap;
    return p;
}

// Value functions are reported per state name; JSON has no infinity, so
// non-finite entries become null and are listed under "divergent".
ordered_json per_state(const Mdp& m, const ValueFunction& v) {
    ordered_json o = ordered_json::object();
    for (int x = 0; x < m.num_states(); ++x) {
        if (std::isfinite(v[x]))
            o[m.state_name(x)] = v[x];
        else
            o[m.state_name(x)] = nullptr;
    }
    return o;
}

std::vector<std::string> nonfinite_states(const Mdp& m, const ValueFunction& v) {
    std::vector<std::string> out;
    for (int x = 0; x < m.num_states(); ++x)
        if (!std::isfinite(v[x])) out.push_back(m.state_name(x));
    return out;
}

ordered_json policy_json(const Mdp& m, const StationaryPolicy& f) {
    ordered_json o = ordered_json::object();
    for (int x = 0; x < m.num_states(); ++x) o[m.state_name(x)] = m.action_name(f.choice[x]);
    return o;
}

int resolve_state(const Mdp& m, const std::string& token) {
    if (auto idx = m.state_index(token)) return *idx;
    try {
        std::size_t pos = 0;
        int idx = std::stoi(token, &pos);
        if (pos == token.size() && idx >= 0 && idx < m.num_states()) return idx;
    } catch (const std::exception&) {
    }
    throw PreconditionError("unknown state '" + token + "'");
}

int resolve_action(const Mdp& m, const std::string& token) {
    if (auto idx = m.action_index(token)) return *idx;
    try {
        std::size_t pos = 0;
        int idx = std::stoi(token, &pos);
        if (pos == token.size() && idx >= 0 && idx < m.num_actions()) return idx;
    } catch (const std::exception&) {
    }
    throw PreconditionError("unknown action '" + token + "'");
}

// --policy "a,b,..." with one action name (or index) per state; defaults to
// the lowest admissible action everywhere.
StationaryPolicy resolve_policy(const Mdp& m, const std::string& flag) {
    StationaryPolicy f;
    if (flag.empty()) {
        for (int x = 0; x < m.num_states(); ++x) f.choice.push_back(m.admissible(x).front());
        return f;
    }
    std::stringstream ss(flag);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.choice.push_back(resolve_action(m, tok));
    if (static_cast<int>(f.choice.size()) != m.num_states())
        throw PreconditionError("--policy needs one action per state");
    for (int x = 0; x < m.num_states(); ++x)
        if (!m.is_admissible(x, f.choice[x]))
            throw PreconditionError("--policy action '" + m.action_name(f.choice[x]) +
                                    "' not admissible at state '" + m.state_name(x) + "'");
    return f;
}

ordered_json doeblin_json(const Mdp& m, int z, const DoeblinReport& rep) {
    ordered_json d;
    d["z"] = m.state_name(z);
    d["pass"] = rep.pass;
    d["policies_checked"] = rep.policies_checked;
    if (rep.bound_M)
        d["M"] = *rep.bound_M;
    else
        d["M"] = nullptr;
    if (!rep.pass && rep.worst_policy) {
        ordered_json w;
        w["policy"] = policy_json(m, *rep.worst_policy);
        if (rep.worst_state) w["state"] = m.state_name(*rep.worst_state);
        ValueFunction eh = expected_hitting_time(m, *rep.worst_policy, z);
        w["expected_hitting_time"] = per_state(m, eh);
        w["divergent"] = nonfinite_states(m, eh);
        d["witness"] = w;
    }
    return d;
}

struct ZChoice {
    int z = 0;
    DoeblinReport doeblin;
    ordered_json search; // per-z summaries when z was searched
};

// With --z: check that state.  Without: first state (in index order) whose
// simultaneous recurrence check passes; if none passes, the first failure is
// reported.
ZChoice choose_z(const Mdp& m, const std::string& z_flag) {
    ZChoice out;
    if (!z_flag.empty()) {
        out.z = resolve_state(m, z_flag);
        out.doeblin = check_doeblin(m, out.z);
        return out;
    }
    out.search = ordered_json::array();
    std::optional<ZChoice> first_fail;
    for (int z = 0; z < m.num_states(); ++z) {
        DoeblinReport rep = check_doeblin(m, z);
        ordered_json row;
        row["z"] = m.state_name(z);
        row["pass"] = rep.pass;
        out.search.push_back(row);
        if (rep.pass) {
            out.z = z;
            out.doeblin = rep;
            return out;
        }
        if (!first_fail) first_fail = ZChoice{z, rep, {}};
    }
    out.z = first_fail->z;
    out.doeblin = first_fail->doeblin;
    return out;
}

// The generator writes states "0","1","2" and actions "0","1"; a loaded
// model structurally identical to the generator's output for some rho is
// classified by regime in reports.
std::optional<double> recognize_example22(const Mdp& m) {
    if (m.num_states() != 3 || m.num_actions() != 2) return std::nullopt;
    const double rho = m.is_admissible(1, 0) ? m.row(1, 0)[1] : -1.0;
    if (!(rho > 0.0 && rho < 1.0)) return std::nullopt;
    try {
        if (m == example22_model(rho)) return rho;
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

std::string csv_cell(const ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

void csv_rows(const ordered_json& j, const std::string& prefix, std::ostream& os) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (v.is_object() || v.is_array())
                csv_rows(v, prefix.empty() ? k : prefix + "." + k, os);
            else
                os << prefix << ',' << k << ',' << csv_cell(v) << '\n';
        }
    } else if (j.is_array()) {
        int i = 0;
        for (const auto& v : j) {
            const std::string key = std::to_string(i++);
            if (v.is_object() || v.is_array())
                csv_rows(v, prefix.empty() ? key : prefix + "." + key, os);
            else
                os << prefix << ',' << key << ',' << csv_cell(v) << '\n';
        }
    }
}

std::string render(const ordered_json& report, const RunConfig& cfg) {
    if (cfg.output == "csv") {
        std::ostringstream os;
        os << "field,key,value\n";
        csv_rows(report, "", os);
        return os.str();
    }
    return report.dump(2) + "\n";
}

// Prints the report and mirrors it to --out when given.
void emit(const ordered_json& report, const RunConfig& cfg, bool file_copy = true) {
    const std::string text = render(report, cfg);
    std::cout << text;
    if (file_copy && !cfg.out_path.empty()) write_file(cfg.out_path, text);
}

int cmd_validate(const RunConfig& cfg) {
    ordered_json rep;
    rep["command"] = "validate";
    rep["model"] = cfg.model_path;
    try {
        Mdp m = load_model_file(cfg.model_path);
        rep["valid"] = true;
        rep["num_states"] = m.num_states();
        rep["num_actions"] = m.num_actions();
        rep["max_cost_norm"] = m.max_cost_norm();
        try {
            rep["num_policies"] = policy_count(m);
        } catch (const BudgetError&) {
            rep["num_policies"] = nullptr;
        }
        emit(rep, cfg);
        return 0;
    } catch (const ModelError& e) {
        rep["valid"] = false;
        rep["error"] = e.what();
        emit(rep, cfg);
        return 2;
    }
}

int cmd_solve(const RunConfig& cfg) {
    Mdp m = load_model_file(cfg.model_path);
    RiskCoefficient lam(cfg.lambda);
    ZChoice zc = choose_z(m, cfg.z_flag);

    ordered_json rep;
    rep["command"] = "solve";
    rep["model"] = cfg.model_path;
    rep["provenance"] = provenance(cfg);
    if (auto rho = recognize_example22(m)) {
        rep["rho"] = *rho;
        rep["regime"] = example22_regime(*rho, lam);
    }
    rep["z"] = m.state_name(zc.z);
    if (!zc.search.is_null()) rep["z_search"] = zc.search;
    rep["doeblin"] = doeblin_json(m, zc.z, zc.doeblin);
    if (!zc.doeblin.pass) {
        emit(rep, cfg);
        return 3;
    }

    OptimalSolution sol = optimal_average(m, lam);
    rep["jstar"] = per_state(m, sol.jstar);
    ordered_json pol = ordered_json::object();
    for (int x = 0; x < m.num_states(); ++x)
        pol[m.state_name(x)] = m.action_name(sol.per_state_policy[x].choice[x]);
    rep["optimal_policy"] = pol;
    rep["policies_enumerated"] = sol.policies_enumerated;

    LevelSets ls = level_sets(sol.jstar);
    ordered_json lj;
    lj["gammas"] = ls.gammas;
    lj["sets"] = ordered_json::array();
    for (const auto& set : ls.sets) {
        ordered_json names = ordered_json::array();
        for (int x : set) names.push_back(m.state_name(x));
        lj["sets"].push_back(names);
    }
    lj["xi1"] = ls.xi1;
    rep["level_sets"] = lj;

    rep["lower_bound"] = per_state(m, sol.lower_bound);
    rep["lower_bound_gap"] = sol.gap;

    MinMaxCheck mm = verify_minmax(m, sol.jstar);
    ordered_json mj;
    mj["ok"] = mm.ok;
    mj["residuals"] = per_state(m, mm.residuals);
    rep["minmax"] = mj;

    emit(rep, cfg);
    return 0;
}

int cmd_certify(const RunConfig& cfg) {
    Mdp m = load_model_file(cfg.model_path);
    RiskCoefficient lam(cfg.lambda);
    std::vector<double> alphas = cfg.alphas.empty() ? kDefaultAlphaGrid : cfg.alphas;
    ZChoice zc = choose_z(m, cfg.z_flag);

    ordered_json rep;
    rep["command"] = "certify";
    rep["model"] = cfg.model_path;
    rep["provenance"] = provenance(cfg);
    rep["provenance"]["alphas"] = alphas;
    if (auto rho = recognize_example22(m)) {
        rep["rho"] = *rho;
        rep["regime"] = example22_regime(*rho, lam);
    }
    rep["z"] = m.state_name(zc.z);
    if (!zc.search.is_null()) rep["z_search"] = zc.search;
    rep["doeblin"] = doeblin_json(m, zc.z, zc.doeblin);
    if (!zc.doeblin.pass) {
        emit(rep, cfg);
        return 3;
    }

    const IterationConfig config = iter_config(cfg);
    Theorem35Report thm = verify_theorem35(m, lam, zc.z, alphas, config);
    rep["jstar"] = per_state(m, thm.jstar);
    rep["cnorm"] = thm.cnorm;
    rep["all_certified"] = thm.all_certified;
    rep["gaps_monotone"] = thm.gaps_monotone;

    rep["certificates"] = ordered_json::array();
    for (std::size_t i = 0; i < thm.alphas.size(); ++i) {
        const Certificate& cert = thm.certificates[i];
        ordered_json cj;
        cj["alpha"] = thm.alphas[i];
        cj["status"] = cert.status == CertStatus::certified ? "certified" : "inconclusive";
        cj["g"] = per_state(m, cert.g);
        cj["max_gap"] = thm.max_gaps[i];
        cj["witness_h"] = per_state(m, cert.h);
        cj["residuals"] = per_state(m, cert.residuals);
        cj["iterations"] = cert.report.iterations;
        ordered_json rj = ordered_json::object();
        for (int x = 0; x < m.num_states(); ++x) {
            ordered_json acts = ordered_json::array();
            for (int a : cert.restriction[x]) acts.push_back(m.action_name(a));
            rj[m.state_name(x)] = acts;
        }
        cj["restriction"] = rj;

        DeviationResult dev = deviation_function(m, lam, thm.alphas[i], thm.jstar, zc.z, config);
        ordered_json dj;
        dj["converged"] = dev.report.converged;
        dj["iterations"] = dev.report.iterations;
        dj["h"] = per_state(m, dev.h);
        dj["h_raw"] = per_state(m, dev.h_raw);
        cj["deviation"] = dj;

        rep["certificates"].push_back(cj);
    }

    // Direct membership probe of the optimum itself; inconclusive is the
    // expected outcome whenever no finite witness exists.
    Certificate probe = check_membership(m, lam, thm.jstar, zc.z, config);
    ordered_json pj;
    pj["status"] = probe.status == CertStatus::certified ? "certified" : "inconclusive";
    pj["minmax_ok"] = probe.minmax_ok;
    pj["iterations"] = probe.report.iterations;
    rep["jstar_probe"] = pj;

    emit(rep, cfg);
    return 0;
}

int cmd_example22(const RunConfig& cfg) {
    Mdp m = example22_model(cfg.rho);
    RiskCoefficient lam(cfg.lambda);
    const std::string model_path =
        cfg.out_path.empty() ? std::string("example22_model.json") : cfg.out_path;
    std::string sidecar_path = model_path;
    const std::string suffix = ".json";
    if (sidecar_path.size() >= suffix.size() &&
        sidecar_path.compare(sidecar_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        sidecar_path.resize(sidecar_path.size() - suffix.size());
    sidecar_path += ".expected.json";

    write_file(model_path, serialize_model(m));

    ordered_json sidecar;
    sidecar["rho"] = cfg.rho;
    sidecar["lambda"] = cfg.lambda;
    sidecar["regime"] = example22_regime(cfg.rho, lam);
    sidecar["jstar"] = per_state(m, example22_jstar(cfg.rho, lam));
    write_file(sidecar_path, sidecar.dump(2) + "\n");

    ordered_json rep;
    rep["command"] = "example22";
    rep["model_path"] = model_path;
    rep["expected_path"] = sidecar_path;
    rep["rho"] = cfg.rho;
    rep["lambda"] = cfg.lambda;
    rep["regime"] = sidecar["regime"];
    rep["jstar"] = sidecar["jstar"];
    emit(rep, cfg, /*file_copy=*/false); // --out already holds the model
    return 0;
}

int cmd_doeblin(const RunConfig& cfg) {
    Mdp m = load_model_file(cfg.model_path);
    ordered_json rep;
    rep["command"] = "doeblin";
    rep["model"] = cfg.model_path;
    rep["provenance"] = provenance(cfg);
    ZChoice zc = choose_z(m, cfg.z_flag);
    rep["z"] = m.state_name(zc.z);
    if (!zc.search.is_null()) rep["z_search"] = zc.search;
    rep["doeblin"] = doeblin_json(m, zc.z, zc.doeblin);
    emit(rep, cfg);
    return zc.doeblin.pass ? 0 : 3;
}

int cmd_evaluate(const RunConfig& cfg) {
    Mdp m = load_model_file(cfg.model_path);
    RiskCoefficient lam(cfg.lambda);
    StationaryPolicy f = resolve_policy(m, cfg.policy_flag);

    ordered_json rep;
    rep["command"] = "evaluate";
    rep["model"] = cfg.model_path;
    rep["provenance"] = provenance(cfg);
    rep["policy"] = policy_json(m, f);
    rep["long_run_average"] = per_state(m, long_run_average(m, f, lam));
    if (cfg.horizon > 0) {
        ordered_json fh;
        fh["n"] = cfg.horizon;
        fh["value"] = per_state(m, finite_horizon_cost(m, f, lam, cfg.horizon));
        auto [rate, limit] = verify_growth(m, f, lam, 0, cfg.horizon);
        fh["rate_at_n"] = rate;
        fh["rate_limit"] = limit;
        rep["finite_horizon"] = fh;
    }
    emit(rep, cfg);
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    Mdp m = load_model_file(cfg.model_path);
    RiskCoefficient lam(cfg.lambda);
    StationaryPolicy f = resolve_policy(m, cfg.policy_flag);
    const int x = cfg.start_flag.empty() ? 0 : resolve_state(m, cfg.start_flag);

    ordered_json rep;
    rep["command"] = "simulate";
    rep["model"] = cfg.model_path;
    rep["provenance"] = provenance(cfg);
    rep["policy"] = policy_json(m, f);
    rep["start"] = m.state_name(x);
    rep["horizon"] = cfg.horizon;
    rep["samples"] = cfg.samples;

    MonteCarloEstimate est =
        mc_certain_equivalent(m, f, lam, x, cfg.horizon, cfg.samples, cfg.seed);
    ordered_json ej;
    ej["estimate"] = est.estimate;
    ej["stderr_log"] = est.stderr_log;
    ej["heavy_tail"] = est.heavy_tail;
    const double exact = finite_horizon_cost(m, f, lam, cfg.horizon)[x];
    ej["exact"] = exact;
    ej["abs_error"] = std::abs(est.estimate - exact);
    rep["certain_equivalent"] = ej;

    if (!cfg.z_flag.empty()) {
        const int z = resolve_state(m, cfg.z_flag);
        auto surv = mc_hitting_tail(m, f, z, cfg.horizon, cfg.samples, cfg.seed);
        ordered_json tj;
        tj["z"] = m.state_name(z);
        ordered_json curves = ordered_json::object();
        for (int s = 0; s < m.num_states(); ++s) curves[m.state_name(s)] = surv[s];
        tj["survival"] = curves;
        rep["hitting_tail"] = tj;
    }

    emit(rep, cfg);
    return 0;
}

int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const ModelError& e) {
        ordered_json err{{"error", "model"}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        std::cerr << "model error: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionError& e) {
        ordered_json err{{"error", "precondition"}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        std::cerr << "precondition error: " << e.what() << "\n";
        return 2;
    } catch (const ContradictionError& e) {
        ordered_json err{{"error", "contradiction"}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        std::cerr << "theorem contradiction: " << e.what() << "\n";
        return 4;
    } catch (const BudgetError& e) {
        ordered_json err{{"error", "budget"}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-sensitive average-cost analysis for finite controlled Markov chains"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&cfg](CLI::App* sub, bool needs_model) {
        if (needs_model)
            sub->add_option("--model", cfg.model_path, "model JSON file")->required();
        sub->add_option("--lambda", cfg.lambda, "risk coefficient (> 0)");
        sub->add_option("--alpha", cfg.alphas, "certificate mixing weight in (0,1); repeatable");
        sub->add_option("--z", cfg.z_flag, "reference state (name or index); searched if absent");
        sub->add_option("--tol", cfg.tol, "convergence tolerance");
        sub->add_option("--max-iter", cfg.max_iter, "iteration budget");
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--output", cfg.output, "report format")
            ->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--out", cfg.out_path, "write output to this path");
    };

    CLI::App* validate = app.add_subcommand("validate", "parse and validate a model file");
    add_common(validate, true);
    CLI::App* solve = app.add_subcommand("solve", "optimal risk-sensitive average cost");
    add_common(solve, true);
    CLI::App* certify =
        app.add_subcommand("certify", "certificate-family experiment and membership probes");
    add_common(certify, true);
    CLI::App* example22 =
        app.add_subcommand("example22", "write the built-in three-state fixture");
    add_common(example22, false);
    example22->add_option("--rho", cfg.rho, "stickiness parameter in (0,1)");
    CLI::App* doeblin = app.add_subcommand("doeblin", "simultaneous recurrence check");
    add_common(doeblin, true);
    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a single stationary policy");
    add_common(evaluate, true);
    evaluate->add_option("--policy", cfg.policy_flag, "comma-separated action per state");
    evaluate->add_option("--horizon", cfg.horizon, "finite-horizon diagnostic length");
    CLI::App* simulate = app.add_subcommand("simulate", "seeded Monte Carlo cross-check");
    add_common(simulate, true);
    simulate->add_option("--policy", cfg.policy_flag, "comma-separated action per state");
    simulate->add_option("--horizon", cfg.horizon, "trajectory length");
    simulate->add_option("--samples", cfg.samples, "number of trajectories");
    simulate->add_option("--x", cfg.start_flag, "start state (name or index)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (validate->parsed()) return guarded([&] { return cmd_validate(cfg); });
    if (solve->parsed()) return guarded([&] { return cmd_solve(cfg); });
    if (certify->parsed()) return guarded([&] { return cmd_certify(cfg); });
    if (example22->parsed()) return guarded([&] { return cmd_example22(cfg); });
    if (doeblin->parsed()) return guarded([&] { return cmd_doeblin(cfg); });
    if (evaluate->parsed()) return guarded([&] { return cmd_evaluate(cfg); });
    if (simulate->parsed()) return guarded([&] { return cmd_simulate(cfg); });
    return 1;
}
