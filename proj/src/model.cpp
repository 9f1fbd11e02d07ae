#include "rsmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rsmdp {

using nlohmann::json;
using nlohmann::ordered_json;

RiskCoefficient::RiskCoefficient(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw PreconditionError("risk coefficient must be a finite positive real, got " +
                                std::to_string(value));
}

namespace {

std::string pair_name(const Mdp& m, int x, int a) {
    return "state '" + m.state_name(x) + "', action '" + m.action_name(a) + "'";
}

} // namespace

Mdp::Mdp(std::vector<std::string> states, std::vector<std::string> actions,
         std::vector<std::vector<int>> admissible,
         std::vector<std::vector<double>> cost,
         std::vector<std::vector<std::vector<double>>> kernel)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      admissible_(std::move(admissible)),
      cost_(std::move(cost)),
      kernel_(std::move(kernel)) {
    const int n = static_cast<int>(states_.size());
    const int na = static_cast<int>(actions_.size());
    if (n == 0) throw ModelError("model has no states");
    if (na == 0) throw ModelError("model has no actions");
    for (const auto& seq : {&states_, &actions_}) {
        std::set<std::string> seen;
        for (const auto& name : *seq)
            if (!seen.insert(name).second)
                throw ModelError("duplicate identifier '" + name + "'");
    }
    if (static_cast<int>(admissible_.size()) != n ||
        static_cast<int>(cost_.size()) != n ||
        static_cast<int>(kernel_.size()) != n)
        throw ModelError("admissible/cost/kernel must have one entry per state");

    slot_.assign(n, std::vector<int>(na, -1));
    support_.resize(n);
    for (int x = 0; x < n; ++x) {
        const auto& acts = admissible_[x];
        if (acts.empty())
            throw ModelError("empty admissible set at state '" + states_[x] + "'");
        if (!std::is_sorted(acts.begin(), acts.end()) ||
            std::adjacent_find(acts.begin(), acts.end()) != acts.end())
            throw ModelError("admissible actions at state '" + states_[x] +
                             "' must be sorted and distinct");
        if (acts.front() < 0 || acts.back() >= na)
            throw ModelError("admissible action index out of range at state '" + states_[x] + "'");
        if (cost_[x].size() != acts.size() || kernel_[x].size() != acts.size())
            throw ModelError("cost/kernel at state '" + states_[x] +
                             "' must cover exactly the admissible actions");
        support_[x].resize(acts.size());
        for (std::size_t j = 0; j < acts.size(); ++j) {
            const int a = acts[j];
            slot_[x][a] = static_cast<int>(j);
            if (!std::isfinite(cost_[x][j]))
                throw ModelError("non-finite cost at " + pair_name(*this, x, a));
            cnorm_ = std::max(cnorm_, std::fabs(cost_[x][j]));
            const auto& p = kernel_[x][j];
            if (static_cast<int>(p.size()) != n)
                throw ModelError("kernel row at " + pair_name(*this, x, a) +
                                 " must have one entry per state");
            double sum = 0.0;
            for (int y = 0; y < n; ++y) {
                if (!(p[y] >= 0.0))
                    throw ModelError("negative probability at " + pair_name(*this, x, a) +
                                     ", target '" + states_[y] + "'");
                sum += p[y];
                if (p[y] > 0.0) support_[x][j].push_back(y);
            }
            if (std::fabs(sum - 1.0) > kRowSumTol) {
                std::ostringstream os;
                os.precision(17);
                os << "kernel row at " << pair_name(*this, x, a) << " sums to " << sum
                   << ", expected 1 within " << kRowSumTol;
                throw ModelError(os.str());
            }
        }
    }
}

int Mdp::slot(int x, int a) const {
    const int j = slot_[x][a];
    if (j < 0)
        throw PreconditionError("action '" + actions_[a] + "' not admissible at state '" +
                                states_[x] + "'");
    return j;
}

bool Mdp::is_admissible(int x, int a) const {
    return a >= 0 && a < num_actions() && slot_[x][a] >= 0;
}

std::optional<int> Mdp::state_index(const std::string& name) const {
    for (int x = 0; x < num_states(); ++x)
        if (states_[x] == name) return x;
    return std::nullopt;
}

std::optional<int> Mdp::action_index(const std::string& name) const {
    for (int a = 0; a < num_actions(); ++a)
        if (actions_[a] == name) return a;
    return std::nullopt;
}

namespace {

const json& require_key(const json& obj, const char* key, const char* where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ModelError(std::string("missing key '") + key + "' in " + where);
    return *it;
}

std::vector<std::string> parse_name_array(const json& arr, const char* what) {
    if (!arr.is_array() || arr.empty())
        throw ModelError(std::string("'") + what + "' must be a nonempty array of strings");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string())
            throw ModelError(std::string("'") + what + "' must contain only strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

} // namespace

Mdp load_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ModelError(std::string("model document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ModelError("model document must be a JSON object");
    static const std::set<std::string> known = {"states", "actions", "admissible", "cost",
                                               "transitions"};
    for (const auto& item : doc.items())
        if (!known.count(item.key()))
            throw ModelError("unknown top-level key '" + item.key() + "'");

    const auto states = parse_name_array(require_key(doc, "states", "model document"), "states");
    const auto actions = parse_name_array(require_key(doc, "actions", "model document"), "actions");
    const int n = static_cast<int>(states.size());

    auto state_of = [&](const std::string& name, const char* where) {
        for (int x = 0; x < n; ++x)
            if (states[x] == name) return x;
        throw ModelError(std::string(where) + " references unknown state '" + name + "'");
    };
    auto action_of = [&](const std::string& name, const char* where) {
        for (int a = 0; a < static_cast<int>(actions.size()); ++a)
            if (actions[a] == name) return a;
        throw ModelError(std::string(where) + " references unknown action '" + name + "'");
    };

    const json& adm_doc = require_key(doc, "admissible", "model document");
    if (!adm_doc.is_object()) throw ModelError("'admissible' must be an object");
    std::vector<std::vector<int>> admissible(n);
    for (const auto& item : adm_doc.items()) {
        const int x = state_of(item.key(), "'admissible'");
        if (!item.value().is_array())
            throw ModelError("'admissible' entry for state '" + item.key() + "' must be an array");
        for (const auto& v : item.value()) {
            if (!v.is_string())
                throw ModelError("'admissible' entry for state '" + item.key() +
                                 "' must contain action names");
            admissible[x].push_back(action_of(v.get<std::string>(), "'admissible'"));
        }
        std::sort(admissible[x].begin(), admissible[x].end());
        if (std::adjacent_find(admissible[x].begin(), admissible[x].end()) != admissible[x].end())
            throw ModelError("duplicate admissible action at state '" + item.key() + "'");
    }
    for (int x = 0; x < n; ++x)
        if (admissible[x].empty())
            throw ModelError("state '" + states[x] + "' has no admissible actions");

    // Costs and transition rows must cover exactly the admissible pairs.
    const json& cost_doc = require_key(doc, "cost", "model document");
    const json& trans_doc = require_key(doc, "transitions", "model document");
    if (!cost_doc.is_object()) throw ModelError("'cost' must be an object");
    if (!trans_doc.is_object()) throw ModelError("'transitions' must be an object");

    std::vector<std::vector<double>> cost(n);
    std::vector<std::vector<std::vector<double>>> kernel(n);
    for (int x = 0; x < n; ++x) {
        cost[x].assign(admissible[x].size(), 0.0);
        kernel[x].assign(admissible[x].size(), std::vector<double>(n, 0.0));
    }
    std::vector<std::vector<char>> cost_seen(n), row_seen(n);
    for (int x = 0; x < n; ++x) {
        cost_seen[x].assign(admissible[x].size(), 0);
        row_seen[x].assign(admissible[x].size(), 0);
    }
    auto slot_of = [&](int x, int a, const char* where) {
        auto it = std::lower_bound(admissible[x].begin(), admissible[x].end(), a);
        if (it == admissible[x].end() || *it != a)
            throw ModelError(std::string(where) + " defined for inadmissible pair: state '" +
                             states[x] + "', action '" + actions[a] + "'");
        return static_cast<int>(it - admissible[x].begin());
    };

    for (const auto& per_state : cost_doc.items()) {
        const int x = state_of(per_state.key(), "'cost'");
        if (!per_state.value().is_object())
            throw ModelError("'cost' entry for state '" + per_state.key() + "' must be an object");
        for (const auto& per_action : per_state.value().items()) {
            const int a = action_of(per_action.key(), "'cost'");
            const int j = slot_of(x, a, "'cost'");
            if (!per_action.value().is_number())
                throw ModelError("cost at state '" + states[x] + "', action '" + actions[a] +
                                 "' must be a number");
            cost[x][j] = per_action.value().get<double>();
            cost_seen[x][j] = 1;
        }
    }
    for (const auto& per_state : trans_doc.items()) {
        const int x = state_of(per_state.key(), "'transitions'");
        if (!per_state.value().is_object())
            throw ModelError("'transitions' entry for state '" + per_state.key() +
                             "' must be an object");
        for (const auto& per_action : per_state.value().items()) {
            const int a = action_of(per_action.key(), "'transitions'");
            const int j = slot_of(x, a, "'transitions'");
            if (!per_action.value().is_object())
                throw ModelError("transition row at state '" + states[x] + "', action '" +
                                 actions[a] + "' must be an object");
            for (const auto& target : per_action.value().items()) {
                const int y = state_of(target.key(), "'transitions'");
                if (!target.value().is_number())
                    throw ModelError("transition probability at state '" + states[x] +
                                     "', action '" + actions[a] + "', target '" + states[y] +
                                     "' must be a number");
                kernel[x][j][y] = target.value().get<double>();
            }
            row_seen[x][j] = 1;
        }
    }
    for (int x = 0; x < n; ++x)
        for (std::size_t j = 0; j < admissible[x].size(); ++j) {
            const std::string where =
                "state '" + states[x] + "', action '" + actions[admissible[x][j]] + "'";
            if (!cost_seen[x][j]) throw ModelError("cost missing for " + where);
            if (!row_seen[x][j]) throw ModelError("transition row missing for " + where);
        }

    return Mdp(states, actions, std::move(admissible), std::move(cost), std::move(kernel));
}

std::string serialize_model(const Mdp& m) {
    ordered_json doc;
    doc["states"] = ordered_json::array();
    for (int x = 0; x < m.num_states(); ++x) doc["states"].push_back(m.state_name(x));
    doc["actions"] = ordered_json::array();
    for (int a = 0; a < m.num_actions(); ++a) doc["actions"].push_back(m.action_name(a));
    ordered_json adm = ordered_json::object();
    ordered_json cost = ordered_json::object();
    ordered_json trans = ordered_json::object();
    for (int x = 0; x < m.num_states(); ++x) {
        ordered_json acts = ordered_json::array();
        ordered_json cx = ordered_json::object();
        ordered_json tx = ordered_json::object();
        for (int a : m.admissible(x)) {
            acts.push_back(m.action_name(a));
            cx[m.action_name(a)] = m.cost(x, a);
            ordered_json row = ordered_json::object();
            for (int y : m.support(x, a)) row[m.state_name(y)] = m.row(x, a)[y];
            tx[m.action_name(a)] = std::move(row);
        }
        adm[m.state_name(x)] = std::move(acts);
        cost[m.state_name(x)] = std::move(cx);
        trans[m.state_name(x)] = std::move(tx);
    }
    doc["admissible"] = std::move(adm);
    doc["cost"] = std::move(cost);
    doc["transitions"] = std::move(trans);
    return doc.dump(2) + "\n";
}

std::uint64_t policy_count(const Mdp& m, std::uint64_t cap) {
    std::uint64_t count = 1;
    for (int x = 0; x < m.num_states(); ++x) {
        const std::uint64_t k = m.admissible(x).size();
        if (count > cap / k)
            throw BudgetError("policy enumeration would exceed the cap of " + std::to_string(cap));
        count *= k;
    }
    return count;
}

StationaryPolicy policy_at(const Mdp& m, std::uint64_t k) {
    const int n = m.num_states();
    StationaryPolicy f;
    f.choice.assign(n, 0);
    // Mixed-radix decode; state 0 is the most significant digit.
    for (int x = n - 1; x >= 0; --x) {
        const auto& acts = m.admissible(x);
        f.choice[x] = acts[k % acts.size()];
        k /= acts.size();
    }
    if (k != 0) throw PreconditionError("policy index out of range");
    return f;
}

PolicyEnumerator::PolicyEnumerator(const Mdp& m) : m_(&m), digit_(m.num_states(), 0) {}

bool PolicyEnumerator::next(StationaryPolicy& out) {
    if (exhausted_) return false;
    if (started_) {
        // Odometer increment, last state varies fastest.
        int x = m_->num_states() - 1;
        while (x >= 0) {
            if (++digit_[x] < static_cast<int>(m_->admissible(x).size())) break;
            digit_[x] = 0;
            --x;
        }
        if (x < 0) {
            exhausted_ = true;
            return false;
        }
    }
    started_ = true;
    out.choice.resize(m_->num_states());
    for (int x = 0; x < m_->num_states(); ++x) out.choice[x] = m_->admissible(x)[digit_[x]];
    return true;
}

} // namespace rsmdp
