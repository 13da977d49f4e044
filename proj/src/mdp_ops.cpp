#include "poisonlab/mdp_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace poisonlab {

namespace {
constexpr double kTol = 1e-9;
}

double action_distance(const Action& a1, const Action& a2, const ActionSpace& space) {
    if (space.kind == ActionSpace::Kind::Discrete) {
        if (!a1.is_discrete() || !a2.is_discrete())
            throw std::invalid_argument("discrete space expects discrete actions");
        return action_distance(a1.index, a2.index, space);
    }
    return action_distance(a1.box, a2.box, space);
}

double action_distance(int a1, int a2, const ActionSpace& space) {
    if (space.kind != ActionSpace::Kind::Discrete)
        throw std::invalid_argument("index actions need a discrete space");
    if (a1 < 0 || a1 >= space.n || a2 < 0 || a2 >= space.n)
        throw std::invalid_argument("action index out of range");
    return a1 == a2 ? 0.0 : 1.0;
}

double action_distance(const Vec& a1, const Vec& a2, const ActionSpace& space) {
    if (space.kind != ActionSpace::Kind::Box)
        throw std::invalid_argument("vector actions need a Box space");
    if (static_cast<int>(a1.size()) != space.dim() || static_cast<int>(a2.size()) != space.dim())
        throw std::invalid_argument("action dimension does not match space");
    double sq = 0.0;
    for (int i = 0; i < space.dim(); ++i) sq += (a1[i] - a2[i]) * (a1[i] - a2[i]);
    return std::sqrt(sq) / space.diameter();
}

namespace {

void require_tabular(const Policy& pi) {
    if (!pi.is_tabular())
        throw UnsupportedError("tabular policy required");
}

// Row-stochastic state transition matrix under pi.
Mat policy_kernel(const TabularMdp& mdp, const Policy& pi) {
    Mat k(mdp.n_states, Vec(mdp.n_states, 0.0));
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.terminal[s]) continue;
        for (int a = 0; a < mdp.n_actions; ++a) {
            double pa = pi.prob(s, a);
            if (pa == 0.0) continue;
            const Vec& row = mdp.transition[s][a];
            for (int s2 = 0; s2 < mdp.n_states; ++s2) k[s][s2] += pa * row[s2];
        }
    }
    return k;
}

} // namespace

OccupancyResult occupancy(const TabularMdp& mdp, const Policy& pi) {
    require_tabular(pi);
    pi.validate(mdp.n_states, mdp.n_actions);
    const Mat kernel = policy_kernel(mdp, pi);

    OccupancyResult out;
    out.mu.assign(mdp.n_states, 0.0);
    Vec d = mdp.initial_dist;
    for (int t = 0; t < mdp.horizon_cap; ++t) {
        Vec next(mdp.n_states, 0.0);
        bool live = false;
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s] || d[s] == 0.0) continue;  // terminal mass retires
            out.mu[s] += d[s];
            live = true;
            for (int s2 = 0; s2 < mdp.n_states; ++s2) next[s2] += d[s] * kernel[s][s2];
        }
        d.swap(next);
        if (!live) break;
    }
    for (int s = 0; s < mdp.n_states; ++s)
        if (!mdp.terminal[s]) out.truncation_mass += d[s];
    for (double m : out.mu) out.episode_length += m;
    return out;
}

double policy_value(const TabularMdp& mdp, const Policy& pi) {
    require_tabular(pi);
    pi.validate(mdp.n_states, mdp.n_actions);
    // Backward induction; the forward (occupancy-weighted) route is the
    // independent cross-check used in tests.
    Vec v(mdp.n_states, 0.0);
    for (int t = mdp.horizon_cap - 1; t >= 0; --t) {
        Vec v_prev(mdp.n_states, 0.0);
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            double val = 0.0;
            for (int a = 0; a < mdp.n_actions; ++a) {
                double pa = pi.prob(s, a);
                if (pa == 0.0) continue;
                double q = mdp.expected_reward[s][a];
                const Vec& row = mdp.transition[s][a];
                for (int s2 = 0; s2 < mdp.n_states; ++s2) q += row[s2] * v[s2];
                val += pa * q;
            }
            v_prev[s] = val;
        }
        v.swap(v_prev);
    }
    double total = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) total += mdp.initial_dist[s] * v[s];
    return total;
}

double policy_distance(const TabularMdp& mdp, const Policy& pi1, const Policy& pi2, double r) {
    if (!pi1.is_deterministic() || !pi2.is_deterministic())
        throw UnsupportedError("policy_distance requires deterministic tabular policies");
    if (!(r > 0.0 && r < 1.0))
        throw std::invalid_argument("radius must lie in (0, 1)");
    pi1.validate(mdp.n_states, mdp.n_actions);
    pi2.validate(mdp.n_states, mdp.n_actions);
    const OccupancyResult occ = occupancy(mdp, pi1);
    double d = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (occ.mu[s] == 0.0) continue;
        if (pi1.actions[s] != pi2.actions[s]) d += occ.mu[s];  // indicator > r for any r in (0,1)
    }
    return d;
}

namespace {

struct ValueIterationOut {
    double optimal_value = 0.0;              // possibly time-dependent optimum
    std::vector<std::vector<int>> greedy;    // greedy[t][s], lowest-index ties
};

ValueIterationOut value_iteration(const TabularMdp& mdp,
                                  const std::vector<std::vector<bool>>* forbidden) {
    ValueIterationOut out;
    out.greedy.assign(mdp.horizon_cap, std::vector<int>(mdp.n_states, 0));
    Vec v(mdp.n_states, 0.0);
    for (int t = mdp.horizon_cap - 1; t >= 0; --t) {
        Vec v_prev(mdp.n_states, 0.0);
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            double best = -std::numeric_limits<double>::infinity();
            int best_a = -1;
            for (int a = 0; a < mdp.n_actions; ++a) {
                if (forbidden && (*forbidden)[s][a]) continue;
                double q = mdp.expected_reward[s][a];
                const Vec& row = mdp.transition[s][a];
                for (int s2 = 0; s2 < mdp.n_states; ++s2) q += row[s2] * v[s2];
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            if (best_a < 0)
                throw ConfigError("state " + std::to_string(s) + " has no admissible action");
            v_prev[s] = best;
            out.greedy[t][s] = best_a;
        }
        v.swap(v_prev);
    }
    for (int s = 0; s < mdp.n_states; ++s) out.optimal_value += mdp.initial_dist[s] * v[s];
    return out;
}

OptimalPolicyResult best_stationary(const TabularMdp& mdp,
                                    const std::vector<std::vector<bool>>* forbidden,
                                    long long enumeration_guard) {
    mdp.validate();
    const ValueIterationOut vi = value_iteration(mdp, forbidden);

    // Candidate stationary policies: the greedy snapshot at each horizon step.
    std::vector<std::vector<int>> candidates;
    for (const auto& g : vi.greedy)
        if (candidates.empty() || g != candidates.back())
            if (std::find(candidates.begin(), candidates.end(), g) == candidates.end())
                candidates.push_back(g);
    // Evaluate t = 0 first so ties resolve toward it.
    std::reverse(candidates.begin(), candidates.end());

    OptimalPolicyResult res;
    res.value = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        Policy pi = Policy::deterministic(c);
        double val = policy_value(mdp, pi);
        if (val > res.value + kTol) {
            res.value = val;
            res.policy = std::move(pi);
        }
    }
    if (std::abs(res.value - vi.optimal_value) <= kTol) {
        res.stationary_exact = true;  // matches the unconstrained optimum
        return res;
    }

    // Count policies over non-terminal states only; terminal-state actions are
    // value-irrelevant and normalized to 0.
    std::vector<int> free_states;
    for (int s = 0; s < mdp.n_states; ++s)
        if (!mdp.terminal[s]) free_states.push_back(s);
    double count = 1.0;
    for (std::size_t i = 0; i < free_states.size() && count <= 2.0 * enumeration_guard; ++i)
        count *= mdp.n_actions;
    if (count > enumeration_guard) {
        res.stationary_exact = false;
        return res;
    }

    std::vector<int> assign(free_states.size(), 0);
    std::vector<int> actions(mdp.n_states, 0);
    while (true) {
        if (forbidden == nullptr ||
            [&] {
                for (std::size_t i = 0; i < free_states.size(); ++i)
                    if ((*forbidden)[free_states[i]][assign[i]]) return false;
                return true;
            }()) {
            for (std::size_t i = 0; i < free_states.size(); ++i) actions[free_states[i]] = assign[i];
            Policy pi = Policy::deterministic(actions);
            double val = policy_value(mdp, pi);
            if (val > res.value + kTol) {
                res.value = val;
                res.policy = std::move(pi);
            }
        }
        // lexicographic increment => earliest (lowest-action) maximum wins ties
        std::size_t i = assign.size();
        while (i > 0) {
            --i;
            if (++assign[i] < mdp.n_actions) break;
            assign[i] = 0;
            if (i == 0) {
                res.stationary_exact = true;
                return res;
            }
        }
        if (assign.empty()) {
            res.stationary_exact = true;
            return res;
        }
    }
}

} // namespace

OptimalPolicyResult optimal_policy(const TabularMdp& mdp, long long enumeration_guard) {
    return best_stationary(mdp, nullptr, enumeration_guard);
}

OptimalPolicyResult optimal_policy_masked(const TabularMdp& mdp,
                                          const std::vector<std::vector<bool>>& forbidden,
                                          long long enumeration_guard) {
    return best_stationary(mdp, &forbidden, enumeration_guard);
}

} // namespace poisonlab
