#pragma once

// Shared generators for unit and acceptance suites.

#include <random>
#include <vector>

#include "poisonlab/rng.hpp"
#include "poisonlab/types.hpp"

namespace poisonlab::testutil {

struct MdpOptions {
    int n_states = 4;
    int n_actions = 3;
    int horizon = 12;
    double terminal_prob = 0.25;  // per state, except state 0
    double min_transition = 0.0;  // lower bound for every transition entry
    double reward_range = 1.0;    // rewards uniform in [-range, range]
    double noise_std = 0.0;
    bool constant_reward = false;     // one shared reward for every (s, a)
    double constant_reward_value = 1.0;
};

inline TabularMdp random_mdp(Rng& rng, const MdpOptions& opt = {}) {
    TabularMdp mdp;
    mdp.n_states = opt.n_states;
    mdp.n_actions = opt.n_actions;
    mdp.horizon_cap = opt.horizon;
    mdp.transition.assign(opt.n_states, Mat(opt.n_actions, Vec(opt.n_states, 0.0)));
    mdp.expected_reward.assign(opt.n_states, Vec(opt.n_actions, 0.0));
    mdp.reward_noise_std.assign(opt.n_states, Vec(opt.n_actions, opt.noise_std));
    mdp.terminal.assign(opt.n_states, false);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int s = 1; s < opt.n_states; ++s)
        if (unif(rng) < opt.terminal_prob) mdp.terminal[s] = true;

    const double mix = opt.min_transition * opt.n_states;
    std::uniform_real_distribution<double> reward(-opt.reward_range, opt.reward_range);
    for (int s = 0; s < opt.n_states; ++s) {
        for (int a = 0; a < opt.n_actions; ++a) {
            if (mdp.terminal[s]) {
                mdp.transition[s][a][s] = 1.0;
                mdp.reward_noise_std[s][a] = 0.0;
                continue;
            }
            Vec raw(opt.n_states);
            double sum = 0.0;
            for (double& x : raw) {
                x = -std::log(1.0 - unif(rng));  // exponential => dirichlet
                sum += x;
            }
            for (int s2 = 0; s2 < opt.n_states; ++s2)
                mdp.transition[s][a][s2] =
                    (1.0 - mix) * raw[s2] / sum + opt.min_transition;
            mdp.expected_reward[s][a] =
                opt.constant_reward ? opt.constant_reward_value : reward(rng);
        }
    }

    Vec mu(opt.n_states);
    double mu_sum = 0.0;
    for (int s = 0; s < opt.n_states; ++s) {
        mu[s] = mdp.terminal[s] ? 0.0 : unif(rng) + 0.05;
        mu_sum += mu[s];
    }
    for (double& m : mu) m /= mu_sum;
    mdp.initial_dist = mu;
    mdp.validate();
    return mdp;
}

inline Policy random_det_policy(Rng& rng, const TabularMdp& mdp) {
    std::uniform_int_distribution<int> pick(0, mdp.n_actions - 1);
    std::vector<int> actions(mdp.n_states);
    for (int& a : actions) a = pick(rng);
    return Policy::deterministic(actions);
}

inline Policy random_stochastic_policy(Rng& rng, const TabularMdp& mdp) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Mat dist(mdp.n_states, Vec(mdp.n_actions, 0.0));
    for (int s = 0; s < mdp.n_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a) {
            dist[s][a] = unif(rng) + 0.01;
            sum += dist[s][a];
        }
        for (int a = 0; a < mdp.n_actions; ++a) dist[s][a] /= sum;
    }
    return Policy::stochastic(dist);
}

/// n decision states, every action advances, terminal sink at the end.
/// reward_per_step for every (s, a).
inline TabularMdp fixed_chain(int n, double reward_per_step, int horizon = -1) {
    TabularMdp mdp;
    mdp.n_states = n + 1;
    mdp.n_actions = 2;
    mdp.horizon_cap = horizon < 0 ? n : horizon;
    mdp.transition.assign(n + 1, Mat(2, Vec(n + 1, 0.0)));
    mdp.expected_reward.assign(n + 1, Vec(2, 0.0));
    mdp.reward_noise_std.assign(n + 1, Vec(2, 0.0));
    mdp.initial_dist.assign(n + 1, 0.0);
    mdp.initial_dist[0] = 1.0;
    mdp.terminal.assign(n + 1, false);
    mdp.terminal[n] = true;
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < 2; ++a) {
            mdp.transition[s][a][s + 1] = 1.0;
            mdp.expected_reward[s][a] = reward_per_step;
        }
    for (int a = 0; a < 2; ++a) mdp.transition[n][a][n] = 1.0;
    mdp.validate();
    return mdp;
}

} // namespace poisonlab::testutil
