#include "poisonlab/types.hpp"

#include <cmath>
#include <cstddef>
#include <limits>

namespace poisonlab {

namespace {
constexpr double kStochasticTol = 1e-9;
}

ActionSpace ActionSpace::discrete(int n_actions) {
    if (n_actions < 2)
        throw ValidationError("discrete action space needs n >= 2, got " + std::to_string(n_actions));
    ActionSpace s;
    s.kind = Kind::Discrete;
    s.n = n_actions;
    s.diameter_ = 1.0;
    return s;
}

ActionSpace ActionSpace::box(Vec low, Vec high) {
    if (low.empty() || low.size() != high.size())
        throw ValidationError("box action space needs matching non-empty bounds");
    double sq = 0.0;
    for (std::size_t i = 0; i < low.size(); ++i) {
        if (!(low[i] < high[i]))
            throw ValidationError("box action space needs low[i] < high[i]");
        sq += (high[i] - low[i]) * (high[i] - low[i]);
    }
    ActionSpace s;
    s.kind = Kind::Box;
    s.low = std::move(low);
    s.high = std::move(high);
    s.diameter_ = std::sqrt(sq);
    return s;
}

void TabularMdp::validate() const {
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("mdp needs at least one state and one action");
    if (horizon_cap < 1)
        throw ValidationError("horizon_cap must be >= 1");
    auto check_shape = [&](bool ok, const char* what) {
        if (!ok) throw ValidationError(std::string("mdp shape mismatch: ") + what);
    };
    check_shape(static_cast<int>(transition.size()) == n_states, "transition");
    check_shape(static_cast<int>(expected_reward.size()) == n_states, "expected_reward");
    check_shape(static_cast<int>(reward_noise_std.size()) == n_states, "reward_noise_std");
    check_shape(static_cast<int>(initial_dist.size()) == n_states, "initial_dist");
    check_shape(static_cast<int>(terminal.size()) == n_states, "terminal");

    double mu_sum = 0.0;
    for (double p : initial_dist) {
        if (p < 0.0) throw ValidationError("initial_dist has a negative entry");
        mu_sum += p;
    }
    if (std::abs(mu_sum - 1.0) > kStochasticTol)
        throw ValidationError("initial_dist does not sum to 1");

    for (int s = 0; s < n_states; ++s) {
        check_shape(static_cast<int>(transition[s].size()) == n_actions, "transition row");
        check_shape(static_cast<int>(expected_reward[s].size()) == n_actions, "reward row");
        check_shape(static_cast<int>(reward_noise_std[s].size()) == n_actions, "noise row");
        for (int a = 0; a < n_actions; ++a) {
            const Vec& row = transition[s][a];
            check_shape(static_cast<int>(row.size()) == n_states, "transition dist");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw ValidationError("transition has a negative entry");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kStochasticTol)
                throw ValidationError("transition row does not sum to 1 at state " + std::to_string(s));
            if (reward_noise_std[s][a] < 0.0)
                throw ValidationError("reward_noise_std must be nonnegative");
            if (terminal[s]) {
                if (std::abs(row[s] - 1.0) > kStochasticTol)
                    throw ValidationError("terminal state " + std::to_string(s) + " is not absorbing");
                if (expected_reward[s][a] != 0.0)
                    throw ValidationError("terminal state " + std::to_string(s) + " has nonzero reward");
            }
        }
    }
}

Policy Policy::deterministic(std::vector<int> actions_per_state) {
    Policy p;
    p.kind = Kind::TabularDeterministic;
    p.actions = std::move(actions_per_state);
    return p;
}

Policy Policy::stochastic(Mat dist_per_state) {
    Policy p;
    p.kind = Kind::TabularStochastic;
    p.dist = std::move(dist_per_state);
    return p;
}

Policy Policy::parametric(Vec weights, std::string feature_map) {
    Policy p;
    p.kind = Kind::Parametric;
    p.weights = std::move(weights);
    p.feature_map = std::move(feature_map);
    return p;
}

double Policy::prob(int state, int a) const {
    switch (kind) {
        case Kind::TabularDeterministic:
            return actions.at(state) == a ? 1.0 : 0.0;
        case Kind::TabularStochastic:
            return dist.at(state).at(a);
        case Kind::Parametric:
            throw UnsupportedError("parametric policy has no tabular action probabilities");
    }
    return 0.0;
}

int Policy::action_at(int state) const {
    if (kind != Kind::TabularDeterministic)
        throw UnsupportedError("deterministic tabular policy required");
    return actions.at(state);
}

void Policy::validate(int n_states, int n_actions) const {
    if (kind == Kind::TabularDeterministic) {
        if (static_cast<int>(actions.size()) != n_states)
            throw ValidationError("policy has wrong number of states");
        for (int a : actions)
            if (a < 0 || a >= n_actions)
                throw ValidationError("policy action out of range");
    } else if (kind == Kind::TabularStochastic) {
        if (static_cast<int>(dist.size()) != n_states)
            throw ValidationError("policy has wrong number of states");
        for (const Vec& row : dist) {
            if (static_cast<int>(row.size()) != n_actions)
                throw ValidationError("policy row has wrong number of actions");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0.0) throw ValidationError("policy has a negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kStochasticTol)
                throw ValidationError("policy row does not sum to 1");
        }
    }
}

namespace {

// Forward pass for "mlp2:<in>:<hid>:<out>" weights. Layout: W1 (hid x in), b1,
// W2 (hid x hid), b2, W3 (out x hid), b3; all row-major.
Vec mlp2_forward(const Vec& w, const Vec& x, int in, int hid, int out) {
    std::size_t expect = static_cast<std::size_t>(hid) * in + hid +
                         static_cast<std::size_t>(hid) * hid + hid +
                         static_cast<std::size_t>(out) * hid + out;
    if (w.size() != expect)
        throw ValidationError("mlp2 weight blob has wrong length");
    if (static_cast<int>(x.size()) != in)
        throw ValidationError("mlp2 input has wrong dimension");
    std::size_t off = 0;
    Vec h1(hid), h2(hid), y(out);
    for (int i = 0; i < hid; ++i) {
        double z = 0.0;
        for (int j = 0; j < in; ++j) z += w[off + static_cast<std::size_t>(i) * in + j] * x[j];
        h1[i] = z;
    }
    off += static_cast<std::size_t>(hid) * in;
    for (int i = 0; i < hid; ++i) h1[i] = std::max(0.0, h1[i] + w[off + i]);
    off += hid;
    for (int i = 0; i < hid; ++i) {
        double z = 0.0;
        for (int j = 0; j < hid; ++j) z += w[off + static_cast<std::size_t>(i) * hid + j] * h1[j];
        h2[i] = z;
    }
    off += static_cast<std::size_t>(hid) * hid;
    for (int i = 0; i < hid; ++i) h2[i] = std::max(0.0, h2[i] + w[off + i]);
    off += hid;
    for (int i = 0; i < out; ++i) {
        double z = 0.0;
        for (int j = 0; j < hid; ++j) z += w[off + static_cast<std::size_t>(i) * hid + j] * h2[j];
        y[i] = z;
    }
    off += static_cast<std::size_t>(out) * hid;
    for (int i = 0; i < out; ++i) y[i] += w[off + i];
    return y;
}

bool parse_mlp2_tag(const std::string& tag, int& in, int& hid, int& out) {
    if (tag.rfind("mlp2:", 0) != 0) return false;
    int fields = std::sscanf(tag.c_str(), "mlp2:%d:%d:%d", &in, &hid, &out);
    return fields == 3 && in > 0 && hid > 0 && out > 0;
}

Vec linear_scores(const Vec& w, const Vec& x, int n_out) {
    const std::size_t d = x.size();
    if (w.size() != static_cast<std::size_t>(n_out) * (d + 1))
        throw ValidationError("linear policy weight blob has wrong length");
    Vec y(n_out);
    for (int o = 0; o < n_out; ++o) {
        double z = w[static_cast<std::size_t>(o) * (d + 1) + d]; // bias
        for (std::size_t j = 0; j < d; ++j) z += w[static_cast<std::size_t>(o) * (d + 1) + j] * x[j];
        y[o] = z;
    }
    return y;
}

} // namespace

int Policy::act_discrete(const Vec& features, int n_actions) const {
    if (kind != Kind::Parametric)
        throw UnsupportedError("act_discrete is for parametric policies");
    Vec scores;
    int in = 0, hid = 0, out = 0;
    if (feature_map == "linear") {
        scores = linear_scores(weights, features, n_actions);
    } else if (parse_mlp2_tag(feature_map, in, hid, out)) {
        if (out != n_actions) throw ValidationError("mlp2 output dimension mismatch");
        scores = mlp2_forward(weights, features, in, hid, out);
    } else {
        throw ConfigError("unknown feature map: " + feature_map);
    }
    int best = 0;
    for (int a = 1; a < n_actions; ++a)
        if (scores[a] > scores[best]) best = a;
    return best;
}

Vec Policy::act_box(const Vec& features, const ActionSpace& space) const {
    if (kind != Kind::Parametric)
        throw UnsupportedError("act_box is for parametric policies");
    if (space.kind != ActionSpace::Kind::Box)
        throw ConfigError("act_box needs a Box action space");
    if (feature_map != "linear")
        throw ConfigError("box actions support only the linear feature map");
    Vec a = linear_scores(weights, features, space.dim());
    for (int i = 0; i < space.dim(); ++i)
        a[i] = std::min(space.high[i], std::max(space.low[i], a[i]));
    return a;
}

Action policy_action(const Policy& pi, const Observation& obs, const ActionSpace& space) {
    if (pi.kind == Policy::Kind::TabularDeterministic) {
        if (!obs.is_tabular())
            throw ConfigError("tabular target policy cannot act on a continuous observation");
        return Action::from_index(pi.action_at(obs.index));
    }
    if (pi.kind == Policy::Kind::Parametric) {
        if (obs.features.empty())
            throw ConfigError("parametric target policy needs a feature observation");
        if (space.kind == ActionSpace::Kind::Discrete)
            return Action::from_index(pi.act_discrete(obs.features, space.n));
        return Action::from_vec(pi.act_box(obs.features, space));
    }
    throw ConfigError("stochastic policies cannot serve as attack targets");
}

} // namespace poisonlab
