#include "poisonlab/serialize.hpp"

#include <fstream>

namespace poisonlab {

Json mdp_to_json(const TabularMdp& mdp) {
    Json j;
    j["n_states"] = mdp.n_states;
    j["n_actions"] = mdp.n_actions;
    j["P"] = mdp.transition;
    j["R"] = mdp.expected_reward;
    j["noise_std"] = mdp.reward_noise_std;
    j["mu0"] = mdp.initial_dist;
    j["terminal"] = mdp.terminal;
    j["horizon"] = mdp.horizon_cap;
    return j;
}

TabularMdp mdp_from_json(const Json& j) {
    TabularMdp mdp;
    try {
        mdp.n_states = j.at("n_states").get<int>();
        mdp.n_actions = j.at("n_actions").get<int>();
        mdp.transition = j.at("P").get<std::vector<Mat>>();
        mdp.expected_reward = j.at("R").get<Mat>();
        if (j.contains("noise_std"))
            mdp.reward_noise_std = j.at("noise_std").get<Mat>();
        else
            mdp.reward_noise_std.assign(mdp.n_states, Vec(mdp.n_actions, 0.0));
        mdp.initial_dist = j.at("mu0").get<Vec>();
        mdp.terminal = j.at("terminal").get<std::vector<bool>>();
        mdp.horizon_cap = j.at("horizon").get<int>();
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed mdp document: ") + e.what());
    }
    mdp.validate();
    return mdp;
}

Json policy_to_json(const Policy& pi) {
    Json j;
    switch (pi.kind) {
        case Policy::Kind::TabularDeterministic:
            j["kind"] = "deterministic";
            j["actions"] = pi.actions;
            break;
        case Policy::Kind::TabularStochastic:
            j["kind"] = "stochastic";
            j["dist"] = pi.dist;
            break;
        case Policy::Kind::Parametric:
            j["kind"] = "parametric";
            j["dims"] = pi.weights.size();
            j["weights"] = pi.weights;
            j["feature_map"] = pi.feature_map;
            break;
    }
    return j;
}

Policy policy_from_json(const Json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "deterministic")
            return Policy::deterministic(j.at("actions").get<std::vector<int>>());
        if (kind == "stochastic")
            return Policy::stochastic(j.at("dist").get<Mat>());
        if (kind == "parametric") {
            Policy p = Policy::parametric(j.at("weights").get<Vec>(),
                                          j.at("feature_map").get<std::string>());
            if (j.contains("dims") && j.at("dims").get<std::size_t>() != p.weights.size())
                throw ValidationError("parametric policy dims disagree with weights length");
            return p;
        }
        throw ValidationError("unknown policy kind: " + kind);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed policy document: ") + e.what());
    }
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
    return j;
}

void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

} // namespace poisonlab
