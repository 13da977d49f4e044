#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "poisonlab/harness.hpp"
#include "poisonlab/mdp_ops.hpp"
#include "poisonlab/oracle.hpp"
#include "poisonlab/serialize.hpp"

namespace py = pybind11;
using namespace poisonlab;

namespace {

TabularMdp mdp_from_json_str(const std::string& s) { return mdp_from_json(Json::parse(s)); }
Policy policy_from_json_str(const std::string& s) { return policy_from_json(Json::parse(s)); }

std::string theorem_report_to_json_str(const TheoremReport& rep) {
    Json j;
    j["degenerate"] = rep.degenerate;
    j["degenerate_reason"] = rep.degenerate_reason;
    j["premise_holds"] = rep.premise_holds;
    j["exact"] = rep.exact;
    if (!rep.degenerate) j["predicted_target"] = policy_to_json(rep.predicted_target);
    j["predicted_V_bound"] = rep.predicted_v_bound;
    j["witnesses"] = rep.witnesses;
    j["conclusion_checked"] = rep.conclusion_checked;
    j["conclusion_holds"] = rep.conclusion_holds;
    j["margin_all_states"] = rep.margin_all_states;
    j["margin_support"] = rep.margin_support;
    return j.dump();
}

AttackStrategy strategy_from_json_str(const std::string& s) {
    const Json j = Json::parse(s);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "UR") return AttackStrategy::ur(j.value("p", 1.0), j.value("delta", 1.0));
    if (kind == "Flip") return AttackStrategy::flip();
    Policy target = policy_from_json(j.at("target"));
    const double delta = j.value("delta", 1.0);
    const double radius = j.value("radius", 0.5);
    if (kind == "AE") return AttackStrategy::ae(std::move(target), delta, radius);
    if (kind == "AI") return AttackStrategy::ai(std::move(target), delta, radius);
    throw ConfigError("unknown attack kind: " + kind);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reward-poisoning attacks on RL agents: exact tabular oracles, attack "
              "middleware, and experiment harness.";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<UnsupportedError>(m, "UnsupportedError");
    py::register_exception<SizeError>(m, "SizeError");
    py::register_exception<BoundUndefinedError>(m, "BoundUndefinedError");

    py::class_<ActionSpace>(m, "ActionSpace")
        .def_static("discrete", &ActionSpace::discrete, py::arg("n"))
        .def_static("box", &ActionSpace::box, py::arg("low"), py::arg("high"))
        .def_property_readonly("diameter", &ActionSpace::diameter);

    py::class_<TabularMdp>(m, "TabularMdp")
        .def_static("from_json", &mdp_from_json_str, py::arg("document"))
        .def("to_json", [](const TabularMdp& mdp) { return mdp_to_json(mdp).dump(); })
        .def("validate", &TabularMdp::validate)
        .def_readonly("n_states", &TabularMdp::n_states)
        .def_readonly("n_actions", &TabularMdp::n_actions)
        .def_readonly("horizon_cap", &TabularMdp::horizon_cap);

    py::class_<Policy>(m, "Policy")
        .def_static("deterministic", &Policy::deterministic, py::arg("actions"))
        .def_static("from_json", &policy_from_json_str, py::arg("document"))
        .def("to_json", [](const Policy& p) { return policy_to_json(p).dump(); })
        .def_property_readonly("actions", [](const Policy& p) { return p.actions; });

    py::class_<OccupancyResult>(m, "OccupancyResult")
        .def_readonly("mu", &OccupancyResult::mu)
        .def_readonly("episode_length", &OccupancyResult::episode_length)
        .def_readonly("truncation_mass", &OccupancyResult::truncation_mass);

    m.def("action_distance",
          py::overload_cast<int, int, const ActionSpace&>(&action_distance), py::arg("a1"),
          py::arg("a2"), py::arg("space"));
    m.def("action_distance",
          py::overload_cast<const Vec&, const Vec&, const ActionSpace&>(&action_distance),
          py::arg("a1"), py::arg("a2"), py::arg("space"));
    m.def("occupancy", &occupancy, py::arg("mdp"), py::arg("policy"));
    m.def("policy_value", &policy_value, py::arg("mdp"), py::arg("policy"));
    m.def("policy_distance", &policy_distance, py::arg("mdp"), py::arg("pi1"), py::arg("pi2"),
          py::arg("r"));
    m.def(
        "optimal_policy",
        [](const TabularMdp& mdp) {
            OptimalPolicyResult res = optimal_policy(mdp);
            return py::make_tuple(res.policy, res.value, res.stationary_exact);
        },
        py::arg("mdp"), "Returns (policy, value, stationary_exact).");

    m.def(
        "adversarial_mdp",
        [](const TabularMdp& mdp, const std::string& attack_json) {
            return adversarial_mdp(mdp, strategy_from_json_str(attack_json));
        },
        py::arg("mdp"), py::arg("attack_json"));
    m.def("ur_predicted_value", &ur_predicted_value, py::arg("mdp"), py::arg("policy"),
          py::arg("p"), py::arg("delta"));

    m.def(
        "check_ae_theorem",
        [](const TabularMdp& mdp, const Policy& target, double delta, double r, double eps) {
            return theorem_report_to_json_str(check_ae_theorem(mdp, target, delta, r, eps));
        },
        py::arg("mdp"), py::arg("target"), py::arg("delta"), py::arg("r"), py::arg("eps"));
    m.def(
        "check_ai_theorem",
        [](const TabularMdp& mdp, const Policy& target, double delta, double r, double eps) {
            return theorem_report_to_json_str(check_ai_theorem(mdp, target, delta, r, eps));
        },
        py::arg("mdp"), py::arg("target"), py::arg("delta"), py::arg("r"), py::arg("eps"));
    m.def(
        "check_trivial_ur",
        [](const TabularMdp& mdp, double p, double delta, double eps) {
            const TrivialUrReport rep = check_trivial_ur(mdp, p, delta, eps);
            Json j;
            j["trivial"] = rep.trivial;
            j["fixed_horizon_case"] = rep.fixed_horizon_case;
            j["monotone_case"] = rep.monotone_case;
            j["monotone_direction"] = rep.monotone_direction;
            j["v_star"] = rep.v_star;
            return j.dump();
        },
        py::arg("mdp"), py::arg("p"), py::arg("delta"), py::arg("eps"));
    m.def("c_bound", &c_bound, py::arg("delta_measured"), py::arg("T"), py::arg("margin"));

    m.def(
        "run_experiment",
        [](const std::string& config_json, int workers) {
            const ExperimentConfig config = ExperimentConfig::from_json(Json::parse(config_json));
            const AggregateResult agg = run_experiment(config, workers);
            Json j;
            j["mean_V"] = agg.mean_v;
            j["variance_V"] = agg.variance_v;
            j["per_seed_V"] = agg.per_seed_v;
            j["chosen_arm"] = agg.chosen_arm;
            j["run_dir"] = agg.run_dir;
            j["failed_seeds"] = agg.failed_seeds;
            return j.dump();
        },
        py::arg("config_json"), py::arg("workers") = 1,
        "Runs an experiment config (JSON string); returns a JSON summary string.");
}
