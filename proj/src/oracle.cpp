#include "poisonlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poisonlab/mdp_ops.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

constexpr double kTol = 1e-9;

long long policy_count(const TabularMdp& mdp, long long guard) {
    long long count = 1;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (count > guard) return guard + 1;
        count *= mdp.n_actions;
    }
    return count;
}

// Occupancy-weighted expected reward: the forward value route. Used where a
// policy's value in two reward tables is needed from one occupancy pass.
double forward_value(const OccupancyResult& occ, const TabularMdp& mdp,
                     const std::vector<int>& actions) {
    double v = 0.0;
    for (int s = 0; s < mdp.n_states; ++s)
        if (occ.mu[s] > 0.0) v += occ.mu[s] * mdp.expected_reward[s][actions[s]];
    return v;
}

} // namespace

PolicySet enumerate_policies(const TabularMdp& mdp, const TabularMdp* adversarial,
                             long long guard) {
    mdp.validate();
    const long long count = policy_count(mdp, guard);
    if (count > guard)
        throw SizeError("policy enumeration would exceed the guard of " + std::to_string(guard));

    PolicySet out;
    out.policies.reserve(count);
    std::vector<int> assign(mdp.n_states, 0);
    while (true) {
        out.policies.push_back(assign);
        Policy pi = Policy::deterministic(assign);
        out.values_true.push_back(policy_value(mdp, pi));
        if (adversarial) out.values_adv.push_back(policy_value(*adversarial, pi));

        int i = mdp.n_states;
        bool done = true;
        while (i > 0) {
            --i;
            if (++assign[i] < mdp.n_actions) {
                done = false;
                break;
            }
            assign[i] = 0;
        }
        if (done) break;
    }
    return out;
}

std::vector<std::size_t> epsilon_optimal_set(const PolicySet& pset, double eps, ValueSide which) {
    if (eps < 0.0) throw std::invalid_argument("eps must be nonnegative");
    const Vec& values = which == ValueSide::True ? pset.values_true : pset.values_adv;
    if (values.empty()) throw std::invalid_argument("requested value side was not computed");
    const double best = *std::max_element(values.begin(), values.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= best - eps) out.push_back(i);
    return out;
}

TrivialUrReport check_trivial_ur(const TabularMdp& mdp, double p, double delta, double eps,
                                 long long guard) {
    const TabularMdp adv = adversarial_mdp(mdp, AttackStrategy::ur(p, delta));
    const PolicySet pset = enumerate_policies(mdp, &adv, guard);

    TrivialUrReport report;
    report.v_star = *std::max_element(pset.values_true.begin(), pset.values_true.end());
    report.trivial = true;
    for (std::size_t i : epsilon_optimal_set(pset, eps, ValueSide::Adversarial)) {
        if (pset.values_true[i] < report.v_star - eps - kTol) {
            report.trivial = false;
            report.violating_policies += 1;
        }
    }

    // Lemma-case classification: compare L^pi across all policies.
    Vec lengths(pset.policies.size());
    for (std::size_t i = 0; i < pset.policies.size(); ++i)
        lengths[i] = occupancy(mdp, Policy::deterministic(pset.policies[i])).episode_length;
    const auto [lmin, lmax] = std::minmax_element(lengths.begin(), lengths.end());
    report.fixed_horizon_case = *lmax - *lmin <= kTol;

    bool nondecreasing = true, nonincreasing = true;
    for (std::size_t i = 0; i < lengths.size() && (nondecreasing || nonincreasing); ++i) {
        for (std::size_t j = 0; j < lengths.size(); ++j) {
            if (lengths[i] <= lengths[j] + kTol) continue;  // need L_i > L_j
            if (pset.values_true[i] < pset.values_true[j] - kTol) nondecreasing = false;
            if (pset.values_true[i] > pset.values_true[j] + kTol) nonincreasing = false;
        }
    }
    if (!report.fixed_horizon_case) {
        if (nondecreasing && !nonincreasing) report.monotone_direction = 1;
        if (nonincreasing && !nondecreasing) report.monotone_direction = -1;
    }
    report.monotone_case = (report.monotone_direction == 1 && delta < 0.0) ||
                           (report.monotone_direction == -1 && delta > 0.0);
    return report;
}

namespace {

struct ClassStats {
    double length = 0.0;
    double distance = 0.0;  // D_r(pi, target)
    bool in_far_class = false;
    bool in_neighborhood = false;
    OccupancyResult occ;
};

ClassStats classify(const TabularMdp& mdp, const std::vector<int>& actions,
                    const Policy& target, double /*r*/) {
    // Discrete actions: d(a, a') > r iff a != a' for any r in (0, 1), so
    // class membership reduces to exact comparisons on occupied states.
    ClassStats st;
    st.occ = occupancy(mdp, Policy::deterministic(actions));
    st.length = st.occ.episode_length;
    st.in_far_class = true;
    st.in_neighborhood = true;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (st.occ.mu[s] <= 0.0) continue;
        if (actions[s] == target.action_at(s)) {
            st.in_far_class = false;
        } else {
            st.distance += st.occ.mu[s];
            st.in_neighborhood = false;
        }
    }
    return st;
}

// Off-support actions do not affect value or class membership; pin them so
// that the action-distance margin to the target is positive everywhere and
// the theorem's corruption bound is well defined.
std::vector<int> canonicalize(const TabularMdp& mdp, std::vector<int> actions,
                              const Policy& target, bool away_from_target) {
    const OccupancyResult occ = occupancy(mdp, Policy::deterministic(actions));
    for (int s = 0; s < mdp.n_states; ++s) {
        if (occ.mu[s] > 0.0) continue;
        if (away_from_target) {
            if (actions[s] == target.action_at(s) && mdp.n_actions >= 2)
                actions[s] = target.action_at(s) == 0 ? 1 : 0;
        } else {
            actions[s] = target.action_at(s);
        }
    }
    return actions;
}

void fill_margins(const TabularMdp& mdp, TheoremReport& report, const Policy& target, double r,
                  bool ae) {
    const std::vector<int>& actions = report.predicted_target.actions;
    const OccupancyResult occ = occupancy(mdp, report.predicted_target);
    double all = std::numeric_limits<double>::infinity();
    double support = std::numeric_limits<double>::infinity();
    for (int s = 0; s < mdp.n_states; ++s) {
        const double d = actions[s] == target.action_at(s) ? 0.0 : 1.0;
        const double gap = ae ? d - r : r - d;
        all = std::min(all, gap);
        if (occ.mu[s] > 0.0) support = std::min(support, gap);
    }
    report.margin_all_states = all;
    report.margin_support = support;
}

enum class TheoremKind { ActionEvasion, ActionInducing };

TheoremReport check_theorem(const TabularMdp& mdp, const Policy& target, double delta, double r,
                            double eps, long long guard, int premise_samples, TheoremKind kind) {
    mdp.validate();
    if (!target.is_deterministic())
        throw UnsupportedError("theorem checks need a deterministic tabular target");
    target.validate(mdp.n_states, mdp.n_actions);
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("radius must lie in (0, 1)");
    if (eps < 0.0) throw std::invalid_argument("eps must be nonnegative");

    const bool ae = kind == TheoremKind::ActionEvasion;
    const AttackStrategy strategy = ae ? AttackStrategy::ae(target, delta > 0 ? delta : 1.0, r)
                                       : AttackStrategy::ai(target, delta > 0 ? delta : 1.0, r);
    // delta == 0 is allowed for premise probing; adversarial rewards shift by 0.
    TabularMdp adv = adversarial_mdp(mdp, strategy);
    if (delta <= 0.0) adv = mdp;

    TheoremReport report;
    const long long count = policy_count(mdp, guard);

    if (count <= guard) {
        const PolicySet pset = enumerate_policies(mdp, &adv, guard);
        std::vector<ClassStats> stats(pset.policies.size());
        for (std::size_t i = 0; i < pset.policies.size(); ++i)
            stats[i] = classify(mdp, pset.policies[i], target, r);

        std::size_t best = pset.policies.size();
        for (std::size_t i = 0; i < pset.policies.size(); ++i) {
            const bool member = ae ? stats[i].in_far_class : stats[i].in_neighborhood;
            if (!member) continue;
            if (best == pset.policies.size() || pset.values_true[i] > pset.values_true[best] + kTol)
                best = i;
        }
        if (best == pset.policies.size()) {
            report.degenerate = true;
            report.degenerate_reason = ae ? "no policy is r-far from the target"
                                          : "the target neighborhood is empty";
            return report;
        }
        report.predicted_target = Policy::deterministic(
            canonicalize(mdp, pset.policies[best], target, /*away_from_target=*/ae));
        report.predicted_v_bound = pset.values_true[best];

        report.premise_holds = true;
        for (std::size_t i = 0; i < pset.policies.size(); ++i) {
            const bool member = ae ? stats[i].in_far_class : stats[i].in_neighborhood;
            if (member) continue;
            if (pset.values_adv[i] >= report.predicted_v_bound - eps) {
                report.premise_holds = false;
                report.witnesses.push_back(pset.policies[i]);
            }
        }

        if (report.premise_holds) {
            report.conclusion_checked = true;
            report.conclusion_holds = true;
            for (std::size_t i : epsilon_optimal_set(pset, eps, ValueSide::Adversarial)) {
                const bool member = ae ? stats[i].in_far_class : stats[i].in_neighborhood;
                if (!member || pset.values_true[i] > report.predicted_v_bound)
                    report.conclusion_holds = false;
            }
        }
        fill_margins(mdp, report, target, r, ae);
        return report;
    }

    // Sampled path: the class optimum is still exact, the premise is not.
    report.exact = false;
    std::vector<int> best_actions;
    if (ae) {
        std::vector<std::vector<bool>> forbidden(mdp.n_states,
                                                 std::vector<bool>(mdp.n_actions, false));
        for (int s = 0; s < mdp.n_states; ++s) forbidden[s][target.action_at(s)] = true;
        if (mdp.n_actions < 2) {
            report.degenerate = true;
            report.degenerate_reason = "no policy is r-far from the target";
            return report;
        }
        OptimalPolicyResult masked = optimal_policy_masked(mdp, forbidden);
        best_actions = masked.policy.actions;
        report.predicted_v_bound = masked.value;
    } else {
        // Every neighborhood policy follows the target on its own support and
        // therefore matches the target's value exactly.
        best_actions = target.actions;
        report.predicted_v_bound = policy_value(mdp, target);
    }
    report.predicted_target =
        Policy::deterministic(canonicalize(mdp, best_actions, target, /*away_from_target=*/ae));

    auto try_witness = [&](const std::vector<int>& actions) {
        ClassStats st = classify(mdp, actions, target, r);
        const bool member = ae ? st.in_far_class : st.in_neighborhood;
        if (member) return;
        const double v_adv = forward_value(st.occ, adv, actions);
        if (v_adv >= report.predicted_v_bound - eps) report.witnesses.push_back(actions);
    };

    try_witness(optimal_policy(mdp).policy.actions);
    try_witness(optimal_policy(adv).policy.actions);
    try_witness(target.actions);
    // Single-state mutations of the class optimum across the class border:
    // the sharpest candidates, since they give up as little value as possible.
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const bool crosses = ae ? a == target.action_at(s) : a != target.action_at(s);
            if (!crosses || report.predicted_target.actions[s] == a) continue;
            std::vector<int> mutated = report.predicted_target.actions;
            mutated[s] = a;
            try_witness(mutated);
        }
    }
    Rng rng = make_rng(0xbad5eedULL ^ static_cast<std::uint64_t>(mdp.n_states), "premise-sampler");
    std::uniform_int_distribution<int> pick(0, mdp.n_actions - 1);
    for (int i = 0; i < premise_samples; ++i) {
        std::vector<int> actions(mdp.n_states);
        for (int& a : actions) a = pick(rng);
        try_witness(actions);
    }
    report.premise_holds = report.witnesses.empty();
    fill_margins(mdp, report, target, r, ae);
    return report;
}

} // namespace

TheoremReport check_ae_theorem(const TabularMdp& mdp, const Policy& target, double delta,
                               double r, double eps, long long guard, int premise_samples) {
    return check_theorem(mdp, target, delta, r, eps, guard, premise_samples,
                         TheoremKind::ActionEvasion);
}

TheoremReport check_ai_theorem(const TabularMdp& mdp, const Policy& target, double delta,
                               double r, double eps, long long guard, int premise_samples) {
    return check_theorem(mdp, target, delta, r, eps, guard, premise_samples,
                         TheoremKind::ActionInducing);
}

Policy predicted_class_optimum(const TabularMdp& mdp, const Policy& target, double r,
                               bool action_evasion) {
    mdp.validate();
    if (!target.is_deterministic())
        throw UnsupportedError("class optimum needs a deterministic tabular target");
    target.validate(mdp.n_states, mdp.n_actions);
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("radius must lie in (0, 1)");
    std::vector<int> best;
    if (action_evasion) {
        if (mdp.n_actions < 2)
            throw UnsupportedError("no policy can avoid the target with a single action");
        std::vector<std::vector<bool>> forbidden(mdp.n_states,
                                                 std::vector<bool>(mdp.n_actions, false));
        for (int s = 0; s < mdp.n_states; ++s) forbidden[s][target.action_at(s)] = true;
        best = optimal_policy_masked(mdp, forbidden).policy.actions;
    } else {
        best = target.actions;
    }
    return Policy::deterministic(canonicalize(mdp, best, target, action_evasion));
}

double c_bound(double delta_measured, long long T, double margin) {
    if (delta_measured < 0.0) throw std::invalid_argument("measured rate must be nonnegative");
    if (T < 0) throw std::invalid_argument("T must be nonnegative");
    if (!(margin > 0.0))
        throw BoundUndefinedError("corruption bound undefined: margin " +
                                  std::to_string(margin) + " is not positive");
    return delta_measured / margin * static_cast<double>(T);
}

} // namespace poisonlab
