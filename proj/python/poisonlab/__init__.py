"""Reward-poisoning attacks on RL agents, with exact tabular oracles.

The heavy lifting lives in the C++ extension ``poisonlab._core``; this module
adds small conveniences for passing MDP/policy documents as plain dicts.
"""

import json as _json

from ._core import (  # noqa: F401
    ActionSpace,
    BoundUndefinedError,
    ConfigError,
    OccupancyResult,
    Policy,
    SizeError,
    TabularMdp,
    UnsupportedError,
    ValidationError,
    action_distance,
    adversarial_mdp,
    c_bound,
    check_ae_theorem,
    check_ai_theorem,
    check_trivial_ur,
    occupancy,
    optimal_policy,
    policy_distance,
    policy_value,
    run_experiment,
    ur_predicted_value,
)

__all__ = [
    "ActionSpace",
    "Policy",
    "TabularMdp",
    "OccupancyResult",
    "action_distance",
    "occupancy",
    "policy_value",
    "policy_distance",
    "optimal_policy",
    "adversarial_mdp",
    "ur_predicted_value",
    "check_ae_theorem",
    "check_ai_theorem",
    "check_trivial_ur",
    "c_bound",
    "run_experiment",
    "mdp_from_dict",
    "policy_from_dict",
    "verify_attack",
    "ConfigError",
    "ValidationError",
    "UnsupportedError",
    "SizeError",
    "BoundUndefinedError",
]


def mdp_from_dict(doc):
    """Build a TabularMdp from a plain dict document."""
    return TabularMdp.from_json(_json.dumps(doc))


def policy_from_dict(doc):
    """Build a Policy from a plain dict document."""
    return Policy.from_json(_json.dumps(doc))


def verify_attack(mdp, attack):
    """Theorem check for an attack document (dict); returns the report dict."""
    kind = attack["kind"]
    if kind not in ("AE", "AI"):
        raise ConfigError(f"verify_attack supports AE and AI, got {kind}")
    target = policy_from_dict(attack["target"])
    delta = float(attack.get("delta", 1.0))
    radius = float(attack.get("radius", 0.5))
    eps = float(attack.get("eps", 0.01))
    check = check_ae_theorem if kind == "AE" else check_ai_theorem
    return _json.loads(check(mdp, target, delta, radius, eps))
