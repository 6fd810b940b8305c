"""Built-in verification corpus: ten scenarios with declared gates.

Five families, each in a time-varying and a constant-delay variant. The
constant variants pin the predicted consensus level tightly; the
time-varying variants gate the gap between the observed limit and the
constant-delay prediction at the level this integrator actually measures.
Every scenario is expressed through the public JSON schema, so the corpus
doubles as a round-trip fixture.
"""

from __future__ import annotations

from typing import Any

from .analysis import VerificationReport
from .scenario import Scenario

_TWO_NODE_LINKS = [
    {"from": 1, "to": 2, "weight": 1.0, "delay": 1},
    {"from": 2, "to": 1, "weight": 1.0, "delay": 2},
]


def _scenario_dicts() -> list[dict[str, Any]]:
    return [
        {
            # Scalar x' = -x + x(t - tau(t)) with the shifted-cosine delay.
            # The constant-delay prediction is (1 + 1/2) / 2 = 0.75; the
            # time-varying run settles measurably above it, so the gap gate
            # is wide. Gap at step 1e-3: 0.0626.
            "name": "scalar_sinshift_tv",
            "n": 1,
            "system": {"kind": "neutral", "m": 1},
            "profiles": [{"kind": "sin_shift", "h": 1.0}],
            "history": {"kind": "affine", "a": [1.0], "b": [1.0]},
            "integration": {"step": 1e-3, "t_end": 200.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 1,
            "expect": {"converged": True, "alpha": 0.75, "alpha_tol": 0.08,
                       "residual_decay_min": 10.0,
                       "razumikhin_violations_max": 0},
        },
        {
            "name": "scalar_sinshift_limit",
            "n": 1,
            "system": {"kind": "neutral", "m": 1},
            "profiles": [{"kind": "constant", "h": 1.0}],
            "history": {"kind": "affine", "a": [1.0], "b": [1.0]},
            "integration": {"step": 1e-3, "t_end": 50.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 2,
            "expect": {"converged": True, "alpha": 0.75, "alpha_tol": 1e-4,
                       "conservation_drift_max": 1e-6,
                       "razumikhin_violations_max": 0},
        },
        {
            # Constant history at 1 is an equilibrium; the run must hold it.
            "name": "scalar_unit_delay_hold",
            "n": 1,
            "system": {"kind": "neutral", "m": 1},
            "profiles": [{"kind": "constant", "h": 1.0}],
            "history": {"kind": "constant", "value": [1.0]},
            "integration": {"step": 1e-3, "t_end": 50.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 3,
            "expect": {"converged": True, "alpha": 1.0, "alpha_tol": 1e-4,
                       "conservation_drift_max": 1e-6,
                       "razumikhin_violations_max": 0},
        },
        {
            # Zig-zag sampled history: predicted level
            # (0.5 + 0.25 + 0.125) / 2 = 0.4375 exactly.
            "name": "scalar_unit_delay_zigzag",
            "n": 1,
            "system": {"kind": "neutral", "m": 1},
            "profiles": [{"kind": "constant", "h": 1.0}],
            "history": {"kind": "sampled",
                        "points": [[-1.0, 1.0], [-0.5, 0.0], [0.0, 0.5]]},
            "integration": {"step": 1e-3, "t_end": 50.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 4,
            "expect": {"converged": True, "alpha": 0.4375, "alpha_tol": 1e-4,
                       "conservation_drift_max": 1e-6,
                       "razumikhin_violations_max": 0},
        },
        {
            # Three staggered channels; a random constant history is an
            # equilibrium of the balanced scalar system, so the predicted
            # and observed levels must agree to machine precision.
            "name": "neutral_three_delay_tv",
            "n": 1,
            "system": {"kind": "neutral", "m": 3},
            "profiles": [{"kind": "sin_shift", "h": 1.0 / 3.0},
                         {"kind": "sin_shift", "h": 2.0 / 3.0},
                         {"kind": "sin_shift", "h": 1.0}],
            "history": {"kind": "random_constant", "amplitude": 1.0},
            "integration": {"step": 1e-3, "t_end": 60.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 11,
            "expect": {"converged": True, "alpha_tol": 1e-3,
                       "razumikhin_violations_max": 0},
        },
        {
            "name": "neutral_three_delay_limit",
            "n": 1,
            "system": {"kind": "neutral", "m": 3},
            "profiles": [{"kind": "constant", "h": 1.0 / 3.0},
                         {"kind": "constant", "h": 2.0 / 3.0},
                         {"kind": "constant", "h": 1.0}],
            "history": {"kind": "random_constant", "amplitude": 1.0},
            "integration": {"step": 1e-3, "t_end": 60.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 12,
            "expect": {"converged": True, "alpha_tol": 1e-3,
                       "conservation_drift_max": 1e-6,
                       "razumikhin_violations_max": 0},
        },
        {
            # Two agents exchanging states over distinct channels. The
            # constant-delay prediction is 0.5; the time-varying pair
            # (t sin(1/t), exponential approach) lands below it.
            # Gap at step 1e-3: 0.031.
            "name": "two_node_linear_tv",
            "n": 2,
            "system": {"kind": "linear"},
            "links": list(_TWO_NODE_LINKS),
            "profiles": [{"kind": "t_sin_inv", "h": 1.0},
                         {"kind": "exp_approach", "h": 1.0}],
            "history": {"kind": "constant", "value": [1.0, 0.0]},
            "integration": {"step": 1e-3, "t_end": 120.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 7,
            "expect": {"converged": True, "alpha": 0.5, "alpha_tol": 0.05,
                       "residual_decay_min": 10.0,
                       "razumikhin_violations_max": 0},
        },
        {
            "name": "two_node_linear_limit",
            "n": 2,
            "system": {"kind": "linear"},
            "links": list(_TWO_NODE_LINKS),
            "profiles": [{"kind": "constant", "h": 1.0},
                         {"kind": "constant", "h": 1.0}],
            "history": {"kind": "constant", "value": [1.0, 0.0]},
            "integration": {"step": 1e-3, "t_end": 60.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 8,
            "expect": {"converged": True, "alpha": 0.5, "alpha_tol": 1e-4,
                       "conservation_drift_max": 1e-6,
                       "razumikhin_violations_max": 0},
        },
        {
            # Cubic coupling; one delay overshoots its limit on the way in
            # (exp_sin), the other approaches from below. The gate compares
            # against the nonlinear constant-delay prediction 0.68233.
            # Gap at step 1e-3: 0.087.
            "name": "two_node_cubic_tv",
            "n": 2,
            "system": {"kind": "cubic"},
            "links": list(_TWO_NODE_LINKS),
            "profiles": [{"kind": "exp_sin", "h": 1.0},
                         {"kind": "sin_inv_shift", "h": 1.0}],
            "history": {"kind": "constant", "value": [1.0, 0.0]},
            "integration": {"step": 1e-3, "t_end": 120.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 9,
            "expect": {"converged": True, "alpha_tol": 0.11,
                       "residual_decay_min": 10.0,
                       "razumikhin_violations_max": 0},
        },
        {
            "name": "two_node_cubic_limit",
            "n": 2,
            "system": {"kind": "cubic"},
            "links": list(_TWO_NODE_LINKS),
            "profiles": [{"kind": "constant", "h": 1.0},
                         {"kind": "constant", "h": 1.0}],
            "history": {"kind": "constant", "value": [1.0, 0.0]},
            "integration": {"step": 1e-3, "t_end": 60.0, "record_every": 10},
            "analysis": {"convergence_tol": 1e-3, "razumikhin_slack": None},
            "seed": 10,
            "expect": {"converged": True, "alpha_tol": 1e-3,
                       "conservation_drift_max": 1e-6,
                       "razumikhin_violations_max": 0},
        },
    ]


SCENARIO_NAMES: tuple[str, ...] = tuple(d["name"] for d in _scenario_dicts())


def builtin_scenarios() -> tuple[Scenario, ...]:
    return tuple(Scenario.from_dict(d) for d in _scenario_dicts())


def builtin_scenario(name: str) -> Scenario:
    for d in _scenario_dicts():
        if d["name"] == name:
            return Scenario.from_dict(d)
    raise ValueError(f"no built-in scenario named {name!r}")


def evaluate_expectations(scenario: Scenario, report: VerificationReport,
                          tolerance_scale: float = 1.0) -> tuple[str, ...]:
    """Check a finished report against the scenario's declared gates.

    Returns one message per failed gate; empty means all gates pass.
    `tolerance_scale` > 1 relaxes the numeric gates (used when the corpus
    runs at a coarser step than the scenarios declare).
    """
    e = scenario.expect
    failures: list[str] = []
    if e.converged is not None and report.converged != e.converged:
        failures.append(f"converged: expected {e.converged}, "
                        f"got {report.converged}")
    if e.alpha_tol is not None:
        target = e.alpha if e.alpha is not None else report.alpha_predicted
        tol = e.alpha_tol * tolerance_scale
        if report.alpha_observed is None or target is None:
            failures.append("alpha: no observed or predicted level to compare")
        elif abs(report.alpha_observed - target) > tol:
            failures.append(
                "alpha: |%.6g - %.6g| = %.3g exceeds %.3g"
                % (report.alpha_observed, target,
                   abs(report.alpha_observed - target), tol))
    if e.residual_decay_min is not None:
        bar = e.residual_decay_min / tolerance_scale
        if not report.residual_decay >= bar:
            failures.append("residual_decay: %.3g below %.3g"
                            % (report.residual_decay, bar))
    if (e.razumikhin_violations_max is not None
            and report.razumikhin.violation_count
            > e.razumikhin_violations_max):
        failures.append(f"razumikhin: {report.razumikhin.violation_count} "
                        f"violations exceed {e.razumikhin_violations_max}")
    if e.conservation_drift_max is not None:
        cap = e.conservation_drift_max * tolerance_scale
        if report.conserved is None:
            failures.append("conservation: coupling is not column-balanced, "
                            "no conserved quantity to check")
        elif report.conserved.drift > cap:
            failures.append("conservation: drift %.3g exceeds %.3g"
                            % (report.conserved.drift, cap))
    return tuple(failures)
