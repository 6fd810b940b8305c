"""Scenario files: one JSON document describes a complete run.

A scenario pins the network (or scalar family), delay profiles, history,
integration grid, analysis tolerances and a seed, plus optional expectations
that turn a run into a self-contained regression gate. Unknown keys are
errors everywhere so tolerance typos cannot silently pass.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .delays import DelayProfile, max_bound
from .history import HistoryFunction
from .integrator import IntegrationConfig
from .network import ConsensusNetwork, Link, build_system_matrices
from .systems import SystemRHS

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")

_SYSTEM_KINDS = ("linear", "cubic", "neutral", "odd_power")
_HISTORY_KINDS = ("constant", "affine", "sampled", "random_constant")


class ScenarioError(ValueError):
    """Scenario content failed to parse or validate; names the field."""


def _check_keys(obj: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {unknown}")


def _need(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return obj[key]


def _as_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_vector(value: Any, n: int, where: str) -> list[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)] * n
    if isinstance(value, list):
        if len(value) != n:
            raise ScenarioError(f"{where}: expected {n} entries, got {len(value)}")
        return [_as_number(v, where) for v in value]
    raise ScenarioError(f"{where}: expected a number or a list of numbers")


@dataclass(frozen=True)
class Expectations:
    """Optional per-scenario gates; unset fields are not checked."""

    converged: bool | None = None
    alpha: float | None = None
    alpha_tol: float | None = None
    residual_decay_min: float | None = None
    conservation_drift_max: float | None = None
    razumikhin_violations_max: int | None = None

    _KEYS = ("converged", "alpha", "alpha_tol", "residual_decay_min",
             "conservation_drift_max", "razumikhin_violations_max")

    @classmethod
    def from_dict(cls, data: dict) -> "Expectations":
        _check_keys(data, cls._KEYS, "expect")
        kwargs: dict[str, Any] = {}
        if "converged" in data:
            if not isinstance(data["converged"], bool):
                raise ScenarioError("expect.converged: expected true or false")
            kwargs["converged"] = data["converged"]
        for key in ("alpha", "alpha_tol", "residual_decay_min",
                    "conservation_drift_max"):
            if key in data and data[key] is not None:
                kwargs[key] = _as_number(data[key], f"expect.{key}")
        if "razumikhin_violations_max" in data:
            kwargs["razumikhin_violations_max"] = _as_int(
                data["razumikhin_violations_max"],
                "expect.razumikhin_violations_max")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        for key in self._KEYS:
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    def any_set(self) -> bool:
        return bool(self.to_dict())


@dataclass(frozen=True)
class Scenario:
    """Typed scenario plus the canonical encodings needed for round-trips."""

    name: str
    n: int
    system: dict[str, Any]
    links: tuple[dict[str, Any], ...] | None
    profiles: tuple[DelayProfile, ...]
    history: dict[str, Any]
    integration: IntegrationConfig
    convergence_tol: float = 1e-3
    razumikhin_slack: float | None = None
    seed: int = 0
    expect: Expectations = field(default_factory=Expectations)

    # -- parsing ---------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("scenario: expected a JSON object")
        _check_keys(data, ("name", "n", "system", "links", "profiles",
                           "history", "integration", "analysis", "seed",
                           "expect"), "scenario")
        name = _need(data, "name", "scenario")
        if not isinstance(name, str) or not _NAME_RE.match(name):
            raise ScenarioError(
                "scenario.name: must match [A-Za-z0-9][A-Za-z0-9_-]* "
                "(it becomes a directory name)")
        n = _as_int(_need(data, "n", "scenario"), "scenario.n")
        if n < 1:
            raise ScenarioError("scenario.n: must be >= 1")

        system = _parse_system(_need(data, "system", "scenario"), n)
        links = _parse_links(data.get("links"), n, system)
        profiles = _parse_profiles(_need(data, "profiles", "scenario"))
        channels = system["m"] if system["kind"] == "neutral" else (
            max(link["delay"] for link in links) if links else 0)
        if len(profiles) != channels:
            raise ScenarioError(
                f"scenario.profiles: expected {channels} profiles (one per "
                f"delay channel), got {len(profiles)}")
        history = _parse_history(data.get("history"), n)
        integration = _parse_integration(_need(data, "integration", "scenario"))
        tol, slack = _parse_analysis(data.get("analysis"))
        seed = _as_int(data.get("seed", 0), "scenario.seed")
        expect = Expectations.from_dict(data.get("expect", {}))
        return cls(name=name, n=n, system=system, links=links,
                   profiles=profiles, history=history, integration=integration,
                   convergence_tol=tol, razumikhin_slack=slack, seed=seed,
                   expect=expect)

    @classmethod
    def from_file(cls, path) -> "Scenario":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        data: dict[str, Any] = {"name": self.name, "n": self.n,
                                "system": dict(self.system)}
        if self.links is not None:
            data["links"] = [dict(link) for link in self.links]
        data["profiles"] = [p.to_dict() for p in self.profiles]
        data["history"] = dict(self.history)
        cfg = self.integration
        integration: dict[str, Any] = {"step": cfg.step, "t_end": cfg.t_end}
        if cfg.t0 != 0.0:
            integration["t0"] = cfg.t0
        if cfg.max_fixed_point_iters != 10:
            integration["max_fixed_point_iters"] = cfg.max_fixed_point_iters
        if cfg.fixed_point_tol != 1e-12:
            integration["fixed_point_tol"] = cfg.fixed_point_tol
        if cfg.record_every != 1:
            integration["record_every"] = cfg.record_every
        data["integration"] = integration
        data["analysis"] = {"convergence_tol": self.convergence_tol,
                            "razumikhin_slack": self.razumikhin_slack}
        data["seed"] = self.seed
        if self.expect.any_set():
            data["expect"] = self.expect.to_dict()
        return data

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(json.dumps(self.to_dict(), indent=2))
            fh.write("\n")

    # -- builders ----------------------------------------------------------------

    def build_network(self) -> ConsensusNetwork | None:
        if self.links is None:
            return None
        m = max(link["delay"] for link in self.links)
        built = tuple(Link(agent=link["from"] - 1, neighbor=link["to"] - 1,
                           weight=float(link["weight"]),
                           channel=link["delay"] - 1) for link in self.links)
        return ConsensusNetwork(n=self.n, links=built, m=m)

    def build_system(self) -> SystemRHS:
        kind = self.system["kind"]
        if kind == "neutral":
            return SystemRHS.neutral(self.system["m"])
        matrices = build_system_matrices(self.build_network())
        if kind == "linear":
            return SystemRHS.linear(matrices)
        if kind == "cubic":
            return SystemRHS.cubic(matrices)
        return SystemRHS.odd_power(matrices, self.system["power"])

    def history_horizon(self) -> float:
        if self.history["kind"] == "sampled":
            return -float(self.history["points"][0][0])
        if "horizon" in self.history:
            return float(self.history["horizon"])
        return max_bound(self.profiles)

    def build_history(self) -> HistoryFunction:
        enc = self.history
        kind = enc["kind"]
        horizon = self.history_horizon()
        if kind == "constant":
            return HistoryFunction.constant(enc["value"], horizon)
        if kind == "affine":
            return HistoryFunction.affine(enc["a"], enc["b"], horizon)
        if kind == "sampled":
            points = np.asarray(enc["points"], dtype=float)
            return HistoryFunction.sampled(points[:, 0], points[:, 1:])
        rng = np.random.default_rng([self.seed, 0])
        value = rng.uniform(-float(enc["amplitude"]), float(enc["amplitude"]),
                            size=self.n)
        return HistoryFunction.constant(value, horizon)

    def config_with_step(self, step: float | None) -> IntegrationConfig:
        if step is None:
            return self.integration
        return replace(self.integration, step=float(step))


# -- field parsers ------------------------------------------------------------------

def _parse_system(data: Any, n: int) -> dict[str, Any]:
    if not isinstance(data, dict):
        raise ScenarioError("scenario.system: expected an object")
    kind = _need(data, "kind", "scenario.system")
    if kind not in _SYSTEM_KINDS:
        raise ScenarioError(
            f"scenario.system.kind: {kind!r} is not one of {list(_SYSTEM_KINDS)}")
    if kind == "neutral":
        _check_keys(data, ("kind", "m"), "scenario.system")
        m = _as_int(_need(data, "m", "scenario.system"), "scenario.system.m")
        if m < 1:
            raise ScenarioError("scenario.system.m: must be >= 1")
        if n != 1:
            raise ScenarioError("scenario.n: neutral systems are scalar (n = 1)")
        return {"kind": kind, "m": m}
    if kind == "odd_power":
        _check_keys(data, ("kind", "power"), "scenario.system")
        power = _as_int(_need(data, "power", "scenario.system"),
                        "scenario.system.power")
        if power < 1:
            raise ScenarioError("scenario.system.power: must be >= 1")
        return {"kind": kind, "power": power}
    _check_keys(data, ("kind",), "scenario.system")
    return {"kind": kind}


def _parse_links(data: Any, n: int, system: dict) -> tuple[dict, ...] | None:
    if system["kind"] == "neutral":
        if data is not None:
            raise ScenarioError("scenario.links: neutral systems take no links "
                                "(the channels couple the agent to itself)")
        return None
    if not isinstance(data, list) or not data:
        raise ScenarioError("scenario.links: expected a nonempty list of links")
    links = []
    for i, item in enumerate(data):
        where = f"scenario.links[{i}]"
        if not isinstance(item, dict):
            raise ScenarioError(f"{where}: expected an object")
        _check_keys(item, ("from", "to", "weight", "delay"), where)
        src = _as_int(_need(item, "from", where), f"{where}.from")
        dst = _as_int(_need(item, "to", where), f"{where}.to")
        weight = _as_number(_need(item, "weight", where), f"{where}.weight")
        delay = _as_int(_need(item, "delay", where), f"{where}.delay")
        for label, index in (("from", src), ("to", dst)):
            if not 1 <= index <= n:
                raise ScenarioError(
                    f"{where}.{label}: agent {index} outside 1..{n} (1-based)")
        if delay < 1:
            raise ScenarioError(f"{where}.delay: channels are 1-based")
        links.append({"from": src, "to": dst, "weight": weight, "delay": delay})
    return tuple(links)


def _parse_profiles(data: Any) -> tuple[DelayProfile, ...]:
    if not isinstance(data, list) or not data:
        raise ScenarioError("scenario.profiles: expected a nonempty list")
    out = []
    for i, item in enumerate(data):
        try:
            out.append(DelayProfile.from_dict(item))
        except ValueError as exc:
            raise ScenarioError(f"scenario.profiles[{i}]: {exc}") from exc
    return tuple(out)


def _parse_history(data: Any, n: int) -> dict[str, Any]:
    if not isinstance(data, dict):
        raise ScenarioError("scenario.history: expected an object")
    kind = _need(data, "kind", "scenario.history")
    if kind not in _HISTORY_KINDS:
        raise ScenarioError(
            f"scenario.history.kind: {kind!r} is not one of {list(_HISTORY_KINDS)}")
    where = "scenario.history"
    if kind == "constant":
        _check_keys(data, ("kind", "value", "horizon"), where)
        out: dict[str, Any] = {"kind": kind,
                               "value": _as_vector(_need(data, "value", where),
                                                   n, f"{where}.value")}
    elif kind == "affine":
        _check_keys(data, ("kind", "a", "b", "horizon"), where)
        out = {"kind": kind,
               "a": _as_vector(_need(data, "a", where), n, f"{where}.a"),
               "b": _as_vector(_need(data, "b", where), n, f"{where}.b")}
    elif kind == "sampled":
        _check_keys(data, ("kind", "points"), where)
        points = _need(data, "points", where)
        if (not isinstance(points, list) or len(points) < 2
                or any(not isinstance(row, list) or len(row) != n + 1
                       for row in points)):
            raise ScenarioError(
                f"{where}.points: expected rows [theta, x_1..x_{n}], "
                "at least two")
        out = {"kind": kind,
               "points": [[_as_number(v, f"{where}.points") for v in row]
                          for row in points]}
        if out["points"][-1][0] != 0.0:
            raise ScenarioError(f"{where}.points: last row must be at theta = 0")
    else:
        _check_keys(data, ("kind", "amplitude", "horizon"), where)
        amplitude = _as_number(_need(data, "amplitude", where),
                               f"{where}.amplitude")
        if amplitude <= 0.0:
            raise ScenarioError(f"{where}.amplitude: must be positive")
        out = {"kind": kind, "amplitude": amplitude}
    if "horizon" in data and kind != "sampled":
        horizon = _as_number(data["horizon"], f"{where}.horizon")
        if horizon < 0.0:
            raise ScenarioError(f"{where}.horizon: must be >= 0")
        out["horizon"] = horizon
    return out


def _parse_integration(data: Any) -> IntegrationConfig:
    if not isinstance(data, dict):
        raise ScenarioError("scenario.integration: expected an object")
    _check_keys(data, ("step", "t_end", "t0", "max_fixed_point_iters",
                       "fixed_point_tol", "record_every"),
                "scenario.integration")
    kwargs: dict[str, Any] = {
        "step": _as_number(_need(data, "step", "scenario.integration"),
                           "scenario.integration.step"),
        "t_end": _as_number(_need(data, "t_end", "scenario.integration"),
                            "scenario.integration.t_end"),
    }
    if "t0" in data:
        kwargs["t0"] = _as_number(data["t0"], "scenario.integration.t0")
    if "max_fixed_point_iters" in data:
        kwargs["max_fixed_point_iters"] = _as_int(
            data["max_fixed_point_iters"],
            "scenario.integration.max_fixed_point_iters")
    if "fixed_point_tol" in data:
        kwargs["fixed_point_tol"] = _as_number(
            data["fixed_point_tol"], "scenario.integration.fixed_point_tol")
    if "record_every" in data:
        kwargs["record_every"] = _as_int(data["record_every"],
                                         "scenario.integration.record_every")
    try:
        return IntegrationConfig(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"scenario.integration: {exc}") from exc


def _parse_analysis(data: Any) -> tuple[float, float | None]:
    if data is None:
        return 1e-3, None
    if not isinstance(data, dict):
        raise ScenarioError("scenario.analysis: expected an object")
    _check_keys(data, ("convergence_tol", "razumikhin_slack"),
                "scenario.analysis")
    tol = 1e-3
    if "convergence_tol" in data:
        tol = _as_number(data["convergence_tol"],
                         "scenario.analysis.convergence_tol")
        if tol <= 0.0:
            raise ScenarioError("scenario.analysis.convergence_tol: must be "
                                "positive")
    slack = None
    if "razumikhin_slack" in data and data["razumikhin_slack"] is not None:
        slack = _as_number(data["razumikhin_slack"],
                           "scenario.analysis.razumikhin_slack")
        if slack < 0.0:
            raise ScenarioError("scenario.analysis.razumikhin_slack: must be "
                                ">= 0")
    return tol, slack
