"""Fixed-step integration of the delay systems.

The main scheme is the classical four-stage Runge-Kutta method applied to a
delay system: delayed arguments are read from the cubic Hermite dense output
over already accepted steps, and reads that land inside the step currently
being taken use a provisional interpolant that is refined by fixed-point
iteration until the step reproduces itself. With delays bounded away from
zero no lookup enters the current step and every step is accepted in one
pass; vanishing delays trigger the iteration automatically.

A first-order explicit companion scheme with linear-interpolation lookups is
provided as an independent cross-check, along with a convergence-order probe
that measures the observed order on a step-size ladder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .delays import DelayProfile, max_bound
from .history import DenseTrajectory, HistoryFunction, _edge_tol
from .systems import SystemRHS

_HISTORY_CODES = {"constant": 0, "affine": 1, "sampled": 2}


class NonconvergentStepError(RuntimeError):
    """A step's fixed-point iteration did not meet tolerance."""

    def __init__(self, step_index: int, time: float):
        super().__init__(
            f"fixed-point iteration did not converge at step {step_index} "
            f"(t = {time!r}); reduce the step or raise max_fixed_point_iters"
        )
        self.step_index = step_index
        self.time = time


@dataclass(frozen=True)
class IntegrationConfig:
    """Grid and iteration controls.

    ``record_every`` only thins exported CSV rows; the in-memory trajectory
    always keeps every node because delayed lookups need them.
    """

    step: float
    t_end: float
    t0: float = 0.0
    max_fixed_point_iters: int = 10
    fixed_point_tol: float = 1e-12
    record_every: int = 1

    def __post_init__(self) -> None:
        if not self.step > 0.0:
            raise ValueError("step must be positive")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")
        if self.step > self.t_end - self.t0:
            raise ValueError("step must not exceed t_end - t0")
        if self.max_fixed_point_iters < 1:
            raise ValueError("max_fixed_point_iters must be >= 1")
        if not self.fixed_point_tol > 0.0:
            raise ValueError("fixed_point_tol must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


class IntegrationResult(NamedTuple):
    trajectory: DenseTrajectory
    iterations: np.ndarray


class StepResult(NamedTuple):
    state: np.ndarray
    derivative: np.ndarray
    iterations: int


class EulerResult(NamedTuple):
    times: np.ndarray
    states: np.ndarray


def time_grid(t0: float, t_end: float, step: float) -> np.ndarray:
    """Uniform grid from t0 with a final node pinned exactly at t_end.

    When step does not divide the span the last segment is shorter; a
    remainder below 1e-9 steps is treated as rounding noise and absorbed.
    """
    total = t_end - t0
    n_full = int(np.floor(total / step + 1e-9))
    rem = total - n_full * step
    n_steps = n_full if rem <= step * 1e-9 else n_full + 1
    n_steps = max(n_steps, 1)
    times = t0 + step * np.arange(n_steps + 1, dtype=float)
    times[-1] = t_end
    return times


def _encode_history(history: HistoryFunction):
    n = history.dimension
    zeros = np.zeros(n)
    dummy_t = np.array([-1.0, 0.0])
    dummy_v = np.zeros((2, n))
    code = _HISTORY_CODES[history.kind]
    if history.kind == "constant":
        return code, np.ascontiguousarray(history.a, dtype=float), zeros, dummy_t, dummy_v
    if history.kind == "affine":
        return (code, np.ascontiguousarray(history.a, dtype=float),
                np.ascontiguousarray(history.b, dtype=float), dummy_t, dummy_v)
    return (code, zeros, zeros, np.ascontiguousarray(history.thetas, dtype=float),
            np.ascontiguousarray(history.samples, dtype=float))


def _check_setup(system: SystemRHS, profiles: tuple, history: HistoryFunction) -> None:
    if len(profiles) != system.m:
        raise ValueError(f"expected {system.m} delay profiles, got {len(profiles)}")
    if history.dimension != system.n:
        raise ValueError(
            f"history dimension {history.dimension} != system dimension {system.n}"
        )
    need = max_bound(profiles) if profiles else 0.0
    if history.horizon + _edge_tol(need) < need:
        raise ValueError(
            f"history horizon {history.horizon} is shorter than the "
            f"worst-case delay bound {need}"
        )


def integrate(system: SystemRHS, profiles: Sequence[DelayProfile],
              history: HistoryFunction, config: IntegrationConfig
              ) -> IntegrationResult:
    """Solve the delay system over [t0, t_end] on a fixed grid."""
    profiles = tuple(profiles)
    _check_setup(system, profiles, history)
    times = time_grid(config.t0, config.t_end, config.step)
    n_steps = times.size - 1
    n = system.n
    m = system.m

    X = np.empty((n_steps + 1, n))
    D = np.empty((n_steps + 1, n))
    X[0] = history.evaluate(0.0)

    # delay values are state independent: evaluate them for every stage time
    starts = times[:-1]
    mids = 0.5 * (times[:-1] + times[1:])
    ends = times[1:]
    tau_a = np.empty((m, n_steps))
    tau_m = np.empty((m, n_steps))
    tau_b = np.empty((m, n_steps))
    for k, profile in enumerate(profiles):
        tau_a[k] = profile.values(starts)
        tau_m[k] = profile.values(mids)
        tau_b[k] = profile.values(ends)

    hkind, ha, hb, ht, hv = _encode_history(history)
    iters = np.zeros(n_steps, dtype=np.int64)
    status, bad = _kernels.rk4_dde_kernel(
        times, X, D,
        np.ascontiguousarray(system.matrices.E, dtype=float),
        np.ascontiguousarray(system.matrices.F, dtype=float),
        system.exponent, tau_a, tau_m, tau_b,
        hkind, ha, hb, ht, hv, -history.horizon,
        config.max_fixed_point_iters, config.fixed_point_tol, iters)
    if status == 1:
        raise ValueError(
            f"delayed lookup before the history start at step {bad} "
            f"(t = {times[bad]!r}); extend the history horizon"
        )
    if status == 2:
        raise NonconvergentStepError(int(bad), float(times[bad]))
    trajectory = DenseTrajectory.from_arrays(history, times, X, D)
    return IntegrationResult(trajectory, iters)


def step_rk4_dde(system: SystemRHS, profiles: Sequence[DelayProfile],
                 trajectory: DenseTrajectory, t: float, dt: float,
                 max_fixed_point_iters: int = 10,
                 fixed_point_tol: float = 1e-12) -> StepResult:
    """Advance the trajectory by one step starting at its last node.

    Pure-python mirror of the compiled stepper, kept as a readable
    reference and cross-check; appends the accepted node to ``trajectory``.
    """
    profiles = tuple(profiles)
    if len(profiles) != system.m:
        raise ValueError(f"expected {system.m} delay profiles, got {len(profiles)}")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    t_last = float(trajectory.times[-1])
    if abs(float(t) - t_last) > _edge_tol(t_last):
        raise ValueError(f"step must start at the last node t = {t_last!r}")
    t = t_last
    x_t = trajectory.states[-1].copy()
    if trajectory.has_initial_derivative:
        d_t = trajectory.derivs[-1].copy()
    else:
        u0 = [trajectory.evaluate(t - p.value(t)) for p in profiles]
        d_t = system.rhs(x_t, u0)
        trajectory.set_initial_derivative(d_t)

    t_next = t + dt
    half = t + 0.5 * dt
    tau_a = [p.value(t) for p in profiles]
    tau_m = [p.value(half) for p in profiles]
    tau_b = [p.value(t_next) for p in profiles]

    xp = x_t + dt * d_t
    dp = d_t.copy()

    def delayed(s: float) -> tuple[np.ndarray, bool]:
        if s <= t:
            return trajectory.evaluate(s), False
        th = min((s - t) / dt, 1.0)
        t2 = th * th
        t3 = t2 * th
        h00 = 2.0 * t3 - 3.0 * t2 + 1.0
        h10 = t3 - 2.0 * t2 + th
        h01 = -2.0 * t3 + 3.0 * t2
        h11 = t3 - t2
        return h00 * x_t + h01 * xp + (h10 * d_t + h11 * dp) * dt, True

    iterations = 0
    converged = False
    for _ in range(max_fixed_point_iters):
        used = False
        u1 = []
        for k in range(system.m):
            v, provisional = delayed(t - tau_a[k])
            used |= provisional
            u1.append(v)
        k1 = system.rhs(x_t, u1)
        um = []
        for k in range(system.m):
            v, provisional = delayed(half - tau_m[k])
            used |= provisional
            um.append(v)
        k2 = system.rhs(x_t + 0.5 * dt * k1, um)
        k3 = system.rhs(x_t + 0.5 * dt * k2, um)
        u4 = []
        for k in range(system.m):
            v, provisional = delayed(t_next - tau_b[k])
            used |= provisional
            u4.append(v)
        k4 = system.rhs(x_t + dt * k3, u4)
        x_new = x_t + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        diff = float(np.max(np.abs(x_new - xp)))
        xp = x_new
        dp = system.rhs(x_new, u4)
        iterations += 1
        if not used or diff <= fixed_point_tol * (1.0 + float(np.max(np.abs(x_new)))):
            converged = True
            break
    if not converged:
        raise NonconvergentStepError(trajectory.size - 1, t)
    trajectory.append_step(t_next, xp, dp)
    return StepResult(xp, dp, iterations)


def integrate_euler_reference(system: SystemRHS, profiles: Sequence[DelayProfile],
                              history: HistoryFunction, step: float,
                              t_end: float, t0: float = 0.0) -> EulerResult:
    """First-order companion solve, independent of the Hermite machinery."""
    profiles = tuple(profiles)
    _check_setup(system, profiles, history)
    times = time_grid(t0, t_end, step)
    n_steps = times.size - 1
    X = np.empty((n_steps + 1, system.n))
    X[0] = history.evaluate(0.0)
    tau = np.empty((system.m, n_steps))
    for k, profile in enumerate(profiles):
        tau[k] = profile.values(times[:-1])
    hkind, ha, hb, ht, hv = _encode_history(history)
    status, bad = _kernels.euler_dde_kernel(
        times, X,
        np.ascontiguousarray(system.matrices.E, dtype=float),
        np.ascontiguousarray(system.matrices.F, dtype=float),
        system.exponent, tau, hkind, ha, hb, ht, hv, -history.horizon)
    if status == 1:
        raise ValueError(
            f"delayed lookup before the history start at step {bad} "
            f"(t = {times[bad]!r}); extend the history horizon"
        )
    return EulerResult(times, X)


def solution_at(system: SystemRHS, profiles: Sequence[DelayProfile],
                history: HistoryFunction, t_probe: float, step: float,
                t0: float = 0.0) -> np.ndarray:
    """State at t_probe from a fresh solve with the given step."""
    config = IntegrationConfig(step=step, t_end=t_probe, t0=t0)
    result = integrate(system, profiles, history, config)
    return result.trajectory.states[-1]


def observed_order(system: SystemRHS, profiles: Sequence[DelayProfile],
                   history: HistoryFunction, t_probe: float,
                   steps: Sequence[float], ref_divisor: int = 20,
                   t0: float = 0.0) -> float:
    """Least-squares slope of log error against log step.

    Errors are sup-norm distances at t_probe from a reference solve at
    min(steps)/ref_divisor. Kinks from delay profiles or deep history
    lower the slope below the smooth-problem order of four.
    """
    steps = sorted(float(s) for s in steps)
    if len(steps) < 3:
        raise ValueError("need at least three step sizes")
    if ref_divisor < 2:
        raise ValueError("ref_divisor must be >= 2")
    span = t_probe - t0
    for s in steps:
        ratio = span / s
        if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
            raise ValueError(f"step {s} does not divide the span {span}")
    reference = solution_at(system, profiles, history, t_probe,
                            steps[0] / ref_divisor, t0)
    errors = []
    for s in steps:
        x = solution_at(system, profiles, history, t_probe, s, t0)
        err = float(np.max(np.abs(x - reference)))
        if not err > 0.0:
            raise ValueError(
                f"error at step {s} is {err}; ladder cannot resolve the order"
            )
        errors.append(err)
    slope = np.polyfit(np.log(np.asarray(steps)), np.log(np.asarray(errors)), 1)[0]
    return float(slope)
