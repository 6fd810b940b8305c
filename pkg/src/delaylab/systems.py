"""Right-hand sides of the delay consensus families.

Every built-in family decomposes as

    dx/dt = f(x(t)) + sum_k g_k(x(t - tau_k(t)))

with f(x) = E sigma(x) and g_k(u) = F_k sigma(u), where sigma is the
identity (``linear``, ``neutral``) or an odd power applied entrywise
(``cubic`` is exponent 3; ``odd_power`` with parameter p is exponent 2p+1).
Because each row of E + sum_k F_k sums to zero, every uniform state alpha*1
is an equilibrium regardless of the delays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delays import DelayProfile
from .network import SystemMatrices

KINDS = ("linear", "cubic", "neutral", "odd_power")


@dataclass(frozen=True)
class SystemRHS:
    kind: str
    matrices: SystemMatrices
    exponent: int = 1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.exponent < 1 or self.exponent % 2 == 0:
            raise ValueError("state exponent must be a positive odd integer")

    @classmethod
    def linear(cls, matrices: SystemMatrices) -> "SystemRHS":
        return cls("linear", matrices, 1)

    @classmethod
    def cubic(cls, matrices: SystemMatrices) -> "SystemRHS":
        return cls("cubic", matrices, 3)

    @classmethod
    def odd_power(cls, matrices: SystemMatrices, p: int = 1) -> "SystemRHS":
        if p < 1:
            raise ValueError("odd_power parameter p must be >= 1")
        return cls("odd_power", matrices, 2 * p + 1)

    @classmethod
    def neutral(cls, m: int) -> "SystemRHS":
        """Scalar system dx/dt = -m x + sum over m unit delay channels."""
        if m < 1:
            raise ValueError("neutral system needs m >= 1 delay channels")
        mats = SystemMatrices(E=np.array([[-float(m)]]),
                              F=np.ones((m, 1, 1)))
        return cls("neutral", mats, 1)

    # -- evaluation -----------------------------------------------------------

    @property
    def n(self) -> int:
        return self.matrices.n

    @property
    def m(self) -> int:
        return self.matrices.m

    def _sigma(self, v: np.ndarray) -> np.ndarray:
        if self.exponent == 1:
            return v
        return v ** self.exponent

    def drift(self, x) -> np.ndarray:
        """Undelayed part f(x) = E sigma(x)."""
        return self.matrices.E @ self._sigma(np.asarray(x, dtype=float))

    def coupling(self, k: int, u) -> np.ndarray:
        """Delay-channel part g_k(u) = F_k sigma(u)."""
        return self.matrices.F[k] @ self._sigma(np.asarray(u, dtype=float))

    def rhs(self, x, delayed) -> np.ndarray:
        """f(x) + sum_k g_k(delayed[k]); ``delayed`` has one state per channel."""
        if len(delayed) != self.m:
            raise ValueError(f"expected {self.m} delayed states, got {len(delayed)}")
        out = self.drift(x)
        for k, u in enumerate(delayed):
            out = out + self.coupling(k, u)
        return out

    def equilibrium_residual(self, z) -> float:
        """Euclidean norm of the rhs with all arguments frozen at z."""
        z = np.asarray(z, dtype=float)
        return float(np.linalg.norm(self.rhs(z, [z] * self.m)))


@dataclass(frozen=True)
class LimitingSystem:
    """The constant-delay system a time-varying run settles into."""

    base: SystemRHS
    delays: tuple[float, ...]

    def constant_profiles(self) -> tuple[DelayProfile, ...]:
        return tuple(DelayProfile.constant(h) for h in self.delays)


def limiting_of(system: SystemRHS, profiles) -> LimitingSystem:
    """Freeze each delay channel at its long-time limit."""
    if len(profiles) != system.m:
        raise ValueError(f"expected {system.m} delay profiles, got {len(profiles)}")
    return LimitingSystem(base=system, delays=tuple(p.limit() for p in profiles))
