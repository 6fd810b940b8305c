"""Bounded time-varying delay profiles.

Each profile is a continuous map t -> tau(t) >= 0 with a finite constant
bound and a finite long-time limit. Profiles carry no derivative accessor
on purpose: every consumer in this package is required to work for merely
continuous delays.

Built-in kinds (h is the scale parameter):

==============  ====================================
constant        tau = h
sin_shift       tau = h |sin(pi/2 + pi / (1 + |t|))|
t_sin_inv       tau = h |t sin(1/t)|, tau(0) = h
exp_approach    tau = h (1 - e^-|t|)
exp_sin         tau = h - h e^-|t| sin t
sin_inv_shift   tau = h - h sin(1 / (1 + |t|))
table           piecewise linear through samples,
                constant tail beyond the last sample
==============  ====================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BUILTIN_KINDS = (
    "constant",
    "sin_shift",
    "t_sin_inv",
    "exp_approach",
    "exp_sin",
    "sin_inv_shift",
)
KINDS = BUILTIN_KINDS + ("table",)

# sup of (tau/h - 1) for exp_sin over t >= -bound; attained at t = -pi/4.
# exp_sin overshoots its scale h (the excess peaks at ~1.39% for t >= 0),
# so h itself is not a valid bound for this kind.
EXP_SIN_EXCESS = math.exp(-math.pi / 4.0) * math.sin(math.pi / 4.0)

_PROFILE_KEYS = {"kind", "h", "samples", "tail"}


@dataclass(frozen=True)
class DelayProfile:
    """One delay channel tau_k(t).

    Use the ``constant`` / ``builtin`` / ``table`` constructors rather than
    the raw dataclass fields.
    """

    kind: str
    h: float | None = None
    samples: tuple[tuple[float, float], ...] | None = None
    tail: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown delay kind {self.kind!r}")
        if self.kind == "table":
            if self.h is not None:
                raise ValueError("table profiles take samples, not h")
            if not self.samples:
                raise ValueError("table profile needs at least one sample")
            ts = [t for t, _ in self.samples]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("table sample times must be strictly increasing")
            if any(tau < 0.0 for _, tau in self.samples):
                raise ValueError("table delays must be nonnegative")
            if self.tail is not None and self.tail < 0.0:
                raise ValueError("tail delay must be nonnegative")
        else:
            if self.samples is not None or self.tail is not None:
                raise ValueError(f"{self.kind} profile takes only h")
            if self.h is None or self.h < 0.0:
                raise ValueError("delay scale h must be >= 0")

    @classmethod
    def constant(cls, h: float) -> "DelayProfile":
        return cls("constant", h=float(h))

    @classmethod
    def builtin(cls, kind: str, h: float) -> "DelayProfile":
        if kind not in BUILTIN_KINDS:
            raise ValueError(f"unknown built-in delay kind {kind!r}")
        return cls(kind, h=float(h))

    @classmethod
    def table(
        cls,
        samples: "list[tuple[float, float]] | tuple[tuple[float, float], ...]",
        tail: float | None = None,
    ) -> "DelayProfile":
        samples = tuple((float(t), float(tau)) for t, tau in samples)
        return cls("table", samples=samples, tail=None if tail is None else float(tail))

    # -- evaluation ---------------------------------------------------------

    def values(self, ts: np.ndarray) -> np.ndarray:
        """tau at each time in ``ts`` (vectorized)."""
        ts = np.asarray(ts, dtype=float)
        h = self.h
        if self.kind == "constant":
            return np.full_like(ts, h)
        if self.kind == "sin_shift":
            return h * np.abs(np.sin(np.pi / 2.0 + np.pi / (1.0 + np.abs(ts))))
        if self.kind == "t_sin_inv":
            out = np.full_like(ts, h)
            nz = ts != 0.0
            tn = ts[nz]
            out[nz] = h * np.abs(tn * np.sin(1.0 / tn))
            return out
        if self.kind == "exp_approach":
            return h * (1.0 - np.exp(-np.abs(ts)))
        if self.kind == "exp_sin":
            return h - h * np.exp(-np.abs(ts)) * np.sin(ts)
        if self.kind == "sin_inv_shift":
            return h - h * np.sin(1.0 / (1.0 + np.abs(ts)))
        # table
        knots = np.array([t for t, _ in self.samples])
        taus = np.array([tau for _, tau in self.samples])
        if np.any(ts < knots[0]):
            raise ValueError(
                f"table profile is undefined before its first sample t={knots[0]}"
            )
        if self.tail is None and np.any(ts > knots[-1]):
            raise ValueError("table profile has no declared tail limit")
        out = np.interp(ts, knots, taus)
        if self.tail is not None:
            out = np.where(ts > knots[-1], self.tail, out)
        return out

    def value(self, t: float) -> float:
        """tau at a single time."""
        return float(self.values(np.array([float(t)]))[0])

    # -- declared constants -------------------------------------------------

    def limit(self) -> float:
        """Limit of tau(t) as t -> infinity."""
        if self.kind == "table":
            if self.tail is None:
                raise ValueError("table profile has no declared tail limit")
            return self.tail
        return self.h

    def bound(self) -> float:
        """Smallest declared constant B with tau(t) <= B for all t >= -B."""
        if self.kind == "table":
            best = max(tau for _, tau in self.samples)
            if self.tail is not None:
                best = max(best, self.tail)
            return best
        if self.kind == "exp_sin":
            return self.h * (1.0 + EXP_SIN_EXCESS)
        return self.h

    # -- sampled self-checks (used by `validate` and the test suite) --------

    def domain_start(self) -> float:
        """Leftmost time at which the profile is defined."""
        if self.kind == "table":
            return self.samples[0][0]
        return -math.inf

    def domain_end(self) -> float:
        """Rightmost time at which the profile is defined."""
        if self.kind == "table" and self.tail is None:
            return self.samples[-1][0]
        return math.inf

    def bound_margin(self, num: int = 10000) -> tuple[float, float]:
        """(min tau, min of bound - tau) over a sampled grid.

        The grid mixes linear coverage of [max(-bound, domain start), 10]
        with log-spaced coverage out to t = 1e6, clipped to the profile's
        domain. Both returned margins are nonnegative for a profile that
        honors its declared bound.
        """
        lo = max(-self.bound(), self.domain_start())
        hi = min(1e6, self.domain_end())
        grid = np.concatenate(
            [np.linspace(lo, min(10.0, hi), num // 2),
             np.logspace(1.0, 6.0, num - num // 2)]
        )
        grid = np.clip(grid, lo, hi)
        taus = self.values(grid)
        return float(taus.min()), float(self.bound() - taus.max())

    def settle_time(self, tol: float = 1e-3, num: int = 10000) -> float:
        """Empirical T with |tau(t) - limit| <= tol for all sampled t >= T."""
        lim = self.limit()
        grid = np.concatenate(
            [np.linspace(max(0.0, self.domain_start()), 10.0, num // 2),
             np.logspace(1.0, 6.0, num - num // 2)]
        )
        bad = np.abs(self.values(grid) - lim) > tol
        if not bad.any():
            return float(grid[0])
        last_bad = int(np.nonzero(bad)[0][-1])
        if last_bad + 1 >= grid.size:
            return math.inf
        return float(grid[last_bad + 1])

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "table":
            enc: dict = {"kind": self.kind, "samples": [list(s) for s in self.samples]}
            if self.tail is not None:
                enc["tail"] = self.tail
            return enc
        return {"kind": self.kind, "h": self.h}

    @classmethod
    def from_dict(cls, enc: dict) -> "DelayProfile":
        if not isinstance(enc, dict):
            raise ValueError("delay profile must be an object")
        unknown = set(enc) - _PROFILE_KEYS
        if unknown:
            raise ValueError(f"unknown delay profile key(s): {sorted(unknown)}")
        if "kind" not in enc:
            raise ValueError("delay profile needs a kind")
        kind = enc["kind"]
        if kind == "table":
            if "h" in enc:
                raise ValueError("table profiles take samples, not h")
            return cls.table(enc.get("samples") or (), enc.get("tail"))
        if "samples" in enc or "tail" in enc:
            raise ValueError(f"{kind} profile takes only h")
        if "h" not in enc:
            raise ValueError(f"{kind} profile needs h")
        return cls.builtin(kind, enc["h"])


def max_bound(profiles: "list[DelayProfile] | tuple[DelayProfile, ...]") -> float:
    """Largest declared bound across delay channels."""
    if not profiles:
        return 0.0
    return max(p.bound() for p in profiles)
