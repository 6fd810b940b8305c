"""History functions and dense trajectories.

A :class:`HistoryFunction` is the initial data of a delay system, defined on
the closed interval [-h, 0]. A :class:`DenseTrajectory` extends it forward:
it stores (time, state, state derivative) nodes and evaluates anywhere in
[t0 - h, last node] with cubic Hermite interpolation between nodes, falling
back to the history for times before t0. Node queries return the stored
values exactly, so delayed lookups that land on the grid are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Absolute slack for closed-interval boundary checks; guards against the
# one-ulp rounding of t - tau(t) without admitting genuinely outside queries.
def _edge_tol(scale: float) -> float:
    return 1e-12 * (1.0 + abs(scale))


@dataclass(frozen=True)
class HistoryFunction:
    """Initial segment phi on [-horizon, 0], vector valued.

    Kinds: ``constant`` (phi = a), ``affine`` (phi(theta) = a + b theta) and
    ``sampled`` (piecewise linear through strictly increasing abscissae that
    span [-horizon, 0] exactly).
    """

    kind: str
    horizon: float
    a: np.ndarray | None = None
    b: np.ndarray | None = None
    thetas: np.ndarray | None = None
    samples: np.ndarray | None = None

    @classmethod
    def constant(cls, value, horizon: float) -> "HistoryFunction":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        if horizon < 0.0:
            raise ValueError("history horizon must be >= 0")
        return cls("constant", float(horizon), a=value)

    @classmethod
    def affine(cls, a, b, horizon: float) -> "HistoryFunction":
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if a.shape != b.shape:
            raise ValueError("affine history needs a and b of equal length")
        if horizon < 0.0:
            raise ValueError("history horizon must be >= 0")
        return cls("affine", float(horizon), a=a, b=b)

    @classmethod
    def sampled(cls, thetas, values) -> "HistoryFunction":
        thetas = np.asarray(thetas, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if thetas.ndim != 1 or thetas.size < 2:
            raise ValueError("sampled history needs at least two abscissae")
        if values.shape[0] != thetas.size:
            raise ValueError("sampled history needs one value row per abscissa")
        if np.any(np.diff(thetas) <= 0.0):
            raise ValueError("sampled history abscissae must be strictly increasing")
        if thetas[-1] != 0.0:
            raise ValueError("sampled history must end exactly at theta = 0")
        if thetas[0] > 0.0:
            raise ValueError("sampled history must start at theta = -horizon <= 0")
        return cls("sampled", float(-thetas[0]), thetas=thetas, samples=values)

    @property
    def dimension(self) -> int:
        if self.kind == "sampled":
            return self.samples.shape[1]
        return self.a.shape[0]

    def evaluate_batch(self, thetas) -> np.ndarray:
        """phi at each theta, shape (len(thetas), dimension)."""
        th = np.asarray(thetas, dtype=float)
        tol = _edge_tol(self.horizon)
        if np.any(th < -self.horizon - tol) or np.any(th > tol):
            bad = th[(th < -self.horizon - tol) | (th > tol)][0]
            raise ValueError(
                f"history evaluated at theta={bad!r}, outside [{-self.horizon}, 0]"
            )
        th = np.clip(th, -self.horizon, 0.0)
        if self.kind == "constant":
            return np.broadcast_to(self.a, (th.size, self.a.size)).copy()
        if self.kind == "affine":
            return self.a[None, :] + self.b[None, :] * th[:, None]
        idx = np.clip(np.searchsorted(self.thetas, th, side="right") - 1, 0,
                      self.thetas.size - 2)
        t0 = self.thetas[idx]
        w = (th - t0) / (self.thetas[idx + 1] - t0)
        v0 = self.samples[idx]
        return v0 + w[:, None] * (self.samples[idx + 1] - v0)

    def evaluate(self, theta: float) -> np.ndarray:
        """phi at a single theta in [-horizon, 0]."""
        return self.evaluate_batch(np.array([float(theta)]))[0]


class DenseTrajectory:
    """Dense solution record over [t0 - horizon, last node].

    Nodes are (t_i, x_i, d_i) with d_i the stored state derivative; between
    consecutive nodes the state is the cubic Hermite interpolant matching
    both endpoints and endpoint derivatives. Times before t0 defer to the
    history function. The derivative slot at t0 starts unset and must be
    filled (by the first right-hand-side evaluation) before the first
    appended step.
    """

    def __init__(self, history: HistoryFunction, t0: float = 0.0):
        self.history = history
        self.t0 = float(t0)
        n = history.dimension
        self._cap = 64
        self._times = np.empty(self._cap)
        self._states = np.empty((self._cap, n))
        self._derivs = np.empty((self._cap, n))
        self._size = 1
        self._times[0] = self.t0
        self._states[0] = history.evaluate(0.0)
        self._derivs[0] = np.nan
        self._d0_set = False

    @classmethod
    def from_arrays(cls, history: HistoryFunction, times, states, derivs
                    ) -> "DenseTrajectory":
        """Bulk construction from integrator output arrays."""
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float)
        derivs = np.asarray(derivs, dtype=float)
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("node times must be strictly increasing")
        traj = cls(history, times[0])
        size = times.size
        traj._cap = size
        traj._times = times.copy()
        traj._states = states.copy()
        traj._derivs = derivs.copy()
        traj._size = size
        traj._d0_set = True
        return traj

    # -- node bookkeeping ----------------------------------------------------

    @property
    def size(self) -> int:
        return self._size

    @property
    def times(self) -> np.ndarray:
        return self._times[: self._size]

    @property
    def states(self) -> np.ndarray:
        return self._states[: self._size]

    @property
    def derivs(self) -> np.ndarray:
        return self._derivs[: self._size]

    @property
    def dimension(self) -> int:
        return self._states.shape[1]

    @property
    def has_initial_derivative(self) -> bool:
        return self._d0_set

    def set_initial_derivative(self, d) -> None:
        if self._d0_set:
            raise ValueError("initial derivative is already set")
        self._derivs[0] = np.asarray(d, dtype=float)
        self._d0_set = True

    def append_step(self, t: float, x, d) -> None:
        """Append one accepted node; times must be strictly increasing."""
        if not self._d0_set:
            raise ValueError("set the initial derivative before appending steps")
        t = float(t)
        if t <= self._times[self._size - 1]:
            raise ValueError(
                f"node time {t} does not increase past {self._times[self._size - 1]}"
            )
        if self._size == self._cap:
            self._grow()
        self._times[self._size] = t
        self._states[self._size] = np.asarray(x, dtype=float)
        self._derivs[self._size] = np.asarray(d, dtype=float)
        self._size += 1

    def _grow(self) -> None:
        self._cap *= 2
        for name in ("_times", "_states", "_derivs"):
            old = getattr(self, name)
            new = np.empty((self._cap,) + old.shape[1:])
            new[: self._size] = old[: self._size]
            setattr(self, name, new)

    # -- evaluation ----------------------------------------------------------

    def evaluate_batch(self, ts) -> np.ndarray:
        """State at each time, shape (len(ts), dimension).

        Times below t0 read the history; node times return stored states
        exactly; everything else is the cubic Hermite segment value.
        """
        ts = np.asarray(ts, dtype=float)
        times = self.times
        t_last = times[self._size - 1]
        tol = _edge_tol(t_last)
        if np.any(ts > t_last + tol):
            bad = ts[ts > t_last + tol][0]
            raise ValueError(f"evaluation at t={bad!r}, beyond last node {t_last}")
        ts = np.minimum(ts, t_last)
        out = np.empty((ts.size, self.dimension))
        past = ts < self.t0
        if past.any():
            out[past] = self.history.evaluate_batch(ts[past] - self.t0)
        fwd = ~past
        if fwd.any():
            tf = ts[fwd]
            if self._size == 1:
                # only the t0 node exists and tf == t0 within tolerance
                out[fwd] = self._states[0]
                return out
            if not self._d0_set and np.any(tf > self.t0):
                raise ValueError("initial derivative unset; segment undefined")
            idx = np.clip(np.searchsorted(times, tf, side="right") - 1, 0,
                          self._size - 2)
            ta = times[idx]
            dt = times[idx + 1] - ta
            th = (tf - ta) / dt
            t2 = th * th
            t3 = t2 * th
            h00 = 2.0 * t3 - 3.0 * t2 + 1.0
            h10 = t3 - 2.0 * t2 + th
            h01 = -2.0 * t3 + 3.0 * t2
            h11 = t3 - t2
            x0 = self._states[idx]
            x1 = self._states[idx + 1]
            d0 = self._derivs[idx]
            d1 = self._derivs[idx + 1]
            out[fwd] = (h00[:, None] * x0 + h01[:, None] * x1
                        + (h10[:, None] * d0 + h11[:, None] * d1) * dt[:, None])
        return out

    def evaluate(self, t: float) -> np.ndarray:
        """State at one time in [t0 - horizon, last node]."""
        return self.evaluate_batch(np.array([float(t)]))[0]

    # -- export ---------------------------------------------------------------

    def write_csv(self, path, every: int = 1) -> None:
        """Write nodes as CSV with header t,x_1,...,x_n.

        ``every`` thins the node list (the final node is always kept); all
        numbers use 17 significant digits so a reader recovers the doubles
        bit for bit.
        """
        if every < 1:
            raise ValueError("thinning factor must be >= 1")
        idx = list(range(0, self._size, every))
        if idx[-1] != self._size - 1:
            idx.append(self._size - 1)
        n = self.dimension
        with open(path, "w", newline="") as fh:
            fh.write("t," + ",".join(f"x_{c + 1}" for c in range(n)) + "\n")
            for i in idx:
                row = [self._times[i]] + list(self._states[i])
                fh.write(",".join("%.17g" % v for v in row) + "\n")
