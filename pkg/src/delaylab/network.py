"""Weighted delay-channel digraphs and their system matrices.

A :class:`ConsensusNetwork` lists directed links (agent i listens to agent j
through delay channel k with weight a_ij > 0). ``build_system_matrices``
compiles the link list into the coupling matrices F_k and the diagonal
drift matrix E whose entries are the negated row sums of sum_k F_k, so that
(E + sum_k F_k) 1 = 0 holds structurally. Column-sum balance (needed for the
conservation law) is a property of the particular graph and is reported
separately by ``validate_laplacian_structure``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Link:
    """Agent ``agent`` integrates x_``neighbor``(t - tau_``channel``) * weight."""

    agent: int
    neighbor: int
    weight: float
    channel: int


@dataclass(frozen=True)
class ConsensusNetwork:
    n: int
    links: tuple[Link, ...]
    m: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("network needs at least one agent")
        if self.m < 1:
            raise ValueError("network needs at least one delay channel")
        if not self.links:
            raise ValueError("network has no links")
        seen = set()
        for link in self.links:
            if not (0 <= link.agent < self.n and 0 <= link.neighbor < self.n):
                raise ValueError(f"link {link} references an agent outside 0..{self.n - 1}")
            if link.agent == link.neighbor:
                raise ValueError(f"self-link on agent {link.agent} is not allowed")
            if not (0 <= link.channel < self.m):
                raise ValueError(f"link {link} references delay channel outside 0..{self.m - 1}")
            if link.weight <= 0.0:
                raise ValueError(f"link {link} needs a positive weight")
            key = (link.agent, link.neighbor, link.channel)
            if key in seen:
                raise ValueError(f"duplicate link (agent {link.agent}, neighbor "
                                 f"{link.neighbor}, channel {link.channel})")
            seen.add(key)


@dataclass(frozen=True)
class SystemMatrices:
    """Drift matrix E (diagonal) and stacked coupling matrices F, shape (m, n, n)."""

    E: np.ndarray
    F: np.ndarray

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[0]

    def total_coupling(self) -> np.ndarray:
        """E + sum_k F_k."""
        return self.E + self.F.sum(axis=0)


def build_system_matrices(net: ConsensusNetwork) -> SystemMatrices:
    """Compile a link list into (E, F_1..F_m)."""
    F = np.zeros((net.m, net.n, net.n))
    for link in net.links:
        F[link.channel, link.agent, link.neighbor] = link.weight
    E = -np.diag(F.sum(axis=0).sum(axis=1))
    return SystemMatrices(E=E, F=F)


@dataclass(frozen=True)
class LaplacianReport:
    row_sums_zero: bool
    col_sums_zero: bool
    nonnegative_coupling: bool
    rank_is_n_minus_1: bool
    rank: int

    def all_pass(self) -> bool:
        return (self.row_sums_zero and self.col_sums_zero
                and self.nonnegative_coupling and self.rank_is_n_minus_1)


def rank_deficiency(a, tol: float = 1e-10) -> int:
    """Dimension of the (numerical) null space of a square matrix.

    Gaussian elimination with complete pivoting; a pivot counts while its
    magnitude exceeds tol * the infinity norm of the input.
    """
    A = np.array(a, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("rank_deficiency expects a square matrix")
    n = A.shape[0]
    if n == 0:
        return 0
    thresh = tol * float(np.abs(A).sum(axis=1).max())
    rank = 0
    for step in range(n):
        sub = np.abs(A[step:, step:])
        flat = int(np.argmax(sub))
        i, j = divmod(flat, sub.shape[1])
        if sub[i, j] <= thresh:
            break
        if i:
            A[[step, step + i], :] = A[[step + i, step], :]
        if j:
            A[:, [step, step + j]] = A[:, [step + j, step]]
        rank += 1
        piv = A[step, step]
        mult = A[step + 1:, step] / piv
        A[step + 1:, step:] -= np.outer(mult, A[step, step:])
    return n - rank


def validate_laplacian_structure(mats: SystemMatrices, tol: float = 1e-10
                                 ) -> LaplacianReport:
    """Structural checks on (E, F): sum rules, sign, and rank n-1."""
    L = mats.total_coupling()
    scale = 1.0 + float(np.abs(L).max())
    row = float(np.abs(L.sum(axis=1)).max()) <= tol * scale
    col = float(np.abs(L.sum(axis=0)).max()) <= tol * scale
    nonneg = bool(np.all(mats.F >= 0.0))
    deficiency = rank_deficiency(L, tol)
    return LaplacianReport(
        row_sums_zero=row,
        col_sums_zero=col,
        nonnegative_coupling=nonneg,
        rank_is_n_minus_1=(deficiency == 1),
        rank=mats.n - deficiency,
    )
