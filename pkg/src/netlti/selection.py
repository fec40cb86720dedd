"""Minimal local input/output counts from eigenspace dimensions.

A subsystem's state-transition matrix ``A`` needs at least ``p_max(A)``
independent output rows (external plus internal) to be observable, and the
same number of input columns to be controllable; that count is also enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lifted import max_geometric_multiplicity
from .numerics import DEFAULT_TOL, Tolerances


@dataclass
class SelectionResult:
    p_max: list[int]
    min_outputs: list[int]
    min_inputs: list[int]
    feasible: list[bool] | None = None
    deficit: list[int] | None = None

    @property
    def all_feasible(self) -> bool:
        return self.feasible is None or all(self.feasible)

    def to_dict(self) -> dict:
        d = {"p_max": self.p_max, "min_outputs": self.min_outputs,
             "min_inputs": self.min_inputs}
        if self.feasible is not None:
            d["feasible"] = self.feasible
            d["deficit"] = self.deficit
        return d


def min_local_io(stms, tol: Tolerances = DEFAULT_TOL) -> SelectionResult:
    """Per-subsystem minimal ``m_y + m_z`` and ``m_u + m_v``."""
    p = []
    for A in stms:
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"state-transition matrix must be square, got {A.shape}")
        p.append(max_geometric_multiplicity(A, tol)[0])
    return SelectionResult(p, list(p), list(p))


def check_budget(stms, budget, tol: Tolerances = DEFAULT_TOL) -> SelectionResult:
    """Feasibility of per-subsystem I/O budgets; ``deficit`` is ``p_max - budget``."""
    res = min_local_io(stms, tol)
    budget = [int(b) for b in budget]
    if len(budget) != len(res.p_max):
        raise ValueError(f"{len(budget)} budgets for {len(res.p_max)} subsystems")
    if any(b < 0 for b in budget):
        raise ValueError("budgets must be nonnegative")
    res.feasible = [b >= p for b, p in zip(budget, res.p_max)]
    res.deficit = [max(0, p - b) for b, p in zip(budget, res.p_max)]
    return res
