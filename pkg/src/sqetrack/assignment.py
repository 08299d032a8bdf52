"""Rectangular linear assignment with forbidden entries.

The solver maximises the number of matched (allowed) pairs first, then
minimises total cost, and among all optima returns the lexicographically
smallest sorted pair list.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ._backend import kernels


@dataclass(frozen=True, eq=False)
class AssignmentProblem:
    cost: np.ndarray
    forbidden: np.ndarray | None = None

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=np.float64)
        if cost.ndim != 2:
            cost = cost.reshape(0, 0) if cost.size == 0 else cost
        if cost.ndim != 2:
            raise ValueError("cost must be a 2-D matrix")
        forb = (
            np.zeros(cost.shape, dtype=bool)
            if self.forbidden is None
            else np.asarray(self.forbidden, dtype=bool)
        )
        if forb.shape != cost.shape:
            raise ValueError("forbidden mask must match the cost shape")
        # non-finite costs are treated as forbidden
        forb = forb | ~np.isfinite(cost)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "forbidden", forb)

    @property
    def allowed(self) -> np.ndarray:
        return ~self.forbidden


def _big(cost: np.ndarray, allowed: np.ndarray) -> float:
    k = min(cost.shape)
    finite = np.abs(cost[allowed]) if allowed.any() else np.zeros(1)
    return (2.0 * float(finite.max()) + 1.0) * (k + 1)


def _square(cost, allowed):
    """Pad to k x k: forbidden -> BIG, dummy rows/cols -> 0."""
    n, m = cost.shape
    k = max(n, m)
    sq = np.zeros((k, k))
    sq[:n, :m] = np.where(allowed, cost, _big(cost, allowed))
    return sq


def solve_assignment(problem: AssignmentProblem | np.ndarray, forbidden=None, *,
                     tie_break: bool = True) -> list[tuple[int, int]]:
    """Solve and return sorted (row, col) pairs of the optimal matching.

    ``tie_break=False`` skips the lexicographic canonicalisation (faster on large
    matrices; still deterministic, any optimum).
    """
    if not isinstance(problem, AssignmentProblem):
        problem = AssignmentProblem(problem, forbidden)
    cost, allowed = problem.cost, problem.allowed
    n, m = cost.shape
    if n == 0 or m == 0 or not allowed.any():
        return []
    if not tie_break:
        mat = np.where(allowed, cost, _big(cost, allowed))
        transposed = n > m
        if transposed:
            mat = mat.T
        col_of_row, _, _ = kernels.lsa(np.ascontiguousarray(mat))
        pairs = [(r, int(c)) for r, c in enumerate(col_of_row)]
        if transposed:
            pairs = [(c, r) for r, c in pairs]
        return sorted((r, c) for r, c in pairs if allowed[r, c])

    sq = _square(cost, allowed)
    col_of_row, u, v = kernels.lsa(np.ascontiguousarray(sq))
    return _lex_smallest(sq, u, v, col_of_row, allowed)


def _lex_smallest(sq, u, v, col_of_row, allowed) -> list[tuple[int, int]]:
    """Walk the tight-edge subgraph of an optimal dual to the lex-smallest optimum."""
    n, m = allowed.shape
    k = sq.shape[0]
    reduced = sq - u[:, None] - v[None, :]
    tol = 1e-9 * max(1.0, float(np.abs(sq).max()))
    tight = reduced <= tol
    real = np.zeros((k, k), dtype=bool)
    real[:n, :m] = allowed

    match = [int(c) for c in col_of_row]
    row_of = [0] * k
    for r, c in enumerate(match):
        row_of[c] = r
    fixed = [False] * k

    def reroute(start_row: int, target_col: int, blocked_row: int, banned_col: int):
        """Alternating path: move start_row off its column so target_col is taken."""
        parent: dict[int, tuple[int, int]] = {start_row: (-1, -1)}
        queue = deque([start_row])
        while queue:
            r = queue.popleft()
            for c in np.flatnonzero(tight[r]):
                c = int(c)
                if c == banned_col or c == match[r]:
                    continue
                if c == target_col:
                    # unwind: r takes c, its parent takes r's old column, ...
                    while r != -1:
                        prev_r, prev_c = parent[r]
                        old = match[r]
                        match[r] = c
                        row_of[c] = r
                        c = old
                        r = prev_r
                    return True
                r2 = row_of[c]
                if r2 in parent or fixed[r2] or r2 == blocked_row:
                    continue
                parent[r2] = (r, c)
                queue.append(r2)
        return False

    for i in range(n):
        placed = False
        for j in np.flatnonzero(real[i] & tight[i]):
            j = int(j)
            if match[i] == j:
                placed = True
            else:
                r = row_of[j]
                if not fixed[r] and reroute(r, match[i], i, j):
                    match[i] = j
                    row_of[j] = i
                    placed = True
            if placed:
                fixed[i] = True
                break
        if not placed:
            # row i is unmatched in every optimum extending the prefix
            tight[i] &= ~real[i]
    return sorted((i, match[i]) for i in range(n) if match[i] < m and allowed[i, match[i]])


def assignment_cost(problem: AssignmentProblem, pairs) -> float:
    return float(sum(problem.cost[r, c] for r, c in pairs))
