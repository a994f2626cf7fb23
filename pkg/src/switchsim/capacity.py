"""Maximal-schedule enumeration and the utilization-factor covering LP.

The LP is min 1'b subject to sum_j b_j * I^(j) >= rho, b >= 0, solved by a
dense two-phase tableau simplex with Bland's rule (instances here have at
most a couple dozen rows/columns, so no external solver is warranted).
`lp_oracle` solves the same LP by brute-force enumeration of basic
solutions and exists purely to cross-check the simplex in tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .model import Schedule

__all__ = [
    "ConflictSpec",
    "CapacityResult",
    "enumerate_maximal_schedules",
    "utilization_factor",
    "calibrate_arrivals",
    "lp_oracle",
    "schedule_set_violations",
]

_TOL = 1e-9
_MAX_QUEUES = 24


@dataclass(frozen=True)
class ConflictSpec:
    """Pairwise service conflicts plus a cap on simultaneous queues."""

    n_queues: int
    max_concurrency: int
    conflicts: frozenset[frozenset[int]] = field(default_factory=frozenset)

    @classmethod
    def of(cls, n_queues, max_concurrency, pairs=()) -> "ConflictSpec":
        normalized = []
        for a, b in pairs:
            if a == b:
                raise ValueError(f"conflict pair ({a}, {b}) is not a pair of distinct queues")
            if not (1 <= a <= n_queues and 1 <= b <= n_queues):
                raise ValueError(f"conflict pair ({a}, {b}) references unknown queues")
            normalized.append(frozenset((a, b)))
        return cls(n_queues, max_concurrency, frozenset(normalized))

    def compatible(self, members: set[int], candidate: int) -> bool:
        return all(frozenset((candidate, q)) not in self.conflicts for q in members)


@dataclass(frozen=True)
class CapacityResult:
    beta_star: float
    epsilon_star: float
    weights: tuple[float, ...]
    feasible: bool


def enumerate_maximal_schedules(spec: ConflictSpec) -> list[Schedule]:
    """All conflict-free queue sets of size <= K that cannot be extended.

    A set is maximal if it already has K members, or if every absent queue
    conflicts with one of its members. Output in lexicographic order of
    the sorted member tuples.
    """
    n, k = spec.n_queues, spec.max_concurrency
    if n > _MAX_QUEUES:
        raise ValueError(f"schedule enumeration supports at most {_MAX_QUEUES} queues, got {n}")
    if k < 1:
        raise ValueError("max_concurrency must be positive")

    found: list[tuple[int, ...]] = []

    def extendable(members: set[int]) -> bool:
        return any(
            q not in members and spec.compatible(members, q)
            for q in range(1, n + 1)
        )

    def visit(members: set[int], start: int) -> None:
        if len(members) == k:
            found.append(tuple(sorted(members)))
            return
        if not extendable(members):
            if members:
                found.append(tuple(sorted(members)))
            return
        for q in range(start, n + 1):
            if spec.compatible(members, q):
                members.add(q)
                visit(members, q + 1)
                members.remove(q)

    visit(set(), 1)
    return [Schedule.of(m) for m in sorted(set(found))]


def schedule_set_violations(schedules, spec: ConflictSpec) -> list[str]:
    """Check an explicit schedule list against a conflict structure."""
    out = []
    for sched in schedules:
        members = set(sched.members)
        for a, b in itertools.combinations(sorted(members), 2):
            if frozenset((a, b)) in spec.conflicts:
                out.append(f"schedule {sched!r} serves conflicting queues {a} and {b}")
        if len(members) > spec.max_concurrency:
            out.append(
                f"schedule {sched!r} exceeds concurrency cap {spec.max_concurrency}"
            )
        elif len(members) < spec.max_concurrency:
            for q in range(1, spec.n_queues + 1):
                if q not in members and spec.compatible(members, q):
                    out.append(
                        f"schedule {sched!r} is not maximal: queue {q} could be added"
                    )
                    break
    return out


def _schedule_matrix(n: int, schedules) -> np.ndarray:
    mat = np.zeros((n, len(schedules)), dtype=np.float64)
    for j, sched in enumerate(schedules):
        for q in sched.members:
            if not (1 <= q <= n):
                raise ValueError(f"schedule {sched!r} references queue {q} outside 1..{n}")
            mat[q - 1, j] = 1.0
    return mat


def _covered(rho: np.ndarray, mat: np.ndarray) -> bool:
    return bool(np.all((rho <= _TOL) | (mat.sum(axis=1) > 0)))


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row, :] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r, :] -= T[r, col] * T[row, :]
    basis[row] = col


def _bland_iterate(T: np.ndarray, basis: list[int], ncols: int) -> None:
    """Pivot to optimality with Bland's anti-cycling rule.

    Entering: lowest column index with negative reduced cost. Leaving:
    min-ratio row, ties broken by lowest basic-variable index.
    """
    m = T.shape[0] - 1
    while True:
        col = -1
        for j in range(ncols):
            if T[m, j] < -_TOL:
                col = j
                break
        if col < 0:
            return
        row, best = -1, np.inf
        for r in range(m):
            if T[r, col] > _TOL:
                ratio = T[r, -1] / T[r, col]
                if ratio < best - _TOL or (
                    abs(ratio - best) <= _TOL and (row < 0 or basis[r] < basis[row])
                ):
                    best, row = ratio, r
        if row < 0:
            raise ArithmeticError("LP unbounded")
        _pivot(T, basis, row, col)


def _simplex_min(A: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Solve min c'x s.t. Ax = b, x >= 0 via a two-phase dense tableau.

    Assumes b >= 0. Returns the optimal x; raises if infeasible.
    """
    m, nvar = A.shape
    # Phase-1 tableau [A | I_art | b] with the artificials as the basis.
    T = np.zeros((m + 1, nvar + m + 1))
    T[:m, :nvar] = A
    T[:m, nvar : nvar + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(nvar, nvar + m))
    T[m, :] = -T[:m, :].sum(axis=0)  # minimize sum of artificials
    T[m, nvar : nvar + m] = 0.0

    _bland_iterate(T, basis, nvar + m)
    if T[m, -1] < -_TOL:
        raise ArithmeticError("LP infeasible")

    # Drive leftover artificials (stuck at zero) out of the basis; rows
    # that cannot pivot them out are redundant and get dropped.
    drop_rows = []
    for r in range(m):
        if basis[r] >= nvar:
            col = next((j for j in range(nvar) if abs(T[r, j]) > _TOL), -1)
            if col >= 0:
                _pivot(T, basis, r, col)
            else:
                drop_rows.append(r)
    if drop_rows:
        keep = [r for r in range(m) if r not in drop_rows]
        T = np.vstack([T[keep, :], T[m : m + 1, :]])
        basis = [basis[r] for r in keep]
        m = len(keep)

    # Phase 2: restore the real objective, reduced over the current basis;
    # artificial columns are deleted so they can never re-enter.
    T = np.delete(T, np.s_[nvar : nvar + len(b)], axis=1)
    T[m, :] = 0.0
    T[m, :nvar] = c
    for r in range(m):
        coef = T[m, basis[r]]
        if coef != 0.0:
            T[m, :] -= coef * T[r, :]

    _bland_iterate(T, basis, nvar)

    x = np.zeros(nvar)
    for r in range(m):
        if basis[r] < nvar:
            x[basis[r]] = T[r, -1]
    return x


def utilization_factor(rho, schedules) -> CapacityResult:
    """Minimum total schedule time-share covering the load vector rho.

    feasible=False only when some queue with positive load appears in no
    schedule; the LP itself is otherwise always solvable.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim != 1:
        raise ValueError("rho must be a vector")
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    n = rho.shape[0]
    mat = _schedule_matrix(n, schedules)
    if not _covered(rho, mat):
        return CapacityResult(np.inf, -np.inf, tuple(0.0 for _ in schedules), False)
    j = len(schedules)
    if j == 0 or float(rho.max(initial=0.0)) == 0.0:
        return CapacityResult(0.0, 1.0, tuple(0.0 for _ in schedules), True)
    # Covering constraints mat*b - s = rho with surplus s >= 0.
    A = np.hstack([mat, -np.eye(n)])
    c = np.concatenate([np.ones(j), np.zeros(n)])
    x = _simplex_min(A, rho, c)
    weights = x[:j]
    beta = float(weights.sum())
    return CapacityResult(beta, 1.0 - beta, tuple(float(w) for w in weights), True)


def calibrate_arrivals(pattern, mu, schedules, target_beta: float) -> np.ndarray:
    """Scale a base arrival pattern so its utilization factor hits a target.

    Returns c * pattern with c = target / beta*(pattern / mu); by LP
    homogeneity the scaled rates land exactly on the target.
    """
    if not (0.0 < target_beta < 1.0):
        raise ValueError(f"target utilization must be in (0, 1), got {target_beta}")
    pattern = np.asarray(pattern, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if pattern.shape != mu.shape:
        raise ValueError("pattern and mu must have the same length")
    if np.any(mu <= 0):
        raise ValueError("service rates must be positive")
    base = utilization_factor(pattern / mu, schedules)
    if not base.feasible:
        raise ValueError("pattern loads are not coverable by the given schedules")
    if base.beta_star <= 0.0:
        raise ValueError("pattern has zero utilization; nothing to calibrate")
    return (target_beta / base.beta_star) * pattern


def lp_oracle(rho, schedules) -> CapacityResult:
    """Exhaustive basic-solution enumeration of the covering LP.

    Test-only cross-check for `utilization_factor`; deliberately slow and
    size-guarded (at most 12 queues and 12 schedules).
    """
    rho = np.asarray(rho, dtype=np.float64)
    n = rho.shape[0]
    j = len(schedules)
    if n > 12 or j > 12:
        raise ValueError("lp_oracle is limited to n <= 12 queues and 12 schedules")
    mat = _schedule_matrix(n, schedules)
    if not _covered(rho, mat):
        return CapacityResult(np.inf, -np.inf, tuple(0.0 for _ in schedules), False)
    if j == 0 or float(rho.max(initial=0.0)) == 0.0:
        return CapacityResult(0.0, 1.0, tuple(0.0 for _ in schedules), True)

    best = np.inf
    best_x: np.ndarray | None = None
    cols = range(j)
    rows = range(n)
    # A vertex has j active constraints: tight covering rows plus zeroed
    # variables. Solve each candidate square system and keep the feasible
    # minimum.
    for k in range(0, min(n, j) + 1):
        for tight in itertools.combinations(rows, k):
            for zeroed in itertools.combinations(cols, j - k):
                free = [col for col in cols if col not in zeroed]
                x = np.zeros(j)
                if free:
                    sub = mat[np.ix_(tight, free)]
                    try:
                        sol = np.linalg.solve(sub, rho[list(tight)])
                    except np.linalg.LinAlgError:
                        continue
                    x[free] = sol
                if np.any(x < -_TOL):
                    continue
                if np.any(mat @ x < rho - _TOL):
                    continue
                total = float(x.sum())
                if total < best:
                    best, best_x = total, x.copy()
    assert best_x is not None, "covering LP always has a feasible vertex"
    return CapacityResult(best, 1.0 - best, tuple(float(w) for w in best_x), True)
