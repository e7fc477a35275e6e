"""Stationary states on prescribed support patterns.

For a support ``(I, J)`` the stationarity conditions split into two linear
systems. The antibody levels solve

    r_i + beta * sum_{i->k} r_k = f_i / p        for i in I, unknowns r_J,

and, writing ``y_j = x_j / (V r)_j``, the stimulation balance becomes

    sum_{j in I} v_ji y_j = b / c                for i in J, unknowns y_I,

which does not involve ``r`` at all. The antigen levels are then
``x_j = y_j (V r)_j``. Rank deficiency in either system yields a family of
stationary states; over-determination yields equality conditions on the
parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, linprog

from .core import (CRNetwork, ModelError, ModelParameters, SystemState,
                   build_matrices, check_dimensions, residual)

POS_TOL = 1e-12
CONSISTENCY_TOL = 1e-9
RESIDUAL_TOL = 1e-9
RANK_RTOL = 1e-10
DEDUP_TOL = 1e-9
_COEF_TOL = 1e-12
_ALPHA_GRID = np.linspace(0.0025, 0.9975, 399)


class NodeRole(str, Enum):
    PERSISTENT = "persistent"
    ALTRUISTIC = "altruistic"
    NEUTRAL_ACTIVE = "neutral_active"
    NEUTRAL_IDLE = "neutral_idle"


@dataclass(frozen=True)
class SupportPattern:
    """Index sets (0-based) of positive antigen (``I``) and antibody (``J``) levels."""

    I: frozenset
    J: frozenset

    def __post_init__(self):
        object.__setattr__(self, "I", frozenset(int(i) for i in self.I))
        object.__setattr__(self, "J", frozenset(int(j) for j in self.J))

    @classmethod
    def from_labels(cls, I: Iterable[int], J: Iterable[int]) -> "SupportPattern":
        """Build from 1-based node labels."""
        return cls(frozenset(i - 1 for i in I), frozenset(j - 1 for j in J))

    @classmethod
    def of_state(cls, state: SystemState, tol: float = POS_TOL) -> "SupportPattern":
        return cls(frozenset(np.nonzero(state.x > tol)[0]), frozenset(np.nonzero(state.r > tol)[0]))

    @property
    def persistent(self) -> frozenset:
        return self.I - self.J

    @property
    def altruistic(self) -> frozenset:
        return self.J - self.I

    def validate(self, n: int):
        for k in self.I | self.J:
            if not 0 <= k < n:
                raise ModelError(f"support index {k + 1} out of range 1..{n}")

    def labels(self) -> dict:
        return {"I": sorted(i + 1 for i in self.I), "J": sorted(j + 1 for j in self.J)}

    def __str__(self):
        lab = self.labels()
        return "I={" + ",".join(map(str, lab["I"])) + "} J={" + ",".join(map(str, lab["J"])) + "}"


@dataclass(frozen=True)
class Condition:
    """A requirement on the parameters for the solution to exist.

    ``kind`` is ``"f-linear"`` (a linear form in f compared to zero),
    ``"alpha"`` (a requirement on alpha alone) or ``"family"``.
    """

    kind: str
    relation: str  # ">" or "=="
    coefficients: tuple = ()
    intervals: tuple = ()
    text: str = ""
    value: float = float("nan")

    @property
    def is_equality(self) -> bool:
        return self.relation == "=="

    def holds(self, params: ModelParameters, tol: float = 1e-12) -> bool:
        if self.kind == "f-linear":
            v = float(np.dot(self.coefficients, params.f))
            return abs(v) <= tol if self.is_equality else v > 0
        if self.kind == "alpha":
            return any(lo < params.alpha < hi for lo, hi in self.intervals)
        return True

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "relation": self.relation, "text": self.text,
             "value": None if np.isnan(self.value) else self.value}
        if self.coefficients:
            d["coefficients"] = list(self.coefficients)
        if self.intervals:
            d["alpha_intervals"] = [list(iv) for iv in self.intervals]
        return d


@dataclass
class FixedPointSolution:
    state: SystemState
    support: SupportPattern
    labels: tuple
    group: str
    conditions: list
    residual: float
    delta: np.ndarray
    r_family_dim: int = 0
    x_family_dim: int = 0

    @property
    def has_li(self) -> bool:
        return bool(self.support.persistent)

    def to_dict(self) -> dict:
        return {
            "support": self.support.labels(),
            "x": self.state.x.tolist(),
            "r": self.state.r.tolist(),
            "labels": [lab.value for lab in self.labels],
            "group": self.group,
            "conditions": [c.to_dict() for c in self.conditions],
            "residual": self.residual,
            "delta": [None if np.isnan(d) else float(d) for d in self.delta],
            "r_family_dim": self.r_family_dim,
            "x_family_dim": self.x_family_dim,
        }


@dataclass(frozen=True)
class StationarySpace:
    """Kernel dimensions of the restricted stationarity operators.

    ``r_kernel_dim``/``x_kernel_dim`` restrict columns to the support (zero
    means isolated within the support class); the ``*_full`` variants are
    the kernels of ``U^T`` rows-I and ``V^T`` rows-J over all of R^n.
    """

    base: FixedPointSolution
    r_kernel_dim: int
    x_kernel_dim: int
    r_kernel_dim_full: int
    x_kernel_dim_full: int

    def to_dict(self) -> dict:
        return {"r_kernel_dim": self.r_kernel_dim, "x_kernel_dim": self.x_kernel_dim,
                "r_kernel_dim_full": self.r_kernel_dim_full,
                "x_kernel_dim_full": self.x_kernel_dim_full}


# --------------------------------------------------------------------------
# linear algebra helpers

@dataclass
class _LinearSolve:
    x0: np.ndarray
    null: np.ndarray       # columns span the kernel
    left_null: np.ndarray  # columns span the kernel of M^T
    rank: int
    inconsistency: float


def _rank_revealing_solve(M: np.ndarray, rhs: np.ndarray) -> _LinearSolve:
    m, k = M.shape
    Uu, s, Vh = np.linalg.svd(M, full_matrices=True)
    cutoff = RANK_RTOL * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff)) if s.size else 0
    coeffs = (Uu[:, :rank].T @ rhs) / s[:rank]
    x0 = Vh[:rank].T @ coeffs
    incons = float(np.max(np.abs(M @ x0 - rhs))) if m else 0.0
    return _LinearSolve(x0, Vh[rank:].T, Uu[:, rank:], rank, incons)


def matrix_rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > RANK_RTOL * s[0]))


def _interior_point(a0: np.ndarray, N: np.ndarray) -> Optional[np.ndarray]:
    """A point of ``{a0 + N t > 0}``: the midpoint for 1-D families, else max-min slack."""
    if N.shape[1] == 0:
        return a0 if np.all(a0 > POS_TOL) else None
    if N.shape[1] == 1:
        nv = N[:, 0]
        lo, hi = -np.inf, np.inf
        for a, d in zip(a0, nv):
            if abs(d) <= _COEF_TOL:
                if a <= POS_TOL:
                    return None
            elif d > 0:
                lo = max(lo, -a / d)
            else:
                hi = min(hi, -a / d)
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi - lo <= POS_TOL:
            return None
        return a0 + nv * (0.5 * (lo + hi))
    k = N.shape[1]
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([-N, np.ones((N.shape[0], 1))])
    cap = float(np.max(np.abs(a0))) + 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=a0,
                  bounds=[(None, None)] * k + [(None, cap)], method="highs")
    if res.status != 0 or -res.fun <= POS_TOL:
        return None
    return a0 + N @ res.x[:k]


def _rref(W: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Reduced row echelon form, used to canonicalize equality forms."""
    W = W.astype(float).copy()
    rows, cols = W.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(W[r:, c])))
        if abs(W[piv, c]) < tol:
            continue
        W[[r, piv]] = W[[piv, r]]
        W[r] /= W[r, c]
        for i in range(rows):
            if i != r:
                W[i] -= W[i, c] * W[r]
        r += 1
    W[np.abs(W) < tol] = 0.0
    return W[:r]


def format_linear_form(coefs: Sequence[float], relation: str = ">") -> str:
    parts = []
    for i, a in enumerate(coefs):
        if abs(a) <= _COEF_TOL:
            continue
        mag = abs(a)
        term = f"f{i + 1}" if abs(mag - 1) < 1e-12 else f"{mag:.6g}*f{i + 1}"
        sign = "-" if a < 0 else "+"
        parts.append((sign, term))
    if not parts:
        return f"0 {relation} 0"
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, term in parts[1:]:
        s += f" {sign} {term}"
    return f"{s} {relation} 0"


def _normalize_inequality(coefs: np.ndarray) -> np.ndarray:
    coefs = np.where(np.abs(coefs) <= _COEF_TOL * np.max(np.abs(coefs)), 0.0, coefs)
    return coefs / np.max(np.abs(coefs))


# --------------------------------------------------------------------------
# alpha-only requirements from the stimulation system

def _y_system(n: int, edges: tuple, alpha: float, I: tuple, J: tuple) -> np.ndarray:
    A = np.zeros((n, n))
    for i, j in edges:
        A[i - 1, j - 1] = 1.0
    VT = np.eye(n) + alpha * A.T
    return VT[np.ix_(J, I)]


@lru_cache(maxsize=4096)
def _alpha_profile(n: int, edges: tuple, I: tuple, J: tuple):
    """Per-component alpha intervals on which the stimulation weights stay positive.

    Returns ``None`` when the system is not uniquely solvable across the
    grid, else a tuple of interval tuples (one per element of ``I``).
    """
    ys = []
    for a in _ALPHA_GRID:
        M = _y_system(n, edges, a, I, J)
        sol = _rank_revealing_solve(M, np.ones(len(J)))
        if sol.rank < len(I) or sol.inconsistency > CONSISTENCY_TOL:
            ys.append(None)
        else:
            ys.append(sol.x0)
    if any(y is None for y in ys):
        return None
    Y = np.array(ys)

    def comp(alpha, k):
        M = _y_system(n, edges, alpha, I, J)
        return _rank_revealing_solve(M, np.ones(len(J))).x0[k]

    out = []
    for k in range(len(I)):
        pos = Y[:, k] > 0
        if pos.all():
            out.append(((0.0, 1.0),))
            continue
        cuts = []
        for g in range(len(_ALPHA_GRID) - 1):
            if pos[g] != pos[g + 1]:
                a, b = _ALPHA_GRID[g], _ALPHA_GRID[g + 1]
                try:
                    cuts.append(brentq(comp, a, b, args=(k,), xtol=1e-14))
                except ValueError:
                    cuts.append(0.5 * (a + b))
        edges_ = [0.0] + cuts + [1.0]
        ivs = []
        start_pos = bool(pos[0])
        for s in range(len(edges_) - 1):
            if (s % 2 == 0) == start_pos:
                ivs.append((float(edges_[s]), float(edges_[s + 1])))
        out.append(tuple(ivs))
    return tuple(out)


def _alpha_text(label: int, intervals) -> str:
    pieces = []
    for lo, hi in intervals:
        if lo <= 0.0:
            pieces.append(f"alpha < {hi:.12g}")
        elif hi >= 1.0:
            pieces.append(f"alpha > {lo:.12g}")
        else:
            pieces.append(f"{lo:.12g} < alpha < {hi:.12g}")
    return f"x{label} > 0 requires " + " or ".join(pieces)


# --------------------------------------------------------------------------
# solving a single support

def structurally_admissible(network: CRNetwork, support: SupportPattern) -> tuple[bool, str]:
    """Cheap necessary conditions on a support, independent of parameters."""
    if not support.I or not support.J:
        return False, "empty support set"
    A = network.adjacency
    for j in support.J:
        if j not in support.I and not any(A[i, j] for i in support.I):
            return False, f"r{j + 1} has no stimulating variant in I"
    for i in support.I:
        if i not in support.J and not any(A[i, k] for k in support.J):
            return False, f"x{i + 1} has no neutralizing response in J"
    return True, ""


def try_support(network: CRNetwork, params: ModelParameters, support: SupportPattern,
                with_conditions: bool = True) -> tuple[Optional[FixedPointSolution], str]:
    """Solve the stationarity system on ``support``; returns ``(solution, reason)``.

    ``solution`` is ``None`` when no stationary state with exactly this
    support exists at these parameters, and ``reason`` says why.
    """
    check_dimensions(network, params)
    support.validate(network.n)
    ok, why = structurally_admissible(network, support)
    if not ok:
        return None, why

    n = network.n
    mats = build_matrices(network, params)
    I = sorted(support.I)
    J = sorted(support.J)
    f = params.f_array

    Mr = mats.U.T[np.ix_(I, J)]
    rsol = _rank_revealing_solve(Mr, f[I] / params.p)
    if rsol.inconsistency > CONSISTENCY_TOL:
        return None, f"antibody system inconsistent (residual {rsol.inconsistency:.3g})"
    My = mats.V.T[np.ix_(J, I)]
    ysol = _rank_revealing_solve(My, np.full(len(J), params.b / params.c))
    if ysol.inconsistency > CONSISTENCY_TOL:
        return None, f"stimulation system inconsistent (residual {ysol.inconsistency:.3g})"

    rJ = _interior_point(rsol.x0, rsol.null)
    if rJ is None:
        return None, "no strictly positive antibody levels on J"
    yI = _interior_point(ysol.x0, ysol.null)
    if yI is None:
        return None, "no strictly positive antigen levels on I"

    r = np.zeros(n)
    r[J] = rJ
    Vr = mats.V @ r
    x = np.zeros(n)
    x[I] = yI * Vr[I]
    if np.any(x[I] <= POS_TOL):
        return None, "antigen level vanishes on I"
    state = SystemState(x, r)
    res = residual(state, network, params)
    if res >= RESIDUAL_TOL:
        return None, f"residual check failed ({res:.3g})"

    conditions = []
    if with_conditions:
        conditions = _conditions(network, params, I, J, rsol, ysol)
    labels = classify_state(state)
    delta = np.full(n, np.nan)
    pos = Vr > 0
    delta[pos] = 1.0 / Vr[pos]
    sol = FixedPointSolution(
        state=state, support=support, labels=labels,
        group=group_of(labels, conditions), conditions=conditions, residual=res,
        delta=delta, r_family_dim=rsol.null.shape[1], x_family_dim=ysol.null.shape[1],
    )
    return sol, ""


def solve_support(network: CRNetwork, params: ModelParameters, support: SupportPattern,
                  with_conditions: bool = True) -> Optional[FixedPointSolution]:
    return try_support(network, params, support, with_conditions)[0]


def _conditions(network, params, I, J, rsol: _LinearSolve, ysol: _LinearSolve) -> list:
    n = network.n
    f = params.f_array
    out = []
    # equalities from an over-determined antibody system
    if rsol.left_null.shape[1]:
        W = np.zeros((rsol.left_null.shape[1], n))
        W[:, I] = rsol.left_null.T
        for row in _rref(W):
            out.append(Condition("f-linear", "==", tuple(row.tolist()),
                                 text=format_linear_form(row, "=="), value=float(row @ f)))
    if rsol.null.shape[1]:
        out.append(Condition("family", ">", text=f"{rsol.null.shape[1]}-parameter family of antibody levels"))
    else:
        Mr = build_matrices(network, params).U.T[np.ix_(I, J)]
        P = np.linalg.pinv(Mr, rcond=RANK_RTOL)
        for row in P:
            coefs = np.zeros(n)
            coefs[I] = row
            if np.any(coefs < -_COEF_TOL * np.max(np.abs(coefs))):
                c = _normalize_inequality(coefs)
                out.append(Condition("f-linear", ">", tuple(c.tolist()),
                                     text=format_linear_form(c, ">"), value=float(c @ f)))
    # alpha-only requirements from the stimulation system
    edges = network.edges
    if ysol.left_null.shape[1]:
        # consistent here; check whether that survives a change of alpha
        for a in (0.3141592653589793, 0.7071067811865476):
            M = _y_system(n, edges, a, tuple(I), tuple(J))
            if _rank_revealing_solve(M, np.ones(len(J))).inconsistency > CONSISTENCY_TOL:
                out.append(Condition("alpha", "==", text=f"alpha tuned to {params.alpha:.17g}",
                                     value=params.alpha))
                break
    if ysol.null.shape[1]:
        out.append(Condition("family", ">", text=f"{ysol.null.shape[1]}-parameter family of antigen levels"))
    else:
        prof = _alpha_profile(n, edges, tuple(I), tuple(J))
        if prof is not None:
            for k, ivs in zip(I, prof):
                if ivs != ((0.0, 1.0),):
                    out.append(Condition("alpha", ">", intervals=ivs,
                                         text=_alpha_text(k + 1, ivs), value=params.alpha))
    # chained duplicates (same normalized form) are dropped
    uniq, seen = [], set()
    for c in out:
        key = (c.kind, c.relation, tuple(np.round(c.coefficients, 12)), c.intervals, c.text if c.kind != "f-linear" else "")
        if key not in seen:
            seen.add(key)
            uniq.append(c)
    return uniq


# --------------------------------------------------------------------------
# classification

def classify_state(state: SystemState, tol: float = POS_TOL) -> tuple:
    labels = []
    for xi, ri in zip(state.x, state.r):
        px, pr = xi > tol, ri > tol
        if px and not pr:
            labels.append(NodeRole.PERSISTENT)
        elif pr and not px:
            labels.append(NodeRole.ALTRUISTIC)
        elif px and pr:
            labels.append(NodeRole.NEUTRAL_ACTIVE)
        else:
            labels.append(NodeRole.NEUTRAL_IDLE)
    return tuple(labels)


def group_of(labels: Sequence[NodeRole], conditions: Sequence[Condition]) -> str:
    """A: LI, unconditioned; B: LI, inequalities only; C: LI with an equality; D: no LI."""
    if NodeRole.PERSISTENT not in labels:
        return "D"
    if any(c.is_equality for c in conditions):
        return "C"
    if not conditions:
        return "A"
    return "B"


def classify(solution: FixedPointSolution) -> tuple[tuple, str]:
    labels = classify_state(solution.state)
    return labels, group_of(labels, solution.conditions)


# --------------------------------------------------------------------------
# enumeration

def _subsets(items: Sequence[int]):
    for k in range(1, len(items) + 1):
        yield from itertools.combinations(items, k)


def candidate_supports(network: CRNetwork) -> list[SupportPattern]:
    """All structurally admissible supports, in a deterministic order."""
    n = network.n
    out = []
    for I in _subsets(range(n)):
        reach = set(I)
        for i in I:
            reach.update(network.out_neighbors(i))
        for J in _subsets(sorted(reach)):
            sp = SupportPattern(frozenset(I), frozenset(J))
            if structurally_admissible(network, sp)[0]:
                out.append(sp)
    return out


def _sort_key(sol: FixedPointSolution):
    I, J = sorted(sol.support.I), sorted(sol.support.J)
    return (len(I) + len(J), len(I), I, J)


def enumerate_fixed_points(network: CRNetwork, params: ModelParameters, max_n: int = 12,
                           supports: Optional[Iterable[SupportPattern]] = None) -> list[FixedPointSolution]:
    """Every stationary state obtainable on the support lattice.

    ``supports`` overrides the visiting order (or restricts the search).
    Families are represented by one interior point each.
    """
    check_dimensions(network, params)
    if network.n > max_n:
        raise ValueError(f"network has {network.n} nodes; enumeration limit is {max_n}")
    if supports is None:
        supports = candidate_supports(network)
    found = []
    for sp in supports:
        sol = solve_support(network, params, sp)
        if sol is None:
            continue
        z = sol.state.as_vector()
        if any(np.max(np.abs(z - o.state.as_vector())) < DEDUP_TOL for o in found):
            continue
        found.append(sol)
    found.sort(key=_sort_key)
    return found


def stationary_space(solution: FixedPointSolution, network: CRNetwork,
                     params: ModelParameters) -> StationarySpace:
    mats = build_matrices(network, params)
    I = sorted(solution.support.I)
    J = sorted(solution.support.J)
    UT, VT = mats.U.T, mats.V.T
    return StationarySpace(
        base=solution,
        r_kernel_dim=len(J) - matrix_rank(UT[np.ix_(I, J)]),
        x_kernel_dim=len(I) - matrix_rank(VT[np.ix_(J, I)]),
        r_kernel_dim_full=network.n - matrix_rank(UT[I, :]),
        x_kernel_dim_full=network.n - matrix_rank(VT[J, :]),
    )


# --------------------------------------------------------------------------
# LI without altruistic nodes

@dataclass
class NoAltruismReport:
    invertible: bool
    rank: int
    R: np.ndarray
    consistency_residual: float
    consistency_conditions: list
    has_zero: bool
    has_negative: bool
    verdict: str

    def to_dict(self) -> dict:
        return {"invertible": self.invertible, "rank": self.rank, "R": self.R.tolist(),
                "consistency_residual": self.consistency_residual,
                "consistency_conditions": [c.to_dict() for c in self.consistency_conditions],
                "has_zero": self.has_zero, "has_negative": self.has_negative,
                "verdict": self.verdict}


def no_altruism_feasibility(network: CRNetwork, params: ModelParameters,
                            zero_tol: float = 1e-12) -> NoAltruismReport:
    """Antibody levels forced when every variant is present: ``U^T R = F / p``.

    Strong LI without altruistic nodes needs a zero component of ``R``,
    which only happens on a measure-zero set of replication rates.
    """
    check_dimensions(network, params)
    n = network.n
    UT = build_matrices(network, params).U.T
    F = params.f_array
    sol = _rank_revealing_solve(UT, F / params.p)
    conds = []
    if sol.left_null.shape[1]:
        for row in _rref(sol.left_null.T):
            conds.append(Condition("f-linear", "==", tuple(row.tolist()),
                                   text=format_linear_form(row, "=="), value=float(row @ F)))
    R = sol.x0
    scale = max(1.0, float(np.max(np.abs(R))))
    has_zero = bool(np.any(np.abs(R) <= zero_tol * scale))
    has_neg = bool(np.any(R < -zero_tol * scale))
    invertible = sol.rank == n
    if not invertible and sol.inconsistency > CONSISTENCY_TOL:
        verdict = "inconsistent: F outside the column space of U^T; no fixed point with all variants present"
    elif has_neg:
        verdict = "infeasible: a forced antibody level is negative; no fixed point with all variants present"
    elif has_zero:
        verdict = "LI without altruism at this parameter point (measure-zero coincidence)"
    else:
        verdict = "no LI at this parameter point without altruism"
    if not invertible and sol.inconsistency <= CONSISTENCY_TOL:
        verdict += f"; U^T singular (rank {sol.rank} < {n}), solutions form a family"
    return NoAltruismReport(invertible, sol.rank, R, sol.inconsistency, conds, has_zero, has_neg, verdict)
