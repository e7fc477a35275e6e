"""Linearization at fixed points, spectra and stability verdicts.

Also holds two closed-form characteristic-polynomial checks: the
branch-cycle LI point and the five-node composed LI point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (CRNetwork, ModelError, ModelParameters, SystemState,
                   build_matrices, check_dimensions, rhs_vector)

EPS_STAB = 1e-7
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class JacobianMatrix:
    """Full ``2n x 2n`` Jacobian plus its four ``n x n`` blocks.

    Ordering is ``(x_1..x_n, r_1..r_n)``: ``A = dx/dx``, ``B = dx/dr``,
    ``C = dr/dx``, ``D = dr/dr``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    @property
    def n(self) -> int:
        return self.A.shape[0]


def jacobian_at(state: SystemState, network: CRNetwork, params: ModelParameters) -> JacobianMatrix:
    """Analytic Jacobian of the right-hand side at ``state``.

    Raises ModelError where the stimulation share is not differentiable,
    i.e. some ``S_j = 0`` while ``x_j > 0`` feeds a nonzero ``v_ji``.
    Where ``S_j = 0`` and ``x_j = 0`` the ``j`` terms are dropped: that row
    of the Jacobian is diagonal so the convention cannot move eigenvalues.
    """
    check_dimensions(network, params, state)
    mats = build_matrices(network, params)
    U, V = mats.U, mats.V
    x, r = state.x, state.r
    p, c, b = params.p, params.c, params.b
    n = network.n
    S = V @ r
    live = S > ZERO_TOL
    bad = (~live) & (x > ZERO_TOL)
    if np.any(bad):
        j = int(np.nonzero(bad)[0][0])
        raise ModelError(
            f"Jacobian undefined: stimulation denominator of variant {j + 1} vanishes while x{j + 1} > 0")

    A = np.diag(params.f_array - p * (U.T @ r))
    B = -p * x[:, None] * U.T
    W = np.zeros((n, n))  # W[j, i] = v_ji / S_j on live rows
    W[live] = V[live] / S[live, None]
    load = np.zeros(n)
    load[live] = x[live] / S[live]
    C = c * r[:, None] * W.T
    # D_il = c delta_il sum_j v_ji x_j/S_j - b delta_il - c r_i sum_j v_ji x_j v_jl / S_j^2
    D = np.diag(c * (V.T @ load) - b) - c * r[:, None] * ((W * load[:, None]).T @ V)
    return JacobianMatrix(A, B, C, D)


def numerical_jacobian(state: SystemState, network: CRNetwork, params: ModelParameters,
                       h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian, step ``h * max(1, |z_k|)``.

    Steps may leave the nonnegative orthant; the right-hand side is smooth
    there wherever the analytic Jacobian is defined.
    """
    mats = build_matrices(network, params)
    f = params.f_array
    z = state.as_vector()
    m = z.size
    J = np.zeros((m, m))
    for k in range(m):
        step = h * max(1.0, abs(z[k]))
        zp = z.copy()
        zm = z.copy()
        zp[k] += step
        zm[k] -= step
        J[:, k] = (rhs_vector(zp, f, params, mats) - rhs_vector(zm, f, params, mats)) / (2 * step)
    return J


def sorted_eigenvalues(ev: np.ndarray) -> np.ndarray:
    ev = np.asarray(ev, dtype=complex)
    return ev[np.lexsort((-ev.imag, -ev.real))]


def spectrum(J, check_residual: bool = False, tol: float = 1e-8) -> np.ndarray:
    """Eigenvalues sorted by real part, descending.

    With ``check_residual`` each eigenpair is checked to satisfy
    ``|J v - lambda v| <= tol * max(1, |J|)``.
    """
    M = J.matrix if isinstance(J, JacobianMatrix) else np.asarray(J, dtype=float)
    if not check_residual:
        return sorted_eigenvalues(np.linalg.eigvals(M))
    w, vecs = np.linalg.eig(M)
    scale = max(1.0, np.linalg.norm(M, 2))
    for k in range(w.size):
        v = vecs[:, k]
        res = np.linalg.norm(M @ v - w[k] * v) / max(np.linalg.norm(v), 1e-300)
        if res > tol * scale:
            raise ArithmeticError(f"eigenpair {k} residual {res:.3g} exceeds tolerance")
    return sorted_eigenvalues(w)


@dataclass
class StabilityReport:
    eigenvalues: np.ndarray
    verdict: str  # "stable", "unstable" or "marginal"
    threshold: float
    unstable: list = field(default_factory=list)
    marginal: list = field(default_factory=list)

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))

    def to_dict(self) -> dict:
        pairs = lambda vals: [[float(z.real), float(z.imag)] for z in vals]
        return {"verdict": self.verdict, "threshold": self.threshold,
                "max_real": self.max_real, "eigenvalues": pairs(self.eigenvalues),
                "unstable": pairs(self.unstable), "marginal": pairs(self.marginal)}


def verdict(eigenvalues, eps: float = EPS_STAB) -> StabilityReport:
    """Classify a spectrum with threshold ``eps * max(1, spectral radius)``."""
    ev = sorted_eigenvalues(eigenvalues)
    thr = eps * max(1.0, float(np.max(np.abs(ev))) if ev.size else 1.0)
    unstable = [z for z in ev if z.real > thr]
    marginal = [z for z in ev if abs(z.real) <= thr]
    if unstable:
        v = "unstable"
    elif marginal:
        v = "marginal"
    else:
        v = "stable"
    return StabilityReport(ev, v, thr, unstable, marginal)


def stability_of(state: SystemState, network: CRNetwork, params: ModelParameters,
                 eps: float = EPS_STAB) -> StabilityReport:
    return verdict(spectrum(jacobian_at(state, network, params)), eps)


# --------------------------------------------------------------------------
# closed-form characteristic polynomials


@dataclass
class PolynomialCheck:
    valid: bool
    reason: str = ""
    predicted: Optional[np.ndarray] = None  # monic coefficients, highest power first
    measured: Optional[np.ndarray] = None
    rel_error: float = float("nan")
    coefficients_positive: bool = False
    known_roots: tuple = ()
    eigenvalues: Optional[np.ndarray] = None
    ok: bool = False


def _det_samples(M: np.ndarray, points: np.ndarray) -> np.ndarray:
    eye = np.eye(M.shape[0])
    return np.array([np.linalg.det(z * eye - M) for z in points])


def _fit_monic(values: np.ndarray, points: np.ndarray, degree: int) -> np.ndarray:
    """Least-squares monic polynomial of ``degree`` through complex samples."""
    V = np.vander(points, degree, increasing=False)  # z^(d-1) .. z^0
    rhs = values - points ** degree
    sol, *_ = np.linalg.lstsq(V, rhs, rcond=None)
    return np.concatenate([[1.0], sol.real])


def branch_cycle_fixed_point(params: ModelParameters) -> Optional[SystemState]:
    """The stable LI point of the branch-cycle network, or None when ``f1 == f3``."""
    f1, f2, f3 = params.f
    p, c, b, a, bt = params.p, params.c, params.b, params.alpha, params.beta
    if f3 > f1:
        x = [b * f1 * (1 - a) / (c * p * bt), 0.0, b / (c * p) * (f3 - f1 + a / bt * f1)]
        r = [0.0, f1 / (p * bt), (f3 - f1) / p]
    elif f1 > f3:
        x = [b / (c * p) * (f1 - f3 + a / bt * f3), 0.0, b * f3 * (1 - a) / (c * p * bt)]
        r = [(f1 - f3) / p, f3 / (p * bt), 0.0]
    else:
        return None
    return SystemState(x, r)


def branch_cycle_polynomial(params: ModelParameters):
    """Known roots and the remaining monic quartic for the branch-cycle LI point."""
    f1, f2, f3 = params.f
    b, a, bt = params.b, params.alpha, params.beta
    if f3 > f1:
        lo, hi, lam1 = f1, f3, f2 - f1 / bt - bt * (f3 - f1)
    else:
        lo, hi, lam1 = f3, f1, f2 - f3 / bt
    lam2 = b / a - 2 * b
    D = hi - lo + (a / bt) * lo
    q = (1 - a) * (hi - lo) / D
    c3 = b * (1 + q)
    c2 = b * hi + b * b * q
    c1 = b * b * (1 - a) * (hi - lo) * (1 + lo / D)
    c0 = b * b * (1 - a) * lo * (hi - lo)
    return (lam1, lam2), np.array([1.0, c3, c2, c1, c0])


def check_branch_cycle_polynomial(params: ModelParameters, rtol: float = 1e-8) -> PolynomialCheck:
    """Compare the closed-form quartic with ``det(lambda I - J)`` at the LI point.

    The determinant is sampled at seven points on a circle, divided by the
    two known linear factors and fitted by least squares.
    """
    if params.n != 3:
        raise ModelError("branch-cycle check needs three replication rates")
    f1, f2, f3 = params.f
    if f1 == f3:
        return PolynomialCheck(False, "f1 == f3: the LI point is a family")
    if f3 > f1 and not f2 < f1 / params.beta + params.beta * (f3 - f1):
        return PolynomialCheck(False, "requires f2 < f1/beta + beta*(f3 - f1)")
    if f1 > f3 and not f2 < f3 / params.beta:
        return PolynomialCheck(False, "requires f2 < f3/beta")
    from .catalog import get_network  # local import avoids a cycle
    net = get_network("branch_cycle3")
    state = branch_cycle_fixed_point(params)
    M = jacobian_at(state, net, params).matrix
    known, pred = branch_cycle_polynomial(params)
    # size the circle to the quartic's roots, not to the (possibly far larger) known ones;
    # a wide circle costs about radius**4 * eps in the constant coefficient
    ev = list(np.linalg.eigvals(M))
    for k in known:
        ev.pop(int(np.argmin(np.abs(np.array(ev) - k))))
    scale = max(1.0, float(np.max(np.abs(ev))))
    pts = 1.5 * scale * np.exp(2j * np.pi * (np.arange(7) + 0.25) / 7)
    vals = _det_samples(M, pts) / ((pts - known[0]) * (pts - known[1]))
    meas = _fit_monic(vals, pts, 4)
    err = float(np.max(np.abs(meas - pred) / np.maximum(np.abs(pred), 1e-300)))
    pos = bool(np.all(pred > 0))
    return PolynomialCheck(True, "", pred, meas, err, pos, known, spectrum(M),
                           ok=err <= rtol and pos)


def five_node_fixed_point(params: ModelParameters) -> Optional[SystemState]:
    f1, f2, f3, f4, f5 = params.f
    p, c, b, a, bt = params.p, params.c, params.b, params.alpha, params.beta
    if not f1 > f3 + f5:
        return None
    x = [b / (c * p) * (f1 - f3 - f5 + a / bt * (f3 + f5)), 0.0,
         b * f3 * (1 - a) / (c * p * bt), 0.0, b * f5 * (1 - a) / (c * p * bt)]
    r = [(f1 - f3 - f5) / p, f3 / (p * bt), 0.0, f5 / (p * bt), 0.0]
    return SystemState(x, r)


def five_node_polynomial(params: ModelParameters):
    """Known roots and the sextic factor ``T`` (monic, highest power first)."""
    f1, f2, f3, f4, f5 = params.f
    p, c, b, a, bt = params.p, params.c, params.b, params.alpha, params.beta
    st = five_node_fixed_point(params)
    x1, r1 = st.x[0], st.r[0]
    q = b * b * r1 / (c * x1)
    k = b / (c * x1)
    t5 = q * (1 - a) + b * (2 - a)
    t4 = b * (f1 + (1 - a) * (q * (2 - a) + b))
    r4 = f5 / (p * bt)
    t3 = b * b * (1 - a) * (2 * f1 - f3 - f5 + k * (r1 * (b * (1 - a) + f3 + f5) + 2 * a * a * f3 * r4))
    t2 = b * b * (1 - a) * (q * (1 - a) * (f3 + f5) + p * r1 * (f3 + f5 + b * (1 - a))
                            + f3 * f5 * (1 + a))
    t1 = b ** 3 * (1 - a) ** 2 * (k * r1 * f3 * f5 + p * r1 * (f3 + f5))
    t0 = p * b ** 3 * r1 * f3 * f5 * (1 - a) ** 2
    lam = (f2 - f3 / bt, f4 - f5 / bt, b / a - 2 * b, b / a - 2 * b)
    return lam, np.array([1.0, t5, t4, t3, t2, t1, t0])



def check_five_node_polynomial(params: ModelParameters, tol: float = 1e-7) -> PolynomialCheck:
    """Spectrum at the composed LI point against four known roots plus the roots of ``T``."""
    if params.n != 5:
        raise ModelError("five-node check needs five replication rates")
    state = five_node_fixed_point(params)
    if state is None:
        return PolynomialCheck(False, "requires f1 > f3 + f5")
    from .catalog import get_network
    net = get_network("composed5")
    M = jacobian_at(state, net, params).matrix
    known, T = five_node_polynomial(params)
    pred = sorted_eigenvalues(np.concatenate([np.array(known, dtype=complex), np.roots(T)]))
    ev = spectrum(M)
    err = _multiset_distance(pred, ev)
    scale = max(1.0, float(np.max(np.abs(ev))))
    pos = bool(np.all(T > 0))
    return PolynomialCheck(True, "", T, None, err / scale, pos, tuple(known), ev,
                           ok=err <= tol * scale and pos)


def _multiset_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance under the optimal one-to-one matching of two spectra."""
    from scipy.optimize import linear_sum_assignment
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))
