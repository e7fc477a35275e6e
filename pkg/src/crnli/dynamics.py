"""Time integration of the evolution equations and convergence detection."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (CRNetwork, ModelParameters, SystemState, build_matrices,
                   check_dimensions, rhs_vector)

NEG_CLIP = 1e-12

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4


class StepSizeUnderflow(RuntimeError):
    pass


@dataclass
class IntegratorOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    h0: Optional[float] = None
    h_min: float = 1e-14
    h_max: float = np.inf
    max_steps: int = 2_000_000
    # populations above this count as divergence
    blowup: float = 1e12
    # stop early once |rhs| stays below converge_tol for converge_window time units
    converge_tol: Optional[float] = None
    converge_window: float = 10.0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 2n), rows are stacked (x, r)
    terminal_reason: str  # "t_end", "converged", "diverged", "non-finite"
    n: int
    max_undershoot: float = 0.0
    n_rejected: int = 0
    # sup norm of the embedded local error estimate, one per accepted step
    error_estimates: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.times)

    def state(self, k: int = -1) -> SystemState:
        return SystemState.from_vector(self.states[k])

    @property
    def accumulated_error(self) -> float:
        """Sum of local error estimates; a rough bound on the global error."""
        return float(np.sum(self.error_estimates))

    @property
    def final(self) -> SystemState:
        return self.state(-1)

    def to_csv(self, stride: int = 1) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(self.n)] + [f"r{i + 1}" for i in range(self.n)])
        idx = list(range(0, len(self.times), max(1, stride)))
        if idx[-1] != len(self.times) - 1:
            idx.append(len(self.times) - 1)
        for k in idx:
            w.writerow([repr(float(self.times[k]))] + [repr(float(v)) for v in self.states[k]])
        return buf.getvalue()


def default_t_end(params: ModelParameters) -> float:
    return 1000.0 / params.b


def default_initial_state(network: CRNetwork, level: float = 0.1) -> SystemState:
    """Uniform small positive populations; a toolkit convention only."""
    return SystemState(np.full(network.n, level), np.full(network.n, level))


def integrate(initial: SystemState, network: CRNetwork, params: ModelParameters,
              t_end: Optional[float] = None, options: Optional[IntegratorOptions] = None) -> Trajectory:
    """Integrate from ``initial`` up to ``t_end`` with an adaptive DP5(4) pair.

    Components that land in ``(-1e-12, 0)`` are clipped to zero; a larger
    undershoot rejects the step and halves the step size. Running into
    non-finite values or populations above ``options.blowup`` ends the run
    with the corresponding ``terminal_reason`` instead of raising.

    Raises:
        StepSizeUnderflow: if the step size drops below ``options.h_min``.
    """
    opts = options or IntegratorOptions()
    check_dimensions(network, params, initial)
    initial.check_initial()
    if t_end is None:
        t_end = default_t_end(params)
    if not t_end > 0:
        raise ValueError("t_end must be positive")

    mats = build_matrices(network, params)
    f = params.f_array

    def fun(z):
        return rhs_vector(z, f, params, mats)

    n = network.n
    y = initial.as_vector().copy()
    t = 0.0
    times = [t]
    states = [y.copy()]
    errs = []
    k1 = fun(y)

    h = opts.h0
    if h is None:
        scale = opts.atol + opts.rtol * np.abs(y)
        d0 = np.linalg.norm(y / scale) / np.sqrt(y.size)
        d1 = np.linalg.norm(k1 / scale) / np.sqrt(y.size)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h = min(h, opts.h_max, t_end)

    reason = "t_end"
    max_under = 0.0
    n_rej = 0
    quiet_since = 0.0 if (opts.converge_tol is not None
                          and np.max(np.abs(k1)) < opts.converge_tol) else None
    steps = 0
    while t < t_end:
        if steps >= opts.max_steps:
            raise RuntimeError(f"exceeded {opts.max_steps} steps at t={t}")
        h = min(h, t_end - t)
        if h < opts.h_min:
            raise StepSizeUnderflow(f"step size {h:.3e} below minimum at t={t}")

        K = np.empty((7, y.size))
        K[0] = k1
        for s in range(1, 7):
            K[s] = fun(y + h * (np.asarray(_A[s]) @ K[:s]))
        y_new = y + h * (_B5 @ K)
        if not np.all(np.isfinite(y_new)):
            if h > 1e3 * opts.h_min:
                h *= 0.25
                n_rej += 1
                continue
            reason = "non-finite"
            break
        err_vec = h * (_E @ K)
        scale = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2))
        if err > 1.0:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            continue

        under = -np.min(y_new)
        if under > NEG_CLIP:
            n_rej += 1
            h *= 0.5
            continue
        if under > 0:
            max_under = max(max_under, under)
            y_new = np.maximum(y_new, 0.0)

        t = t + h
        y = y_new
        k1 = fun(y)  # FSAL stage is the unclipped value; re-evaluate after clipping
        times.append(t)
        states.append(y.copy())
        errs.append(float(np.max(np.abs(err_vec))))
        steps += 1

        if not np.all(np.isfinite(k1)):
            reason = "non-finite"
            break
        if np.max(y) > opts.blowup:
            reason = "diverged"
            break
        if opts.converge_tol is not None:
            if np.max(np.abs(k1)) < opts.converge_tol:
                if quiet_since is None:
                    quiet_since = t
                elif t - quiet_since >= opts.converge_window:
                    reason = "converged"
                    break
            else:
                quiet_since = None

        fac = 10.0 if err == 0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
        h = min(h * fac, opts.h_max)

    return Trajectory(np.array(times), np.array(states), reason, n, max_under, n_rej, errs)


def detect_convergence(traj: Trajectory, network: CRNetwork, params: ModelParameters,
                       window: float, tol: float) -> Optional[SystemState]:
    """Terminal state if ``|rhs|_inf < tol`` at every sample in the trailing window."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    mats = build_matrices(network, params)
    f = params.f_array
    t_last = traj.times[-1]
    if t_last - traj.times[0] < window:
        return None
    for k in range(len(traj) - 1, -1, -1):
        if traj.times[k] < t_last - window:
            break
        if np.max(np.abs(rhs_vector(traj.states[k], f, params, mats))) >= tol:
            return None
    return traj.final
