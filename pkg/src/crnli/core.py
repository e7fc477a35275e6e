"""Networks, parameters and the antigen/antibody evolution equations.

Node labels are 1-based everywhere a user can see them (file formats, CLI
output, reports); arrays inside the package are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ModelError(ValueError):
    """Invalid network, parameters or state."""


@dataclass(frozen=True)
class CRNetwork:
    """Directed cross-immunoreactivity network on ``n`` antigen variants.

    ``edges`` holds 1-based ordered pairs ``(i, j)`` meaning ``i -> j``.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = ()
    adjacency: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ModelError(f"node count must be a positive integer, got {self.n!r}")
        seen = set()
        for e in self.edges:
            if len(e) != 2:
                raise ModelError(f"edge must be a pair, got {e!r}")
            i, j = int(e[0]), int(e[1])
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ModelError(f"edge {e!r} out of range 1..{self.n}")
            if i == j:
                raise ModelError(f"self-loop {e!r} not allowed")
            seen.add((i, j))
        edges = tuple(sorted(seen))
        A = np.zeros((self.n, self.n))
        for i, j in edges:
            A[i - 1, j - 1] = 1.0
        A.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adjacency", A)

    @classmethod
    def from_adjacency(cls, A) -> "CRNetwork":
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ModelError("adjacency must be square")
        if not np.all((A == 0) | (A == 1)):
            raise ModelError("adjacency must be a 0/1 matrix")
        edges = [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(A))]
        return cls(A.shape[0], tuple(edges))

    def out_neighbors(self, i: int) -> list[int]:
        """0-based successors of 0-based node ``i``."""
        return [int(j) for j in np.nonzero(self.adjacency[i])[0]]

    def in_neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.nonzero(self.adjacency[:, i])[0]]

    def indegrees(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.adjacency.sum(axis=0))

    def outdegrees(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.adjacency.sum(axis=1))

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> "CRNetwork":
        try:
            return cls(int(d["n"]), tuple((int(i), int(j)) for i, j in d.get("edges", [])))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed network record: {exc}") from exc

    def __eq__(self, other):
        if not isinstance(other, CRNetwork):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))


@dataclass(frozen=True)
class ModelParameters:
    """Replication rates ``f`` plus the scalar rates of the model.

    Requires ``0 < beta < alpha < 1`` and every rate strictly positive.
    The power-law tie ``beta = alpha**k`` is not enforced.
    """

    f: tuple[float, ...]
    p: float = 1.0
    c: float = 1.0
    b: float = 1.0
    alpha: float = 2.0 / 3.0
    beta: float = 4.0 / 9.0

    def __post_init__(self):
        f = tuple(float(v) for v in np.atleast_1d(np.asarray(self.f, dtype=float)))
        object.__setattr__(self, "f", f)
        for name in ("p", "c", "b", "alpha", "beta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not f:
            raise ModelError("f must be non-empty")
        vals = f + (self.p, self.c, self.b, self.alpha, self.beta)
        if not all(np.isfinite(vals)):
            raise ModelError("parameters must be finite")
        if min(f) <= 0:
            raise ModelError("replication rates f must be > 0")
        if min(self.p, self.c, self.b) <= 0:
            raise ModelError("p, c, b must be > 0")
        if not 0.0 < self.beta < self.alpha < 1.0:
            raise ModelError(
                f"need 0 < beta < alpha < 1, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def n(self) -> int:
        return len(self.f)

    @property
    def f_array(self) -> np.ndarray:
        return np.array(self.f)

    def replace(self, **changes) -> "ModelParameters":
        d = self.to_dict()
        d.update(changes)
        return ModelParameters(**d)

    def to_dict(self) -> dict:
        return {"f": list(self.f), "p": self.p, "c": self.c, "b": self.b,
                "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParameters":
        try:
            return cls(f=tuple(d["f"]), p=d.get("p", 1.0), c=d.get("c", 1.0),
                       b=d.get("b", 1.0), alpha=d["alpha"], beta=d["beta"])
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed parameter record: {exc}") from exc


@dataclass(frozen=True)
class ImmuneMatrices:
    """Neutralization ``U = Id + beta A^T`` and stimulation ``V = Id + alpha A``."""

    U: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class SystemState:
    """Antigen populations ``x`` and antibody populations ``r``."""

    x: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        r = np.array(self.r, dtype=float).reshape(-1)
        if x.shape != r.shape:
            raise ModelError(f"x and r lengths differ: {x.size} vs {r.size}")
        x.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def from_vector(cls, z: Sequence[float]) -> "SystemState":
        z = np.asarray(z, dtype=float)
        if z.size % 2:
            raise ModelError("stacked state must have even length")
        n = z.size // 2
        return cls(z[:n], z[n:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.r])

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.x >= 0) and np.all(self.r >= 0))

    def check_initial(self):
        """Raise unless usable as an initial condition for the dynamics."""
        if not self.is_nonnegative():
            raise ModelError("populations must be nonnegative")
        if not (np.any(self.x > 0) or np.any(self.r > 0)):
            raise ModelError("populations cannot all be zero")

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "r": self.r.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SystemState":
        try:
            return cls(d["x"], d["r"])
        except KeyError as exc:
            raise ModelError(f"malformed state record: missing {exc}") from exc


def check_dimensions(network: CRNetwork, params: ModelParameters, state: SystemState | None = None):
    if params.n != network.n:
        raise ModelError(f"f has length {params.n} but the network has {network.n} nodes")
    if state is not None and state.n != network.n:
        raise ModelError(f"state has dimension {state.n} but the network has {network.n} nodes")


def build_matrices(network: CRNetwork, params: ModelParameters) -> ImmuneMatrices:
    check_dimensions(network, params)
    A = network.adjacency
    I = np.eye(network.n)
    U = I + params.beta * A.T
    V = I + params.alpha * A
    U.setflags(write=False)
    V.setflags(write=False)
    return ImmuneMatrices(U, V)


def stimulation_probabilities(state: SystemState, matrices: ImmuneMatrices) -> np.ndarray:
    """Matrix ``G`` with ``G[j, i]`` the share of variant ``j``'s stimulation going to ``r_i``.

    Rows whose denominator ``sum_k v_jk r_k`` vanishes are all zero.
    """
    V = matrices.V
    weights = V * state.r[None, :]
    denom = weights.sum(axis=1)
    G = np.zeros_like(weights)
    ok = denom > 0
    G[ok] = weights[ok] / denom[ok, None]
    return G


def rhs_vector(z: np.ndarray, f: np.ndarray, params: ModelParameters,
               matrices: ImmuneMatrices) -> np.ndarray:
    """Right-hand side on a stacked ``(x, r)`` vector; the integrator's hot path."""
    n = f.size
    x = z[:n]
    r = z[n:]
    U, V = matrices.U, matrices.V
    weights = V * r
    denom = weights.sum(axis=1)
    pos = denom > 0
    # x_j / S_j, zero where the stimulation row is empty
    load = np.zeros(n)
    load[pos] = x[pos] / denom[pos]
    dx = x * (f - params.p * (U.T @ r))
    dr = params.c * r * (V.T @ load) - params.b * r
    return np.concatenate([dx, dr])


def rhs(state: SystemState, network: CRNetwork, params: ModelParameters,
        matrices: ImmuneMatrices | None = None) -> np.ndarray:
    """Time derivatives ``(dx/dt, dr/dt)`` stacked into one length-2n vector."""
    check_dimensions(network, params, state)
    if matrices is None:
        matrices = build_matrices(network, params)
    return rhs_vector(state.as_vector(), params.f_array, params, matrices)


def residual(state: SystemState, network: CRNetwork, params: ModelParameters) -> float:
    """Sup norm of the right-hand side."""
    return float(np.max(np.abs(rhs(state, network, params))))


def load_json(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def network_from_edges(n: int, edges: Iterable[tuple[int, int]]) -> CRNetwork:
    return CRNetwork(n, tuple(tuple(e) for e in edges))
