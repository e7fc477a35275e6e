"""Seeded parameter sweeps around a fixed point with a tracked support."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import CRNetwork, ModelError, ModelParameters
from .fixed_points import SupportPattern, solve_support
from .stability import stability_of

RNG_NAME = "numpy.random.PCG64"
OVERSAMPLE_CAP = 10


@dataclass(frozen=True)
class SweepSpec:
    nominal: ModelParameters
    relative_radius: float
    samples: int
    seed: int
    support: SupportPattern

    def __post_init__(self):
        if not 0 < self.relative_radius < 0.5:
            raise ValueError("relative_radius must lie in (0, 0.5)")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError("samples must be a positive integer")

    def to_dict(self) -> dict:
        I, J = self.support.labels()
        return {"nominal": self.nominal.to_dict(), "relative_radius": self.relative_radius,
                "samples": int(self.samples), "seed": int(self.seed), "support": {"I": I, "J": J}}


@dataclass
class SweepRecord:
    params: ModelParameters
    found: bool
    li_preserved: bool
    verdict: Optional[str]  # None when no fixed point; "undefined" if the Jacobian is refused
    max_real: Optional[float]

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "found": self.found,
                "li_preserved": self.li_preserved, "verdict": self.verdict, "max_real": self.max_real}


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list = field(default_factory=list)
    rejected: int = 0

    @property
    def stable_fraction(self) -> float:
        return sum(r.verdict == "stable" for r in self.records) / len(self.records)

    @property
    def li_preserved_fraction(self) -> float:
        return sum(r.li_preserved for r in self.records) / len(self.records)

    @property
    def found_fraction(self) -> float:
        return sum(r.found for r in self.records) / len(self.records)

    def to_dict(self, with_records: bool = True) -> dict:
        d = {"rng": RNG_NAME, "spec": self.spec.to_dict(), "rejected_draws": self.rejected,
             "stable_fraction": self.stable_fraction,
             "li_preserved_fraction": self.li_preserved_fraction,
             "found_fraction": self.found_fraction}
        if with_records:
            d["records"] = [r.to_dict() for r in self.records]
        return d

    def to_json(self, with_records: bool = True) -> str:
        return json.dumps(self.to_dict(with_records), indent=2)

    def to_csv(self) -> str:
        n = self.spec.nominal.n
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample"] + [f"f{i + 1}" for i in range(n)]
                   + ["p", "c", "b", "alpha", "beta", "found", "li_preserved", "verdict", "max_real"])
        for k, r in enumerate(self.records):
            P = r.params
            w.writerow([k] + [repr(v) for v in P.f]
                       + [repr(v) for v in (P.p, P.c, P.b, P.alpha, P.beta)]
                       + [int(r.found), int(r.li_preserved), r.verdict or "",
                          "" if r.max_real is None else repr(r.max_real)])
        return buf.getvalue()


def perturb(nominal: ModelParameters, u: np.ndarray, radius: float) -> Optional[ModelParameters]:
    """Scale every coordinate by ``1 + radius*u``; None if the ordering of alpha, beta breaks."""
    base = np.array(nominal.f + (nominal.p, nominal.c, nominal.b, nominal.alpha, nominal.beta))
    v = base * (1.0 + radius * u)
    n = nominal.n
    try:
        return ModelParameters(f=tuple(v[:n]), p=v[n], c=v[n + 1], b=v[n + 2],
                               alpha=v[n + 3], beta=v[n + 4])
    except ModelError:
        return None


def evaluate_point(network: CRNetwork, params: ModelParameters, support: SupportPattern) -> SweepRecord:
    sol = solve_support(network, params, support, with_conditions=False)
    if sol is None:
        return SweepRecord(params, False, False, None, None)
    li = bool(support.persistent)
    try:
        rep = stability_of(sol.state, network, params)
    except ModelError:
        return SweepRecord(params, True, li, "undefined", None)
    return SweepRecord(params, True, li, rep.verdict, rep.max_real)


def sweep(spec: SweepSpec, network: CRNetwork) -> SweepResult:
    """Uniform relative-box sweep; deterministic for a given spec.

    Draws whose perturbed ``alpha``, ``beta`` leave ``0 < beta < alpha < 1``
    are discarded and redrawn (counted in ``rejected``), with at most
    ``10 * samples`` draws overall.
    """
    spec.support.validate(network.n)
    if solve_support(network, spec.nominal, spec.support, with_conditions=False) is None:
        raise ValueError(f"nominal parameters admit no fixed point with support {spec.support}")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    dim = spec.nominal.n + 5
    result = SweepResult(spec)
    draws = 0
    while len(result.records) < spec.samples:
        if draws >= OVERSAMPLE_CAP * spec.samples:
            raise RuntimeError(f"more than {OVERSAMPLE_CAP}x oversampling needed; shrink the radius")
        draws += 1
        prm = perturb(spec.nominal, rng.uniform(-1.0, 1.0, dim), spec.relative_radius)
        if prm is None:
            result.rejected += 1
            continue
        result.records.append(evaluate_point(network, prm, spec.support))
    return result
