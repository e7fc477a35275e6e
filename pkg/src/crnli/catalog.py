"""Named networks, closed-form fixed-point catalogs and mirror composition.

Catalog formulas are plain Python expressions over ``f1..fn, p, c, b,
alpha, beta`` (plus free coordinates for families); antibody levels may be
referenced by the antigen formulas and the free-coordinate bounds.
Entries with ``origin == "supplement"`` are isolated fixed points that the
reference list leaves out; they are kept so that the catalog is complete
against enumeration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import CRNetwork, ModelError, ModelParameters, SystemState, residual
from .fixed_points import (FixedPointSolution, SupportPattern, classify_state,
                           group_of, solve_support)

NETWORKS = {
    "asym2": (2, ((1, 2),)),
    "sym2": (2, ((1, 2), (2, 1))),
    "chain_branch3": (3, ((1, 2), (2, 3))),
    "branch_cycle3": (3, ((1, 2), (2, 3), (3, 2))),
    "cycle3": (3, ((1, 2), (2, 3), (3, 1))),
    "t_shape4": (4, ((2, 1), (3, 1), (4, 1))),
    "composed5": (5, ((1, 2), (2, 3), (3, 2), (1, 4), (5, 4), (4, 5))),
}

# networks whose catalog lists every isolated fixed point at generic parameters
COMPLETE = ("asym2", "sym2", "chain_branch3", "branch_cycle3", "cycle3")

EQ_TOL = 1e-12


def network_names() -> list[str]:
    return list(NETWORKS)


def get_network(name: str) -> CRNetwork:
    try:
        n, edges = NETWORKS[name]
    except KeyError:
        raise KeyError(f"unknown network {name!r}; known: {', '.join(NETWORKS)}") from None
    return CRNetwork(n, edges)


def compose_mirror(base: CRNetwork, pivot: int) -> CRNetwork:
    """Glue a copy of ``base`` to itself at ``pivot`` (1-based).

    The original keeps labels ``1..n``; the copies of the other nodes get
    ``n+1, n+2, ...`` in increasing order of their original labels.
    """
    n = base.n
    if not 1 <= pivot <= n:
        raise ModelError(f"pivot {pivot} out of range 1..{n}")
    relabel, nxt = {}, n + 1
    for v in range(1, n + 1):
        if v == pivot:
            relabel[v] = pivot
        else:
            relabel[v] = nxt
            nxt += 1
    edges = set(base.edges) | {(relabel[i], relabel[j]) for i, j in base.edges}
    return CRNetwork(nxt - 1, tuple(edges))


@dataclass(frozen=True)
class CatalogEntry:
    network: str
    index: str
    I: tuple
    J: tuple
    x: dict
    r: dict
    conditions: tuple = ()
    free: tuple = ()   # (name, lower expr, upper expr), instantiated in order
    tune: tuple = ()   # (f name, expr) assignments that realize the equalities
    origin: str = "reference"

    @property
    def support(self) -> SupportPattern:
        return SupportPattern.from_labels(self.I, self.J)

    @property
    def has_equality(self) -> bool:
        return any("==" in c for c in self.conditions)

    @property
    def is_family(self) -> bool:
        return bool(self.free)

    def to_dict(self) -> dict:
        return {"network": self.network, "index": self.index, "I": list(self.I), "J": list(self.J),
                "x": dict(self.x), "r": dict(self.r), "conditions": list(self.conditions),
                "free": [list(fr) for fr in self.free], "origin": self.origin}

    def describe(self) -> str:
        parts = [f"{k} = {v}" for k, v in sorted(self.x.items())] + \
                [f"{k} = {v}" for k, v in sorted(self.r.items())]
        head = f"[{self.index}] I={set(self.I)} J={set(self.J)}"
        if self.origin != "reference":
            head += f" ({self.origin})"
        lines = [head]
        if self.conditions:
            lines.append("    requires: " + ", ".join(self.conditions))
        for name, lo, hi in self.free:
            lines.append(f"    free: {lo} < {name} < {hi}")
        lines.append("    " + ", ".join(parts))
        return "\n".join(lines)


def _E(network, index, I, J, x, r, conditions=(), free=(), tune=(), origin="reference"):
    return CatalogEntry(network, str(index), tuple(I), tuple(J), dict(x), dict(r),
                        tuple(conditions), tuple(free), tuple(tune), origin)


_R23 = "(f2-beta*f3)/(p*(1-beta**2))"
_R32 = "(f3-beta*f2)/(p*(1-beta**2))"
_K2 = "((1-alpha*beta)*f2+(alpha-beta)*f3)"
_K3 = "((1-alpha*beta)*f3+(alpha-beta)*f2)"

ENTRIES = [
    # ---- asym2
    _E("asym2", 1, [2], [2], {"x2": "b*f2/(c*p)"}, {"r2": "f2/p"}),
    _E("asym2", 2, [1], [2], {"x1": "b*f1/(c*p*beta)"}, {"r2": "f1/(p*beta)"}),
    _E("asym2", 3, [1], [1], {"x1": "b*f1/(c*p)"}, {"r1": "f1/p"}),
    _E("asym2", 4, [1, 2], [2], {"x1": "x1", "x2": "b*f2/(c*p)-x1"}, {"r2": "f2/p"},
       ["f1 == beta*f2"], [("x1", "0", "b*f2/(c*p)")], [("f1", "beta*f2")]),
    _E("asym2", 5, [1, 2], [1, 2],
       {"x1": "b/(c*p)*(f1+(alpha-beta)*f2)", "x2": "b*f2/(c*p)*(1-alpha)"},
       {"r1": "(f1-beta*f2)/p", "r2": "f2/p"}, ["f1 > beta*f2"]),

    # ---- sym2
    _E("sym2", 1, [1], [2], {"x1": "b*f1/(c*p*beta)"}, {"r2": "f1/(p*beta)"}),
    _E("sym2", "S1", [2], [1], {"x2": "b*f2/(c*p*beta)"}, {"r1": "f2/(p*beta)"}, origin="supplement"),
    _E("sym2", "S2", [1], [1], {"x1": "b*f1/(c*p)"}, {"r1": "f1/p"}, origin="supplement"),
    _E("sym2", "S3", [2], [2], {"x2": "b*f2/(c*p)"}, {"r2": "f2/p"}, origin="supplement"),
    _E("sym2", "S4", [1, 2], [1, 2],
       {"x1": "b/(c*(1+alpha))*(r1+alpha*r2)", "x2": "b/(c*(1+alpha))*(alpha*r1+r2)"},
       {"r1": "(f1-beta*f2)/(p*(1-beta**2))", "r2": "(f2-beta*f1)/(p*(1-beta**2))"},
       ["f1 > beta*f2", "f2 > beta*f1"], origin="supplement"),

    # ---- chain_branch3
    _E("chain_branch3", 1, [2], [2], {"x2": "b*f2/(c*p)"}, {"r2": "f2/p"}),
    _E("chain_branch3", 2, [2, 3], [2, 3],
       {"x2": "b/(c*p)*(f2+(alpha-beta)*f3)", "x3": "b*f3/(c*p)*(1-alpha)"},
       {"r2": "(f2-beta*f3)/p", "r3": "f3/p"}, ["f2 > beta*f3"]),
    _E("chain_branch3", 3, [1], [2], {"x1": "b*f1/(c*p*beta)"}, {"r2": "f1/(p*beta)"}),
    _E("chain_branch3", 4, [1, 3], [1, 3], {"x1": "b*f1/(c*p)", "x3": "b*f3/(c*p)"},
       {"r1": "f1/p", "r3": "f3/p"}),
    _E("chain_branch3", 5, [1, 3], [2, 3], {"x1": "b*f1/(c*p*beta)", "x3": "b*f3/(c*p)"},
       {"r2": "f1/(p*beta)", "r3": "f3/p"}),
    _E("chain_branch3", 6, [1, 2], [2], {"x1": "x1", "x2": "b*f1/(c*p*beta)-x1"},
       {"r2": "f1/(p*beta)"}, ["f1 == beta*f2"], [("x1", "0", "b*f1/(c*p*beta)")],
       [("f1", "beta*f2")]),
    _E("chain_branch3", 7, [1, 2], [1, 3], {"x1": "b*f1/(c*p)", "x2": "b*f2/(c*p*beta)"},
       {"r1": "f1/p", "r3": "f2/(p*beta)"}),
    _E("chain_branch3", 8, [1, 2], [1, 2],
       {"x1": "b/(c*p)*(f1+(alpha-beta)*f2)", "x2": "b*f2/(c*p)*(1-alpha)"},
       {"r1": "(f1-beta*f2)/p", "r2": "f2/p"}, ["f1 > beta*f2"]),
    _E("chain_branch3", 9, [1, 2, 3], [2, 3],
       {"x1": "x1",
        "x2": "(1+alpha*f3/(f2-beta*f3))*(b*(f2-beta*f3)/(c*p)-x1)",
        "x3": "b*f3/(c*p)*(1-alpha)+alpha*f3/(f2-beta*f3)*x1"},
       {"r2": "(f2-beta*f3)/p", "r3": "f3/p"},
       ["f1 == beta*(f2-beta*f3)", "f2 > beta*f3"], [("x1", "0", "b*(f2-beta*f3)/(c*p)")],
       [("f1", "beta*(f2-beta*f3)")]),
    _E("chain_branch3", 10, [1, 2, 3], [1, 3],
       {"x1": "b*f1/(c*p)", "x2": "x2", "x3": "b*f3/(c*p)-x2"}, {"r1": "f1/p", "r3": "f3/p"},
       ["f2 == beta*f3"], [("x2", "0", "b*f3/(c*p)")], [("f2", "beta*f3")]),
    _E("chain_branch3", 11, [1, 2, 3], [1, 2, 3],
       {"x1": "b/(c*p)*(f1+(alpha-beta)*(f2-beta*f3))",
        "x2": "b/(c*p)*(1-alpha)*(f2+(alpha-beta)*f3)",
        "x3": "b*f3/(c*p)*(1-alpha*(1-alpha))"},
       {"r1": "(f1-beta*f2+beta**2*f3)/p", "r2": "(f2-beta*f3)/p", "r3": "f3/p"},
       ["f1 > beta*(f2-beta*f3)", "f2 > beta*f3"]),
    _E("chain_branch3", "S1", [1], [1], {"x1": "b*f1/(c*p)"}, {"r1": "f1/p"}, origin="supplement"),
    _E("chain_branch3", "S2", [2], [3], {"x2": "b*f2/(c*p*beta)"}, {"r3": "f2/(p*beta)"},
       origin="supplement"),
    _E("chain_branch3", "S3", [3], [3], {"x3": "b*f3/(c*p)"}, {"r3": "f3/p"}, origin="supplement"),

    # ---- branch_cycle3
    _E("branch_cycle3", 1, [3], [2], {"x3": "b*f3/(c*p*beta)"}, {"r2": "f3/(p*beta)"}),
    _E("branch_cycle3", 2, [2], [2], {"x2": "b*f2/(c*p)"}, {"r2": "f2/p"}),
    _E("branch_cycle3", 3, [2, 3], [2, 3],
       {"x2": f"b*{_K2}/(c*p*(1+alpha)*(1-beta**2))", "x3": f"b*{_K3}/(c*p*(1+alpha)*(1-beta**2))"},
       {"r2": _R23, "r3": _R32}, ["f3 > beta*f2", "f2 > beta*f3"]),
    _E("branch_cycle3", 4, [2, 3], [2], {"x2": "x2", "x3": "b*f2/(c*p)-x2"}, {"r2": "f2/p"},
       ["f3 == beta*f2"], [("x2", "0", "b*f2/(c*p)")], [("f3", "beta*f2")]),
    _E("branch_cycle3", 5, [1], [2], {"x1": "b*f1/(c*p*beta)"}, {"r2": "f1/(p*beta)"}),
    _E("branch_cycle3", 6, [1, 3], [2], {"x1": "x1", "x3": "b*f1/(c*p*beta)-x1"},
       {"r2": "f1/(p*beta)"}, ["f3 == f1"], [("x1", "0", "b*f1/(c*p*beta)")], [("f3", "f1")]),
    _E("branch_cycle3", 7, [1, 3], [2, 3],
       {"x1": "b*f1/(c*p*beta)*(1-alpha)", "x3": "b/(c*p)*(f3-f1+alpha/beta*f1)"},
       {"r2": "f1/(p*beta)", "r3": "(f3-f1)/p"}, ["f3 > f1"]),
    _E("branch_cycle3", 8, [1, 3], [1, 2],
       {"x1": "b/(c*p)*(f1-f3+alpha/beta*f3)", "x3": "b*f3/(c*p*beta)*(1-alpha)"},
       {"r1": "(f1-f3)/p", "r2": "f3/(p*beta)"}, ["f3 < f1"]),
    _E("branch_cycle3", 9, [1, 3], [1, 3], {"x1": "b*f1/(c*p)", "x3": "b*f3/(c*p)"},
       {"r1": "f1/p", "r3": "f3/p"}),
    _E("branch_cycle3", 10, [1, 2], [2], {"x1": "x1", "x2": "b*f2/(c*p)-x1"}, {"r2": "f2/p"},
       ["f1 == beta*f2"], [("x1", "0", "b*f2/(c*p)")], [("f1", "beta*f2")]),
    _E("branch_cycle3", 11, [1, 2], [1, 2],
       {"x1": "b/(c*p)*(f1+(alpha-beta)*f2)", "x2": "b*f2/(c*p)*(1-alpha)"},
       {"r1": "(f1-beta*f2)/p", "r2": "f2/p"}, ["f1 > beta*f2"]),
    _E("branch_cycle3", 12, [1, 2], [1, 3], {"x1": "b*f1/(c*p)", "x2": "b*f2/(c*p*beta)"},
       {"r1": "f1/p", "r3": "f2/(p*beta)"}),
    _E("branch_cycle3", 13, [1, 2, 3], [2],
       {"x1": "x1", "x2": "x2", "x3": "b*f2/(c*p)-x1-x2"}, {"r2": "f2/p"},
       ["f1 == beta*f2", "f3 == beta*f2"],
       [("x1", "0", "b*f2/(c*p)"), ("x2", "0", "b*f2/(c*p)-x1")],
       [("f1", "beta*f2"), ("f3", "beta*f2")]),
    _E("branch_cycle3", 14, [1, 2, 3], [2, 3],
       {"x1": "x1",
        "x2": f"{_K2}/(c*p*(1+alpha)*(1-beta**2))*(b-c*x1/((1-alpha)*r2))",
        "x3": f"{_K3}/(c*p*(1+alpha)*(1-beta**2))*(b+alpha*c*x1/((1-alpha)*r2))"},
       {"r2": _R23, "r3": _R32},
       ["(1-beta**2)*f1 == beta*(f2-beta*f3)", "f2 > beta*f3", "f3 > beta*f2"],
       [("x1", "0", "b*(1-alpha)*r2/c")], [("f1", "beta*(f2-beta*f3)/(1-beta**2)")]),
    _E("branch_cycle3", 15, [1, 2, 3], [1, 3],
       {"x1": "b*f1/(c*p)", "x2": "x2", "x3": "b*f3/(c*p)-x2"}, {"r1": "f1/p", "r3": "f3/p"},
       ["f2 == beta*f3"], [("x2", "0", "b*f3/(c*p)")], [("f2", "beta*f3")]),
    _E("branch_cycle3", 16, [1, 2, 3], [1, 2],
       {"x1": "b/(c*p)*(f1+(alpha-beta)*f2)", "x2": "x2", "x3": "b*f2/(c*p)*(1-alpha)-x2"},
       {"r1": "(f1-beta*f2)/p", "r2": "f2/p"},
       ["f1 > beta*f2", "f3 == beta*f2"], [("x2", "0", "b*f2/(c*p)*(1-alpha)")],
       [("f3", "beta*f2")]),
    _E("branch_cycle3", 17, [1, 2, 3], [1, 2, 3],
       {"x1": f"b*f1/(c*p)+b*(alpha-beta)/(c*p*(1-beta**2))*(f2-beta*f3)",
        "x2": f"b*(1-2*alpha)/(c*p*(1-alpha**2)*(1-beta**2))*{_K2}",
        "x3": f"b*(1-alpha+alpha**2)/(c*p*(1-alpha**2)*(1-beta**2))*{_K3}"},
       {"r1": "f1/p-beta*(f2-beta*f3)/(p*(1-beta**2))", "r2": _R23, "r3": _R32},
       ["(1-beta**2)*f1 > beta*(f2-beta*f3)", "f2 > beta*f3", "f3 > beta*f2", "alpha < 0.5"]),
    _E("branch_cycle3", "S1", [1], [1], {"x1": "b*f1/(c*p)"}, {"r1": "f1/p"}, origin="supplement"),
    _E("branch_cycle3", "S2", [2], [3], {"x2": "b*f2/(c*p*beta)"}, {"r3": "f2/(p*beta)"},
       origin="supplement"),
    _E("branch_cycle3", "S3", [3], [3], {"x3": "b*f3/(c*p)"}, {"r3": "f3/p"}, origin="supplement"),

    # ---- cycle3
    _E("cycle3", 1, [2, 3], [2, 3],
       {"x2": "b/(c*p)*(f2+(alpha-beta)*f3)", "x3": "b*f3/(c*p)*(1-alpha)"},
       {"r2": "(f2-beta*f3)/p", "r3": "f3/p"}, ["f2 > beta*f3"]),
    _E("cycle3", 2, [2, 3], [1, 2], {"x2": "b*f2/(c*p)", "x3": "b*f3/(c*p*beta)"},
       {"r1": "f3/(p*beta)", "r2": "f2/p"}),
    _E("cycle3", 3, [1, 3], [2, 3], {"x1": "b*f1/(c*p*beta)", "x3": "b*f3/(c*p)"},
       {"r2": "f1/(p*beta)", "r3": "f3/p"}),
    _E("cycle3", 4, [1, 3], [1, 3],
       {"x1": "b*f1/(c*p)*(1-alpha)", "x3": "b/(c*p)*(f3+(alpha-beta)*f1)"},
       {"r1": "f1/p", "r3": "(f3-beta*f1)/p"}, ["f3 > beta*f1"]),
    _E("cycle3", 5, [1, 2], [1, 3], {"x1": "b*f1/(c*p)", "x2": "b*f2/(c*p*beta)"},
       {"r1": "f1/p", "r3": "f2/(p*beta)"}),
    _E("cycle3", 6, [1, 2], [1, 2],
       {"x1": "b/(c*p)*(f1+(alpha-beta)*f2)", "x2": "b*f2/(c*p)*(1-alpha)"},
       {"r1": "(f1-beta*f2)/p", "r2": "f2/p"}, ["f1 > beta*f2"]),
    _E("cycle3", 7, [1, 2, 3], [2, 3],
       {"x1": "x1", "x2": "(b/c-x1*p*beta/f1)*(f1+alpha*beta*f3)/(p*beta)",
        "x3": "(b/c*(1-alpha)+alpha*x1*p*beta/f1)*f3/p"},
       {"r2": "f1/(p*beta)", "r3": "f3/p"},
       ["f2 == f1/beta+beta*f3"], [("x1", "0", "b*f1/(c*p*beta)")], [("f2", "f1/beta+beta*f3")]),
    _E("cycle3", 8, [1, 2, 3], [1, 3],
       {"x1": "x1", "x2": "f2/(p*alpha*beta)*(x1*p/f1-(1-alpha)*b/c)",
        "x3": "(f1/p+f2/(p*alpha*beta))*(b/c-x1*p/f1)"},
       {"r1": "f1/p", "r3": "f2/(p*beta)"},
       ["f3 == beta*f1+f2/beta"], [("x1", "(1-alpha)*b*f1/(c*p)", "b*f1/(c*p)")],
       [("f3", "beta*f1+f2/beta")]),
    _E("cycle3", 9, [1, 2, 3], [1, 2],
       {"x1": "x1", "x2": "(b/c-alpha*x1/(r1+alpha*r2))*r2", "x3": "r1*(b/c-x1/(r1+alpha*r2))"},
       {"r1": "f3/(p*beta)", "r2": "f2/p"},
       ["f1 == beta*f2+f3/beta"], [("x1", "0", "b/c*(r1+alpha*r2)")], [("f1", "beta*f2+f3/beta")]),
    _E("cycle3", 10, [1, 2, 3], [1, 2, 3],
       {"x1": "b/(c*(1+alpha))*(r1+alpha*r2)", "x2": "b/(c*(1+alpha))*(r2+alpha*r3)",
        "x3": "b/(c*(1+alpha))*(r3+alpha*r1)"},
       {"r1": "(f1-beta*f2+beta**2*f3)/(p*(1+beta**3))",
        "r2": "(f2-beta*f3+beta**2*f1)/(p*(1+beta**3))",
        "r3": "(f3-beta*f1+beta**2*f2)/(p*(1+beta**3))"},
       ["f1-beta*f2+beta**2*f3 > 0", "f2-beta*f3+beta**2*f1 > 0", "f3-beta*f1+beta**2*f2 > 0"]),
    _E("cycle3", "S1", [1], [2], {"x1": "b*f1/(c*p*beta)"}, {"r2": "f1/(p*beta)"}, origin="supplement"),
    _E("cycle3", "S2", [2], [3], {"x2": "b*f2/(c*p*beta)"}, {"r3": "f2/(p*beta)"}, origin="supplement"),
    _E("cycle3", "S3", [3], [1], {"x3": "b*f3/(c*p*beta)"}, {"r1": "f3/(p*beta)"}, origin="supplement"),
    _E("cycle3", "S4", [1], [1], {"x1": "b*f1/(c*p)"}, {"r1": "f1/p"}, origin="supplement"),
    _E("cycle3", "S5", [2], [2], {"x2": "b*f2/(c*p)"}, {"r2": "f2/p"}, origin="supplement"),
    _E("cycle3", "S6", [3], [3], {"x3": "b*f3/(c*p)"}, {"r3": "f3/p"}, origin="supplement"),

    # ---- t_shape4: node 1 altruistic, node 2 persistent, nodes 3 and 4 neutral active
    _E("t_shape4", 1, [2, 3, 4], [1, 3, 4],
       {"x2": "b*f2*(1-2*alpha)/(c*p*beta)", "x3": "b/(c*p)*(alpha/beta*f2+f3-f2)",
        "x4": "b/(c*p)*(alpha/beta*f2+f4-f2)"},
       {"r1": "f2/(p*beta)", "r3": "(f3-f2)/p", "r4": "(f4-f2)/p"},
       ["f2 < f3", "f2 < f4", "alpha < 0.5"]),

    # ---- composed5: persistent 3 and 5, altruistic 2 and 4
    _E("composed5", 1, [1, 3, 5], [1, 2, 4],
       {"x1": "b/(c*p)*(f1-f3-f5+alpha/beta*f3+alpha/beta*f5)",
        "x3": "b*f3/(c*p*beta)*(1-alpha)", "x5": "b*f5/(c*p*beta)*(1-alpha)"},
       {"r1": "(f1-f3-f5)/p", "r2": "f3/(p*beta)", "r4": "f5/(p*beta)"},
       ["f1-f3-f5 > 0"]),
]


def entries(name: Optional[str] = None) -> list[CatalogEntry]:
    if name is None:
        return list(ENTRIES)
    if name not in NETWORKS:
        raise KeyError(f"unknown network {name!r}")
    return [e for e in ENTRIES if e.network == name]


def get_entry(name: str, index) -> CatalogEntry:
    for e in entries(name):
        if e.index == str(index):
            return e
    raise KeyError(f"no entry {index!r} for {name}")


# --------------------------------------------------------------------------
# evaluation

_SAFE = {"__builtins__": {}, "min": min, "max": max, "abs": abs}
_REL = re.compile(r"\s*(==|<|>)\s*")


@lru_cache(maxsize=None)
def _compiled(expr: str):
    return compile(expr, "<catalog>", "eval")


def _ev(expr: str, ns: dict) -> float:
    return float(eval(_compiled(expr), _SAFE, ns))


def _namespace(params: ModelParameters) -> dict:
    ns = {f"f{i + 1}": v for i, v in enumerate(params.f)}
    ns.update(p=params.p, c=params.c, b=params.b, alpha=params.alpha, beta=params.beta)
    return ns


def condition_holds(cond: str, params: ModelParameters, tol: float = EQ_TOL) -> bool:
    lhs, op, rhs = _REL.split(cond)
    ns = _namespace(params)
    a, b = _ev(lhs, ns), _ev(rhs, ns)
    if op == "==":
        return abs(a - b) <= tol * max(1.0, abs(a), abs(b))
    return a > b if op == ">" else a < b


def applicable(entry: CatalogEntry, params: ModelParameters) -> bool:
    return all(condition_holds(c, params) for c in entry.conditions)


def entry_state(entry: CatalogEntry, params: ModelParameters,
                free_values: Optional[dict] = None) -> SystemState:
    """Evaluate the closed form; free coordinates default to interval midpoints."""
    n = NETWORKS[entry.network][0]
    if params.n != n:
        raise ModelError(f"{entry.network} needs {n} replication rates, got {params.n}")
    ns = _namespace(params)
    r = np.zeros(n)
    for k, expr in entry.r.items():
        r[int(k[1:]) - 1] = _ev(expr, ns)
    ns.update({f"r{i + 1}": v for i, v in enumerate(r)})
    for name, lo, hi in entry.free:
        if free_values and name in free_values:
            ns[name] = float(free_values[name])
        else:
            ns[name] = 0.5 * (_ev(lo, ns) + _ev(hi, ns))
    x = np.zeros(n)
    for k, expr in entry.x.items():
        x[int(k[1:]) - 1] = _ev(expr, ns)
    return SystemState(x, r)


def free_bounds(entry: CatalogEntry, params: ModelParameters, free_values: Optional[dict] = None):
    ns = _namespace(params)
    st = entry_state(entry, params, free_values)
    ns.update({f"r{i + 1}": v for i, v in enumerate(st.r)})
    out = []
    for name, lo, hi in entry.free:
        a, b = _ev(lo, ns), _ev(hi, ns)
        ns[name] = 0.5 * (a + b) if not free_values or name not in free_values else free_values[name]
        out.append((name, a, b))
    return out


def evaluate_catalog(name: str, params: ModelParameters, check_tol: float = 1e-10) -> list[FixedPointSolution]:
    """Catalog states valid at ``params``, each re-verified on the right-hand side."""
    net = get_network(name)
    out = []
    for e in entries(name):
        if not applicable(e, params):
            continue
        state = entry_state(e, params)
        res = residual(state, net, params)
        if not res < check_tol:
            raise RuntimeError(f"catalog entry {name}[{e.index}] has residual {res:.3g}")
        labels = classify_state(state)
        solved = solve_support(net, params, e.support)
        conditions = solved.conditions if solved is not None else []
        out.append(FixedPointSolution(
            state=state, support=e.support, labels=labels, group=group_of(labels, conditions),
            conditions=conditions, residual=res,
            delta=solved.delta if solved is not None else np.full(net.n, np.nan),
            r_family_dim=solved.r_family_dim if solved is not None else 0,
            x_family_dim=solved.x_family_dim if solved is not None else len(e.free),
        ))
    return out


def random_parameters(n: int, rng: np.random.Generator) -> ModelParameters:
    """A generic parameter draw in moderate ranges."""
    alpha = rng.uniform(0.15, 0.95)
    beta = rng.uniform(0.05, 0.95) * alpha
    return ModelParameters(f=tuple(rng.uniform(0.2, 5.0, n)), p=rng.uniform(0.3, 3.0),
                           c=rng.uniform(0.3, 3.0), b=rng.uniform(0.3, 3.0), alpha=alpha, beta=beta)


def sample_parameters(entry: CatalogEntry, rng: np.random.Generator,
                      max_tries: int = 10_000) -> ModelParameters:
    """Random parameters at which ``entry`` applies (equalities imposed exactly)."""
    n = NETWORKS[entry.network][0]
    for _ in range(max_tries):
        prm = random_parameters(n, rng)
        if entry.tune:
            f = list(prm.f)
            ok = True
            for name, expr in entry.tune:
                ns = _namespace(prm.replace(f=tuple(f)))
                v = _ev(expr, ns)
                if not v > 0:
                    ok = False
                    break
                f[int(name[1:]) - 1] = v
            if not ok:
                continue
            prm = prm.replace(f=tuple(f))
        if applicable(entry, prm):
            return prm
    raise RuntimeError(f"could not sample parameters for {entry.network}[{entry.index}]")
