import numpy as np
import pytest

from crnli.core import CRNetwork, ModelParameters, build_matrices


EX1 = dict(f=(1.0, 3.0, 4.0), p=1.0, c=1.0, b=1.0, alpha=2 / 3, beta=4 / 9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ex1():
    return ModelParameters(**EX1)


def same_point_or_family(sol_state, ref_state, network: CRNetwork, params: ModelParameters, support,
                         tol: float = 1e-9) -> bool:
    """True if two fixed points coincide, or lie in one stationary family on ``support``.

    The x-part of a family is ``x_I = y_I * (V r)_I`` with ``y`` ranging over
    an affine space; two members share ``r`` and differ in ``y`` by a kernel
    vector of ``V^T`` restricted to rows J, columns I.
    """
    a, b = sol_state.as_vector(), ref_state.as_vector()
    scale = max(1.0, np.max(np.abs(b)))
    if np.max(np.abs(a - b)) <= tol * scale:
        return True
    if np.max(np.abs(sol_state.r - ref_state.r)) > tol * scale:
        return False
    V = build_matrices(network, params).V
    I, J = sorted(support.I), sorted(support.J)
    Vr = V @ ref_state.r
    dy = (sol_state.x[I] - ref_state.x[I]) / Vr[I]
    M = V.T[np.ix_(J, I)]
    return bool(np.max(np.abs(M @ dy)) <= tol * scale)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
