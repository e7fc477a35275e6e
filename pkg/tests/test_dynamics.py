import numpy as np
import pytest

from crnli.catalog import get_network
from crnli.core import CRNetwork, ModelParameters, SystemState, build_matrices, rhs_vector
from crnli.dynamics import (IntegratorOptions, StepSizeUnderflow, Trajectory, default_t_end,
                            detect_convergence, integrate)


def rk4(z0, network, params, t_end, dt):
    """Fixed-step classical RK4; the independent oracle."""
    mats = build_matrices(network, params)
    f = params.f_array
    fun = lambda z: rhs_vector(z, f, params, mats)
    z = np.array(z0, dtype=float)
    for _ in range(int(round(t_end / dt))):
        k1 = fun(z)
        k2 = fun(z + 0.5 * dt * k1)
        k3 = fun(z + 0.5 * dt * k2)
        k4 = fun(z + dt * k3)
        z = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


BC_POINT = SystemState([0.75, 0.0, 4.5], [0.0, 2.25, 3.0])


def perturbed(state, rel):
    return SystemState(state.x * (1 + rel), state.r * (1 + rel))


def test_stationary_at_single_node_fixed_point():
    prm = ModelParameters(f=(1.0,))
    st = SystemState([1.0], [1.0])
    tr = integrate(st, CRNetwork(1), prm, t_end=100.0)
    assert np.max(np.abs(tr.states - st.as_vector())) < 10 * 1e-10
    assert tr.terminal_reason == "t_end"


def test_pure_decay():
    prm = ModelParameters(f=(1.0, 2.0), b=0.5)
    r0 = np.array([2.0, 0.3])
    tr = integrate(SystemState([0.0, 0.0], r0), get_network("sym2"), prm, t_end=20.0)
    exact = r0[None, :] * np.exp(-0.5 * tr.times[:, None])
    assert np.max(np.abs(tr.states[:, 2:] - exact)) < 1e-8
    assert np.all(tr.states[:, :2] == 0)


def test_matches_rk4_oracle(ex1):
    net = get_network("branch_cycle3")
    start = perturbed(BC_POINT, 0.01)
    ref = rk4(start.as_vector(), net, ex1, 5.0, 1e-4)
    tight = integrate(start, net, ex1, t_end=5.0, options=IntegratorOptions(rtol=1e-12, atol=1e-14))
    assert np.max(np.abs(tight.final.as_vector() - ref)) < 1e-9
    # default tolerances: global error stays a small multiple of rtol * |state|
    default = integrate(start, net, ex1, t_end=5.0)
    assert np.max(np.abs(default.final.as_vector() - ref)) < 1e-6


def test_perturbed_stable_point_returns(ex1):
    net = get_network("branch_cycle3")
    tr = integrate(perturbed(BC_POINT, 0.01), net, ex1)
    assert tr.times[-1] == pytest.approx(default_t_end(ex1))
    assert np.max(np.abs(tr.final.as_vector() - BC_POINT.as_vector())) < 1e-6
    # near equilibrium the adaptive step hovers at the stability limit, so |rhs| ~ rtol
    conv = detect_convergence(tr, net, ex1, window=50.0, tol=1e-5)
    assert conv is not None
    assert np.max(np.abs(conv.as_vector() - BC_POINT.as_vector())) < 1e-6


def test_unstable_point_departs():
    prm = ModelParameters(f=(1.0, 1.0))
    net = get_network("asym2")
    point = SystemState([prm.b * prm.f[0] / (prm.c * prm.p * prm.beta), 0.0], [0.0, prm.f[0] / (prm.p * prm.beta)])
    start = SystemState(point.x, point.r + np.array([1e-6, 0.0]))
    tr = integrate(start, net, prm, t_end=200.0)
    dist = np.max(np.abs(tr.states - point.as_vector()), axis=1)
    assert dist.max() >= 10 * 1e-6


def test_times_increase_and_states_nonnegative(ex1):
    net = get_network("branch_cycle3")
    tr = integrate(SystemState([0.1, 0.1, 0.1], [0.1, 0.1, 0.1]), net, ex1, t_end=200.0)
    assert np.all(np.diff(tr.times) > 0)
    assert tr.states.min() >= 0.0
    assert tr.max_undershoot <= 100 * 1e-10


@pytest.mark.parametrize("name", ["chain_branch3", "cycle3", "t_shape4", "composed5"])
def test_positivity_from_random_starts(name, rng):
    net = get_network(name)
    prm = ModelParameters(f=tuple(rng.uniform(0.5, 3.0, net.n)), alpha=0.5, beta=0.2)
    x0 = rng.uniform(0, 1, net.n) * (rng.uniform(size=net.n) < 0.7)
    r0 = rng.uniform(0, 1, net.n)
    tr = integrate(SystemState(x0, r0), net, prm, t_end=50.0)
    assert tr.states.min() >= 0.0
    assert tr.max_undershoot < 1e-8


def test_tolerance_refinement(ex1):
    net = get_network("branch_cycle3")
    start = SystemState([0.2, 0.3, 0.1], [0.1, 0.4, 0.2])
    coarse = integrate(start, net, ex1, t_end=30.0, options=IntegratorOptions(rtol=1e-6, atol=1e-8))
    fine = integrate(start, net, ex1, t_end=30.0, options=IntegratorOptions(rtol=5e-7, atol=5e-9))
    diff = np.max(np.abs(coarse.final.as_vector() - fine.final.as_vector()))
    assert diff < coarse.accumulated_error


def test_detect_convergence_returns_state_with_small_rhs(ex1):
    net = get_network("branch_cycle3")
    tr = integrate(perturbed(BC_POINT, 0.01), net, ex1, t_end=300.0)
    st = detect_convergence(tr, net, ex1, window=20.0, tol=1e-5)
    assert st is not None
    mats = build_matrices(net, ex1)
    assert np.max(np.abs(rhs_vector(st.as_vector(), ex1.f_array, ex1, mats))) < 1e-5


def test_detect_convergence_stationary_and_decay():
    prm = ModelParameters(f=(1.0,))
    tr = integrate(SystemState([1.0], [1.0]), CRNetwork(1), prm, t_end=30.0)
    assert detect_convergence(tr, CRNetwork(1), prm, window=10.0, tol=1e-9) is not None
    # pure decay: r < tol/b long before the end
    prm2 = ModelParameters(f=(1.0,), b=2.0)
    tr2 = integrate(SystemState([0.0], [1.0]), CRNetwork(1), prm2, t_end=60.0)
    st = detect_convergence(tr2, CRNetwork(1), prm2, window=5.0, tol=1e-8)
    assert st is not None and st.r[0] < 1e-8 / 2.0


def test_detect_convergence_none_when_moving(ex1):
    net = get_network("branch_cycle3")
    tr = integrate(perturbed(BC_POINT, 0.05), net, ex1, t_end=5.0)
    assert detect_convergence(tr, net, ex1, window=2.0, tol=1e-8) is None


def test_early_stop_on_convergence(ex1):
    net = get_network("branch_cycle3")
    opts = IntegratorOptions(converge_tol=1e-5, converge_window=5.0)
    tr = integrate(perturbed(BC_POINT, 0.01), net, ex1, options=opts)
    assert tr.terminal_reason == "converged"
    assert tr.times[-1] < default_t_end(ex1)


def test_divergence_reported_not_raised():
    # the first antigen burst peaks near 16; a low threshold turns it into a divergence
    prm = ModelParameters(f=(5.0,), b=1.0)
    opts = IntegratorOptions(blowup=10.0)
    tr = integrate(SystemState([1.0], [1e-3]), CRNetwork(1), prm, t_end=100.0, options=opts)
    assert tr.terminal_reason == "diverged"


def test_step_underflow():
    prm = ModelParameters(f=(1.0,))
    with pytest.raises(StepSizeUnderflow):
        integrate(SystemState([1.0], [0.5]), CRNetwork(1), prm, t_end=1.0,
                  options=IntegratorOptions(h0=1e-3, h_min=1.0))


def test_csv_layout(ex1):
    tr = integrate(perturbed(BC_POINT, 0.01), get_network("branch_cycle3"), ex1, t_end=1.0)
    lines = tr.to_csv(stride=3).splitlines()
    assert lines[0] == "t,x1,x2,x3,r1,r2,r3"
    assert float(lines[-1].split(",")[0]) == tr.times[-1]
    assert len(lines[1].split(",")) == 7


def test_rejects_bad_initial():
    with pytest.raises(ValueError):
        integrate(SystemState([0.0], [0.0]), CRNetwork(1), ModelParameters(f=(1.0,)), t_end=1.0)
    with pytest.raises(ValueError):
        integrate(SystemState([1.0], [0.0]), CRNetwork(1), ModelParameters(f=(1.0,)), t_end=-1.0)
