import numpy as np
import pytest

from crnli.catalog import get_network
from crnli.core import ModelParameters
from crnli.fixed_points import SupportPattern, solve_support
from crnli.robustness import RNG_NAME, SweepSpec, evaluate_point, perturb, sweep
from crnli.stability import numerical_jacobian, spectrum, verdict

BC = SupportPattern.from_labels([1, 3], [2, 3])
FAMILY = SupportPattern.from_labels([1, 2], [2])


def tuned_asym2():
    return ModelParameters(f=(4 / 9 * 3.0, 3.0))


def test_spec_validation(ex1):
    for radius in (0.0, 0.5, -0.1):
        with pytest.raises(ValueError):
            SweepSpec(ex1, radius, 10, 0, BC)
    with pytest.raises(ValueError):
        SweepSpec(ex1, 0.01, 0, 0, BC)


def test_nominal_must_admit_point(ex1):
    with pytest.raises(ValueError):
        sweep(SweepSpec(ex1, 0.01, 5, 0, SupportPattern.from_labels([1, 3], [1, 2])), get_network("branch_cycle3"))


def test_stable_fraction_one_near_branch_cycle_point(ex1):
    res = sweep(SweepSpec(ex1, 0.01, 400, 7, BC), get_network("branch_cycle3"))
    assert len(res.records) == 400
    assert res.stable_fraction == 1.0 and res.li_preserved_fraction == 1.0


def test_spot_check_with_finite_differences(ex1):
    net = get_network("branch_cycle3")
    res = sweep(SweepSpec(ex1, 0.01, 10, 3, BC), net)
    for rec in res.records:
        sol = solve_support(net, rec.params, BC, with_conditions=False)
        ev = spectrum(numerical_jacobian(sol.state, net, rec.params))
        assert verdict(ev).verdict == rec.verdict == "stable"


def test_zero_radius_limit(ex1):
    res = sweep(SweepSpec(ex1, 1e-12, 50, 1, BC), get_network("branch_cycle3"))
    assert res.stable_fraction == 1.0


@pytest.mark.parametrize("radius", [1e-6, 1e-3, 0.01, 0.1])
def test_group_c_never_preserved(radius):
    res = sweep(SweepSpec(tuned_asym2(), radius, 100, 11, FAMILY), get_network("asym2"))
    assert res.li_preserved_fraction == 0.0


def test_deterministic(ex1):
    spec = SweepSpec(ex1, 0.05, 50, 123, BC)
    a = sweep(spec, get_network("branch_cycle3")).to_json()
    b = sweep(spec, get_network("branch_cycle3")).to_json()
    assert a == b
    assert RNG_NAME in a
    c = sweep(SweepSpec(ex1, 0.05, 50, 124, BC), get_network("branch_cycle3")).to_json()
    assert c != a


@pytest.mark.parametrize("name, nominal, support", [
    ("branch_cycle3", dict(f=(1.0, 3.0, 4.0)), BC),
    ("composed5", dict(f=(3.0, 2.0, 1.0, 2.0, 1.0)), SupportPattern.from_labels([1, 3, 5], [1, 2, 4])),
])
def test_stable_fraction_nonincreasing_in_radius(name, nominal, support):
    prm = ModelParameters(**nominal)
    fracs = [sweep(SweepSpec(prm, r, 2000, 5, support), get_network(name)).stable_fraction
             for r in (0.01, 0.05, 0.1)]
    assert fracs[0] >= fracs[1] >= fracs[2]


def test_ordering_rejections_counted():
    # alpha and beta close together: wide boxes often swap them
    prm = ModelParameters(f=(1.0, 3.0, 4.0), alpha=0.5, beta=0.48)
    res = sweep(SweepSpec(prm, 0.2, 200, 2, BC), get_network("branch_cycle3"))
    assert res.rejected > 0
    assert len(res.records) == 200


def test_oversampling_cap(ex1, monkeypatch):
    import crnli.robustness as rob
    monkeypatch.setattr(rob, "perturb", lambda *a: None)
    with pytest.raises(RuntimeError):
        rob.sweep(SweepSpec(ex1, 0.01, 5, 0, BC), get_network("branch_cycle3"))


def test_perturb_scales_coordinates(ex1):
    u = np.zeros(ex1.n + 5)
    u[0] = 1.0
    prm = perturb(ex1, u, 0.1)
    assert prm.f[0] == pytest.approx(1.1) and prm.f[1:] == ex1.f[1:]


def test_csv_rows(ex1):
    res = sweep(SweepSpec(ex1, 0.01, 5, 0, BC), get_network("branch_cycle3"))
    lines = res.to_csv().splitlines()
    assert lines[0].startswith("sample,f1,f2,f3,p,c,b,alpha,beta,found")
    assert len(lines) == 6


def test_evaluate_point_missing_support(ex1):
    rec = evaluate_point(get_network("branch_cycle3"), ex1, SupportPattern.from_labels([1, 3], [1, 2]))
    assert not rec.found and rec.verdict is None
