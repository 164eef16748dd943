import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsbarrier.errors import PlanError
from rsbarrier.inversion import (
    GwrResult,
    InversionPlan,
    SinhPlan,
    gwr_invert,
    gwr_nodes,
    sinh_invert,
    sinh_nodes,
    sinh_plan,
)

E_INV = 0.36787944117144233  # exp(-1)


def test_gwr_nodes_ladder():
    assert np.allclose(gwr_nodes(math.log(2.0), 2), [1.0, 2.0, 3.0, 4.0])


def test_gwr_nodes_scaling():
    assert np.allclose(gwr_nodes(2.0, 6), 0.5 * gwr_nodes(1.0, 6))


def test_gwr_nodes_count_and_max():
    nodes = gwr_nodes(1.0, 8)
    assert len(nodes) == 16
    assert nodes[-1] == pytest.approx(16 * math.log(2.0))
    assert np.all(np.diff(nodes) > 0)


def test_gwr_constant_transform_exact():
    # 1/q -> 1, reproduced exactly (up to one rounding) for every n_G
    for n_gaver in (4, 6, 8, 10):
        q = gwr_nodes(0.7, n_gaver)
        res = gwr_invert(1.0 / q, 0.7, n_gaver)
        assert res.value == pytest.approx(1.0, abs=1e-15)
        assert not res.breakdown


def test_gwr_exponential_pair():
    q = gwr_nodes(1.0, 8)
    res = gwr_invert(1.0 / (q + 1.0), 1.0, 8)
    assert abs(res.value - E_INV) < 1e-6


def test_gwr_ramp_pair():
    q = gwr_nodes(2.0, 8)
    res = gwr_invert(1.0 / q**2, 2.0, 8)
    assert abs(res.value - 2.0) < 1e-7


def test_gwr_rejects_bad_depth():
    with pytest.raises(PlanError):
        gwr_nodes(1.0, 7)
    with pytest.raises(PlanError):
        gwr_invert([1.0] * 36, 1.0, 18)  # beyond the 4..16 table guard
    with pytest.raises(PlanError):
        gwr_invert([1.0] * 10, 1.0, 8)


def test_gwr_stability_indicator_reported():
    q = gwr_nodes(1.0, 8)
    res = gwr_invert(1.0 / (q + 1.0), 1.0, 8)
    assert isinstance(res, GwrResult)
    assert res.stability >= 0.0
    assert len(res.gaver) == 8


@settings(max_examples=20)
@given(st.lists(st.floats(-2.0, 2.0), min_size=4, max_size=4), st.floats(0.5, 2.5))
def test_gwr_polynomial_extrapolation(coeffs, tau):
    # double precision: the table floor sits well above the exact-arithmetic one
    q = gwr_nodes(tau, 8)
    samples = sum(c / q ** (k + 1) for k, c in enumerate(coeffs))
    truth = sum(c * tau**k / math.factorial(k) for k, c in enumerate(coeffs))
    res = gwr_invert(np.atleast_1d(samples), tau, 8)
    assert abs(res.value - truth) < 2e-5 * max(1.0, max(abs(c) for c in coeffs))


def test_gwr_polynomial_extended_precision():
    # the stated 1e-8 needs a table deep enough for the 1/n expansion: n_G=12
    with mpmath.workdps(40):
        tau = 1.3
        a = mpmath.log(2) / mpmath.mpf(tau)
        coeffs = [0.7, -1.2, 0.4, 1.9]
        nodes = [(i + 1) * a for i in range(24)]
        samples = [sum(c / qq ** (k + 1) for k, c in enumerate(coeffs)) for qq in nodes]
        truth = float(sum(c * mpmath.mpf(tau) ** k / math.factorial(k)
                          for k, c in enumerate(coeffs)))
    res = gwr_invert(samples, tau, 12, extended_precision=True)
    assert abs(res.value - truth) < 1e-8


def test_sinh_known_pairs_default_nodes():
    plan = sinh_plan(1.0, n_nodes=64)
    res = sinh_invert(lambda q: 1.0 / (q + 1.0), 1.0, plan)
    assert abs(res.value - E_INV) < 1e-10

    plan = sinh_plan(1.5, n_nodes=64)
    assert abs(sinh_invert(lambda q: 1.0 / q, 1.5, plan).value - 1.0) < 1e-10

    plan = sinh_plan(2.0, n_nodes=64)
    assert abs(sinh_invert(lambda q: 1.0 / q**2, 2.0, plan).value - 2.0) < 1e-10


def test_sinh_forty_evaluations():
    # 40 evaluator calls via conjugate symmetry (80 symmetric nodes)
    plan = sinh_plan(1.0, n_nodes=80)
    res = sinh_invert(lambda q: 1.0 / (q + 1.0), 1.0, plan)
    assert res.n_evaluations == 40
    assert abs(res.value - E_INV) < 1e-10


def test_sinh_rejects_shallow_sector():
    with pytest.raises(PlanError):
        SinhPlan(sigma0=2.0, gamma=math.pi / 2, omega=0.3, b=1.0, step=0.1, n_nodes=16)
    with pytest.raises(PlanError):
        sinh_plan(1.0, gamma=0.4 * math.pi)


def test_sinh_node_symmetry_and_sector():
    plan = sinh_plan(1.0, n_nodes=48)
    q, w = sinh_nodes(plan)
    assert np.allclose(q, np.conj(q[::-1]))
    assert np.all(np.abs(np.angle(q)) < plan.gamma)
    # apex stays right of the origin even though the tails go far left
    assert q.real.max() > 0.0
    assert q.real.min() < 0.0


def test_sinh_convergence_signature():
    # log error decreases ~linearly with the node count until the floor
    errs = []
    for n in (10, 16, 24, 32, 40, 48):
        plan = sinh_plan(1.0, n_nodes=n, target_tol=1e-13)
        errs.append(abs(sinh_invert(lambda q: 1.0 / (q + 1.0), 1.0, plan).value - E_INV))
    logs = np.log(errs)
    assert np.all(np.diff(logs) < 0)
    assert logs[0] - logs[-1] > 11.0  # several orders across the ladder


def test_sinh_doubling_stability():
    v1 = sinh_invert(lambda q: 1.0 / (q + 1.0), 1.0, sinh_plan(1.0, n_nodes=64)).value
    v2 = sinh_invert(lambda q: 1.0 / (q + 1.0), 1.0, sinh_plan(1.0, n_nodes=128)).value
    assert abs(v1 - v2) < 1e-9


def test_inversion_plan_dispatch_and_memoization():
    calls = []

    def evaluator(q):
        calls.append(q)
        return 1.0 / (q + 1.0)

    plan = InversionPlan(backend="gwr", n_gaver=8)
    value = plan.invert(evaluator, 1.0)
    assert abs(value - E_INV) < 1e-6
    assert len(calls) == len(set(calls)) == 16

    with pytest.raises(PlanError):
        InversionPlan(backend="talbot")
