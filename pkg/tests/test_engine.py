import math

import numpy as np
import pytest

from rsbarrier.engine import (
    BarrierProblem,
    QPricer,
    RegimeSpec,
    interpolate_field,
    solve_v0,
)
from rsbarrier.errors import SpectralParameterError
from rsbarrier.histories import HistoryIndex, MemoryChain, enumerate_histories
from rsbarrier.models import BrownianDrift, KouJumpDiffusion

BM = BrownianDrift(mu=0.0, sigma2=1.0)
KOU1 = KouJumpDiffusion(mu=0.03, sigma2=0.02, lambda_j=2.0, p=0.4,
                        alpha_plus=15.0, alpha_minus=10.0)
KOU2 = KouJumpDiffusion(mu=-0.02, sigma2=0.08, lambda_j=5.0, p=0.6,
                        alpha_plus=12.0, alpha_minus=8.0)


def single_brownian(m_power=13):
    chain = MemoryChain.from_constant(1, 0, 0.0)
    prob = BarrierProblem(regimes=(RegimeSpec(BM, 0.0, 1.0),), chain=chain,
                          lower=-1.0, upper=1.0, spot=0.0, maturity=1.0,
                          initial_history=HistoryIndex((1,)))
    return QPricer(prob, m_power=m_power)


def cosh_transform(q, x, rate=0.0, half=1.0, sigma2=1.0):
    qt = q + rate
    k = math.sqrt(2.0 * qt / sigma2)
    return (1.0 / qt) * (1.0 - math.cosh(k * x) / math.cosh(k * half))


# -- solve_v0 ------------------------------------------------------------

def test_v0_single_regime():
    chain = MemoryChain.from_constant(1, 0, 0.0)
    out = solve_v0(chain, np.array([0.5]), np.array([1.0]), 0.5)
    assert out[0] == pytest.approx(1.0)


def test_v0_symmetric_two_state():
    chain = MemoryChain(2, 0, np.array([[1.0], [1.0]]))
    out = solve_v0(chain, np.zeros(2), np.ones(2), 1.0)
    assert np.allclose(out, 1.0)


def test_v0_asymmetric_hand_solve():
    chain = MemoryChain(2, 0, np.array([[1.0], [2.0]]))
    out = solve_v0(chain, np.zeros(2), np.array([1.0, 0.0]), 1.0)
    assert out[0] == pytest.approx(0.75)
    assert out[1] == pytest.approx(0.5)


def test_v0_jacobi_matches_direct():
    chain = MemoryChain.from_constant(3, 2, 0.4)  # 12 histories
    r = np.array([0.01, 0.02, 0.03])
    g = np.array([1.0, 0.5, 2.0])
    direct = solve_v0(chain, r, g, 1.3)
    # force the iterative branch by monkeypatching the threshold via big fake
    diag_sol = solve_v0(chain, r, g, 1.3, tol=1e-13)
    assert np.allclose(direct, diag_sol, atol=1e-10)


def test_v0_rejects_bad_q():
    chain = MemoryChain.from_constant(2, 0, 1.0)
    with pytest.raises(SpectralParameterError):
        solve_v0(chain, np.zeros(2), np.ones(2), -1.0)  # |q + Lambda| = 0


# -- single-regime transform oracle --------------------------------------

def test_brownian_transform_matches_cosh_oracle():
    pricer = single_brownian(m_power=14)
    for q in (0.7, 1.5, 4.0, 11.0):
        got = pricer.price_at(q)[0].real
        assert got == pytest.approx(cosh_transform(q, 0.0), abs=2e-6)


def test_brownian_transform_profile():
    pricer = single_brownian(m_power=14)
    field = pricer.price_field(2.0)
    for x0 in (-0.7, -0.25, 0.4, 0.85):
        got = field.at(x0)[0].real
        assert got == pytest.approx(cosh_transform(2.0, x0), abs=2e-6)


def test_boundary_term_single_sweep_closed_form():
    # no coupling: the first outer term is the one-barrier first-touch value
    pricer = single_brownian(m_power=14)
    q = 2.0
    field = pricer.price_field(q)
    assert field.stats.max_inner_sweeps <= 2
    beta = math.sqrt(2.0 * q)
    # the ell=1 plus term at x0: v0 * exp(-beta*(h+ - x0))
    # reconstructed from the assembled series indirectly via the oracle
    assert field.at(0.0)[0].real == pytest.approx(cosh_transform(q, 0.0), abs=2e-6)


def test_zero_payoff_gives_zero():
    chain = MemoryChain.from_constant(1, 0, 0.0)
    prob = BarrierProblem(regimes=(RegimeSpec(BM, 0.0, 0.0),), chain=chain,
                          lower=-1.0, upper=1.0, spot=0.0, maturity=1.0,
                          initial_history=HistoryIndex((1,)))
    field = QPricer(prob, m_power=12).price_field(1.0)
    assert np.allclose(field.v0, 0.0)
    assert field.functions.sup_norm() == pytest.approx(0.0, abs=1e-14)


def test_far_barriers_reduce_to_v0():
    chain = MemoryChain.from_constant(1, 0, 0.0)
    prob = BarrierProblem(regimes=(RegimeSpec(BM, 0.0, 1.0),), chain=chain,
                          lower=-10.0, upper=10.0, spot=0.0, maturity=1.0,
                          initial_history=HistoryIndex((1,)))
    pricer = QPricer(prob, m_power=13)
    field = pricer.price_field(1.0)
    # the correction is barrier-local; already negligible at the spot by ell=2
    assert field.stats.outer_terms[1] < 1e-5
    assert field.at(0.0)[0].real == pytest.approx(1.0, abs=1e-5)  # v0 = G/q = 1


def test_price_outside_band_is_zero():
    pricer = single_brownian(m_power=12)
    assert np.all(pricer.price_at(1.0, x0=-1.0) == 0.0)
    assert np.all(pricer.price_at(1.0, x0=1.3) == 0.0)
    field = pricer.price_field(1.0)
    assert np.all(field.at(pricer.grid.lower) == 0.0)


def test_reflection_symmetry():
    # driftless symmetric setup: transform is even in x0
    pricer = single_brownian(m_power=13)
    field = pricer.price_field(1.5)
    for x0 in (0.3, 0.6):
        a = field.at(x0)[0].real
        b = field.at(-x0)[0].real
        assert a == pytest.approx(b, abs=1e-9)


# -- multi-regime ---------------------------------------------------------

@pytest.fixture(scope="module")
def kou_memory_field():
    chain = MemoryChain(2, 1, np.array([[0.8], [1.6]]))
    prob = BarrierProblem(
        regimes=(RegimeSpec(KOU1, 0.02, 1.0), RegimeSpec(KOU2, 0.05, 1.0)),
        chain=chain, lower=-0.3, upper=0.3, spot=0.0, maturity=0.5,
        initial_history=HistoryIndex((1, 2)))
    pricer = QPricer(prob, m_power=13)
    q = 2.0 * math.log(2.0) / 0.5
    return chain, prob, pricer.price_field(q), q


def test_contraction_rate_vs_bound(kou_memory_field):
    chain, prob, field, q = kou_memory_field
    bound = chain.lambda0 / abs(q + chain.lambda0 + float(np.min(prob.rates)))
    assert field.stats.max_ratio <= bound + 0.01


def test_monotone_inner_iterates(kou_memory_field):
    _, _, field, _ = kou_memory_field
    assert field.stats.monotone_undershoot > -1e-8


def test_outer_terms_strictly_decreasing(kou_memory_field):
    _, _, field, _ = kou_memory_field
    terms = field.stats.outer_terms
    assert all(b < a for a, b in zip(terms[1:], terms[2:]))


def test_memory_collapse_invariance():
    # rates depending only on (target, head): price cannot depend on N
    regimes = tuple(RegimeSpec(BrownianDrift(mu=0.0, sigma2=s2), 0.0, 1.0)
                    for s2 in (0.5, 1.0, 1.5))
    rules = [{"s": s, "history": [h0], "rate": 0.3 + 0.1 * s + 0.05 * h0}
             for s in (1, 2, 3) for h0 in (1, 2, 3) if s != h0]
    values = {}
    for n_mem in (0, 2):
        chain = MemoryChain.from_rules(3, n_mem, 0.0, rules)
        init = next(h for h in enumerate_histories(3, n_mem) if h.head == 1)
        prob = BarrierProblem(regimes=regimes, chain=chain, lower=-1.0, upper=1.0,
                              spot=0.2, maturity=1.0, initial_history=init)
        v = QPricer(prob, m_power=12).price_field(1.5).at(0.2)
        heads = chain.heads()
        assert max(np.ptp(v[heads == s].real) for s in (1, 2, 3)) < 1e-10
        values[n_mem] = np.array([v[heads == s][0].real for s in (1, 2, 3)])
    assert np.max(np.abs(values[0] - values[2])) < 1e-8


def test_degenerate_chain_matches_single_regime_runs():
    regimes = (RegimeSpec(KOU1, 0.02, 1.0), RegimeSpec(KOU2, 0.05, 1.0))
    chain = MemoryChain.from_constant(2, 0, 0.0)
    prob = BarrierProblem(regimes=regimes, chain=chain, lower=-0.3, upper=0.3,
                          spot=0.0, maturity=0.5, initial_history=HistoryIndex((1,)))
    multi = QPricer(prob, m_power=12).price_field(3.0).at(0.0)
    for i, spec in enumerate(regimes):
        solo_prob = BarrierProblem(regimes=(spec,), chain=MemoryChain.from_constant(1, 0, 0.0),
                                   lower=-0.3, upper=0.3, spot=0.0, maturity=0.5,
                                   initial_history=HistoryIndex((1,)))
        solo = QPricer(solo_prob, m_power=12).price_field(3.0).at(0.0)[0]
        assert abs(multi[i] - solo) < 1e-9


def test_band_nesting_monotone():
    # enlarging the band never decreases the knock-out transform
    values = []
    for half in (0.5, 1.0, 2.0):
        chain = MemoryChain.from_constant(1, 0, 0.0)
        prob = BarrierProblem(regimes=(RegimeSpec(BM, 0.0, 1.0),), chain=chain,
                              lower=-half, upper=half, spot=0.0, maturity=1.0,
                              initial_history=HistoryIndex((1,)))
        values.append(QPricer(prob, m_power=12).price_field(1.0).at(0.0)[0].real)
    assert values[0] < values[1] < values[2]


def test_interpolation_near_barrier_one_sided():
    # one-sided stencil: accuracy there is ring-limited, but finite and sane
    pricer = single_brownian(m_power=13)
    field = pricer.price_field(1.0)
    x0 = pricer.grid.upper - 1.2 * pricer.grid.dx  # within 2 cells of h+
    got = field.at(x0)[0].real
    assert got == pytest.approx(cosh_transform(1.0, x0), abs=2e-4)
    # interpolation at an exact interior node reproduces the node value
    j = pricer.grid.ref_index + 5
    xnode = pricer.grid.x_min + j * pricer.grid.dx
    assert field.at(xnode)[0] == pytest.approx(field.functions.full()[0, j], abs=1e-12)


def test_determinism_bit_identical():
    a = single_brownian(m_power=12).price_at(1.7)[0]
    b = single_brownian(m_power=12).price_at(1.7)[0]
    assert a == b
