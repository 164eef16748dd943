"""Independent Monte Carlo pricer and the Brownian band-series oracle.

Paths simulate the memory chain exactly (exponential sojourns, shift map)
and the within-regime dynamics on the monitoring grid: Brownian increments
are exact, Kou jumps happen at exact Poisson epochs, and the barrier is
checked at every grid time, jump epoch and regime switch.  The bridge flag
multiplies in the analytic crossing probability of each diffusion
sub-segment, removing the dominant monitoring bias.

Each path owns a counter-based stream Philox(key=(seed, path_index)), so
estimates are bit-identical under any execution schedule.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .engine import BarrierProblem
from .histories import encode
from .models import BrownianDrift, KouJumpDiffusion

__all__ = ["McConfig", "McResult", "simulate_price", "brownian_band_series"]


@dataclass(frozen=True)
class McConfig:
    paths: int
    dt: float
    seed: int
    bridge: bool = True
    antithetic: bool = False

    def validate(self, maturity: float) -> None:
        if self.paths < 1000:
            raise ValueError("need at least 1000 paths")
        if self.dt > maturity / 10.0:
            raise ValueError("dt must be at most T/10")
        if self.antithetic and self.paths % 2:
            raise ValueError("antithetic runs need an even path count")


@dataclass
class McResult:
    estimate: float
    stderr: float
    paths: int
    dt: float
    seed: int
    wall_time: float


def _segment_events(rng, t0, t1, dt, model):
    """Event times in (t0, t1]: monitoring grid, jump epochs, segment end.

    Returns (times, jump_sizes) with zero sizes at non-jump events.
    """
    k0 = math.floor(t0 / dt) + 1
    k1 = math.floor(t1 / dt)
    grid = np.arange(k0, k1 + 1, dtype=float) * dt
    if grid.size == 0 or grid[-1] < t1 - 1e-15 * max(t1, 1.0):
        grid = np.append(grid, t1)
    n_jumps = 0
    if isinstance(model, KouJumpDiffusion) and model.lambda_j > 0.0:
        n_jumps = int(rng.poisson(model.lambda_j * (t1 - t0)))
    if n_jumps == 0:
        return grid, None
    epochs = t0 + (t1 - t0) * rng.random(n_jumps)
    ups = rng.random(n_jumps) < model.p
    jump_sizes = np.where(ups,
                          rng.exponential(1.0 / model.alpha_plus, n_jumps),
                          -rng.exponential(1.0 / model.alpha_minus, n_jumps))
    times = np.concatenate([grid, epochs])
    sizes = np.concatenate([np.zeros(grid.size), jump_sizes])
    order = np.argsort(times, kind="stable")
    return times[order], sizes[order]


def _walk_segment(rng, x0, t0, times, sizes, model, lower, upper, bridge,
                  have_jumps):
    """Survival weight through one regime sojourn; (alive, weight, x_end)."""
    if times.size == 0:
        return True, 1.0, x0
    deltas = np.diff(times, prepend=t0)
    sig2 = model.sigma2
    mu = model.mu
    if sig2 > 0.0:
        incs = mu * deltas + np.sqrt(sig2 * deltas) * rng.standard_normal(times.size)
    else:
        incs = mu * deltas
    if have_jumps:
        pre = x0 + np.cumsum(incs) + (np.cumsum(sizes) - sizes)
        post = pre + sizes
        ok = (pre.min() > lower and pre.max() < upper
              and post.min() > lower and post.max() < upper)
    else:
        pre = post = x0 + np.cumsum(incs)
        ok = pre.min() > lower and pre.max() < upper
    if not ok:
        return False, 0.0, float(post[-1])
    weight = 1.0
    if bridge and sig2 > 0.0:
        starts = np.empty_like(post)
        starts[0] = x0
        starts[1:] = post[:-1]
        up = np.exp(-2.0 * (upper - starts) * (upper - pre) / (sig2 * deltas))
        dn = np.exp(-2.0 * (starts - lower) * (pre - lower) / (sig2 * deltas))
        weight = float(np.prod((1.0 - up) * (1.0 - dn)))
    return True, weight, float(post[-1])


def _one_path(rng, problem: BarrierProblem, cfg: McConfig, flip: bool = False):
    """Discounted knock-out payoff (with bridge survival weight) of one path."""
    chain = problem.chain
    rates = problem.rates
    payoffs = problem.payoffs
    code = encode(chain.m, problem.initial_history)
    heads = chain.heads()
    x = problem.spot
    t = 0.0
    T = problem.maturity
    discount = 0.0
    weight = 1.0
    if not problem.lower < x < problem.upper:
        return 0.0
    while t < T:
        head = int(heads[code])
        model = problem.regimes[head - 1].model
        lam = float(chain.lam_total[code])
        sojourn = rng.exponential(1.0 / lam) if lam > 0.0 else math.inf
        seg_end = min(t + sojourn, T)
        times, sizes = _segment_events(rng, t, seg_end, cfg.dt, model)
        walker = _Flipped(rng) if flip else rng  # twin mirrors Gaussians only
        alive, w, x = _walk_segment(walker, x, t, times, sizes, model,
                                    problem.lower, problem.upper, cfg.bridge,
                                    have_jumps=sizes is not None)
        discount += rates[head - 1] * (seg_end - t)
        if not alive:
            return 0.0
        weight *= w
        t = seg_end
        if t < T:
            probs = chain.rates[code] / lam
            j = int(rng.choice(chain.m - 1, p=probs))
            code = int(chain.codes_after_shift[code, j])
    return weight * payoffs[int(heads[code]) - 1] * math.exp(-discount)


class _Flipped:
    """Mirror the Gaussian draws of a generator; everything else passes through."""

    def __init__(self, rng):
        self._rng = rng

    def standard_normal(self, *args, **kwargs):
        return -self._rng.standard_normal(*args, **kwargs)

    def __getattr__(self, name):
        return getattr(self._rng, name)


def simulate_price(problem: BarrierProblem, cfg: McConfig) -> McResult:
    cfg.validate(problem.maturity)
    start = time.perf_counter()
    if not problem.lower < problem.spot < problem.upper:
        return McResult(0.0, 0.0, cfg.paths, cfg.dt, cfg.seed,
                        time.perf_counter() - start)
    if cfg.antithetic:
        n_pairs = cfg.paths // 2
        sums = 0.0
        sumsq = 0.0
        for pair in range(n_pairs):
            rng_a = np.random.Generator(np.random.Philox(key=[cfg.seed, pair]))
            rng_b = np.random.Generator(np.random.Philox(key=[cfg.seed, pair]))
            a = _one_path(rng_a, problem, cfg, flip=False)
            b = _one_path(rng_b, problem, cfg, flip=True)
            v = 0.5 * (a + b)
            sums += v
            sumsq += v * v
        n = n_pairs
    else:
        sums = 0.0
        sumsq = 0.0
        for idx in range(cfg.paths):
            rng = np.random.Generator(np.random.Philox(key=[cfg.seed, idx]))
            v = _one_path(rng, problem, cfg)
            sums += v
            sumsq += v * v
        n = cfg.paths
    mean = sums / n
    var = max(sumsq / n - mean * mean, 0.0)
    stderr = math.sqrt(var / n)
    return McResult(float(mean), float(stderr), cfg.paths, cfg.dt, cfg.seed,
                    time.perf_counter() - start)


def brownian_band_series(sigma2: float, mu: float, rate: float, lower: float,
                         upper: float, x0: float, maturity: float,
                         terms: int = 101):
    """Eigenfunction expansion of the Brownian no-exit value, drift handled
    by the exponential change of measure; returns (value, next_term_bound)."""
    if not lower < x0 < upper:
        return 0.0, 0.0
    if terms < 1:
        raise ValueError("need at least one term")
    L = upper - lower
    a = mu / sigma2
    prefactor = math.exp(-rate * maturity - a * x0 - 0.5 * mu * mu * maturity / sigma2)

    def term(k):
        b = k * math.pi / L
        decay = math.exp(-0.5 * sigma2 * b * b * maturity)
        if mu == 0.0:
            integral = (L / (k * math.pi)) * (1.0 - (-1.0) ** k)
        else:
            integral = b / (a * a + b * b) * (math.exp(a * lower)
                                              - (-1.0) ** k * math.exp(a * upper))
        return (2.0 / L) * math.sin(b * (x0 - lower)) * decay * integral

    total = sum(term(k) for k in range(1, terms + 1))
    return prefactor * total, abs(prefactor * term(terms + 1))
