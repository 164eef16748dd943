"""Per-spectral-value pricing engine.

For a fixed q with Re q > 0 the knock-out value transform splits as
Vt = Vt0 + Vt1: Vt0 solves the barrier-free linear system over histories,
and Vt1 is built as an alternating series of one-barrier corrections.
Each series term solves a half-line problem by a Jacobi fixed point: all
histories are updated from the previous sweep (the per-head operator is
shared, so a sweep is a batch of identical multiplier applications plus
rate-weighted gathers of neighbour values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ContractionFailureError,
    DivergenceError,
    SpectralParameterError,
)
from .grids import DualGrid, Region, SampledFunction, build_grid, indicator_soft
from .histories import HistoryIndex, MemoryChain, encode
from .models import LevyModel
from .epv import apply_epv, apply_multiplier, effective_omega, first_touch_above, first_touch_below, residual_window
from .wiener_hopf import factorize

__all__ = ["RegimeSpec", "BarrierProblem", "ValueField", "IterationStats",
           "QPricer", "solve_v0"]


@dataclass(frozen=True)
class RegimeSpec:
    model: LevyModel
    rate: float     # continuously compounded discount rate r_j
    payoff: float   # terminal payoff constant G_j


@dataclass(frozen=True)
class BarrierProblem:
    regimes: tuple[RegimeSpec, ...]
    chain: MemoryChain
    lower: float
    upper: float
    spot: float
    maturity: float
    initial_history: HistoryIndex

    def __post_init__(self):
        if len(self.regimes) != self.chain.m:
            raise ValueError("regime count must match the chain's m")
        if not self.lower < self.upper:
            raise ValueError("need lower < upper")
        if self.maturity <= 0.0:
            raise ValueError("maturity must be > 0")

    @property
    def rates(self) -> np.ndarray:
        return np.array([r.rate for r in self.regimes])

    @property
    def payoffs(self) -> np.ndarray:
        return np.array([r.payoff for r in self.regimes])


def solve_v0(chain: MemoryChain, rates: np.ndarray, payoffs: np.ndarray, q,
             tol: float = 1e-12) -> np.ndarray:
    """Barrier-free transform values: Q_h(q) v_h = G_{h0} + sum lam v_{shift}.

    Direct sparse solve for small history spaces, Jacobi iteration (the
    system is strictly diagonally dominant for Re q > -min r) beyond.
    """
    size = chain.size
    heads = chain.heads()
    diag = q + chain.lam_total + rates[heads - 1]
    rhs = payoffs[heads - 1].astype(np.complex128)
    if np.any(np.abs(diag) <= chain.lam_total):
        raise SpectralParameterError(
            f"spectral value q={q} too small for the history system"
        )
    if size <= 1000:
        if chain.m == 1:
            return rhs / diag
        rows = np.repeat(np.arange(size), chain.m - 1)
        cols = chain.codes_after_shift.ravel()
        vals = -chain.rates.ravel().astype(np.complex128)
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
        mat = mat + sp.diags(diag.astype(np.complex128))
        sol = spla.spsolve(mat.tocsc(), rhs)
    else:
        sol = rhs / diag
        for _ in range(10_000):
            coupled = np.einsum("ij,ij->i", chain.rates, sol[chain.codes_after_shift])
            new = (rhs + coupled) / diag
            if np.max(np.abs(new - sol)) < tol * max(np.max(np.abs(new)), 1e-300):
                sol = new
                break
            sol = new
        else:
            raise SpectralParameterError("history system Jacobi failed to converge")
    coupled = (np.einsum("ij,ij->i", chain.rates, sol[chain.codes_after_shift])
               if chain.m > 1 else np.zeros(size, dtype=np.complex128))
    residual = np.max(np.abs(diag * sol - rhs - coupled))
    if residual > 1e-10 * max(np.max(np.abs(rhs)), 1e-300):
        raise SpectralParameterError(f"history system residual {residual:.2e}")
    return sol


@dataclass
class IterationStats:
    outer_terms: list[float] = field(default_factory=list)
    inner_sweeps: list[int] = field(default_factory=list)
    contraction_ratios: list[float] = field(default_factory=list)
    monotone_undershoot: float = 0.0
    boundary_residual: float = 0.0

    @property
    def max_inner_sweeps(self) -> int:
        return max(self.inner_sweeps, default=0)

    @property
    def max_ratio(self) -> float:
        return max(self.contraction_ratios, default=0.0)


@dataclass
class ValueField:
    """Vector over histories of sampled transforms at one spectral value."""

    q: complex
    v0: np.ndarray
    functions: SampledFunction     # batch shape (#histories, M)
    stats: IterationStats

    def at(self, x0: float) -> np.ndarray:
        return interpolate_field(self.functions, x0)


def interpolate_field(u: SampledFunction, x0: float) -> np.ndarray:
    """Cubic Lagrange through the four nearest strictly-interior nodes.

    Within two cells of a barrier the stencil becomes one-sided; outside the
    open band the value is the boundary condition, exactly zero.
    """
    grid = u.grid
    if not grid.lower < x0 < grid.upper:
        return np.zeros(u.shape, dtype=np.complex128)
    lo, hi = grid.lower_index + 1, grid.upper_index - 1  # strictly inside
    j = int(np.clip(round((x0 - grid.x_min) / grid.dx) - 1, lo, hi - 3))
    nodes = np.arange(j, j + 4)
    xs = grid.x_min + grid.dx * nodes
    vals = u.full()[..., nodes]
    out = np.zeros(u.shape, dtype=np.complex128)
    for k in range(4):
        w = 1.0
        for m in range(4):
            if m != k:
                w *= (x0 - xs[m]) / (xs[k] - xs[m])
        out = out + w * vals[..., k]
    return out


class QPricer:
    """Assembles Vt(q, .) over all histories for spectral values q."""

    def __init__(self, problem: BarrierProblem, grid: DualGrid | None = None,
                 m_power: int = 14, domain_factor: float = 10.0,
                 tol_inner: float = 1e-10, tol_outer: float = 1e-8,
                 max_outer: int = 200, max_sweeps: int = 500):
        self.problem = problem
        models = [r.model for r in problem.regimes]
        self.grid = grid if grid is not None else build_grid(
            problem.lower, problem.upper, m_power=m_power,
            domain_factor=domain_factor, models=models)
        band = problem.upper - problem.lower
        if (abs(self.grid.lower - problem.lower) > 1e-12 * band
                or abs(self.grid.upper - problem.upper) > 1e-12 * band):
            raise ValueError("grid barriers do not match the problem")
        self.tol_inner = tol_inner
        self.tol_outer = tol_outer
        self.max_outer = max_outer
        self.max_sweeps = max_sweeps
        self._factor_cache: dict = {}

    # -- factorizations, one per regime head, at Q(s; q) -----------------
    def factorizations(self, q):
        key = complex(q)
        if key not in self._factor_cache:
            chain, rates = self.problem.chain, self.problem.rates
            self._factor_cache[key] = [
                factorize(spec.model, q + chain.lambda0 + spec.rate, self.grid)
                for spec in self.problem.regimes
            ]
        return self._factor_cache[key]

    def _groups(self):
        heads = self.problem.chain.heads()
        return [(s, np.nonzero(heads == s)[0]) for s in range(1, self.problem.chain.m + 1)
                if np.any(heads == s)]

    def _scale(self, q) -> float:
        return float(np.max(np.abs(self.problem.payoffs)) / abs(q))

    def _coupling(self, cur: SampledFunction) -> SampledFunction:
        """(Lambda0 - Lambda_h) * cur_h + sum_s lam_{s,h} * cur_{shift(h,s)},
        accumulated in ascending target order for reproducibility."""
        chain = self.problem.chain
        out = cur.scale(chain.lambda0 - chain.lam_total)
        for j in range(chain.m - 1):
            idx = chain.codes_after_shift[:, j]
            w = chain.rates[:, j]
            out = out + cur.select(idx).scale(w)
        return out

    def _inner_iteration(self, side: str, boundary_data: SampledFunction, q,
                         stats: IterationStats) -> SampledFunction:
        """Jacobi sweeps for one series term; both coupling terms use the
        previous sweep's values, the boundary term is fixed."""
        problem, chain, grid = self.problem, self.problem.chain, self.grid
        factors = self.factorizations(q)
        groups = self._groups()
        q_heads = np.array([q + chain.lambda0 + problem.regimes[s - 1].rate
                            for s in range(1, chain.m + 1)], dtype=np.complex128)

        boundary = SampledFunction.zero(grid, (chain.size,))
        for s, idx in groups:
            data = boundary_data.select(idx)
            term = (first_touch_above(factors[s - 1], data) if side == "plus"
                    else first_touch_below(factors[s - 1], data))
            boundary.assign(idx, term)

        cur = SampledFunction.zero(grid, (chain.size,))
        scale = self._scale(q)
        real_path = (complex(q).imag == 0.0
                     and np.all(self.problem.payoffs >= 0.0))
        if real_path:
            # monotonicity is tracked where the assembled answer lives: the
            # open band, away from the sampled-jump ring at the barrier nodes
            x = grid.x
            ring = max(0.1, 30.0 * grid.dx)
            mono_mask = (x > grid.lower + ring) & (x < grid.upper - ring)
            if not np.any(mono_mask):
                mono_mask = (x > grid.lower) & (x < grid.upper)
        prev_diff = None
        rising = 0
        region = Region.BELOW_UPPER if side == "plus" else Region.ABOVE_LOWER
        for sweep in range(1, self.max_sweeps + 1):
            coup = self._coupling(cur)
            new = SampledFunction.zero(grid, (chain.size,))
            for s, idx in groups:
                fac = factors[s - 1]
                sub = coup.select(idx)
                if side == "plus":
                    w = apply_epv(fac, "plus", indicator_soft(
                        apply_epv(fac, "minus", sub), region))
                else:
                    w = apply_epv(fac, "minus", indicator_soft(
                        apply_epv(fac, "plus", sub), region))
                new.assign(idx, w.scale(1.0 / q_heads[s - 1]))
            new = new + boundary
            diff = (new - cur).sup_norm()
            if real_path:
                worst = float(np.min((new - cur).full().real[..., mono_mask]))
                stats.monotone_undershoot = min(stats.monotone_undershoot, worst)
            noise_floor = 1e3 * np.finfo(float).eps * max(new.sup_norm(), 1e-300)
            if prev_diff is not None and diff > noise_floor:
                ratio = diff / prev_diff
                stats.contraction_ratios.append(ratio)
                rising = rising + 1 if ratio >= 1.0 else 0
                if rising >= 3:
                    bound = chain.lambda0 / abs(q + chain.lambda0
                                                + float(np.min(self.problem.rates)))
                    raise ContractionFailureError(
                        f"inner sweeps stopped contracting at q={q} "
                        f"(empirical rate {ratio:.3f}, bound {bound:.3f})",
                        empirical_rate=ratio, bound=bound)
            prev_diff = diff
            cur = new
            if diff <= self.tol_inner * scale:
                break
        stats.inner_sweeps.append(sweep)
        return cur

    def price_field(self, q) -> ValueField:
        problem, chain, grid = self.problem, self.problem.chain, self.grid
        if complex(q).real <= 0 and complex(q).imag == 0:
            raise SpectralParameterError("need Re q > 0 on the real path")
        v0 = solve_v0(chain, problem.rates, problem.payoffs, q)
        stats = IterationStats()

        minus_prev = SampledFunction.step(grid, Region.AT_OR_ABOVE_UPPER, v0)
        plus_prev = SampledFunction.step(grid, Region.AT_OR_BELOW_LOWER, v0)
        total = SampledFunction.constant(grid, v0)
        scale = self._scale(q)
        rising = 0
        prev_norm = None
        for ell in range(1, self.max_outer + 1):
            v_plus = self._inner_iteration("plus", minus_prev, q, stats)
            v_minus = self._inner_iteration("minus", plus_prev, q, stats)
            term = v_plus + v_minus
            norm = term.sup_norm()
            stats.outer_terms.append(norm)
            total = total + term.scale((-1.0) ** ell)
            if norm <= self.tol_outer * scale:
                break
            if prev_norm is not None and norm >= prev_norm:
                rising += 1
                if rising >= 3:
                    raise DivergenceError(
                        f"outer series terms stopped decreasing at q={q}")
            else:
                rising = 0
            prev_norm = norm
            minus_prev, plus_prev = v_minus, v_plus
        else:
            raise DivergenceError(f"outer series needs more than "
                                  f"{self.max_outer} terms at q={q}")

        # knock-out boundary condition: exactly zero outside the open band
        full = total.full()
        idx = np.arange(grid.size)
        outside = (idx <= grid.lower_index) | (idx >= grid.upper_index)
        stats.boundary_residual = float(np.max(np.abs(full[..., outside])))
        full[..., outside] = 0.0
        clipped = SampledFunction.from_samples(grid, full, 0.0, 0.0)
        return ValueField(q=complex(q), v0=v0, functions=clipped, stats=stats)

    def price_at(self, q, x0: float | None = None) -> np.ndarray:
        x0 = self.problem.spot if x0 is None else x0
        if not self.problem.lower < x0 < self.problem.upper:
            return np.zeros(self.problem.chain.size, dtype=np.complex128)
        return self.price_field(q).at(x0)
