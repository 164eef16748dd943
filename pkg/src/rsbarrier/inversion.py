"""Numerical Laplace inversion back ends.

Two routes recover f(tau) from F(q):

* GWR: the Gaver ladder on real nodes q_k = k*ln2/tau, accelerated by the
  Wynn rho table.  Default in double precision with n_gaver = 8; software
  floats (mpmath) behind a flag for deeper tables.
* Sinh-Bromwich: trapezoid rule on the conformally deformed contour
  q(y) = sigma0 + i*b*sinh(y + i*omega), which wraps into the left
  half-plane along rays of angle +-(pi/2 + omega).  Requires F analytic in
  the sector sigma0 + {|arg z| < gamma} with gamma > pi/2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PlanError

__all__ = [
    "gwr_nodes",
    "gwr_invert",
    "GwrResult",
    "SinhPlan",
    "sinh_plan",
    "sinh_nodes",
    "sinh_invert",
    "SinhResult",
    "InversionPlan",
]

LN2 = math.log(2.0)
_RHO_BREAKDOWN = 1e-30


def gwr_nodes(tau: float, n_gaver: int) -> np.ndarray:
    """Gaver ladder nodes q_k = k*ln2/tau, k = 1..2*n_gaver."""
    if tau <= 0.0:
        raise PlanError("tau must be > 0")
    if n_gaver < 1 or n_gaver % 2 != 0:
        raise PlanError("n_gaver must be a positive even count")
    return np.arange(1, 2 * n_gaver + 1, dtype=float) * (LN2 / tau)


def _check_n_gaver(n_gaver: int) -> None:
    if n_gaver % 2 != 0 or not 4 <= n_gaver <= 16:
        raise PlanError("n_gaver must be even and lie in [4, 16]")


@dataclass
class GwrResult:
    value: float
    gaver: list[float]
    rho_diagonal: list[float]
    stability: float
    breakdown: bool


def _gaver_ladder(samples, a, n_gaver, one):
    # Level-0 entries i*a*F(i*a); each level j combines neighbours with
    # weights (1 + i/j, -i/j); the j-th Gaver value is the level-j leading entry.
    cur = [(i + 1) * one * a * samples[i] for i in range(2 * n_gaver)]
    lo = 1
    seq = []
    for j in range(1, n_gaver + 1):
        nxt = []
        for i_abs in range(j, 2 * n_gaver - j + 1):
            x = cur[i_abs - lo]
            y = cur[i_abs - lo + 1]
            nxt.append((one + one * i_abs / j) * x - (one * i_abs / j) * y)
        cur, lo = nxt, j
        seq.append(cur[0])
    return seq


def _wynn_rho(seq, zero):
    """Even-level rho extrapolants; returns (diag, breakdown_flag).

    The k-th level of the table is built from levels k-1 and k-2; odd levels
    are auxiliary reciprocal differences.  The most converged entry of each
    even level is its last one (it consumes the tail of the sequence), so
    those are collected, ending with the deepest usable extrapolant.
    """
    n = len(seq)
    two_back = [zero] * (n + 1)
    one_back = list(seq)
    diag = [seq[-1]]
    breakdown = False
    for k in range(1, n):
        new = []
        for i in range(len(one_back) - 1):
            den = one_back[i + 1] - one_back[i]
            if abs(den) < _RHO_BREAKDOWN:
                breakdown = True
                break
            new.append(two_back[i + 1] + k / den)
        if breakdown:
            break
        two_back, one_back = one_back, new
        if k % 2 == 0:
            diag.append(one_back[-1])
    return diag, breakdown


def gwr_invert(samples, tau: float, n_gaver: int, extended_precision: bool = False) -> GwrResult:
    """Invert from samples F(k*ln2/tau), k = 1..2*n_gaver.

    Returns the top of the even rho diagonal, the raw Gaver sequence, and a
    stability indicator (spread of the last three diagonal entries).  A
    near-zero denominator in the rho recursion marks ``breakdown`` and the
    result falls back to the last stable diagonal entry.
    """
    _check_n_gaver(n_gaver)
    samples = list(samples)
    if len(samples) != 2 * n_gaver:
        raise PlanError(f"need {2 * n_gaver} samples, got {len(samples)}")
    # c/q transforms make every level-0 entry equal to c; short-circuit so the
    # constant is reproduced exactly instead of feeding zeros to the rho table
    a = LN2 / tau
    level0 = [float((i + 1) * a) * float(samples[i]) for i in range(2 * n_gaver)]
    scale = max(abs(g) for g in level0)
    if max(level0) - min(level0) <= 32 * np.finfo(float).eps * max(scale, 1.0):
        return GwrResult(value=level0[0], gaver=level0[:n_gaver],
                         rho_diagonal=[level0[0]], stability=0.0, breakdown=False)
    if extended_precision:
        import mpmath

        dps = max(int(math.ceil(2.2 * n_gaver)) + 5, 30)
        with mpmath.workdps(dps):
            mpf_samples = [s if isinstance(s, mpmath.mpf) else mpmath.mpf(float(s))
                           for s in samples]
            a_mp = mpmath.log(2) / mpmath.mpf(tau)
            seq = _gaver_ladder(mpf_samples, a_mp, n_gaver, mpmath.mpf(1))
            diag, breakdown = _wynn_rho(seq, mpmath.mpf(0))
            gaver = [float(g) for g in seq]
            diag = [float(d) for d in diag]
    else:
        seq = _gaver_ladder([float(s) for s in samples], LN2 / tau, n_gaver, 1.0)
        gaver = [float(g) for g in seq]
        diag, breakdown = _wynn_rho(gaver, 0.0)
    tail = diag[-3:]
    stability = max(tail) - min(tail) if len(tail) > 1 else 0.0
    return GwrResult(value=diag[-1], gaver=gaver, rho_diagonal=diag,
                     stability=float(stability), breakdown=breakdown)


@dataclass(frozen=True)
class SinhPlan:
    """Deformed-contour quadrature plan: q(y) = sigma0 + i*b*sinh(y + i*omega)."""

    sigma0: float
    gamma: float
    omega: float
    b: float
    step: float
    n_nodes: int
    use_conjugate_symmetry: bool = True

    def __post_init__(self):
        if not math.pi / 2 < self.gamma < math.pi:
            raise PlanError("gamma must lie in (pi/2, pi)")
        if self.sigma0 <= 0.0:
            raise PlanError("sigma0 must be > 0")
        if not 0.0 < self.omega < self.gamma - math.pi / 2:
            raise PlanError("omega must lie in (0, gamma - pi/2)")
        if self.n_nodes < 5:
            raise PlanError("need at least 5 nodes")
        if self.b * math.sin(self.omega) >= self.sigma0:
            raise PlanError(
                "contour apex sigma0 - b*sin(omega) left of the origin; "
                "the contour would exit the sector"
            )
        # per-node sector membership (sector vertex at the origin); the
        # asymptotic ray angle pi/2 + omega < gamma guarantees the tails.
        for q in sinh_nodes(self)[0]:
            if abs(cmath.phase(complex(q))) > self.gamma - 1e-12:
                raise PlanError("node outside the sector Sigma_gamma + sigma0")


def sinh_plan(tau: float, n_nodes: int = 64, sigma0: float | None = None,
              gamma: float = 0.75 * math.pi, target_tol: float = 1e-10,
              apex_fraction: float | None = None) -> SinhPlan:
    """Balance truncation, discretization and roundoff for the target tolerance.

    The tilt omega sits mid-margin; shifting the contour up by v keeps it
    clear of singularities on the negative real axis only while
    sin(omega+v) <= sin(omega)/apex_fraction, so the balanced apex fraction
    is 1/(2 cos omega), giving a y-strip of half-width d = omega on both
    sides.  The step follows from equating exp(-2*pi*d/step) with the
    target; the scale b is capped so the contour apex
    sigma0*(1 - apex_fraction) stays right of the origin, which forces
    sigma0 up when the node budget is generous.  exp(sigma0*tau) amplifies
    roundoff, so the requested depth is relaxed until all three error
    sources fit.
    """
    if tau <= 0.0:
        raise PlanError("tau must be > 0")
    margin = gamma - math.pi / 2
    omega = 0.5 * margin
    d_strip = 0.5 * margin
    if apex_fraction is None:
        apex_fraction = 0.95 / (2.0 * math.cos(omega))
    round_cap = math.log(max(target_tol / 3.0, 3e-15) / 2.3e-16)
    depth = -math.log(target_tol) + 2.0
    floor_depth = 3.0
    s0 = step = None
    for _ in range(600):
        # self-consistent sigma0: discretization pays an exp(sigma0*tau)
        # boundary surcharge, truncation needs af*s0*cosh(y_max) deep enough
        s0 = sigma0 if sigma0 is not None else max(0.5, 2.0 / tau)
        converged = False
        for _ in range(80):
            step = 2.0 * math.pi * d_strip / (depth + s0 * tau)
            ch = math.cosh(0.5 * step * (n_nodes - 1))
            if apex_fraction * ch <= 1.1:
                break
            s0_need = (depth / tau) / (apex_fraction * ch - 1.0)
            s0_new = sigma0 if sigma0 is not None else max(0.5, 2.0 / tau, s0_need)
            if s0_new > round_cap / tau and sigma0 is None:
                break  # runaway: this depth is unaffordable
            if abs(s0_new - s0) <= 1e-10 * (1.0 + s0):
                s0 = s0_new
                converged = s0_new >= s0_need - 1e-9
                break
            s0 = s0_new
        if converged or depth <= floor_depth:
            break
        depth = max(depth * 0.97, floor_depth)
    b = apex_fraction * s0 / math.sin(omega)
    return SinhPlan(sigma0=s0, gamma=gamma, omega=omega, b=b,
                    step=step, n_nodes=n_nodes)


def sinh_nodes(plan: SinhPlan) -> tuple[np.ndarray, np.ndarray]:
    """Contour nodes q_k and quadrature weights for f(tau) = Re sum w_k e^{q_k tau} F(q_k)."""
    k = np.arange(plan.n_nodes)
    y = (k - (plan.n_nodes - 1) / 2.0) * plan.step
    arg = y + 1j * plan.omega
    q = plan.sigma0 + 1j * plan.b * np.sinh(arg)
    w = plan.step * plan.b * np.cosh(arg) / (2.0 * math.pi)
    return q, w


@dataclass
class SinhResult:
    value: float
    error_estimate: float
    min_re_q: float
    n_evaluations: int


def sinh_invert(evaluator, tau: float, plan: SinhPlan) -> SinhResult:
    """Trapezoid sum over the deformed contour.

    ``evaluator`` maps complex q to F(q) and must be analytic in the plan's
    sector.  With ``use_conjugate_symmetry`` only the upper half of the
    (conjugate-symmetric) node set is evaluated.
    """
    if tau <= 0.0:
        raise PlanError("tau must be > 0")
    q, w = sinh_nodes(plan)
    n = plan.n_nodes
    terms = np.empty(n, dtype=np.complex128)
    if plan.use_conjugate_symmetry:
        half = (n + 1) // 2
        for i in range(half, n):
            terms[i] = w[i] * np.exp(q[i] * tau) * evaluator(q[i])
        for i in range(0, half):
            terms[i] = np.conj(terms[n - 1 - i])
        n_eval = n - half
    else:
        for i in range(n):
            terms[i] = w[i] * np.exp(q[i] * tau) * evaluator(q[i])
        n_eval = n
    total = 0.0 + 0.0j
    for t in terms:  # fixed summation order for bit reproducibility
        total += t
    tail = max(abs(terms[0]), abs(terms[-1]))
    return SinhResult(value=float(total.real), error_estimate=float(tail),
                      min_re_q=float(q.real.min()), n_evaluations=n_eval)


@dataclass(frozen=True)
class InversionPlan:
    """Back-end selection plus its parameters."""

    backend: str = "gwr"  # "gwr" | "sinh"
    n_gaver: int = 8
    extended_precision: bool = False
    sinh_nodes: int = 64
    sinh_sigma0: float | None = None
    sinh_gamma: float = 0.75 * math.pi
    sinh_target_tol: float = 1e-10

    def __post_init__(self):
        if self.backend not in ("gwr", "sinh"):
            raise PlanError(f"unknown inversion backend {self.backend!r}")
        if self.backend == "gwr":
            _check_n_gaver(self.n_gaver)

    def nodes(self, tau: float) -> np.ndarray:
        if self.backend == "gwr":
            return gwr_nodes(tau, self.n_gaver)
        q, _ = sinh_nodes(self.materialize(tau))
        return q

    def materialize(self, tau: float) -> SinhPlan:
        return sinh_plan(tau, n_nodes=self.sinh_nodes, sigma0=self.sinh_sigma0,
                         gamma=self.sinh_gamma, target_tol=self.sinh_target_tol)

    def invert(self, evaluator, tau: float) -> float:
        """Run the configured back end on a q -> F(q) evaluator (memoized)."""
        cache: dict[complex, complex] = {}

        def cached(q):
            key = complex(q)
            if key not in cache:
                cache[key] = evaluator(q)
            return cache[key]

        if self.backend == "gwr":
            samples = [cached(q).real if isinstance(cached(q), complex) else float(cached(q))
                       for q in gwr_nodes(tau, self.n_gaver)]
            return gwr_invert(samples, tau, self.n_gaver, self.extended_precision).value
        return sinh_invert(cached, tau, self.materialize(tau)).value
