"""Problem configuration: JSON schema, validation, round-trip serialization.

Model objects use the exact wire names "type", "mu", "sigma2", "lambdaJ",
"p", "alphaPlus", "alphaMinus", "nu", "c", "lambdaPlus", "lambdaMinus".
Chain rates come either as a dense array keyed by canonical history code or
as a rule table with a default; the loader materializes the dense table.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .engine import BarrierProblem, RegimeSpec
from .histories import HistoryIndex, MemoryChain, space_size
from .inversion import InversionPlan
from .models import BrownianDrift, KoBoL, KouJumpDiffusion, LevyModel
from .montecarlo import McConfig

__all__ = ["GridConfig", "Tolerances", "ProblemConfig", "load_config",
           "parse_config", "config_to_dict", "DEFAULTS"]

THREADS_ENV = "RSBARRIER_THREADS"

DEFAULTS = {
    "grid.m_power": 14,
    "grid.domain_factor": 10.0,
    "grid.damping_scale": 0.25,
    "grid.damping_cap": 1.0,
    "grid.decay_tol": 1e-6,
    "tolerances.inner": 1e-10,
    "tolerances.outer": 1e-8,
    "tolerances.max_outer": 200,
    "tolerances.max_sweeps": 500,
    "inversion.backend": "gwr",
    "inversion.n_gaver": 8,
    "inversion.extended_precision": False,
    "inversion.sinh_nodes": 64,
    "inversion.sinh_gamma": 0.75 * math.pi,
    "inversion.sinh_target_tol": 1e-10,
    "mc.paths": 100_000,
    "mc.dt": 1e-3,
    "mc.bridge": True,
    "mc.antithetic": False,
    "seed": 20260809,
}


@dataclass(frozen=True)
class GridConfig:
    m_power: int = DEFAULTS["grid.m_power"]
    domain_factor: float = DEFAULTS["grid.domain_factor"]
    damping_scale: float = DEFAULTS["grid.damping_scale"]
    damping_cap: float = DEFAULTS["grid.damping_cap"]
    decay_tol: float = DEFAULTS["grid.decay_tol"]


@dataclass(frozen=True)
class Tolerances:
    inner: float = DEFAULTS["tolerances.inner"]
    outer: float = DEFAULTS["tolerances.outer"]
    max_outer: int = DEFAULTS["tolerances.max_outer"]
    max_sweeps: int = DEFAULTS["tolerances.max_sweeps"]

    def __post_init__(self):
        if self.inner <= 0 or self.outer <= 0:
            raise ConfigError("tolerances must be > 0")


@dataclass
class ProblemConfig:
    problem: BarrierProblem
    grid: GridConfig
    tolerances: Tolerances
    inversion: InversionPlan
    mc: McConfig
    threads: int | None
    seed: int
    raw: dict = field(repr=False, default_factory=dict)

    def resolve_threads(self) -> int:
        if self.threads is not None:
            return self.threads
        env = os.environ.get(THREADS_ENV)
        if env:
            return max(int(env), 1)
        return os.cpu_count() or 1


def _model_from_dict(d: dict) -> LevyModel:
    kind = d.get("type")
    try:
        if kind == "BrownianDrift":
            return BrownianDrift(mu=float(d["mu"]), sigma2=float(d["sigma2"]))
        if kind == "KouJumpDiffusion":
            return KouJumpDiffusion(mu=float(d["mu"]), sigma2=float(d["sigma2"]),
                                    lambda_j=float(d["lambdaJ"]), p=float(d["p"]),
                                    alpha_plus=float(d["alphaPlus"]),
                                    alpha_minus=float(d["alphaMinus"]))
        if kind == "KoBoL":
            return KoBoL(nu=float(d["nu"]), c=float(d["c"]),
                         lambda_plus=float(d["lambdaPlus"]),
                         lambda_minus=float(d["lambdaMinus"]), mu=float(d["mu"]))
    except KeyError as exc:
        raise ConfigError(f"model field missing: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc
    raise ConfigError(f"unknown model type {kind!r}")


def _model_to_dict(model: LevyModel) -> dict:
    if isinstance(model, BrownianDrift):
        return {"type": "BrownianDrift", "mu": model.mu, "sigma2": model.sigma2}
    if isinstance(model, KouJumpDiffusion):
        return {"type": "KouJumpDiffusion", "mu": model.mu, "sigma2": model.sigma2,
                "lambdaJ": model.lambda_j, "p": model.p,
                "alphaPlus": model.alpha_plus, "alphaMinus": model.alpha_minus}
    return {"type": "KoBoL", "nu": model.nu, "c": model.c,
            "lambdaPlus": model.lambda_plus, "lambdaMinus": model.lambda_minus,
            "mu": model.mu}


def _chain_from_dict(d: dict) -> MemoryChain:
    try:
        m = int(d["m"])
        n_mem = int(d["N"])
        rates = d["rates"]
    except KeyError as exc:
        raise ConfigError(f"chain field missing: {exc}") from exc
    lambda0 = d.get("lambda0")
    try:
        if isinstance(rates, dict) and "dense" in rates:
            table = np.asarray(rates["dense"], dtype=float)
            return MemoryChain(m, n_mem, table, lambda0)
        if isinstance(rates, dict):
            return MemoryChain.from_rules(m, n_mem, float(rates.get("default", 0.0)),
                                          rates.get("rules", []), lambda0)
        if isinstance(rates, (int, float)):
            return MemoryChain.from_constant(m, n_mem, float(rates), lambda0)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid chain rates: {exc}") from exc
    raise ConfigError("chain rates must be a number, a dense table, or a rule table")


def _chain_to_dict(chain: MemoryChain) -> dict:
    out = {"m": chain.m, "N": chain.n_memory,
           "rates": {"dense": chain.rates.tolist()}}
    if chain.lambda0_override is not None:
        out["lambda0"] = chain.lambda0_override
    return out


def parse_config(doc: dict) -> ProblemConfig:
    try:
        regimes = tuple(
            RegimeSpec(model=_model_from_dict(r["model"]),
                       rate=float(r["r"]), payoff=float(r["G"]))
            for r in doc["regimes"]
        )
        chain = _chain_from_dict(doc["chain"])
        barriers = doc["barriers"]
        lower, upper = float(barriers["lower"]), float(barriers["upper"])
        x0 = float(doc["x0"])
        maturity = float(doc["maturity"])
        init = tuple(int(v) for v in doc["initialHistory"])
    except KeyError as exc:
        raise ConfigError(f"config field missing: {exc}") from exc
    if len(regimes) != chain.m:
        raise ConfigError(
            f"{len(regimes)} regimes but chain has m={chain.m}")
    if len(init) != chain.n_memory + 1:
        raise ConfigError(
            f"initial history must list N+1={chain.n_memory + 1} states")
    try:
        history = HistoryIndex(init)
        problem = BarrierProblem(regimes=regimes, chain=chain, lower=lower,
                                 upper=upper, spot=x0, maturity=maturity,
                                 initial_history=history)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    g = doc.get("grid", {})
    grid = GridConfig(
        m_power=int(g.get("mPower", DEFAULTS["grid.m_power"])),
        domain_factor=float(g.get("domainFactor", DEFAULTS["grid.domain_factor"])),
        damping_scale=float(g.get("dampingScale", DEFAULTS["grid.damping_scale"])),
        damping_cap=float(g.get("dampingCap", DEFAULTS["grid.damping_cap"])),
        decay_tol=float(g.get("decayTol", DEFAULTS["grid.decay_tol"])),
    )
    t = doc.get("tolerances", {})
    tol = Tolerances(
        inner=float(t.get("inner", DEFAULTS["tolerances.inner"])),
        outer=float(t.get("outer", DEFAULTS["tolerances.outer"])),
        max_outer=int(t.get("maxOuter", DEFAULTS["tolerances.max_outer"])),
        max_sweeps=int(t.get("maxSweeps", DEFAULTS["tolerances.max_sweeps"])),
    )
    inv = doc.get("inversion", {})
    try:
        plan = InversionPlan(
            backend=inv.get("backend", DEFAULTS["inversion.backend"]),
            n_gaver=int(inv.get("nGaver", DEFAULTS["inversion.n_gaver"])),
            extended_precision=bool(inv.get("extendedPrecision",
                                            DEFAULTS["inversion.extended_precision"])),
            sinh_nodes=int(inv.get("sinhNodes", DEFAULTS["inversion.sinh_nodes"])),
            sinh_sigma0=inv.get("sinhSigma0"),
            sinh_gamma=float(inv.get("sinhGamma", DEFAULTS["inversion.sinh_gamma"])),
            sinh_target_tol=float(inv.get("sinhTargetTol",
                                          DEFAULTS["inversion.sinh_target_tol"])),
        )
    except Exception as exc:
        raise ConfigError(f"invalid inversion plan: {exc}") from exc
    mc_doc = doc.get("mc", {})
    mc = McConfig(
        paths=int(mc_doc.get("paths", DEFAULTS["mc.paths"])),
        dt=float(mc_doc.get("dt", DEFAULTS["mc.dt"])),
        seed=int(doc.get("seed", DEFAULTS["seed"])),
        bridge=bool(mc_doc.get("bridge", DEFAULTS["mc.bridge"])),
        antithetic=bool(mc_doc.get("antithetic", DEFAULTS["mc.antithetic"])),
    )
    threads = doc.get("threads")
    return ProblemConfig(problem=problem, grid=grid, tolerances=tol,
                         inversion=plan, mc=mc,
                         threads=None if threads is None else int(threads),
                         seed=int(doc.get("seed", DEFAULTS["seed"])), raw=doc)


def config_to_dict(cfg: ProblemConfig) -> dict:
    p = cfg.problem
    return {
        "regimes": [{"model": _model_to_dict(r.model), "r": r.rate, "G": r.payoff}
                    for r in p.regimes],
        "chain": _chain_to_dict(p.chain),
        "barriers": {"lower": p.lower, "upper": p.upper},
        "x0": p.spot,
        "maturity": p.maturity,
        "initialHistory": list(p.initial_history.labels),
        "grid": {"mPower": cfg.grid.m_power, "domainFactor": cfg.grid.domain_factor,
                 "dampingScale": cfg.grid.damping_scale,
                 "dampingCap": cfg.grid.damping_cap, "decayTol": cfg.grid.decay_tol},
        "tolerances": {"inner": cfg.tolerances.inner, "outer": cfg.tolerances.outer,
                       "maxOuter": cfg.tolerances.max_outer,
                       "maxSweeps": cfg.tolerances.max_sweeps},
        "inversion": {"backend": cfg.inversion.backend,
                      "nGaver": cfg.inversion.n_gaver,
                      "extendedPrecision": cfg.inversion.extended_precision,
                      "sinhNodes": cfg.inversion.sinh_nodes,
                      "sinhSigma0": cfg.inversion.sinh_sigma0,
                      "sinhGamma": cfg.inversion.sinh_gamma,
                      "sinhTargetTol": cfg.inversion.sinh_target_tol},
        "mc": {"paths": cfg.mc.paths, "dt": cfg.mc.dt, "bridge": cfg.mc.bridge,
               "antithetic": cfg.mc.antithetic},
        "threads": cfg.threads,
        "seed": cfg.seed,
    }


def load_config(path: str) -> ProblemConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(doc)
