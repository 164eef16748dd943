"""Price the shipped two-regime Kou instance and compare against Monte Carlo.

Usage: python scripts/price_example.py [config.json]
"""

import sys
import time
from pathlib import Path

from rsbarrier.cli import run_price
from rsbarrier.config import load_config
from rsbarrier.montecarlo import McConfig, simulate_price

DEFAULT = Path(__file__).resolve().parent.parent / "configs" / "kou_memory.json"


def main() -> int:
    cfg = load_config(sys.argv[1] if len(sys.argv) > 1 else str(DEFAULT))
    t0 = time.perf_counter()
    rows, meta = run_price(cfg)
    print(f"transform price (backend={cfg.inversion.backend}): "
          f"{rows[0]['price']:.6f}  [{time.perf_counter() - t0:.1f}s, "
          f"{meta['outer']} outer terms, {meta['sweeps']} max sweeps]")

    mc_cfg = McConfig(paths=min(cfg.mc.paths, 200_000), dt=max(cfg.mc.dt, 1e-3),
                      seed=cfg.mc.seed, bridge=cfg.mc.bridge)
    t0 = time.perf_counter()
    res = simulate_price(cfg.problem, mc_cfg)
    z = (rows[0]["price"] - res.estimate) / max(res.stderr, 1e-12)
    print(f"Monte Carlo check: {res.estimate:.6f} +- {res.stderr:.6f} "
          f"({mc_cfg.paths} paths, dt={mc_cfg.dt:g}, z={z:+.2f}) "
          f"[{time.perf_counter() - t0:.1f}s]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
