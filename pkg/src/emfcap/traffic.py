"""Sparse Zipf demand with a buffered backlog of unserved demand.

Each period draws two uniforms from a PCG64 stream (one for the load coin,
one for the Zipf level), so a demand sequence depends only on the pair
``(seed, replication)`` and never on the policy being simulated; paired
experiments across policies or parameter grids share identical demand by
construction. Unserved demand carries over to the next period; nothing is
ever dropped.

Demand is expressed directly in EIRP-consumption units through
``demand_scale`` (serving one unit of demand in a period consumes one
EIRP-unit).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class TrafficConfig:
    load: float = 0.2
    zipf_exponent: float = 2.0
    zipf_support: int = 20
    demand_scale: float = 0.25
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "load", float(self.load))
        object.__setattr__(self, "zipf_exponent", float(self.zipf_exponent))
        object.__setattr__(self, "zipf_support", int(self.zipf_support))
        object.__setattr__(self, "demand_scale", float(self.demand_scale))
        object.__setattr__(self, "seed", int(self.seed))
        if not 0.0 <= self.load <= 1.0:
            raise ValueError("load must lie in [0, 1]")
        if not self.zipf_exponent > 1.0:
            raise ValueError("zipf_exponent must exceed 1")
        if self.zipf_support < 1:
            raise ValueError("zipf_support must be >= 1")
        if not self.demand_scale > 0.0:
            raise ValueError("demand_scale must be positive")
        if not 0 <= self.seed <= _MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")


class TrafficModel:
    """Demand source plus backlog bookkeeping for one simulated run."""

    def __init__(self, cfg: TrafficConfig, seed: int | None = None, replication: int = 0):
        if replication < 0:
            raise ValueError("replication index must be nonnegative")
        base = cfg.seed if seed is None else int(seed)
        if not 0 <= base <= _MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.cfg = cfg
        self.backlog = 0.0
        # one independent, platform-portable stream per (seed, replication)
        self._rng = np.random.default_rng([base, int(replication)])
        levels = np.arange(1, cfg.zipf_support + 1, dtype=np.float64)
        pmf = levels ** (-cfg.zipf_exponent)
        cdf = np.cumsum(pmf)
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        self._cdf = cdf

    def sample_demands(self, n: int) -> np.ndarray:
        """Demand for the next ``n`` periods; always consumes exactly ``2n`` draws."""
        u = self._rng.random((n, 2))
        levels = np.searchsorted(self._cdf, u[:, 1], side="right") + 1
        return np.where(u[:, 0] < self.cfg.load, self.cfg.demand_scale * levels, 0.0)

    def sample_demand(self) -> float:
        """Demand for a single period."""
        return float(self.sample_demands(1)[0])

    def consume(self, demand: float, gamma: float) -> float:
        """Serve backlog plus new demand up to ``gamma``; the shortfall stays buffered."""
        if demand < 0.0:
            raise ValueError("demand must be nonnegative")
        if gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        requested = self.backlog + demand
        served = requested if requested <= gamma else gamma
        self.backlog = requested - served
        return served
