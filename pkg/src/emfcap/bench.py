"""Per-update cost measurement for the budget maintenance routines.

Three timed subjects: the linear from-scratch recompute, the incremental
exact tracker (constant per period on average, linear in the worst case) and
the constant-time conservative tracker. Each update is timed individually
with the ns counter so the tail of the exact tracker (the occasional
re-fold) shows up in the p99 instead of being averaged away.

Workloads:

* ``sparse``: mostly idle periods with occasional bursts; the steady-state
  shape real traffic produces, which keeps the exact tracker on its
  constant-time paths most of the time.
* ``all_above``: every sample clears the floor, so the exact tracker stays on
  its sliding-sum path; this isolates its best-case constant-time behaviour.

The from-scratch recompute costs the same on any workload (it always folds
the whole window), so it is measured on a fixed random window. Its call
count is scaled down as the window grows to keep wall-clock time bounded;
the constant-time trackers use the full requested count.
"""

from __future__ import annotations

from time import perf_counter_ns

import numpy as np

from .budget import BudgetState, ConservativeBudgetState, EmfConfig, budget_scratch

WORKLOAD_SPARSE = "sparse"
WORKLOAD_ALL_ABOVE = "all_above"

_DEFAULT_CFG = {"threshold": 1.0, "guaranteed_ratio": 0.15}


def _make_cfg(w: int) -> EmfConfig:
    return EmfConfig(window_w=w, **_DEFAULT_CFG)


def _workload(kind: str, rng: np.random.Generator, n: int, cfg: EmfConfig) -> np.ndarray:
    if kind == WORKLOAD_SPARSE:
        burst = rng.uniform(0.0, 2.0 * cfg.threshold, size=n)
        return np.where(rng.random(n) < 0.2, burst, 0.0)
    if kind == WORKLOAD_ALL_ABOVE:
        return rng.uniform(cfg.floor, 2.0 * cfg.threshold, size=n)
    raise ValueError(f"unknown workload {kind!r}")


def _percentiles(samples_ns: np.ndarray) -> tuple[float, float]:
    p50, p99 = np.percentile(samples_ns, [50.0, 99.0])
    return float(p50), float(p99)


def _row(algorithm: str, workload: str, w: int, updates: int, times_ns: np.ndarray) -> dict:
    p50, p99 = _percentiles(times_ns)
    return {
        "algorithm": algorithm,
        "workload": workload,
        "window_w": w,
        "updates": updates,
        "p50_ns": p50,
        "p99_ns": p99,
    }


def scratch_call_count(w: int, updates: int) -> int:
    """Calls for the linear recompute: bounded total work, at least 200 samples."""
    return max(200, min(int(updates), 2_000_000 // max(w, 1)))


def bench_scratch(w: int, updates: int = 100_000, seed: int = 0) -> dict:
    """Time the full recompute over a fixed random window of ``w - 1`` samples."""
    cfg = _make_cfg(w)
    rng = np.random.default_rng([seed, w, 1])
    window = rng.uniform(0.0, cfg.threshold, size=w - 1).tolist()
    n = scratch_call_count(w, updates)
    times = np.empty(n, dtype=np.float64)
    for i in range(n):
        t0 = perf_counter_ns()
        budget_scratch(window, cfg)
        times[i] = perf_counter_ns() - t0
    return _row("scratch", "uniform_window", w, n, times)


def bench_exact_update(
    w: int, updates: int = 100_000, workload: str = WORKLOAD_SPARSE, seed: int = 0
) -> dict:
    cfg = _make_cfg(w)
    rng = np.random.default_rng([seed, w, 2])
    warm = min(2 * w, updates)
    samples = _workload(workload, rng, updates + warm, cfg).tolist()
    state = BudgetState(cfg)
    for c in samples[:warm]:
        state.update(c)
    times = np.empty(updates, dtype=np.float64)
    update = state.update
    for i, c in enumerate(samples[warm:]):
        t0 = perf_counter_ns()
        update(c)
        times[i] = perf_counter_ns() - t0
    return _row("exact_update", workload, w, updates, times)


def bench_conservative_update(w: int, updates: int = 100_000, seed: int = 0) -> dict:
    cfg = _make_cfg(w)
    rng = np.random.default_rng([seed, w, 3])
    warm = min(1000, updates)
    samples = _workload(WORKLOAD_SPARSE, rng, updates + warm, cfg).tolist()
    state = ConservativeBudgetState(cfg)
    for c in samples[:warm]:
        state.update(c)
    times = np.empty(updates, dtype=np.float64)
    update = state.update
    for i, c in enumerate(samples[warm:]):
        t0 = perf_counter_ns()
        update(c)
        times[i] = perf_counter_ns() - t0
    return _row("conservative_update", WORKLOAD_SPARSE, w, updates, times)


def bench_suite(w_grid, updates: int = 100_000, seed: int = 0) -> list[dict]:
    """All subjects across a window grid; one dict per (algorithm, workload, W)."""
    w_grid = [int(w) for w in w_grid]
    if not w_grid:
        raise ValueError("w_grid must be nonempty")
    rows = []
    for w in w_grid:
        rows.append(bench_scratch(w, updates, seed))
        rows.append(bench_exact_update(w, updates, WORKLOAD_SPARSE, seed))
        rows.append(bench_exact_update(w, updates, WORKLOAD_ALL_ABOVE, seed))
        rows.append(bench_conservative_update(w, updates, seed))
    return rows
