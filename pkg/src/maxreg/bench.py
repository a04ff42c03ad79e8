"""Timing harness for the O(N^2) direct versus O(N) recursive evaluations.

Both methods consume the same precomputed stack of per-cell propagators, so
the timings isolate the kernel applications themselves; the shared setup is
excluded.  Before any timing, the two methods are required to agree to
1e-10 in the unweighted grid norm; a disagreement aborts the benchmark.
"""

from __future__ import annotations

import time

import numpy as np

from .grids import GridFunction, TimeGrid, weighted_norm
from .operators import SectorialOperator
from .regularity import cell_propagators, mminus_direct, mminus_fast, mplus_direct, mplus_fast

__all__ = ["BenchmarkGateError", "benchmark_pair"]


class BenchmarkGateError(RuntimeError):
    """Raised when fast and direct evaluations disagree beyond the gate."""


def _time_best(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(max(1, repeats)):
        tic = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - tic)
    return best


def benchmark_pair(
    A: SectorialOperator,
    grid: TimeGrid,
    seed: int = 0,
    repeats: int = 3,
    rel_gate: float = 1e-10,
):
    """Time all four evaluations on one random source.

    Returns ``(records, speedups, agreement)`` where records is a list of
    ``{"method", "N", "d", "seconds"}`` dicts, speedups maps ``"mplus"`` /
    ``"mminus"`` to direct/fast time ratios, and agreement maps them to the
    measured relative differences.

    Raises
    ------
    BenchmarkGateError
        If either pair disagrees by more than `rel_gate` relative.
    """
    rng = np.random.default_rng(seed)
    f = GridFunction(
        grid,
        rng.standard_normal((grid.n_nodes, A.dim))
        + 1j * rng.standard_normal((grid.n_nodes, A.dim)),
    )
    props = cell_propagators(A, grid)

    # Correctness gate (doubles as JIT warmup so timings exclude compilation).
    agreement = {}
    for label, fast_fn, direct_fn in (
        ("mplus", mplus_fast, mplus_direct),
        ("mminus", mminus_fast, mminus_direct),
    ):
        vf = fast_fn(A, f, props).values
        vd = direct_fn(A, f, props).values
        ref = weighted_norm(vd, 0.0)
        rel = weighted_norm(vf - vd, 0.0) / max(ref, 1e-300)
        agreement[label] = rel
        if not rel <= rel_gate:
            raise BenchmarkGateError(
                f"{label}: fast/direct relative difference {rel:.3e} exceeds "
                f"gate {rel_gate:.1e}"
            )

    records = []
    speedups = {}
    for label, fast_fn, direct_fn in (
        ("mplus", mplus_fast, mplus_direct),
        ("mminus", mminus_fast, mminus_direct),
    ):
        t_fast = _time_best(lambda: fast_fn(A, f, props), repeats)
        t_direct = _time_best(lambda: direct_fn(A, f, props), repeats)
        for method, seconds in ((f"{label}_fast", t_fast), (f"{label}_direct", t_direct)):
            records.append(
                {"method": method, "N": grid.n_nodes, "d": A.dim, "seconds": seconds}
            )
        speedups[label] = t_direct / t_fast
    return records, speedups, agreement
