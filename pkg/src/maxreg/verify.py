"""Numerical certification of the evolution, balayage and endpoint identities.

Every check compares two independently computed sides of one identity on a
grid and emits a :class:`VerificationReport` with the norms, the absolute and
relative error, and a pass flag against a configured tolerance.  Failures are
data, not exceptions.

Identity labels used in reports (N ranges over positive integers, f0 over H):

========== ==================================================================
label      certified statement
========== ==================================================================
E2.4       forward op of ``(sA)^N e^{-sA} f0``  =  ``(tA)^{N+1} e^{-tA} f0 / (N+1)``,
           in the ``t^-1 dt`` norm and pointwise
E2.5       backward op of ``A e^{-NsA} f0``  =  ``A e^{-NtA} f0 / (N+1)``,
           in the ``t dt`` norm and pointwise
E2.6       sweep of the forward image against ``A e^{-NtA}``  =  1/(N+1) of
           the sweep of the source
E2.7       sweep of the backward image against ``(tA)^N e^{-tA}``  =  1/(N+1)
           of the source swept against ``(sA)^{N+1} e^{-sA}``
E2.8       sweep of the forward image against ``e^{-NtA}``  =  1/(N+1) of the
           sweep of the source (requires the improper first-order integral of
           the source to converge)
E2.9       sweep of the backward image against ``t^{N-1} A^N e^{-tA}``  =  1/N
           of the source swept against ``s^N A^{N+1} e^{-sA}`` (requires the
           plain first-order sweep of the source to vanish)
trace      dyadic averages of the backward image near t = 0 converge to the
           plain first-order sweep of the source
desimon    maximal regularity norms on the unweighted L2 space (oracle value
           1 for self-adjoint operators)
Q_A/Q_Astar  best quadratic-estimate constants for A and its conjugate
R3.3plus/minus  weighted-norm boundedness and refinement stability
R3.4/R3.5  endpoint reductions: subtracting the rank-one semigroup mode with
           swept coefficient makes the endpoint-weighted norm grid-stable
========== ==================================================================
"""

from __future__ import annotations

import csv
import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .balayage import sweep, weak_convergence_check, zero_balayage_input
from .grids import (
    GridFunction,
    TimeGrid,
    extend_down,
    refine,
    sample_profile,
    sample_symbol,
    weighted_norm,
)
from .operators import SectorialOperator
from .regularity import (
    cell_propagators,
    mminus_fast,
    mplus_fast,
    operator_norm_estimate,
)
from .squarefn import quadratic_constant

__all__ = [
    "DEFAULT_TOLERANCES",
    "STANDARD_IDENTITIES",
    "VerificationReport",
    "check_evolution_plus",
    "check_evolution_minus",
    "check_balayage_plus",
    "check_balayage_minus",
    "check_endpoint_plus",
    "check_endpoint_minus",
    "check_reduction_plus",
    "check_reduction_minus",
    "check_trace",
    "check_desimon",
    "check_weighted_desimon",
    "check_quadratic",
    "check_constant_source_exact",
    "prefactor_audit",
    "max_pointwise_rel_error",
    "run_standard_suite",
    "write_reports_jsonl",
    "write_summary_csv",
]

DEFAULT_TOLERANCES = {
    "identity": 1e-3,  # relative error of the six identity checks
    "certificate": 1e-6,  # hypothesis certificates (vanishing sweep)
    "trace": 1e-3,
    "stability": 0.10,  # corrected-norm grid stability for the reductions
    "norm_stability": 0.05,  # weighted norm estimates under refinement
    "quadratic_selfadjoint": 1e-3,
    "desimon_selfadjoint_upper": 1.01,
}

STANDARD_IDENTITIES = (
    "E2.4",
    "E2.5",
    "E2.6",
    "E2.7",
    "E2.8",
    "E2.9",
    "trace",
    "desimon",
    "Q_A",
    "Q_Astar",
    "R3.3plus",
    "R3.3minus",
    "R3.4",
    "R3.5",
)

_TINY = 1e-30


@dataclasses.dataclass
class VerificationReport:
    """One certified comparison: two sides of an identity on one grid."""

    identity_id: str
    operator: str
    grid: tuple
    n_param: int | None
    lhs_norm: float
    rhs_norm: float
    abs_error: float
    rel_error: float
    tolerance: float
    passed: bool
    skipped: bool = False
    constants: dict = dataclasses.field(default_factory=dict)
    details: dict = dataclasses.field(default_factory=dict)
    seed: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "operator": self.operator,
            "grid": {
                "t_min": _jsonable(self.grid[0]),
                "t_max": _jsonable(self.grid[1]),
                "n_nodes": int(self.grid[2]),
            },
            "n_param": _jsonable(self.n_param),
            "lhs_norm": _jsonable(self.lhs_norm),
            "rhs_norm": _jsonable(self.rhs_norm),
            "abs_error": _jsonable(self.abs_error),
            "rel_error": _jsonable(self.rel_error),
            "tolerance": _jsonable(self.tolerance),
            "pass": bool(self.passed),
            "skipped": bool(self.skipped),
            "constants": {k: _jsonable(v) for k, v in self.constants.items()},
            "details": {k: _jsonable(v) for k, v in self.details.items()},
            "seed": _jsonable(self.seed),
        }

    def one_line(self) -> str:
        status = "SKIP" if self.skipped else ("pass" if self.passed else "FAIL")
        n = "-" if self.n_param is None else str(self.n_param)
        return (
            f"{status:4s} {self.identity_id:9s} {self.operator:12s} N={n:3s} "
            f"rel_error={self.rel_error:.3e}"
        )


def _jsonable(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _rel(abs_error: float, rhs_norm: float) -> float:
    return abs_error / max(rhs_norm, _TINY)


def max_pointwise_rel_error(
    lhs: np.ndarray, rhs: np.ndarray, floor_frac: float = 1e-3
) -> float:
    """Largest nodewise relative error where the reference is not negligible.

    Nodes whose reference norm falls below ``floor_frac`` times the peak are
    excluded: there the identity still holds strongly but a relative
    comparison would only ever measure roundoff of vanishing values.
    """
    rn = np.linalg.norm(rhs, axis=1)
    peak = float(np.max(rn)) if rn.size else 0.0
    if peak == 0.0:
        return 0.0
    mask = rn >= floor_frac * peak
    en = np.linalg.norm(lhs - rhs, axis=1)
    return float(np.max(en[mask] / rn[mask]))


def _unit_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# evolution identities
# ---------------------------------------------------------------------------


def check_evolution_plus(
    A: SectorialOperator,
    h,
    n_param: int,
    grid: TimeGrid,
    *,
    tolerance: float | None = None,
    method: str = "fast",
) -> VerificationReport:
    """Forward evolution identity (E2.4), certified in the ``t^-1 dt`` norm."""
    tol = DEFAULT_TOLERANCES["identity"] if tolerance is None else tolerance
    f = sample_symbol("psi1", A, n_param, h, grid)
    from .regularity import mplus_direct  # local: direct only on request

    op = mplus_fast if method == "fast" else mplus_direct
    lhs = op(A, f).values
    rhs = (1.0 / (n_param + 1)) * sample_symbol("psi1", A, n_param + 1, h, grid)
    abs_err = weighted_norm(lhs - rhs, -1.0)
    rhs_norm = weighted_norm(rhs, -1.0)
    rel = _rel(abs_err, rhs_norm)
    return VerificationReport(
        identity_id="E2.4",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=n_param,
        lhs_norm=weighted_norm(lhs, -1.0),
        rhs_norm=rhs_norm,
        abs_error=abs_err,
        rel_error=rel,
        tolerance=tol,
        passed=bool(rel <= tol),
        constants={
            "max_pointwise_rel_error": max_pointwise_rel_error(lhs.values, rhs.values)
        },
    )


def check_evolution_minus(
    A: SectorialOperator,
    h,
    n_param: int,
    grid: TimeGrid,
    *,
    tolerance: float | None = None,
    method: str = "fast",
) -> VerificationReport:
    """Backward evolution identity (E2.5), certified in the ``t dt`` norm."""
    tol = DEFAULT_TOLERANCES["identity"] if tolerance is None else tolerance
    f = sample_symbol("A_exp_N", A, n_param, h, grid)
    from .regularity import mminus_direct

    op = mminus_fast if method == "fast" else mminus_direct
    lhs = op(A, f).values
    rhs = (1.0 / (n_param + 1)) * f
    abs_err = weighted_norm(lhs - rhs, 1.0)
    rhs_norm = weighted_norm(rhs, 1.0)
    rel = _rel(abs_err, rhs_norm)
    return VerificationReport(
        identity_id="E2.5",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=n_param,
        lhs_norm=weighted_norm(lhs, 1.0),
        rhs_norm=rhs_norm,
        abs_error=abs_err,
        rel_error=rel,
        tolerance=tol,
        passed=bool(rel <= tol),
        constants={
            "max_pointwise_rel_error": max_pointwise_rel_error(lhs.values, rhs.values)
        },
    )


# ---------------------------------------------------------------------------
# balayage identities
# ---------------------------------------------------------------------------


def _vector_report(
    identity: str,
    A: SectorialOperator,
    grid: TimeGrid,
    n_param,
    lhs_vec: np.ndarray,
    rhs_vec: np.ndarray,
    tol: float,
    constants: dict | None = None,
    details: dict | None = None,
) -> VerificationReport:
    abs_err = float(np.linalg.norm(lhs_vec - rhs_vec))
    rhs_norm = float(np.linalg.norm(rhs_vec))
    rel = _rel(abs_err, rhs_norm)
    return VerificationReport(
        identity_id=identity,
        operator=A.name,
        grid=grid.descriptor(),
        n_param=n_param,
        lhs_norm=float(np.linalg.norm(lhs_vec)),
        rhs_norm=rhs_norm,
        abs_error=abs_err,
        rel_error=rel,
        tolerance=tol,
        passed=bool(rel <= tol),
        constants=constants or {},
        details=details or {},
    )


def check_balayage_plus(
    A: SectorialOperator,
    f: GridFunction,
    n_param: int,
    *,
    tolerance: float | None = None,
) -> VerificationReport:
    """First-order sweep of the forward image (E2.6), in the H norm."""
    tol = DEFAULT_TOLERANCES["identity"] if tolerance is None else tolerance
    m = mplus_fast(A, f).values
    lhs = sweep(A, "A_exp_N", n_param, m).value
    rhs = sweep(A, "A_exp_N", n_param, f).value / (n_param + 1)
    return _vector_report("E2.6", A, f.grid, n_param, lhs, rhs, tol)


def check_balayage_minus(
    A: SectorialOperator,
    f: GridFunction,
    n_param: int,
    *,
    tolerance: float | None = None,
) -> VerificationReport:
    """Powered sweep of the backward image (E2.7), in the H norm."""
    tol = DEFAULT_TOLERANCES["identity"] if tolerance is None else tolerance
    m = mminus_fast(A, f).values
    lhs = sweep(A, "psi1", n_param, m).value
    rhs = sweep(A, "psi1", n_param + 1, f).value / (n_param + 1)
    return _vector_report("E2.7", A, f.grid, n_param, lhs, rhs, tol)


def check_endpoint_plus(
    A: SectorialOperator,
    f: GridFunction,
    n_param: int,
    *,
    tolerance: float | None = None,
) -> VerificationReport:
    """Endpoint sweep of the forward image (E2.8).

    The hypothesis (convergence of the improper first-order integral of the
    source) is tested first; when it fails the report is marked skipped
    rather than failed.
    """
    tol = DEFAULT_TOLERANCES["identity"] if tolerance is None else tolerance
    wc = weak_convergence_check(A, f, n_param=1)
    if not wc.converged:
        return VerificationReport(
            identity_id="E2.8",
            operator=A.name,
            grid=f.grid.descriptor(),
            n_param=n_param,
            lhs_norm=float("nan"),
            rhs_norm=float("nan"),
            abs_error=float("nan"),
            rel_error=float("nan"),
            tolerance=tol,
            passed=True,
            skipped=True,
            details={"reason": "improper integral of the source did not converge",
                     "increments": list(wc.increments)},
        )
    m = mplus_fast(A, f).values
    lhs = sweep(A, "exp_N", n_param, m).value
    rhs = sweep(A, "exp_N", n_param, f).value / (n_param + 1)
    return _vector_report(
        "E2.8",
        A,
        f.grid,
        n_param,
        lhs,
        rhs,
        tol,
        constants={"weak_increment_max": max(wc.increments)},
    )


def check_endpoint_minus(
    A: SectorialOperator,
    h,
    n_param: int,
    grid: TimeGrid,
    *,
    tolerance: float | None = None,
    certificate_tol: float | None = None,
) -> VerificationReport:
    """Endpoint sweep of the backward image (E2.9) on the certified source.

    The source is the built-in combination with vanishing plain sweep; its
    residual is re-verified against ``certificate_tol * ||h||`` before the
    two sides are compared.
    """
    tol = DEFAULT_TOLERANCES["identity"] if tolerance is None else tolerance
    cert_tol = (
        DEFAULT_TOLERANCES["certificate"] if certificate_tol is None else certificate_tol
    )
    h = np.asarray(h, dtype=complex).ravel()
    f = zero_balayage_input(A, h, grid)
    residual = float(np.linalg.norm(sweep(A, "A_exp_N", 1, f).value))
    href = max(float(np.linalg.norm(h)), _TINY)
    cert_ok = residual <= cert_tol * href
    m = mminus_fast(A, f).values
    lhs = sweep(A, "t_pow_A_pow", n_param, m).value
    rhs = sweep(A, "t_pow_A_pow", n_param + 1, f).value / n_param
    rep = _vector_report(
        "E2.9",
        A,
        grid,
        n_param,
        lhs,
        rhs,
        tol,
        constants={"zero_balayage_residual": residual / href},
    )
    rep.passed = bool(rep.passed and cert_ok)
    if not cert_ok:
        rep.details["reason"] = "zero-sweep hypothesis violated"
    return rep


# ---------------------------------------------------------------------------
# endpoint reductions
# ---------------------------------------------------------------------------


def _reduction_norms(A, f: GridFunction, plus: bool):
    grid = f.grid
    if plus:
        m = mplus_fast(A, f).values
        b = sweep(A, "exp_N", 1, f).value
        corr = GridFunction(grid, sample_profile("A_exp_N", A, 1, b, grid))
        w = 1.0
    else:
        m = mminus_fast(A, f).values
        b = sweep(A, "A_exp_N", 1, f).value
        corr = GridFunction(grid, sample_profile("exp_N", A, 1, b, grid))
        w = -1.0
    return (
        weighted_norm(m - corr, w),
        weighted_norm(m, w),
        weighted_norm(f, w),
    )


def _check_reduction(
    A, f, grid: TimeGrid, plus: bool, tolerance: float | None
) -> VerificationReport:
    tol = DEFAULT_TOLERANCES["stability"] if tolerance is None else tolerance
    if callable(f):
        f1 = GridFunction(grid, np.asarray(f(grid.nodes), dtype=complex))
    else:
        f1, grid = f, f.grid
    corr1, unc1, fn1 = _reduction_norms(A, f1, plus)
    constants = {
        "corrected_norm": corr1,
        "uncorrected_norm": unc1,
        "ratio_corrected": corr1 / max(fn1, _TINY),
        "ratio_uncorrected": unc1 / max(fn1, _TINY),
    }
    details = {}
    stab = 0.0
    if callable(f):
        grid2 = extend_down(grid)
        f2 = GridFunction(grid2, np.asarray(f(grid2.nodes), dtype=complex))
        corr2, unc2, fn2 = _reduction_norms(A, f2, plus)
        stab = abs(corr2 - corr1) / max(corr1, _TINY)
        constants["corrected_norm_fine"] = corr2
        constants["uncorrected_growth"] = unc2 / max(unc1, _TINY) - 1.0
        details["fine_grid"] = grid2.descriptor()
    else:
        details["note"] = "grid-function input; stability under extension not assessed"
    passed = bool(np.isfinite(corr1) and stab <= tol)
    return VerificationReport(
        identity_id="R3.4" if plus else "R3.5",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=None,
        lhs_norm=corr1,
        rhs_norm=fn1,
        abs_error=abs(constants.get("corrected_norm_fine", corr1) - corr1),
        rel_error=stab,
        tolerance=tol,
        passed=passed,
        constants=constants,
        details=details,
    )


def check_reduction_plus(A, f, grid, *, tolerance=None) -> VerificationReport:
    """Forward endpoint reduction (R3.4): subtracting ``A e^{-tA} b`` with the
    swept coefficient b makes the ``t dt`` norm stable under downward grid
    extension even when the uncorrected norm grows.

    `f` may be a GridFunction or a callable ``f(nodes) -> (N, d) values``;
    only a callable can be resampled on the extended grid, so the stability
    comparison is skipped for plain grid functions.
    """
    return _check_reduction(A, f, grid, True, tolerance)


def check_reduction_minus(A, f, grid, *, tolerance=None) -> VerificationReport:
    """Backward endpoint reduction (R3.5), mirror of :func:`check_reduction_plus`
    with correction ``e^{-tA} b`` and the ``t^-1 dt`` norm."""
    return _check_reduction(A, f, grid, False, tolerance)


# ---------------------------------------------------------------------------
# trace condition
# ---------------------------------------------------------------------------


def check_trace(
    A: SectorialOperator, f: GridFunction, *, tolerance: float | None = None
) -> VerificationReport:
    """Dyadic-average trace of the backward image at t -> 0.

    Averages ``(1/tau) int_tau^{2 tau}`` of the backward image are evaluated
    at tau = t_min 2^j, j = 0..5, Richardson-extrapolated with the observed
    order, and compared against the plain first-order sweep of the source.
    """
    tol = DEFAULT_TOLERANCES["trace"] if tolerance is None else tolerance
    grid = f.grid
    mvals = mminus_fast(A, f).values.values
    t = grid.nodes
    avgs = []
    for j in range(6):
        tau = grid.t_min * 2.0**j
        ia = int(np.searchsorted(t, tau * (1 - 1e-12), side="left"))
        ib = int(np.searchsorted(t, 2 * tau * (1 + 1e-12), side="right")) - 1
        if ib - ia < 2:
            continue
        sel = slice(ia, ib + 1)
        coeff = np.full(ib - ia + 1, grid.log_step)
        coeff[0] = coeff[-1] = 0.5 * grid.log_step
        integral = (coeff * t[sel]) @ mvals[sel]
        avgs.append(integral / (t[ib] - t[ia]))
    avgs = np.asarray(avgs)
    diffs = np.diff(avgs, axis=0)
    dn = np.linalg.norm(diffs, axis=1)
    orders = [
        float(np.log2(dn[i + 1] / dn[i]))
        for i in range(len(dn) - 1)
        if dn[i] > 0 and dn[i + 1] > 0
    ]
    order = float(np.median(orders)) if orders else 1.0
    p = min(max(order, 0.5), 4.0)
    extrap = avgs[0] - diffs[0] / (2.0**p - 1.0)
    rhs = sweep(A, "A_exp_N", 1, f).value
    abs_err = float(np.linalg.norm(extrap - rhs))
    rhs_norm = float(np.linalg.norm(rhs))
    peak = float(np.max(np.linalg.norm(f.values, axis=1)))
    passed = abs_err <= tol * max(rhs_norm, 1e-2 * peak)
    return VerificationReport(
        identity_id="trace",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=None,
        lhs_norm=float(np.linalg.norm(extrap)),
        rhs_norm=rhs_norm,
        abs_error=abs_err,
        rel_error=_rel(abs_err, rhs_norm),
        tolerance=tol,
        passed=bool(passed),
        constants={"observed_order": order},
    )


# ---------------------------------------------------------------------------
# norm and constant estimates
# ---------------------------------------------------------------------------


def check_desimon(
    A: SectorialOperator,
    grid: TimeGrid,
    *,
    iterations: int = 120,
    seed: int = 0,
    tolerance: float | None = None,
) -> VerificationReport:
    """Unweighted maximal regularity norms of both operators.

    For self-adjoint operators the continuum norm is exactly 1 (the scalar
    causal kernel has Laplace symbol ``lam / (lam + z)``, of modulus at most
    one on the right half-plane), so the estimate is asserted to stay at or
    below 1.01; for other kinds the estimate is recorded as data.
    """
    upper = (
        DEFAULT_TOLERANCES["desimon_selfadjoint_upper"] if tolerance is None else tolerance
    )
    props = cell_propagators(A, grid)
    est_p = operator_norm_estimate(
        "Mplus", A, 0.0, grid, iterations=iterations, seed=seed,
        full_output=True, propagators=props,
    )
    est_m = operator_norm_estimate(
        "Mminus", A, 0.0, grid, iterations=iterations, seed=seed,
        full_output=True, propagators=props,
    )
    constants = {
        "mplus_norm": est_p.value,
        "mminus_norm": est_m.value,
        "both_converged": est_p.converged and est_m.converged,
    }
    if A.kind == "self_adjoint":
        rel = max(abs(est_p.value - 1.0), abs(est_m.value - 1.0))
        passed = est_p.value <= upper and est_m.value <= upper
        rhs_norm = 1.0
    else:
        rel = 0.0
        passed = np.isfinite(est_p.value) and np.isfinite(est_m.value)
        rhs_norm = est_m.value
    return VerificationReport(
        identity_id="desimon",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=None,
        lhs_norm=est_p.value,
        rhs_norm=rhs_norm,
        abs_error=rel,
        rel_error=rel,
        tolerance=upper,
        passed=bool(passed),
        constants=constants,
        seed=seed,
    )


def check_weighted_desimon(
    A: SectorialOperator,
    alpha: float,
    grid: TimeGrid,
    which: str = "Mplus",
    *,
    iterations: int = 120,
    seed: int = 0,
    stability: bool = True,
    tolerance: float | None = None,
) -> VerificationReport:
    """Weighted norm estimate (R3.3): finite and stable under refinement.

    The forward operator is measured on the ``t^alpha`` scale and the
    backward operator on the ``t^-alpha`` scale, matching the duality between
    the two weighted bounds.
    """
    tol = DEFAULT_TOLERANCES["norm_stability"] if tolerance is None else tolerance
    a_eff = alpha if which == "Mplus" else -alpha
    est1 = operator_norm_estimate(
        which, A, a_eff, grid, iterations=iterations, seed=seed
    )
    constants = {"norm_estimate": est1, "alpha": a_eff}
    rel = 0.0
    est2 = est1
    if stability:
        est2 = operator_norm_estimate(
            which, A, a_eff, refine(grid, 2), iterations=iterations, seed=seed
        )
        constants["norm_estimate_refined"] = est2
        rel = abs(est2 - est1) / max(est1, _TINY)
    passed = bool(np.isfinite(est1) and rel <= tol)
    return VerificationReport(
        identity_id="R3.3plus" if which == "Mplus" else "R3.3minus",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=None,
        lhs_norm=est1,
        rhs_norm=est2,
        abs_error=abs(est2 - est1),
        rel_error=rel,
        tolerance=tol,
        passed=passed,
        constants=constants,
        seed=seed,
    )


def check_quadratic(
    A: SectorialOperator,
    grid: TimeGrid,
    conjugate: bool = False,
    *,
    tolerance: float | None = None,
) -> VerificationReport:
    """Best quadratic-estimate constants for A (or its conjugate operator).

    Self-adjoint oracle: the first-order constant equals exactly 1/2
    independently of the spectrum, by the scale-invariant moment integral per
    spectral point.
    """
    tol = (
        DEFAULT_TOLERANCES["quadratic_selfadjoint"] if tolerance is None else tolerance
    )
    B = A.adjoint if conjugate else A
    c1 = quadratic_constant(B, "psi1", 1, grid)
    c2 = quadratic_constant(B, "psi2", 1, grid)
    constants = {"psi1_n1": c1, "psi2_n1": c2}
    if A.kind == "self_adjoint":
        rel = abs(c1 - 0.5) / 0.5
        passed = rel <= tol
        rhs_norm = 0.5
    else:
        rel = 0.0
        passed = np.isfinite(c1) and np.isfinite(c2)
        rhs_norm = c2
    return VerificationReport(
        identity_id="Q_Astar" if conjugate else "Q_A",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=None,
        lhs_norm=c1,
        rhs_norm=rhs_norm,
        abs_error=abs(c1 - 0.5) if A.kind == "self_adjoint" else 0.0,
        rel_error=rel,
        tolerance=tol,
        passed=bool(passed),
        constants=constants,
    )


def check_constant_source_exact(
    A: SectorialOperator, h, grid: TimeGrid, *, tolerance: float = 1e-10
) -> VerificationReport:
    """Constant-in-t source: the forward image must equal ``(I - e^{-tA}) h``
    to roundoff, since the piecewise-constant cell scheme is exact there."""
    h = np.asarray(h, dtype=complex).ravel()
    f = GridFunction(grid, np.tile(h, (grid.n_nodes, 1)))
    lhs = mplus_fast(A, f).values
    rhs = GridFunction(grid, h[None, :] - sample_profile("exp_N", A, 1, h, grid))
    abs_err = weighted_norm(lhs - rhs, 0.0)
    rhs_norm = weighted_norm(rhs, 0.0)
    rel = _rel(abs_err, rhs_norm)
    return VerificationReport(
        identity_id="desimon",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=None,
        lhs_norm=weighted_norm(lhs, 0.0),
        rhs_norm=rhs_norm,
        abs_error=abs_err,
        rel_error=rel,
        tolerance=tolerance,
        passed=bool(rel <= tolerance),
        constants={
            "max_pointwise_rel_error": max_pointwise_rel_error(lhs.values, rhs.values)
        },
        details={"input": "constant"},
    )


def prefactor_audit(
    A: SectorialOperator,
    h,
    grid: TimeGrid,
    n_values=(1, 2, 3, 4),
    *,
    tolerance: float | None = None,
) -> VerificationReport:
    """Fit the endpoint backward identity's prefactor as a function of N.

    For each N the measured ratio of the swept backward image to the
    unprefactored right side is projected onto the collinear coefficient;
    fitting ``ratio = c / N`` then recovers the identity's constant c.  The
    fitted c and the residual are recorded so that a wrong printed constant
    would surface as data rather than as a crash.
    """
    tol = DEFAULT_TOLERANCES["identity"] if tolerance is None else tolerance
    h = np.asarray(h, dtype=complex).ravel()
    f = zero_balayage_input(A, h, grid)
    m = mminus_fast(A, f).values
    ratios = {}
    for n in n_values:
        lhs = sweep(A, "t_pow_A_pow", n, m).value
        rhs_raw = sweep(A, "t_pow_A_pow", n + 1, f).value
        rho = np.vdot(rhs_raw, lhs) / np.vdot(rhs_raw, rhs_raw)
        ratios[int(n)] = float(rho.real)
    inv_n = np.array([1.0 / n for n in n_values])
    r = np.array([ratios[int(n)] for n in n_values])
    c = float(np.sum(r * inv_n) / np.sum(inv_n**2))
    residual = float(np.max(np.abs(np.array(list(n_values)) * r - c)))
    return VerificationReport(
        identity_id="E2.9",
        operator=A.name,
        grid=grid.descriptor(),
        n_param=None,
        lhs_norm=c,
        rhs_norm=1.0,
        abs_error=abs(c - 1.0),
        rel_error=residual,
        tolerance=tol,
        passed=bool(residual <= tol),
        constants={"fitted_prefactor": c, "fit_residual": residual},
        details={"audit": True, "ratios": ratios},
    )


# ---------------------------------------------------------------------------
# standard suite
# ---------------------------------------------------------------------------


def _run_job(A, identity, param, grid, tol, rng, iterations, seed):
    mu = A.mu_min
    if identity == "E2.4":
        return check_evolution_plus(
            A, _unit_vector(rng, A.dim), param, grid, tolerance=tol["identity"]
        )
    if identity == "E2.5":
        return check_evolution_minus(
            A, _unit_vector(rng, A.dim), param, grid, tolerance=tol["identity"]
        )
    if identity == "E2.6":
        f = sample_symbol("psi1", A, 1, _unit_vector(rng, A.dim), grid)
        return check_balayage_plus(A, f, param, tolerance=tol["identity"])
    if identity == "E2.7":
        f = sample_symbol("exp_N", A, 1, _unit_vector(rng, A.dim), grid)
        return check_balayage_minus(A, f, param, tolerance=tol["identity"])
    if identity == "E2.8":
        f = sample_symbol("exp_N", A, 1, _unit_vector(rng, A.dim), grid)
        return check_endpoint_plus(A, f, param, tolerance=tol["identity"])
    if identity == "E2.9":
        return check_endpoint_minus(
            A,
            _unit_vector(rng, A.dim),
            param,
            grid,
            tolerance=tol["identity"],
            certificate_tol=tol["certificate"],
        )
    if identity == "E2.9audit":
        return prefactor_audit(
            A, _unit_vector(rng, A.dim), grid, tolerance=tol["identity"]
        )
    if identity == "trace":
        f = sample_symbol("exp_N", A, 1, _unit_vector(rng, A.dim), grid)
        return check_trace(A, f, tolerance=tol["trace"])
    if identity == "desimon":
        return check_desimon(
            A, grid, iterations=iterations, seed=seed,
            tolerance=tol["desimon_selfadjoint_upper"],
        )
    if identity == "Q_A":
        return check_quadratic(
            A, grid, conjugate=False, tolerance=tol["quadratic_selfadjoint"]
        )
    if identity == "Q_Astar":
        return check_quadratic(
            A, grid, conjugate=True, tolerance=tol["quadratic_selfadjoint"]
        )
    if identity == "R3.3plus":
        return check_weighted_desimon(
            A, param, grid, "Mplus", iterations=iterations, seed=seed,
            tolerance=tol["norm_stability"],
        )
    if identity == "R3.3minus":
        return check_weighted_desimon(
            A, param, grid, "Mminus", iterations=iterations, seed=seed,
            tolerance=tol["norm_stability"],
        )
    if identity == "R3.4":
        h = _unit_vector(rng, A.dim)
        sampler = lambda ts: np.exp(-mu * ts)[:, None] / ts[:, None] * h[None, :]
        return check_reduction_plus(A, sampler, grid, tolerance=tol["stability"])
    if identity == "R3.5":
        h = _unit_vector(rng, A.dim)
        sampler = lambda ts: (mu**2 * ts * np.exp(-mu * ts))[:, None] * h[None, :]
        return check_reduction_minus(A, sampler, grid, tolerance=tol["stability"])
    raise ValueError(f"unknown identity {identity!r}")


def run_standard_suite(
    operators: dict,
    grid: TimeGrid,
    identities=STANDARD_IDENTITIES,
    n_params=(1, 2, 3),
    seed: int = 0,
    tolerances: dict | None = None,
    alphas=(0.5,),
    jobs: int = 1,
    iterations: int = 120,
    include_audit: bool = True,
) -> list[VerificationReport]:
    """Run the configured identity checks over an operator zoo.

    Inputs are drawn from a generator seeded per (seed, operator, identity,
    parameter), so reports are reproducible run to run; the seed is recorded
    in every report.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    per_n = {"E2.4", "E2.5", "E2.6", "E2.7", "E2.8", "E2.9"}
    job_specs = []
    for oi, name in enumerate(sorted(operators)):
        for ii, ident in enumerate(identities):
            if ident in per_n:
                for n in n_params:
                    job_specs.append((oi, ii, name, ident, int(n)))
                if ident == "E2.9" and include_audit:
                    job_specs.append((oi, ii, name, "E2.9audit", -1))
            elif ident in ("R3.3plus", "R3.3minus"):
                for a in alphas:
                    job_specs.append((oi, ii, name, ident, float(a)))
            else:
                job_specs.append((oi, ii, name, ident, -1))

    def run_one(spec):
        oi, ii, name, ident, param = spec
        pkey = int(param * 1000) if isinstance(param, float) else int(param)
        rng = np.random.default_rng([seed, oi, ii, pkey & 0x7FFFFFFF])
        rep = _run_job(
            operators[name],
            ident,
            None if param == -1 else param,
            grid,
            tol,
            rng,
            iterations,
            seed,
        )
        rep.seed = seed
        return rep

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_one, job_specs))
    else:
        reports = [run_one(s) for s in job_specs]
    return reports


def write_reports_jsonl(reports, path) -> None:
    """One JSON object per line, keys sorted: byte-stable given equal inputs."""
    with open(path, "w") as fh:
        for rep in reports:
            fh.write(json.dumps(rep.to_json_dict(), sort_keys=True) + "\n")


def write_summary_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["identity_id", "operator", "N_param", "rel_error", "pass"])
        for rep in reports:
            writer.writerow(
                [
                    rep.identity_id,
                    rep.operator,
                    "" if rep.n_param is None else rep.n_param,
                    repr(float(rep.rel_error)),
                    rep.passed,
                ]
            )
