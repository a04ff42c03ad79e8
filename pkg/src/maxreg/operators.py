"""Sectorial matrix operators and their analytic semigroups.

A sectorial operator here is a d x d complex matrix A whose spectrum lies in
the open right half-plane within a sector ``|arg(lambda)| <= sector_angle <
pi/2``.  Such a matrix generates the analytic semigroup ``exp(-t A)``, the
basic kernel of everything in this package.

Two evaluation paths are provided for semigroup actions: a spectral path
``V diag(exp(-t lambda)) V^-1`` when an eigendecomposition is cached, and a
scaling-and-squaring matrix exponential otherwise.  The exactly integrated
local kernel ``int_0^D A exp(-tau A) dtau = I - exp(-D A)`` is exposed as
:func:`local_kernel_integral`; it is the primitive that lets the convolution
schemes integrate the singular kernel ``A exp(-(t-s)A)`` in closed form over
grid cells.
"""

from __future__ import annotations

import dataclasses
from functools import cached_property

import numpy as np
import scipy.linalg

__all__ = [
    "SectorialOperator",
    "make_diagonalizable",
    "make_discrete_laplacian",
    "from_matrix",
    "semigroup_apply",
    "semigroup_apply_many",
    "local_kernel_integral",
    "one_minus_exp_matrix",
    "export_matrix_csv",
    "load_matrix_csv",
]

#: Largest eigenvector condition number accepted by make_diagonalizable.
MAX_EIGENVECTOR_CONDITION = 1e10

#: Entrywise tolerance for the self-adjointness invariant.
SELF_ADJOINT_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class SectorialOperator:
    """A d x d complex matrix with spectrum in a right half-plane sector.

    Attributes
    ----------
    matrix : ndarray
        The matrix A, shape (d, d), complex.
    sector_angle : float
        The smallest omega in [0, pi/2) with ``|arg(lambda)| <= omega`` for
        every eigenvalue lambda.
    kind : str
        One of ``"diagonalizable"``, ``"self_adjoint"``, ``"general"``.
    eigenvalues, eigenvectors, eigenvectors_inv :
        Cached spectral data (present unless kind is ``"general"``).
    name : str
        Optional label used in verification reports.
    """

    matrix: np.ndarray
    sector_angle: float
    kind: str
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    eigenvectors_inv: np.ndarray | None = None
    name: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def has_spectral_data(self) -> bool:
        return self.eigenvalues is not None

    @cached_property
    def operator_norm(self) -> float:
        """Spectral (2-)norm of the matrix."""
        return float(np.linalg.norm(self.matrix, 2))

    @cached_property
    def mu_min(self) -> float:
        """Smallest real part over the spectrum; sets the slowest decay rate."""
        if self.has_spectral_data:
            return float(np.min(self.eigenvalues.real))
        return float(np.min(np.linalg.eigvals(self.matrix).real))

    @cached_property
    def adjoint(self) -> "SectorialOperator":
        """The conjugate-transpose operator, with spectral data transported."""
        if self.kind == "self_adjoint":
            return self
        if self.has_spectral_data:
            return SectorialOperator(
                matrix=self.matrix.conj().T,
                sector_angle=self.sector_angle,
                kind=self.kind,
                eigenvalues=self.eigenvalues.conj(),
                eigenvectors=self.eigenvectors_inv.conj().T,
                eigenvectors_inv=self.eigenvectors.conj().T,
                name=self.name + "*" if self.name else "",
            )
        return SectorialOperator(
            matrix=self.matrix.conj().T,
            sector_angle=self.sector_angle,
            kind="general",
            name=self.name + "*" if self.name else "",
        )

    def with_name(self, name: str) -> "SectorialOperator":
        return dataclasses.replace(self, name=name)

    def __repr__(self) -> str:  # keep reprs short; matrices can be large
        label = self.name or "?"
        return (
            f"SectorialOperator({label}, d={self.dim}, kind={self.kind}, "
            f"angle={self.sector_angle:.4f})"
        )


def _validate_spectrum(eigenvalues: np.ndarray) -> float:
    """Check the sector condition and return the sector angle."""
    if not np.all(np.isfinite(eigenvalues)):
        raise ValueError("eigenvalues must be finite")
    if np.any(eigenvalues.real <= 0.0):
        raise ValueError(
            "all eigenvalues must have positive real part "
            f"(got {eigenvalues[eigenvalues.real <= 0.0]})"
        )
    angles = np.abs(np.angle(eigenvalues))
    angle = float(np.max(angles)) if eigenvalues.size else 0.0
    if angle >= np.pi / 2:
        raise ValueError(f"spectrum leaves the sector: max |arg| = {angle}")
    return angle


def make_diagonalizable(
    V: np.ndarray, eigenvalues, *, kind: str = "diagonalizable", name: str = ""
) -> SectorialOperator:
    """Build ``A = V diag(eigenvalues) V^-1`` with cached spectral data.

    Parameters
    ----------
    V : (d, d) array_like
        Eigenvector matrix; must have condition number below 1e10.
    eigenvalues : sequence of complex
        Spectrum; every value must lie strictly inside the right half-plane
        sector ``|arg| < pi/2``.

    Raises
    ------
    ValueError
        If V is singular or ill-conditioned, or an eigenvalue violates the
        sector condition.
    """
    V = np.asarray(V, dtype=complex)
    lam = np.asarray(eigenvalues, dtype=complex).ravel()
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError("V must be square")
    if V.shape[0] != lam.size:
        raise ValueError("eigenvalue count must match dimension of V")
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond >= MAX_EIGENVECTOR_CONDITION:
        raise ValueError(f"eigenvector matrix too ill-conditioned: cond={cond:.3e}")
    angle = _validate_spectrum(lam)
    Vinv = np.linalg.inv(V)
    A = (V * lam) @ Vinv
    return SectorialOperator(
        matrix=A,
        sector_angle=angle,
        kind=kind,
        eigenvalues=lam,
        eigenvectors=V,
        eigenvectors_inv=Vinv,
        name=name,
    )


def make_discrete_laplacian(d: int, h: float, *, name: str = "") -> SectorialOperator:
    """Tridiagonal (1/h^2) tridiag(-1, 2, -1): the canonical self-adjoint test case.

    Eigenvalues are ``(4/h^2) sin^2(k pi / (2(d+1)))`` for k = 1..d, so the
    operator is positive definite for every mesh width h > 0.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if h <= 0:
        raise ValueError("mesh width must be positive")
    A = np.zeros((d, d), dtype=complex)
    np.fill_diagonal(A, 2.0 / h**2)
    idx = np.arange(d - 1)
    A[idx, idx + 1] = -1.0 / h**2
    A[idx + 1, idx] = -1.0 / h**2
    w, V = np.linalg.eigh(A)
    return SectorialOperator(
        matrix=A,
        sector_angle=0.0,
        kind="self_adjoint",
        eigenvalues=w.astype(complex),
        eigenvectors=V.astype(complex),
        eigenvectors_inv=V.conj().T.astype(complex),
        name=name,
    )


def from_matrix(
    M, *, kind: str | None = None, cond_limit: float = 1e8, name: str = ""
) -> SectorialOperator:
    """Wrap an explicit matrix, eigendecomposing it when that is trustworthy.

    ``kind="general"`` forces the matrix-exponential evaluation path even for
    diagonalizable input; otherwise the spectral path is cached whenever the
    eigenvector matrix is well-conditioned (below `cond_limit`) and reproduces
    the matrix to 1e-10 relative accuracy.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    lam = np.linalg.eigvals(M)
    angle = _validate_spectrum(lam)
    if kind == "general":
        return SectorialOperator(matrix=M, sector_angle=angle, kind="general", name=name)
    if np.allclose(M, M.conj().T, atol=SELF_ADJOINT_TOL * max(1.0, np.abs(M).max())):
        w, V = np.linalg.eigh(M)
        return SectorialOperator(
            matrix=M,
            sector_angle=float(np.max(np.abs(np.angle(w.astype(complex))))),
            kind="self_adjoint",
            eigenvalues=w.astype(complex),
            eigenvectors=V.astype(complex),
            eigenvectors_inv=V.conj().T.astype(complex),
            name=name,
        )
    w, V = np.linalg.eig(M)
    cond = np.linalg.cond(V)
    if np.isfinite(cond) and cond < cond_limit:
        Vinv = np.linalg.inv(V)
        if np.linalg.norm((V * w) @ Vinv - M, 2) <= 1e-10 * np.linalg.norm(M, 2):
            return SectorialOperator(
                matrix=M,
                sector_angle=angle,
                kind="diagonalizable",
                eigenvalues=w,
                eigenvectors=V,
                eigenvectors_inv=Vinv,
                name=name,
            )
    return SectorialOperator(matrix=M, sector_angle=angle, kind="general", name=name)


def _check_vector(A: SectorialOperator, h) -> np.ndarray:
    h = np.asarray(h, dtype=complex).ravel()
    if h.size != A.dim:
        raise ValueError(f"vector has dimension {h.size}, operator expects {A.dim}")
    return h


def semigroup_apply(A: SectorialOperator, t: float, h) -> np.ndarray:
    """Evaluate ``exp(-t A) h`` for t >= 0.

    Uses the cached eigendecomposition when available, otherwise a
    scaling-and-squaring matrix exponential.  ``t = 0`` returns h exactly.
    """
    h = _check_vector(A, h)
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0.0:
        return h.copy()
    if A.has_spectral_data:
        return A.eigenvectors @ (np.exp(-t * A.eigenvalues) * (A.eigenvectors_inv @ h))
    return scipy.linalg.expm(-t * A.matrix) @ h


def semigroup_apply_many(A: SectorialOperator, ts, h) -> np.ndarray:
    """Evaluate ``exp(-t A) h`` on an array of times; returns shape (len(ts), d)."""
    h = _check_vector(A, h)
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise ValueError("times must be nonnegative")
    if A.has_spectral_data:
        z = A.eigenvectors_inv @ h
        W = np.exp(-np.multiply.outer(ts, A.eigenvalues))
        return (W * z) @ A.eigenvectors.T
    out = np.empty((ts.size, A.dim), dtype=complex)
    for i, t in enumerate(ts):
        out[i] = semigroup_apply(A, float(t), h)
    return out


def _one_minus_exp_series(X: np.ndarray) -> np.ndarray:
    # I - exp(-X) = X - X^2/2! + X^3/3! - ...; used when ||X|| is small so
    # that forming I - expm(-X) would cancel catastrophically.
    term = X.copy()
    acc = X.copy()
    for k in range(2, 40):
        term = term @ X * (-1.0 / k)
        acc += term
        if np.linalg.norm(term, 1) < 1e-18 * max(1.0, np.linalg.norm(acc, 1)):
            break
    return acc


def one_minus_exp_matrix(A: SectorialOperator, delta: float) -> np.ndarray:
    """The matrix ``I - exp(-delta A)``, computed without cancellation.

    On the spectral path the diagonal uses ``-expm1``; on the general path a
    truncated alternating series is used whenever ``delta * ||A||`` is small.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if A.has_spectral_data:
        diag = -np.expm1(-delta * A.eigenvalues)
        return (A.eigenvectors * diag) @ A.eigenvectors_inv
    X = delta * A.matrix
    if np.linalg.norm(X, 1) <= 0.25:
        return _one_minus_exp_series(X)
    return np.eye(A.dim) - scipy.linalg.expm(-X)


def local_kernel_integral(A: SectorialOperator, delta: float, h) -> np.ndarray:
    """Exact primitive ``int_0^delta A exp(-tau A) h dtau = (I - exp(-delta A)) h``.

    This integrates the convolution kernel in closed form across one cell and
    is accurate for all delta, down to ``delta * ||A|| ~ 1e-16`` where naive
    subtraction of exponentials would lose every digit.
    """
    h = _check_vector(A, h)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if A.has_spectral_data:
        z = A.eigenvectors_inv @ h
        return A.eigenvectors @ ((-np.expm1(-delta * A.eigenvalues)) * z)
    return one_minus_exp_matrix(A, delta) @ h


def export_matrix_csv(A, path) -> None:
    """Write a complex matrix as CSV of alternating re,im columns, row-major."""
    M = A.matrix if isinstance(A, SectorialOperator) else np.asarray(A, dtype=complex)
    d0, d1 = M.shape
    flat = np.empty((d0, 2 * d1))
    flat[:, 0::2] = M.real
    flat[:, 1::2] = M.imag
    np.savetxt(path, flat, delimiter=",")


def load_matrix_csv(path) -> np.ndarray:
    """Read a complex matrix written by :func:`export_matrix_csv`."""
    flat = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
    return flat[:, 0::2] + 1j * flat[:, 1::2]
