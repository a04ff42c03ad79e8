"""Square-function norms and best quadratic-estimate constants.

The quadratic estimate for an operator A bounds the ``L2(dt/t)`` norm of
``t -> t A exp(-tA) h`` by a constant times ``||h||``; the best discrete
constant over unit vectors h is the largest eigenvalue of the Gram operator

    G = sum_k w_k t_k^-1 psi(t_k A)^H psi(t_k A),

accumulated over the grid nodes.  For self-adjoint A the constant reduces to
a one-dimensional integral per spectral point and is independent of the
eigenvalue by scale invariance of dt/t.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .grids import GridFunction, TimeGrid, _scalar_profiles, sample_symbol, weighted_norm
from .operators import SectorialOperator

__all__ = ["square_function_norm", "quadratic_constant", "symbol_matrices"]


def square_function_norm(A: SectorialOperator, h, grid: TimeGrid) -> float:
    """``L2(dt/t)`` norm of ``t -> t A exp(-tA) h`` on the grid."""
    return weighted_norm(sample_symbol("psi1", A, 1, h, grid), -1.0)


def symbol_matrices(
    symbol: str, A: SectorialOperator, n_param: int, grid: TimeGrid
) -> np.ndarray:
    """Stack of matrices ``psi(t_k A)``, shape (N, d, d)."""
    t = grid.nodes
    if A.has_spectral_data:
        W = _scalar_profiles(symbol, n_param, t[:, None], A.eigenvalues[None, :])
        return (A.eigenvectors[None, :, :] * W[:, None, :]) @ A.eigenvectors_inv
    M = A.matrix
    d = A.dim
    out = np.empty((t.size, d, d), dtype=complex)
    if symbol == "psi1":
        An = np.linalg.matrix_power(M, n_param)
        for k, tk in enumerate(t):
            out[k] = tk**n_param * scipy.linalg.expm(-tk * M) @ An
    elif symbol == "psi2":
        for k, tk in enumerate(t):
            out[k] = scipy.linalg.expm(-tk * M) - scipy.linalg.expm(-(n_param + 1) * tk * M)
    elif symbol == "A_exp_N":
        for k, tk in enumerate(t):
            out[k] = scipy.linalg.expm(-n_param * tk * M) @ M
    elif symbol == "exp_N":
        for k, tk in enumerate(t):
            out[k] = scipy.linalg.expm(-n_param * tk * M)
    elif symbol == "t_pow_A_pow":
        An = np.linalg.matrix_power(M, n_param)
        for k, tk in enumerate(t):
            out[k] = tk ** (n_param - 1) * scipy.linalg.expm(-tk * M) @ An
    else:
        raise ValueError(f"unknown symbol tag {symbol!r}")
    return out


def quadratic_constant(
    A: SectorialOperator, symbol: str, n_param: int, grid: TimeGrid
) -> float:
    """Best constant of the square-function bound for the given symbol.

    Returns ``sqrt(lambda_max(G))`` for the discrete Gram operator of the
    symbol family; this equals the supremum of the square-function norm over
    unit vectors, so every individual norm is dominated by it (Gram
    maximality holds to roundoff, not merely to quadrature accuracy).
    """
    if symbol not in ("psi1", "psi2"):
        raise ValueError("quadratic constants are defined for symbols psi1 and psi2")
    Psi = symbol_matrices(symbol, A, n_param, grid)
    c = grid.weights / grid.nodes
    G = np.einsum("kba,k,kbc->ac", Psi.conj(), c, Psi)
    G = 0.5 * (G + G.conj().T)
    lam_max = float(np.max(np.linalg.eigvalsh(G)))
    return float(np.sqrt(max(lam_max, 0.0)))
