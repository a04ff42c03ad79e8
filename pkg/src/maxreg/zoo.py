"""Catalogued test operators and the plain-text zoo config format.

The zoo spans the behaviors the certification suite needs to probe: a scalar,
self-adjoint discrete Laplacians of two sizes, a normal operator with spectrum
rotated off the positive axis, a non-normal but diagonalizable operator, and
a defective Jordan block that forces the matrix-exponential evaluation path.

Operators are loadable from an INI-style key-value file, one section per
operator::

    [laplacian8]
    kind = laplacian
    dim = 8
    mesh_h = 0.5

    [rotated4]
    kind = rotated
    dim = 4
    angle = 1.0471975511965976
    seed = 7

Recognized kinds and their keys:

* ``scalar``     - ``value`` (complex, default 1)
* ``laplacian``  - ``dim``, ``mesh_h``
* ``diagonal``   - ``eigenvalues`` (comma-separated complex literals)
* ``rotated``    - ``dim``, ``angle`` (radians), ``seed``; normal operator
  with eigenvalues on the rays ``exp(+-i angle)``
* ``nonnormal``  - ``dim``, ``seed``, optional ``eigenvalues``
* ``jordan``     - ``dim``; defective bidiagonal block at eigenvalue 1
"""

from __future__ import annotations

import configparser

import numpy as np

from .operators import SectorialOperator, from_matrix, make_diagonalizable, make_discrete_laplacian

__all__ = [
    "scalar_operator",
    "rotated_normal",
    "nonnormal_operator",
    "jordan_operator",
    "default_zoo",
    "parse_operator_spec",
    "load_zoo",
]


def scalar_operator(value: complex = 1.0, *, name: str = "") -> SectorialOperator:
    """The 1x1 operator [value]."""
    return make_diagonalizable(np.eye(1), [value], name=name)


def rotated_normal(
    dim: int, angle: float, seed: int = 0, *, name: str = ""
) -> SectorialOperator:
    """Normal operator whose spectrum sits on the rays ``exp(+-i angle)``.

    Moduli are log-spaced over one decade and the eigenvectors are a seeded
    random unitary, so the operator is normal but far from diagonal.
    """
    if not 0 <= angle < np.pi / 2:
        raise ValueError("rotation angle must lie in [0, pi/2)")
    rng = np.random.default_rng(seed)
    moduli = np.logspace(-0.5, 0.5, dim)
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    lam = moduli * np.exp(1j * signs * angle)
    Q, _ = np.linalg.qr(
        rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    )
    return make_diagonalizable(Q, lam, name=name)


def nonnormal_operator(
    dim: int, seed: int = 0, eigenvalues=None, *, name: str = ""
) -> SectorialOperator:
    """Diagonalizable but non-normal: seeded eigenvectors with condition ~30."""
    rng = np.random.default_rng(seed)
    V = np.eye(dim) + 0.8 * rng.standard_normal((dim, dim))
    if eigenvalues is None:
        eigenvalues = np.linspace(1.0, 4.0, dim)
    return make_diagonalizable(V, eigenvalues, name=name)


def jordan_operator(dim: int = 2, *, name: str = "") -> SectorialOperator:
    """Defective bidiagonal Jordan block at eigenvalue 1 (kind ``general``)."""
    M = np.eye(dim, dtype=complex) + np.diag(np.ones(dim - 1), 1)
    return from_matrix(M, kind="general", name=name)


def default_zoo() -> dict[str, SectorialOperator]:
    """The standard operator set used by the verification suite."""
    return {
        "scalar_unit": scalar_operator(1.0, name="scalar_unit"),
        "laplacian5": make_discrete_laplacian(5, 0.5, name="laplacian5"),
        "laplacian8": make_discrete_laplacian(8, 0.5, name="laplacian8"),
        "rotated4": rotated_normal(4, np.pi / 3, seed=7, name="rotated4"),
        "nonnormal4": nonnormal_operator(4, seed=11, name="nonnormal4"),
        "jordan2": jordan_operator(2, name="jordan2"),
    }


def _parse_complex_list(text: str) -> list[complex]:
    return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]


def parse_operator_spec(name: str, spec: dict) -> SectorialOperator:
    """Build one operator from a key-value section of a zoo config."""
    kind = spec.get("kind", "").strip().lower()
    if kind == "scalar":
        return scalar_operator(complex(spec.get("value", "1")), name=name)
    if kind == "laplacian":
        return make_discrete_laplacian(
            int(spec["dim"]), float(spec["mesh_h"]), name=name
        )
    if kind == "diagonal":
        lam = _parse_complex_list(spec["eigenvalues"])
        return make_diagonalizable(np.eye(len(lam)), lam, name=name)
    if kind == "rotated":
        return rotated_normal(
            int(spec["dim"]),
            float(spec.get("angle", np.pi / 4)),
            int(spec.get("seed", 0)),
            name=name,
        )
    if kind == "nonnormal":
        eigs = spec.get("eigenvalues")
        return nonnormal_operator(
            int(spec["dim"]),
            int(spec.get("seed", 0)),
            _parse_complex_list(eigs) if eigs else None,
            name=name,
        )
    if kind == "jordan":
        return jordan_operator(int(spec.get("dim", 2)), name=name)
    raise ValueError(f"operator section [{name}] has unknown kind {kind!r}")


def load_zoo(path) -> dict[str, SectorialOperator]:
    """Load a zoo from an INI-style file, one operator per section."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"zoo config {path!r} not found or unreadable")
    out = {}
    for section in parser.sections():
        out[section] = parse_operator_spec(section, dict(parser[section]))
    return out
