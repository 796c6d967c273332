"""Dense kernels for the small symmetric matrices this package works with.

All matrix data is plain float64 numpy arrays. Two conventions are global:

* ``frob_norm`` is the squared trace norm ``tr(S S^T)``, i.e. the sum of
  squared entries with no square root taken. Every bound comparison in
  :mod:`aaolq.analysis` uses the same convention, so the envelope
  inequalities compose without unit juggling.
* Definiteness verdicts are eigenvalue threshold tests with an absolute
  tolerance (default ``1e-9``), sized for the integration error that feeds
  them rather than for machine precision.

The eigensolver is a cyclic Jacobi iteration. Dimensions never exceed a
dozen here, and Jacobi gives an auditable off-diagonal residual to attach
to each result.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EigenConvergenceError, SingularMatrixError, ValidationError

SYMMETRY_RTOL = 1e-10
DEFINITENESS_TOL = 1e-9
JACOBI_MAX_SWEEPS = 100
_JACOBI_MASS_TOL = 1e-12
_ENTRY_RESIDUAL_RTOL = 1e-10

DEFINITENESS_KINDS = ("pd", "psd", "nd", "nsd")


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and freeze a rectangular real matrix.

    Returns a read-only float64 copy. Rejects empty shapes and non-finite
    entries.
    """
    arr = np.array(a, dtype=float, order="C")
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValidationError(f"{name}: expected a non-empty 2-D array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name}: entries must be finite")
    arr.flags.writeable = False
    return arr


def as_vector(a, name: str = "vector") -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ValidationError(f"{name}: expected a non-empty vector")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name}: entries must be finite")
    arr.flags.writeable = False
    return arr


def as_symmetric(a, name: str = "matrix") -> np.ndarray:
    """Validate a square matrix as symmetric and return its symmetric part.

    The asymmetry residual ``max|S - S^T|`` must not exceed
    ``SYMMETRY_RTOL * (1 + max|S|)``. The returned (read-only) array is the
    exact symmetric part, so downstream eigenvalue code can assume bitwise
    symmetry.
    """
    arr = np.array(a, dtype=float, order="C")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValidationError(f"{name}: expected a square matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name}: entries must be finite")
    scale = 1.0 + float(np.max(np.abs(arr)))
    drift = float(np.max(np.abs(arr - arr.T)))
    if drift > SYMMETRY_RTOL * scale:
        raise ValidationError(
            f"{name}: asymmetry {drift:.3e} exceeds tolerance {SYMMETRY_RTOL * scale:.3e}"
        )
    out = (arr + arr.T) / 2.0
    out.flags.writeable = False
    return out


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Symmetric part of ``a``; works on stacked (..., n, n) arrays."""
    return (a + np.swapaxes(a, -1, -2)) / 2.0


def kron(a, b) -> np.ndarray:
    """Kronecker product with input validation."""
    am = as_matrix(a, "kron lhs")
    bm = as_matrix(b, "kron rhs")
    out = np.kron(am, bm)
    out.flags.writeable = False
    return out


def block_diag(blocks) -> np.ndarray:
    """Square block-diagonal assembly of square blocks. Empty input is an error."""
    mats = [as_matrix(b, f"block_diag[{i}]") for i, b in enumerate(blocks)]
    if not mats:
        raise ValidationError("block_diag: at least one block is required")
    for i, m in enumerate(mats):
        if m.shape[0] != m.shape[1]:
            raise ValidationError(f"block_diag[{i}]: blocks must be square, got {m.shape}")
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n))
    at = 0
    for m in mats:
        d = m.shape[0]
        out[at : at + d, at : at + d] = m
        at += d
    out.flags.writeable = False
    return out


def frob_norm(s) -> float:
    """Squared trace norm: the plain sum of squared entries (no square root)."""
    arr = np.asarray(s, dtype=float)
    return float(np.sum(arr * arr))


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues of a symmetric matrix, ascending, plus the Jacobi residual."""

    values: np.ndarray
    max_offdiag_residual: float


def _jacobi(a: np.ndarray, max_sweeps: int):
    """Cyclic Jacobi diagonalization. Returns (values, vectors, residual).

    Sweeps stop once the squared off-diagonal mass falls under
    ``1e-12 * (1 + frob_norm)`` and the largest off-diagonal entry is under
    ``1e-10 * (1 + max|diag|)``; the second condition keeps the reported
    residual small relative to the spectral radius.
    """
    s = np.array(a, dtype=float)
    n = s.shape[0]
    v = np.eye(n)
    if n == 1:
        return s[0, 0:1].copy(), v, 0.0
    mass_target = _JACOBI_MASS_TOL * (1.0 + float(np.sum(s * s)))
    for sweep in range(max_sweeps + 1):
        diag = np.diag(s)
        off = s - np.diag(diag)
        off_mass = float(np.sum(off * off))
        max_off = float(np.max(np.abs(off)))
        entry_target = _ENTRY_RESIDUAL_RTOL * (1.0 + float(np.max(np.abs(diag))))
        if off_mass <= mass_target and max_off <= entry_target:
            order = np.argsort(diag, kind="stable")
            return diag[order].copy(), v[:, order].copy(), max_off
        if sweep == max_sweeps:
            raise EigenConvergenceError(max_off, max_sweeps)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = s[p, q]
                if apq == 0.0:
                    continue
                theta = (s[q, q] - s[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.hypot(theta, 1.0))
                else:
                    t = 1.0 / (theta - np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                sn = t * c
                cp = s[:, p].copy()
                cq = s[:, q].copy()
                s[:, p] = c * cp - sn * cq
                s[:, q] = sn * cp + c * cq
                rp = s[p, :].copy()
                rq = s[q, :].copy()
                s[p, :] = c * rp - sn * rq
                s[q, :] = sn * rp + c * rq
                s[p, q] = 0.0
                s[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    raise AssertionError("unreachable")


def sym_eigenvalues(s, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenResult:
    """Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.

    Raises :class:`EigenConvergenceError` (carrying the residual) if the
    sweep cap is hit first.
    """
    sym = as_symmetric(s, "sym_eigenvalues input")
    values, _, residual = _jacobi(sym, max_sweeps)
    values.flags.writeable = False
    return EigenResult(values=values, max_offdiag_residual=residual)


def sym_eigh(s, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigenvalues (ascending) and orthonormal eigenvectors, Jacobi route."""
    sym = as_symmetric(s, "sym_eigh input")
    values, vectors, residual = _jacobi(sym, max_sweeps)
    return values, vectors, residual


def spd_inverse(r, cond_limit: float = 1e12, name: str = "matrix") -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via eigendecomposition.

    The condition estimate ``lambda_max / lambda_min`` must stay under
    ``cond_limit`` and the smallest eigenvalue must be positive.
    """
    values, vectors, _ = sym_eigh(r)
    lo = float(values[0])
    hi = float(values[-1])
    if lo <= 0.0 or hi / lo > cond_limit:
        raise SingularMatrixError(
            f"{name}: not safely invertible (eigenvalue range [{lo:.3e}, {hi:.3e}])"
        )
    inv = (vectors / values) @ vectors.T
    out = symmetrize(inv)
    out.flags.writeable = False
    return out


def is_definite(s, kind: str, tol: float = DEFINITENESS_TOL) -> bool:
    """Eigenvalue definiteness test.

    ``pd`` means smallest eigenvalue > tol, ``psd`` means >= -tol; ``nd``
    and ``nsd`` mirror those on the largest eigenvalue.
    """
    if kind not in DEFINITENESS_KINDS:
        raise ValueError(f"unknown definiteness kind {kind!r}")
    if tol < 0.0:
        raise ValueError("tolerance must be nonnegative")
    values = sym_eigenvalues(s).values
    if kind == "pd":
        return bool(values[0] > tol)
    if kind == "psd":
        return bool(values[0] >= -tol)
    if kind == "nd":
        return bool(values[-1] < -tol)
    return bool(values[-1] <= tol)


def sym_extrema_stack(stack: np.ndarray):
    """Smallest and largest eigenvalue of each matrix in a (..., n, n) stack.

    Bulk grids go through LAPACK here for speed; the Jacobi path above stays
    the reference implementation and the two are cross-checked in the test
    suite.
    """
    arr = np.asarray(stack, dtype=float)
    w = np.linalg.eigvalsh(symmetrize(arr))
    return w[..., 0], w[..., -1]
