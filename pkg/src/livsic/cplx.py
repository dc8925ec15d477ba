"""Small dense complex linear algebra.

Matrices are plain ``numpy`` complex arrays of shape ``(n, n)``; the dimension
is tiny (n <= 4 for kernels, a few dozen for Gram matrices) so everything here
favours accuracy and self-containment over speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NearSingular, NotHermitian, NotPSD, SingularMatrix

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SINGULAR_GUARD = 1e-12
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10


def as_cmatrix(a) -> np.ndarray:
    """Coerce a scalar, nested list or array into a square complex matrix."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a).ravel()))


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def mat_adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def _rotate_columns(a: np.ndarray, v: np.ndarray, i: int, j: int) -> bool:
    """One Hestenes step orthogonalising columns i and j of ``a`` in place."""
    ai, aj = a[:, i], a[:, j]
    alpha = float(np.vdot(ai, ai).real)
    beta = float(np.vdot(aj, aj).real)
    gamma = np.vdot(ai, aj)
    g = abs(gamma)
    if g == 0.0 or g <= JACOBI_TOL * math.sqrt(alpha * beta):
        return False
    phase = gamma / g
    zeta = (beta - alpha) / (2.0 * g)
    t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = c * t
    aj = aj / phase
    a[:, i], a[:, j] = c * ai - s * aj, s * ai + c * aj
    vj = v[:, j] / phase
    vi = v[:, i].copy()
    v[:, i], v[:, j] = c * vi - s * vj, s * vi + c * vj
    return True


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values in descending order (one-sided Jacobi).

    Working on ``a`` itself rather than ``a* a`` keeps the small singular
    values accurate to working precision relative to themselves, which the
    singularity guard of :func:`mat_inverse` relies on.
    """
    work = np.array(a, dtype=complex)
    n = work.shape[1]
    v = identity(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                rotated |= _rotate_columns(work, v, i, j)
        if not rotated:
            break
    return np.sort(np.sqrt(np.sum(np.abs(work) ** 2, axis=0)))[::-1]


def condition_number(a: np.ndarray) -> float:
    s = singular_values(a)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def mat_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse by Gaussian elimination with partial pivoting.

    Raises
    ------
    SingularMatrix
        if the smallest singular value is below ``1e-12`` times the largest.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n == 1:
        x = a[0, 0]
        if x == 0:
            raise SingularMatrix("zero 1x1 matrix", float("inf"))
        return np.array([[1.0 / x]])
    s = singular_values(a)
    if s[0] == 0.0 or s[-1] < SINGULAR_GUARD * s[0]:
        cond = float("inf") if s[-1] == 0.0 else float(s[0] / s[-1])
        raise SingularMatrix(f"matrix is singular to working precision (cond ~ {cond:.3g})", cond)
    aug = np.hstack([a.copy(), identity(n)])
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col and aug[row, col] != 0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def solve_left(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``a^{-1} b`` (guarded like :func:`mat_inverse`)."""
    return mat_inverse(a) @ b


def hermitian_eigen(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, U)`` with ``w`` ascending and ``a = U diag(w) U*``.
    """
    a = np.array(a, dtype=complex)
    norm = frob(a)
    if frob(a - a.conj().T) > HERMITIAN_TOL * max(norm, np.finfo(float).tiny):
        raise NotHermitian("matrix is not Hermitian")
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    u = identity(n)
    if n == 1 or norm == 0.0:
        return np.real(np.diag(a)).copy(), u
    for _ in range(JACOBI_MAX_SWEEPS):
        off = frob(a - np.diag(np.diag(a)))
        if off < JACOBI_TOL * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-18 * norm:
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if tau == 0.0:
                    t = 1.0
                elif abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                j = identity(n)
                j[p, p] = c
                j[q, q] = c * np.conj(phase)
                j[p, q] = s
                j[q, p] = -s * np.conj(phase)
                a = j.conj().T @ a @ j
                a[p, q] = a[q, p] = 0.0
                u = u @ j
    w = np.real(np.diag(a))
    order = np.argsort(w)
    return w[order], u[:, order]


def psd_sqrt(a: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Hermitian square root (or inverse square root) of a PSD matrix."""
    w, u = hermitian_eigen(a)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if w[0] < -PSD_TOL * scale:
        raise NotPSD(f"matrix has a negative eigenvalue {w[0]:.3g}")
    if inverse:
        if scale == 0.0 or w[0] < PSD_TOL * scale:
            raise NearSingular(f"smallest eigenvalue {w[0]:.3g} too small to invert")
        d = 1.0 / np.sqrt(w)
    else:
        d = np.sqrt(np.clip(w, 0.0, None))
    return (u * d) @ u.conj().T


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value, from the eigenvalues of ``a* a``."""
    a = np.asarray(a, dtype=complex)
    if a.shape == (1, 1):
        return float(abs(a[0, 0]))
    w, _ = hermitian_eigen(a.conj().T @ a)
    return math.sqrt(max(float(w[-1]), 0.0))


def is_unitary(a: np.ndarray, tol: float = 1e-10) -> bool:
    a = np.asarray(a, dtype=complex)
    return unitarity_defect(a) <= tol


def unitarity_defect(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    return frob(a.conj().T @ a - identity(a.shape[0]))


@dataclass(frozen=True)
class GramVerdict:
    passed: bool
    min_eigenvalue: float
    norm: float


def gram_matrix(points: Sequence[complex], kernel_eval: Callable) -> np.ndarray:
    """Block Gram matrix whose ``(r, c)`` block is ``K_{p_c}(p_r)``.

    With this arrangement ``sum c_r* K_{p_c}(p_r) c_c`` is the squared norm of
    ``sum K_{p_c} c_c`` in the kernel's Hilbert space, so the matrix is PSD.
    """
    blocks = [[np.atleast_2d(kernel_eval(pc, pr)) for pc in points] for pr in points]
    return np.block(blocks)


def gram_psd_check(points: Sequence[complex], kernel_eval: Callable, tol: float = 1e-8) -> GramVerdict:
    if len(points) < 1:
        raise ValueError("need at least one point")
    g = gram_matrix(points, kernel_eval)
    w, _ = hermitian_eigen(g)
    norm = float(np.max(np.abs(w)))
    return GramVerdict(bool(w[0] >= -tol * norm), float(w[0]), norm)
