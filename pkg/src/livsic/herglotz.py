"""Herglotz functions, Clark measures and atom recovery.

For a characteristic function ``V`` and a unitary ``A`` the Cayley-type
transform ``Omega = (I + A V)(I - A V)^{-1}`` has positive real part on the
upper half-plane, and

    K^V_lam(z) = (Omega(z) + Omega(lam)*) / (pi i (conj lam - z))

is a positive kernel.  When the representing measure of ``Omega`` is atomic
the atoms sit where ``Re Omega(x + i eps)`` blows up like ``1/eps``; their
masses are read off from ``pi eps Re Omega`` and then refitted against
``K^V`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import cplx
from .char import CharFunction, GridResidual, charfn_eval
from .errors import FitResidualTooLarge, NearSingular, PoleProximity, SingularMatrix
from .halfplane import EXCLUSION_RADIUS, PointGrid
from .models import herglotz_quotient

FIT_TOL = 1e-4
RICHARDSON_EPS = (1e-3, 5e-4)
GOLDEN = (math.sqrt(5) - 1) / 2


class HerglotzFunction:
    """``Omega_A`` built from a characteristic function.

    Parameters
    ----------
    source : CharFunction
    A : unitary matrix or scalar, default identity.  ``A = i I`` gives
        ``(I + iV)(I - iV)^{-1}``.
    """

    def __init__(self, source: CharFunction, A=None):
        self.source = source
        n = source.n
        if A is None:
            A = np.eye(n, dtype=complex)
        A = np.array(A, dtype=complex)
        if A.ndim == 0:
            A = A * np.eye(n, dtype=complex)
        if A.shape != (n, n):
            raise ValueError(f"Clark parameter must be {n}x{n}")
        if not cplx.is_unitary(A, 1e-10):
            raise ValueError("Clark parameter must be unitary")
        self.A = A
        self.n = n

    def omega(self, z: complex) -> np.ndarray:
        return omega_eval(self, z)

    def kernel(self, lam: complex, z: complex) -> np.ndarray:
        return herglotz_kernel_eval(self, lam, z)


def omega_eval(h: HerglotzFunction, z: complex) -> np.ndarray:
    """``(I + A V(z))(I - A V(z))^{-1}``.

    Raises
    ------
    NearSingular
        if ``I - A V(z)`` cannot be inverted.
    """
    z = complex(z)
    av = h.A @ charfn_eval(h.source, z)
    eye = np.eye(h.n, dtype=complex)
    if h.n == 1:
        d = 1 - av[0, 0]
        if d == 0:
            raise NearSingular(f"1 - A V(z) vanishes at z = {z}")
        return np.array([[(1 + av[0, 0]) / d]])
    try:
        return (eye + av) @ cplx.mat_inverse(eye - av)
    except SingularMatrix as exc:
        raise NearSingular(f"I - A V(z) is singular at z = {z}") from exc


def herglotz_kernel_eval(h: HerglotzFunction, lam: complex, z: complex) -> np.ndarray:
    return herglotz_quotient(h.omega, complex(lam), complex(z))


def re_part(m: np.ndarray) -> np.ndarray:
    """Hermitian real part ``(M + M*)/2``."""
    return 0.5 * (m + m.conj().T)


def min_real_part_eigenvalue(h: HerglotzFunction, points: Sequence[complex]) -> float:
    """Smallest eigenvalue of ``Re Omega`` over ``points`` (expected >= 0 on C+)."""
    worst = math.inf
    for z in points:
        w, _ = cplx.hermitian_eigen(re_part(h.omega(z)))
        worst = min(worst, float(w[0]))
    return worst


def omega_antisymmetry(h: HerglotzFunction, points: Sequence[complex]) -> GridResidual:
    """Worst ``||Omega(z) + Omega(conj z)*||`` where both sides evaluate."""
    worst, where, skipped = 0.0, (), []
    for z in points:
        try:
            d = cplx.frob(h.omega(z) + h.omega(z.conjugate()).conj().T)
        except (PoleProximity, NearSingular):
            skipped.append(z)
            continue
        if not d <= worst:
            worst, where = d, (z,)
    return GridResidual(worst, where, tuple(skipped))


def w_multiplier(h: HerglotzFunction, c: CharFunction, z: complex) -> np.ndarray:
    """``W(z) = sqrt(pi) (z + i) Phi(z) (Omega(z) + I)^{-1}``."""
    eye = np.eye(c.n, dtype=complex)
    return math.sqrt(math.pi) * (z + 1j) * c.phi(z) @ cplx.mat_inverse(h.omega(z) + eye)


def w_multiplier_residual(h: HerglotzFunction, c: CharFunction, grid: PointGrid | Sequence[complex]) -> GridResidual:
    """Worst relative residual of ``K_lam(z) = W(z) K^V_lam(z) W(lam)*``.

    As for the factorization residual, each pair is normalised by
    ``||K||`` plus the size of the terms whose cancellation produces
    ``K^V`` (relevant only across the real axis).
    """
    points = list(grid)
    c.prefetch(points)
    vals, skipped = {}, []
    for z in points:
        try:
            vals[z] = (w_multiplier(h, c, z), h.omega(z))
        except (PoleProximity, NearSingular, SingularMatrix):
            skipped.append(z)
    worst, where = 0.0, ()
    for lam, (w_l, om_l) in vals.items():
        for z, (w_z, om_z) in vals.items():
            if abs(z - lam.conjugate()) < EXCLUSION_RADIUS:
                continue
            k = c.model.eval(lam, z)
            kv = (om_z + om_l.conj().T) / (math.pi * 1j * (lam.conjugate() - z))
            rhs = w_z @ kv @ w_l.conj().T
            s = 0.0
            if (z.imag > 0) != (lam.imag > 0):
                s = cplx.frob(w_z) * cplx.frob(w_l) * (cplx.frob(om_z) + cplx.frob(om_l)) / (
                    math.pi * abs(lam.conjugate() - z))
            r = cplx.frob(k - rhs) / (cplx.frob(k) + s)
            if not r <= worst:
                worst, where = r, (lam, z)
    return GridResidual(worst, where, tuple(skipped))


# ---------------------------------------------------------------------------
# atomic measures


@dataclass
class AtomicMeasure:
    locations: np.ndarray
    weights: list
    residual: float = math.nan
    initial_weights: list = field(default_factory=list)

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=float)
        if np.any(np.diff(self.locations) <= 0):
            raise ValueError("atom locations must be strictly increasing")

    def atoms(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.locations.tolist(), self.weights))

    def kernel(self, lam: complex, z: complex) -> np.ndarray:
        """``(1/pi^2) sum W_j / ((t_j - conj lam)(t_j - z))``."""
        out = np.zeros_like(self.weights[0], dtype=complex)
        for t, w in zip(self.locations, self.weights):
            out = out + w / ((t - lam.conjugate()) * (t - z))
        return out / math.pi ** 2


def _trace_re_omega(h: HerglotzFunction, x: float, eps: float) -> float:
    return float(np.trace(h.omega(complex(x, eps))).real)


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def atom_locate(h: HerglotzFunction, xgrid: PointGrid | Sequence[complex], eps0: float = 1e-3) -> list[float]:
    """Candidate atom locations from peaks of ``tr Re Omega(x + i eps0)``.

    The sampling grid must be finer than ``eps0`` or narrow peaks can fall
    between samples.
    """
    xs = np.array(sorted(complex(p).real for p in xgrid))
    if xs.size < 3:
        return []
    vals = []
    for x in xs:
        try:
            vals.append(_trace_re_omega(h, x, eps0))
        except (PoleProximity, NearSingular):
            vals.append(math.inf)
    vals = np.array(vals)
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        return []
    floor = 10.0 * float(np.median(np.abs(finite)))
    found = []
    for k in range(1, xs.size - 1):
        v = vals[k]
        if v > floor and v >= vals[k - 1] and v > vals[k + 1]:
            def f(x):
                try:
                    return _trace_re_omega(h, x, eps0)
                except (PoleProximity, NearSingular):
                    return math.inf
            found.append(_golden_max(f, xs[k - 1], xs[k + 1]))
    return found


def initial_weight(h: HerglotzFunction, x: float) -> np.ndarray:
    """``pi eps Re Omega(x + i eps)`` extrapolated to ``eps -> 0``."""
    e1, e2 = RICHARDSON_EPS
    w1 = math.pi * e1 * re_part(h.omega(complex(x, e1)))
    w2 = math.pi * e2 * re_part(h.omega(complex(x, e2)))
    return (e1 * w2 - e2 * w1) / (e1 - e2)


def _psd_project(w: np.ndarray) -> np.ndarray:
    ev, u = cplx.hermitian_eigen(re_part(w))
    return (u * np.clip(ev, 0.0, None)) @ u.conj().T


def default_sample_pairs(count: int) -> list[tuple[complex, complex]]:
    """Deterministic pairs in the upper half-plane."""
    xs = np.linspace(-2.5, 2.5, count)
    ys = (0.5, 1.0, 2.0)
    pts = [complex(x, ys[k % 3]) for k, x in enumerate(xs)]
    return [(pts[k], pts[(3 * k + 1) % count]) for k in range(count)]


def atom_fit(h: HerglotzFunction, locations: Sequence[float], sample_pairs=None,
             tol: float = FIT_TOL) -> AtomicMeasure:
    """Fit matrix masses at ``locations`` so that the atomic kernel matches ``K^V``.

    Raises
    ------
    FitResidualTooLarge
        if the best fit misses ``K^V`` by more than ``tol`` (relative), which
        signals a non-atomic or under-resolved measure.
    """
    locs = np.array(sorted(float(x) for x in locations))
    if np.any(np.diff(locs) <= 0):
        raise ValueError("locations must be distinct")
    m = locs.size
    if sample_pairs is None:
        sample_pairs = default_sample_pairs(max(2 * m, 8))
    sample_pairs = [(complex(a), complex(b)) for a, b in sample_pairs]
    if len(sample_pairs) < 2 * m:
        raise ValueError("need at least two sample pairs per atom")
    initial = [initial_weight(h, x) for x in locs]
    n = h.n
    targets = np.array([h.kernel(lam, z) for lam, z in sample_pairs])
    design = np.array([[1.0 / (math.pi ** 2 * (t - lam.conjugate()) * (t - z)) for t in locs]
                       for lam, z in sample_pairs])
    rhs = targets.reshape(len(sample_pairs), n * n)
    sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    weights = [_psd_project(sol[j].reshape(n, n)) for j in range(m)]
    measure = AtomicMeasure(locs, weights, initial_weights=initial)
    res = max(cplx.frob(measure.kernel(lam, z) - k) / cplx.frob(k) for (lam, z), k in zip(sample_pairs, targets))
    measure.residual = float(res)
    if res > tol:
        raise FitResidualTooLarge(f"atomic fit residual {res:.3g} exceeds {tol:g}", res)
    return measure
