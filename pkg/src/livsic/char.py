"""Characteristic functions from reproducing kernels.

Given a kernel model, the normalised kernel columns

    Phi(z) = K_i(z) K_i(i)^{-1/2},     Psi(z) = K_{-i}(z) K_{-i}(-i)^{-1/2}

determine the characteristic function ``V(z) = b(z) Phi(z)^{-1} Psi(z)``.
Two such functions describe unitarily equivalent operators iff they agree
up to constant unitary factors on either side; :func:`equivalence_test`
searches for those factors.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import cplx
from .errors import LivsicError, PoleProximity, SingularMatrix
from .halfplane import EXCLUSION_RADIUS, PointGrid, blaschke_b
from .models import KernelModel

log = logging.getLogger(__name__)

POLE_GUARD = 1e-10

PROBE_PAIRS = (
    (2j, 1 + 1j),
    (3j, -1 + 1j),
    (1.5j, 0.5 + 2j),
    (0.5 + 0.7j, 2 + 3j),
    (-2 + 0.3j, 4j),
)


def prefetch(model: KernelModel, points) -> None:
    """Warm a model's solution cache for ``points``, their conjugates and +-i."""
    if hasattr(model, "prefetch"):
        pts = {complex(p) for p in points}
        pts |= {p.conjugate() for p in pts} | {1j, -1j}
        model.prefetch(pts)


class CharFunction:
    """Cached normalisers plus evaluators for Phi, Psi and V."""

    def __init__(self, model: KernelModel, c_i: np.ndarray, c_mi: np.ndarray):
        self.model = model
        self.C_i = c_i
        self.C_mi = c_mi
        self.n = model.n

    def phi(self, z: complex) -> np.ndarray:
        return self.model.eval(1j, z) @ self.C_i

    def psi(self, z: complex) -> np.ndarray:
        return self.model.eval(-1j, z) @ self.C_mi

    def v(self, z: complex) -> np.ndarray:
        return charfn_eval(self, z)

    def prefetch(self, points) -> None:
        prefetch(self.model, points)


def build_char(model: KernelModel) -> CharFunction:
    """Normalise ``model`` at ``+-i``.

    Raises
    ------
    NotPSD, NearSingular
        if ``K_i(i)`` or ``K_{-i}(-i)`` is not positive definite.
    """
    prefetch(model, [1j])
    c_i = cplx.psd_sqrt(model.eval(1j, 1j), inverse=True)
    c_mi = cplx.psd_sqrt(model.eval(-1j, -1j), inverse=True)
    return CharFunction(model, c_i, c_mi)


def phi_eval(c: CharFunction, z: complex) -> np.ndarray:
    return c.phi(complex(z))


def psi_eval(c: CharFunction, z: complex) -> np.ndarray:
    return c.psi(complex(z))


def charfn_eval(c: CharFunction, z: complex) -> np.ndarray:
    """``V(z) = b(z) Phi(z)^{-1} Psi(z)``.

    Raises
    ------
    PoleProximity
        when ``Phi(z)`` is numerically singular relative to ``Psi(z)`` or the
        evaluation overflows; this only happens below the real axis.
    """
    z = complex(z)
    if abs(z + 1j) < 1e-14:
        raise PoleProximity("b has a pole at -i", z)
    with np.errstate(over="ignore", invalid="ignore"):
        ph = c.phi(z)
        ps = c.psi(z)
        scale = max(cplx.frob(ps), cplx.frob(ph))
    if not (np.isfinite(scale) and np.all(np.isfinite(ph)) and np.all(np.isfinite(ps))):
        raise PoleProximity(f"kernel overflow at z = {z}", z)
    if c.n == 1:
        if abs(ph[0, 0]) <= POLE_GUARD * scale:
            raise PoleProximity(f"Phi vanishes at z = {z}", z, math.inf)
        return np.array([[blaschke_b(z) * ps[0, 0] / ph[0, 0]]])
    s = cplx.singular_values(ph)
    if s[-1] <= POLE_GUARD * scale:
        raise PoleProximity(f"Phi is singular at z = {z}", z, s[0] / s[-1] if s[-1] else math.inf)
    try:
        inv = cplx.mat_inverse(ph)
    except SingularMatrix as exc:
        raise PoleProximity(f"Phi is singular at z = {z}", z, exc.condition) from exc
    return blaschke_b(z) * (inv @ ps)


class GridResidual(NamedTuple):
    value: float
    worst: tuple = ()
    skipped: tuple = ()

    def __float__(self):
        return float(self.value)


def _pointwise(c: CharFunction, points):
    """Phi, V and b at each point that is not at a pole."""
    out, skipped = {}, []
    for z in points:
        try:
            out[z] = (c.phi(z), charfn_eval(c, z), blaschke_b(z))
        except PoleProximity:
            skipped.append(z)
    return out, tuple(skipped)


def factorization_residual(c: CharFunction, grid: PointGrid | Sequence[complex],
                           same_half_only: bool = False) -> GridResidual:
    """Worst relative residual of the factorization of ``K_lam(z)`` over grid pairs.

    The residual of a pair is divided by ``||K|| + s`` where ``s`` bounds the
    size of the two terms the right-hand side subtracts,
    ``||Phi(z)|| ||Phi(lam)|| (1 + ||V(z)|| ||V(lam)||)/|1 - conj b(lam) b(z)|``.
    For pairs in one half-plane ``s`` is comparable to ``||K||``.  Across the
    axis the kernel can vanish exactly (Paley-Wiener at ``z - conj lam`` a
    multiple of ``pi/L``) while both terms are huge, and a plain division by
    ``||K||`` would measure nothing but cancellation.
    """
    points = list(grid)
    c.prefetch(points)
    vals, skipped = _pointwise(c, points)
    eye = np.eye(c.n)
    worst, where = 0.0, ()
    for lam, (ph_l, v_l, b_l) in vals.items():
        for z, (ph_z, v_z, b_z) in vals.items():
            if abs(z - lam.conjugate()) < EXCLUSION_RADIUS:
                continue
            if same_half_only and (z.imag > 0) != (lam.imag > 0):
                continue
            k = c.model.eval(lam, z)
            den = 1 - b_l.conjugate() * b_z
            rhs = ph_z @ ((eye - v_z @ v_l.conj().T) / den) @ ph_l.conj().T
            s = cplx.frob(ph_z) * cplx.frob(ph_l) * (1 + cplx.frob(v_z) * cplx.frob(v_l)) / abs(den)
            r = cplx.frob(k - rhs) / (cplx.frob(k) + (0.0 if same_half_only else s))
            if not r <= worst:
                worst, where = r, (lam, z)
    return GridResidual(worst, where, skipped)


def involution_defect(c: CharFunction, grid: PointGrid | Sequence[complex]) -> GridResidual:
    """Worst ``||V(z) V(conj z)* - I||_F``; points at poles are skipped."""
    points = list(grid)
    c.prefetch(points)
    eye = np.eye(c.n)
    worst, where, skipped = 0.0, (), []
    for z in points:
        try:
            d = cplx.frob(charfn_eval(c, z) @ charfn_eval(c, z.conjugate()).conj().T - eye)
        except PoleProximity:
            skipped.append(z)
            continue
        if not d <= worst:
            worst, where = d, (z,)
    return GridResidual(worst, where, tuple(skipped))


# ---------------------------------------------------------------------------
# unitary equivalence


@dataclass
class EquivalenceResult:
    status: str
    R: np.ndarray | None = None
    Q: np.ndarray | None = None
    residual: float = math.nan
    unitarity_defect: float = math.nan
    witness: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def equivalent(self) -> bool:
        return self.status == "equivalent_with_certificate"

    def to_dict(self) -> dict:
        d = {"status": self.status, "residual": self.residual, "unitarity_defect": self.unitarity_defect,
             "witness": self.witness, "notes": self.notes}
        if self.R is not None:
            d["R"], d["Q"] = self.R, self.Q
        return d


class _Degenerate(LivsicError):
    pass


def _eig_matched(a: np.ndarray, b: np.ndarray):
    """Eigen-decompose ``a`` and ``b`` and order ``b``'s eigenpairs to match ``a``."""
    da, xa = np.linalg.eig(a)
    db, yb = np.linalg.eig(b)
    scale = 1.0 + max(np.max(np.abs(da)), np.max(np.abs(db)))
    n = da.size
    gaps = [abs(da[i] - da[j]) for i in range(n) for j in range(i + 1, n)]
    if gaps and min(gaps) < 1e-6 * scale:
        raise _Degenerate("repeated eigenvalues")
    best, perm = math.inf, None
    for p in itertools.permutations(range(n)):
        err = sum(abs(da[i] - db[p[i]]) for i in range(n))
        if err < best:
            best, perm = err, p
    if best > 1e-6 * scale:
        raise _Degenerate("spectra do not match")
    return xa, yb[:, list(perm)]


def _matrix_certificate(v1, v2, n):
    """Try the probe pairs in order; return ``(R, Q)`` or ``None``."""
    def transfer(f, z, w):
        return cplx.mat_inverse(f(z)) @ f(w)

    for k, (z, w) in enumerate(PROBE_PAIRS):
        try:
            x, y = _eig_matched(transfer(v1, z, w), transfer(v2, z, w))
        except (_Degenerate, SingularMatrix, PoleProximity, np.linalg.LinAlgError):
            continue
        for z2, w2 in PROBE_PAIRS[k + 1:] + PROBE_PAIRS[:k]:
            try:
                a2 = transfer(v1, z2, w2)
                b2 = transfer(v2, z2, w2)
                nmat = np.linalg.solve(x, a2 @ x)
                mmat = np.linalg.solve(y, b2 @ y)
            except (SingularMatrix, PoleProximity, np.linalg.LinAlgError):
                continue
            ref = np.max(np.abs(mmat))
            if np.any(np.abs(mmat[0, 1:]) < 1e-8 * ref):
                continue
            coef = np.ones(n, dtype=complex)
            coef[1:] = nmat[0, 1:] / mmat[0, 1:]
            q = y @ np.diag(coef) @ np.linalg.inv(x)
            q /= math.sqrt(np.trace(q.conj().T @ q).real / n)
            z0 = PROBE_PAIRS[0][0]
            try:
                r = v1(z0) @ q.conj().T @ cplx.mat_inverse(v2(z0))
            except (SingularMatrix, PoleProximity):
                continue
            return r, q, (z, w), (z2, w2)
    return None


def equivalence_test(c1, c2, grid: PointGrid | Sequence[complex], tol: float = 1e-8) -> EquivalenceResult:
    """Decide whether ``V1 = R V2 Q`` for constant unitaries ``R``, ``Q``.

    The answer is sound but incomplete: a certificate proves equivalence, a
    singular-value mismatch proves inequivalence, and anything else is
    reported as ``no_certificate_found``.

    Parameters
    ----------
    c1, c2 : CharFunction or callable
        Anything with a ``v(z)`` method, or a plain callable ``z -> V(z)``.
    grid : points in the upper half-plane.
    tol : float
    """
    v1 = c1.v if hasattr(c1, "v") else c1
    v2 = c2.v if hasattr(c2, "v") else c2
    points = [p for p in grid if p.imag > 0]
    if not points:
        raise ValueError("equivalence test needs upper half-plane points")
    for c in (c1, c2):
        if hasattr(c, "prefetch"):
            c.prefetch(points + [p for pair in PROBE_PAIRS for p in pair])
    vals1 = [np.atleast_2d(v1(z)) for z in points]
    vals2 = [np.atleast_2d(v2(z)) for z in points]
    n = vals1[0].shape[0]
    if vals2[0].shape[0] != n:
        return EquivalenceResult("not_equivalent", witness={"reason": "dimension mismatch"})

    gap, where = 0.0, points[0]
    for z, a, b in zip(points, vals1, vals2):
        g = float(np.max(np.abs(cplx.singular_values(a) - cplx.singular_values(b))))
        if g > gap:
            gap, where = g, z
    if gap > 10 * tol:
        return EquivalenceResult("not_equivalent", residual=gap,
                                 witness={"point": where, "singular_value_gap": gap})

    def verify(r, q):
        res = max(cplx.frob(a - r @ b @ q) for a, b in zip(vals1, vals2))
        ud = max(cplx.unitarity_defect(r), cplx.unitarity_defect(q))
        return res, ud

    if n == 1:
        probes = [p for pair in PROBE_PAIRS for p in pair]
        for z0 in probes:
            d = complex(np.atleast_2d(v2(z0))[0, 0])
            if abs(d) > tol:
                zeta = complex(np.atleast_2d(v1(z0))[0, 0]) / d
                break
        else:
            return EquivalenceResult("no_certificate_found", notes=["V2 vanishes at every probe"])
        r, q = np.array([[zeta]]), np.array([[1.0 + 0j]])
        res, ud = verify(r, q)
        status = "equivalent_with_certificate" if abs(abs(zeta) - 1) <= tol and res <= tol else "no_certificate_found"
        return EquivalenceResult(status, r, q, res, ud, witness={"probe": z0, "zeta": zeta})

    found = _matrix_certificate(lambda z: np.atleast_2d(v1(z)), lambda z: np.atleast_2d(v2(z)), n)
    if found is None:
        return EquivalenceResult("no_certificate_found", residual=gap,
                                 notes=["eigen-matching failed on every probe pair"])
    r, q, pair, pair2 = found
    res, ud = verify(r, q)
    status = "equivalent_with_certificate" if res <= tol and ud <= tol else "no_certificate_found"
    log.debug("matrix certificate from pairs %s, %s: residual %.3g, defect %.3g", pair, pair2, res, ud)
    return EquivalenceResult(status, r, q, res, ud, witness={"pair": pair, "phase_pair": pair2})
