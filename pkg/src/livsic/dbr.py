"""deBranges-Rovnyak kernels, isometric multipliers and boundary diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cplx
from .char import CharFunction, charfn_eval
from .errors import DomainViolation, PoleProximity
from .halfplane import blaschke_b_inverse, radial_sequence
from .herglotz import HerglotzFunction

LOG_CLAMP = 1.0 - 1e-12
EPS_LADDER = (1e-2, 1e-3, 1e-4)


class ContractiveFunction:
    """A matrix function ``z -> Theta(z)`` with ``||Theta|| <= 1`` on C+."""

    def __init__(self, theta: Callable[[complex], object], n: int = 1):
        self._theta = theta
        self.n = n

    def __call__(self, z: complex) -> np.ndarray:
        out = np.array(self._theta(complex(z)), dtype=complex)
        return out.reshape(1, 1) if out.ndim == 0 else out

    @classmethod
    def from_char(cls, c: CharFunction) -> "ContractiveFunction":
        return cls(lambda z: charfn_eval(c, z), c.n)


def _as_theta(theta) -> ContractiveFunction:
    if isinstance(theta, ContractiveFunction):
        return theta
    if isinstance(theta, CharFunction):
        return ContractiveFunction.from_char(theta)
    return ContractiveFunction(theta)


def dbr_kernel_eval(theta, w: complex, z: complex) -> np.ndarray:
    """``(i/2pi) (I - Theta(z) Theta(w)*)/(z - conj w)``."""
    theta = _as_theta(theta)
    w, z = complex(w), complex(z)
    tz, tw = theta(z), theta(w)
    eye = np.eye(tz.shape[0])
    return (1j / (2 * math.pi)) * (eye - tz @ tw.conj().T) / (z - w.conjugate())


def conj_kernel_eval(theta, lam: complex, z: complex) -> np.ndarray:
    """``(1/2pi i) (Theta(z) - Theta(lam))/(z - lam)``, with the derivative on the diagonal."""
    theta = _as_theta(theta)
    lam, z = complex(lam), complex(z)
    if abs(z - lam) < 1e-6:
        h = min(1e-3, 0.1 * abs(lam.imag))
        quotient = (theta(lam + h) - theta(lam - h)) / (2 * h)
    else:
        quotient = (theta(z) - theta(lam)) / (z - lam)
    return quotient / (2j * math.pi)


def u_multiplier(c: CharFunction, z: complex) -> np.ndarray:
    return math.sqrt(math.pi) * (z + 1j) * c.phi(z)


def q_multiplier(v: np.ndarray, variant: str = "i") -> np.ndarray:
    """``(I - iV)/2``; ``variant="plain"`` gives ``(I - V)/2`` for comparison."""
    eye = np.eye(v.shape[0])
    if variant == "i":
        return 0.5 * (eye - 1j * v)
    if variant == "plain":
        return 0.5 * (eye - v)
    raise ValueError(f"unknown Q variant {variant!r}")


def multiplier_residuals(c: CharFunction, grid, q_variant: str = "i") -> tuple[float, float]:
    """Worst relative residuals of ``K = U Delta U*`` and ``Delta = Q K^V Q*`` on C+ pairs.

    ``Delta`` is the deBranges-Rovnyak kernel of ``V`` and ``K^V`` the
    Herglotz kernel of ``Omega = (I + iV)(I - iV)^{-1}``.
    """
    points = [complex(p) for p in grid if p.imag > 0]
    c.prefetch(points)
    h = HerglotzFunction(c, 1j)
    theta = ContractiveFunction.from_char(c)
    cache = {z: (u_multiplier(c, z), q_multiplier(charfn_eval(c, z), q_variant)) for z in points}
    u_res = q_res = 0.0
    for lam in points:
        u_l, q_l = cache[lam]
        for z in points:
            u_z, q_z = cache[z]
            delta = dbr_kernel_eval(theta, lam, z)
            k = c.model.eval(lam, z)
            u_res = max(u_res, cplx.frob(k - u_z @ delta @ u_l.conj().T) / cplx.frob(k))
            kv = h.kernel(lam, z)
            q_res = max(q_res, cplx.frob(delta - q_z @ kv @ q_l.conj().T) / cplx.frob(delta))
    return u_res, q_res


def boundary_modulus(c: CharFunction, xgrid, eps: float = 1e-4) -> list[float]:
    """``sigma_max(V(x + i eps))`` along real abscissae."""
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-6, 1e-2]")
    xs = [complex(p).real for p in xgrid]
    for x in xs:
        for lo, hi in getattr(c.model, "slits", ()):
            if lo <= x <= hi:
                raise DomainViolation(f"{x} lies on a slit of {c.model.name}", x)
    c.prefetch([complex(x, eps) for x in xs])
    return [cplx.operator_norm(charfn_eval(c, complex(x, eps))) for x in xs]


def _simpson(y: np.ndarray, h: float) -> float:
    return float(h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum()))


@dataclass
class ExtremeVerdict:
    verdict: str
    integrals: dict = field(default_factory=dict)
    ratios: list = field(default_factory=list)
    changes: list = field(default_factory=list)
    near_unitary_mass: float = 0.0


def log_defect(v: np.ndarray) -> float:
    """``tr log(I - |V|)`` with the singular values clamped below 1."""
    s = cplx.singular_values(v) if v.shape[0] > 1 else np.array([abs(v[0, 0])])
    return float(np.sum(np.log1p(-np.minimum(s, LOG_CLAMP))))


def extreme_test(c: CharFunction, R: float = 3.0, eps_ladder: Sequence[float] = EPS_LADDER,
                 points: int = 6001) -> ExtremeVerdict:
    """Numerical classifier for divergence of ``int tr log(I - |V|) dx/(1 + x^2)``.

    ``extreme`` when the truncated integral keeps growing by a factor 1.5
    per ladder step, or when ``sigma_max(V) >= 1 - 1e-3`` on a set of Poisson
    mass at least 0.05 at the smallest ``eps``; ``non_extreme`` when the
    integral changes by less than 1% over the last ladder step (earlier steps
    carry an O(eps) drift that says nothing about convergence); otherwise
    ``indeterminate``.
    """
    if R < 3:
        raise ValueError("R must be at least 3")
    if points % 2 == 0:
        points += 1
    xs = np.linspace(-R, R, points)
    hx = xs[1] - xs[0]
    poisson = 1.0 / (1.0 + xs * xs)
    integrals, near_mass = {}, 0.0
    for eps in eps_ladder:
        zs = [complex(x, eps) for x in xs]
        c.prefetch(zs)
        vals = [charfn_eval(c, z) for z in zs]
        integrand = np.array([log_defect(v) for v in vals]) * poisson
        integrals[eps] = _simpson(integrand, hx)
        if eps == min(eps_ladder):
            smax = np.array([cplx.operator_norm(v) for v in vals])
            near_mass = _simpson(np.where(smax >= 1 - 1e-3, poisson / math.pi, 0.0), hx)
    seq = [integrals[e] for e in eps_ladder]
    ratios = [b / a if a != 0 else math.inf for a, b in zip(seq, seq[1:])]
    changes = [abs(b - a) / abs(a) if a != 0 else math.inf for a, b in zip(seq, seq[1:])]
    if all(r >= 1.5 for r in ratios) or near_mass >= 0.05:
        verdict = "extreme"
    elif changes and changes[-1] < 0.01:
        verdict = "non_extreme"
    else:
        verdict = "indeterminate"
    return ExtremeVerdict(verdict, integrals, ratios, changes, near_mass)


@dataclass
class AngularVerdict:
    verdict: str
    radii: list
    quotients: list
    limit: float = math.nan
    truncated_at: float | None = None


def angular_derivative_probe(c: CharFunction, k=None, depth: int = 12) -> AngularVerdict:
    """Julia quotients ``(1 - ||V(b^{-1}(r)) k||)/(1 - r)`` as ``r -> 1``.

    Points whose evaluation overflows or hits a pole end the sequence early
    (recorded in ``truncated_at``).  Divergence is declared when the last
    quotient is at least twice the one three steps earlier.
    """
    if depth < 8:
        raise ValueError("depth must be at least 8")
    k = np.ones(c.n, dtype=complex) if k is None else np.asarray(k, dtype=complex).reshape(c.n)
    if abs(np.linalg.norm(k) - 1) > 1e-12:
        k = k / np.linalg.norm(k)
    radii, quotients, cut = [], [], None
    for r in radial_sequence("disk", depth):
        rr = r.real
        try:
            v = charfn_eval(c, blaschke_b_inverse(rr))
        except PoleProximity:
            cut = rr
            break
        if not np.all(np.isfinite(v)):
            cut = rr
            break
        radii.append(rr)
        quotients.append(float((1 - np.linalg.norm(v @ k)) / (1 - rr)))
    if len(quotients) < 4:
        return AngularVerdict("indeterminate", radii, quotients, truncated_at=cut)
    if quotients[-4] > 0 and quotients[-1] >= 2 * quotients[-4]:
        return AngularVerdict("divergent", radii, quotients, math.inf, cut)
    limit = 2 * quotients[-1] - quotients[-2]
    return AngularVerdict("finite", radii, quotients, limit, cut)
