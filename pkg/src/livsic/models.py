"""Kernel models ``K_lambda(z) = Gamma(z)* Gamma(lambda)``.

Every model exposes ``eval(lam, z)`` returning an ``n x n`` complex matrix
together with the data the verification code needs: the points where the
derived characteristic function has poles (``char_singularities``), real
intervals where evaluation is forbidden (``slits``) and whether real points
are admitted at all (``boundary_evaluable``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cplx
from .errors import BranchAmbiguity, DimensionMismatch, DomainViolation, NotHermitian, StepCountTooSmall
from .halfplane import EXCLUSION_RADIUS, Exclusions, PointGrid

REMOVABLE_RADIUS = 1e-6
RICHARDSON_TOL = 1e-6


class KernelModel:
    """Base class.  Subclasses implement :meth:`_eval`."""

    name = "kernel"
    n = 1
    boundary_evaluable = False
    slits: tuple = ()

    def char_singularities(self) -> tuple:
        """Points (in the lower half-plane) where V is known to blow up."""
        return ()

    def exclusions(self) -> Exclusions:
        return Exclusions(tuple(self.char_singularities()), tuple(self.slits), EXCLUSION_RADIUS)

    def check_point(self, w: complex) -> None:
        if w.imag == 0.0 and not self.boundary_evaluable:
            raise DomainViolation(f"{self.name}: real point {w.real!r} is not admitted", w)
        for lo, hi in self.slits:
            if w.imag == 0.0 and lo <= w.real <= hi:
                raise DomainViolation(f"{self.name}: point {w.real!r} lies on a slit", w)

    def eval(self, lam: complex, z: complex) -> np.ndarray:
        lam, z = complex(lam), complex(z)
        self.check_point(lam)
        self.check_point(z)
        return self._eval(lam, z)

    def eval_many(self, lam: complex, zs: Sequence[complex]) -> list[np.ndarray]:
        return [self.eval(lam, z) for z in zs]

    def _eval(self, lam: complex, z: complex) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def notes(self) -> list[str]:
        return []

    def describe(self) -> dict:
        return {"type": self.name, "n": self.n}


def kernel_eval(model: KernelModel, lam: complex, z: complex) -> np.ndarray:
    """``K_lam(z)`` for ``model`` with domain checks."""
    return model.eval(lam, z)


# ---------------------------------------------------------------------------
# Paley-Wiener


class PaleyWienerModel(KernelModel):
    """Band-limited functions on ``[-L, L]``: ``K = 2 sin(L(z - conj lam))/(z - conj lam)``."""

    name = "paley_wiener"
    boundary_evaluable = True

    def __init__(self, half_length: float = math.pi):
        if not half_length > 0:
            raise ValueError("half_length must be positive")
        self.L = float(half_length)

    def _eval(self, lam, z):
        w = z - lam.conjugate()
        L = self.L
        if abs(w) < REMOVABLE_RADIUS:
            t = (L * w) ** 2
            val = 2 * L * (1 - t / 6 + t * t / 120 - t ** 3 / 5040)
        else:
            val = 2 * np.sin(L * w) / w
        return np.array([[val]], dtype=complex)

    def char_singularities(self):
        # zeros of Phi(z) ~ sin(L(z+i))/(z+i) plus the pole of b at -i
        kmax = int(50 * self.L / math.pi) + 1
        return tuple(complex(k * math.pi / self.L, -1.0) for k in range(-kmax, kmax + 1))

    def notes(self):
        return [f"K_i(i) = sinh(2L) = {math.sinh(2 * self.L):.12g}; the printed value for L = pi is sinh(pi)"]

    def describe(self):
        return {"type": self.name, "half_length": self.L, "n": 1}


# ---------------------------------------------------------------------------
# free operator on the half-line


def sigma(w: complex) -> complex:
    """Square root of a nonreal ``w`` with positive imaginary part."""
    s = np.sqrt(complex(w))
    return -s if s.imag < 0 else s


class FreeHalfLineModel(KernelModel):
    """``-d^2/dx^2`` on the half-line: ``K = i/(sigma(conj lam) - conj(sigma(conj z)))``."""

    name = "free_half_line"

    def _eval(self, lam, z):
        den = sigma(lam.conjugate()) - sigma(z.conjugate()).conjugate()
        return np.array([[1j / den]], dtype=complex)


# ---------------------------------------------------------------------------
# Sturm-Liouville on a finite interval


def _as_coefficient(c) -> Callable[[np.ndarray], np.ndarray]:
    if callable(c):
        def f(x, c=c):
            out = np.asarray(c(x), dtype=float)
            return np.broadcast_to(out, np.shape(x)).astype(float) if out.ndim == 0 else out
        return f
    value = float(c)
    return lambda x: np.full(np.shape(x), value)


class SturmLiouvilleModel(KernelModel):
    """Regular operator ``-(p f')' + q f`` on ``[a, b]`` with base point ``x0``.

    The solutions ``u_z`` and ``v_z`` of ``-(p f')' + q f = z f`` with
    ``(f, p f')(x0) = (1, 0)`` and ``(0, 1)`` are integrated by fixed-step RK4
    on both sides of ``x0`` and sampled at the ``2 * quad_panels + 1`` Simpson
    nodes.  The kernel entry ``(i, j)`` is ``int y_i(z) y_j(conj lam) dx`` with
    ``y = (u, v)``; for real coefficients ``conj(y(conj z)) = y(z)``, so this
    is ``Gamma(z)* Gamma(lam)``.
    """

    name = "sturm_liouville"
    n = 2
    boundary_evaluable = True

    def __init__(self, a: float = 0.0, b: float = math.pi, p=1.0, q=0.0, x0: float | None = None,
                 ode_steps: int = 4096, quad_panels: int = 512, check_steps: bool = True):
        if not a < b:
            raise ValueError("need a < b")
        x0 = 0.5 * (a + b) if x0 is None else float(x0)
        if not a < x0 < b:
            raise ValueError("x0 must be interior")
        if ode_steps < 1 or quad_panels < 1:
            raise ValueError("ode_steps and quad_panels must be positive")
        self.a, self.b, self.x0 = float(a), float(b), x0
        self.p, self.q = _as_coefficient(p), _as_coefficient(q)
        self._p_spec, self._q_spec = p, q
        self.ode_steps, self.quad_panels = int(ode_steps), int(quad_panels)
        self.nodes = np.linspace(self.a, self.b, 2 * self.quad_panels + 1)
        h = (self.b - self.a) / (2 * self.quad_panels)
        w = np.full(self.nodes.size, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        self.weights = w * h / 3.0
        pv = self.p(self.nodes)
        if np.any(pv <= 0) or not np.all(np.isfinite(pv)) or not np.all(np.isfinite(self.q(self.nodes))):
            raise ValueError("p must be positive and p, q finite on [a, b]")
        self._cache: dict[complex, np.ndarray] = {}
        self._check_steps = check_steps
        self._checked = False
        self._plans: dict[int, tuple] = {}

    # -- ODE ---------------------------------------------------------------

    def _plan(self, steps: int):
        """Step schedule: for each direction, list of (start, h, node index or -1)."""
        if steps in self._plans:
            return self._plans[steps]
        nodes = self.nodes
        htarget = max(self.b - self.x0, self.x0 - self.a) / steps
        j = int(np.searchsorted(nodes, self.x0, side="right")) - 1
        on_node = abs(nodes[j] - self.x0) <= 1e-14 * (self.b - self.a)
        out = []
        for direction in (+1, -1):
            if direction > 0:
                targets = list(range(j + 1, nodes.size))
            else:
                targets = list(range(j if not on_node else j - 1, -1, -1))
            xs, hs, marks = [], [], []
            x = self.x0
            for k in targets:
                seg = nodes[k] - x
                m = max(1, math.ceil(abs(seg) / htarget - 1e-9))
                h = seg / m
                for s in range(m):
                    xs.append(x + s * h)
                    hs.append(h)
                    marks.append(k if s == m - 1 else -1)
                x = nodes[k]
            xs, hs = np.array(xs), np.array(hs)
            coeff = [(1.0 / self.p(xs + c * hs), self.q(xs + c * hs)) for c in (0.0, 0.5, 1.0)]
            out.append((hs, np.array(marks), coeff))
        self._plans[steps] = (j if on_node else -1, out)
        return self._plans[steps]

    def _integrate(self, zs: np.ndarray, steps: int) -> np.ndarray:
        """Return f-values, shape (2, nodes, len(zs)): index 0 is u, 1 is v."""
        base, directions = self._plan(steps)
        m = zs.size
        out = np.empty((2, self.nodes.size, m), dtype=complex)
        zz = np.concatenate([zs, zs])
        y0 = np.zeros((2, 2 * m), dtype=complex)
        y0[0, :m] = 1.0
        y0[1, m:] = 1.0
        if base >= 0:
            out[0, base], out[1, base] = y0[0, :m], y0[0, m:]
        for hs, marks, ((ip0, q0), (ip1, q1), (ip2, q2)) in directions:
            y = y0.copy()
            for s in range(hs.size):
                h = hs[s]
                k1f, k1g = ip0[s] * y[1], (q0[s] - zz) * y[0]
                f2, g2 = y[0] + 0.5 * h * k1f, y[1] + 0.5 * h * k1g
                k2f, k2g = ip1[s] * g2, (q1[s] - zz) * f2
                f3, g3 = y[0] + 0.5 * h * k2f, y[1] + 0.5 * h * k2g
                k3f, k3g = ip1[s] * g3, (q1[s] - zz) * f3
                f4, g4 = y[0] + h * k3f, y[1] + h * k3g
                k4f, k4g = ip2[s] * g4, (q2[s] - zz) * f4
                y = np.stack([y[0] + h / 6 * (k1f + 2 * k2f + 2 * k3f + k4f),
                              y[1] + h / 6 * (k1g + 2 * k2g + 2 * k3g + k4g)])
                k = marks[s]
                if k >= 0:
                    out[0, k], out[1, k] = y[0, :m], y[0, m:]
        return out

    def richardson_defect(self, zs: Sequence[complex]) -> float:
        zs = np.asarray(zs, dtype=complex)
        coarse = self._integrate(zs, self.ode_steps)
        fine = self._integrate(zs, 2 * self.ode_steps)
        scale = np.max(np.abs(fine))
        return float(np.max(np.abs(coarse - fine)) / scale)

    def _ensure_checked(self):
        if self._check_steps and not self._checked:
            d = self.richardson_defect([1j, -1j, 3 + 10j])
            if d > RICHARDSON_TOL:
                raise StepCountTooSmall(f"RK4 with {self.ode_steps} steps differs from the doubled run by {d:.2e}")
            self._checked = True

    def prefetch(self, zs: Sequence[complex]) -> None:
        """Integrate every uncached ``z`` in one vectorised pass."""
        self._ensure_checked()
        todo = sorted({complex(z) for z in zs} - self._cache.keys(), key=lambda c: (c.real, c.imag))
        if not todo:
            return
        sol = self._integrate(np.array(todo), self.ode_steps)
        for k, z in enumerate(todo):
            self._cache[z] = sol[:, :, k].copy()

    def solutions(self, z: complex) -> np.ndarray:
        z = complex(z)
        if z not in self._cache:
            self.prefetch([z])
        return self._cache[z]

    def _eval(self, lam, z):
        self.prefetch([z, lam.conjugate()])
        yz = self.solutions(z)
        yl = self.solutions(lam.conjugate())
        return (yz * self.weights) @ yl.T

    def describe(self):
        return {"type": self.name, "interval": [self.a, self.b], "x0": self.x0,
                "ode_steps": self.ode_steps, "quad_panels": self.quad_panels, "n": 2}


def sl_solve(model: SturmLiouvilleModel, z: complex, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Sampled ``(u_z, v_z)`` at the model's quadrature nodes.

    Raises
    ------
    StepCountTooSmall
        if ``check`` and halving the step changes the solution by more than
        ``1e-6`` relative.
    """
    if check:
        d = model.richardson_defect([z])
        if d > RICHARDSON_TOL:
            raise StepCountTooSmall(f"Richardson defect {d:.2e} at z = {z}")
    y = model.solutions(z)
    return y[0].copy(), y[1].copy()


# ---------------------------------------------------------------------------
# Toeplitz operator with slit-domain symbol


class ToeplitzSlitModel(KernelModel):
    """Symbol ``g = i (q + p)/(q - p)`` with ``p(w) = w`` and ``q(w) = (w - a)/(1 - a w)``.

    ``g`` maps the disk onto the plane minus two real slits.  ``G`` below is
    its inverse, optionally post-composed with a disk automorphism
    ``w -> e^{i theta}(w - c)/(1 - conj(c) w)``, which is the inverse of the
    pre-composed symbol ``g o phi``.

    Parameters
    ----------
    a : float in (0, 1)
    square_variant : bool
        Use the symbol ``g^2`` instead, giving a 2 x 2 kernel assembled from
        ``G(+sqrt(z))`` and ``G(-sqrt(z))`` (principal root).
    mirrored : bool
        Use ``z -> G(-z)``, the inverse of ``-g``.  This is the map printed in
        closed form for ``a = 1/2``; it swaps the roles of ``i`` and ``-i``.
    """

    name = "toeplitz_slit"

    def __init__(self, a: float = 0.5, square_variant: bool = False, mirrored: bool = False,
                 automorphism: tuple | None = None):
        if not 0 < a < 1:
            raise ValueError("a must lie in (0, 1)")
        self.a = float(a)
        self.square_variant = bool(square_variant)
        self.mirrored = bool(mirrored)
        self.n = 2 if square_variant else 1
        self.automorphism = None
        if automorphism is not None:
            c, theta = complex(automorphism[0]), float(automorphism[1])
            if abs(c) >= 1:
                raise ValueError("automorphism centre must lie in the disk")
            self.automorphism = (c, theta)
        edge = math.sqrt(1.0 / self.a ** 2 - 1.0)
        self.edge = edge
        if square_variant:
            self.slits = ((edge * edge, math.inf),)
        else:
            self.slits = ((-math.inf, -edge), (edge, math.inf))

    def g(self, w: complex) -> complex:
        """Forward symbol (without automorphism or mirroring)."""
        q = (w - self.a) / (1 - self.a * w)
        return 1j * (q + w) / (q - w)

    def _ginv_raw(self, z: complex) -> complex:
        a = self.a
        if z == -1j:
            return complex(a)
        d = np.sqrt(a * a * (z * z + 1) - 1)
        big = max((1j + d, 1j - d), key=abs)
        r1 = big / (a * (z + 1j))
        r2 = -a * (z - 1j) / big
        inside = [r for r in (r1, r2) if abs(r) < 1 - 1e-15]
        if len(inside) != 1:
            raise BranchAmbiguity(f"{len(inside)} square-root branches give |g^-1({z})| < 1")
        return complex(inside[0])

    def ginv(self, z: complex) -> complex:
        z = complex(z)
        w = self._ginv_raw(-z if self.mirrored else z)
        if self.automorphism is not None:
            c, theta = self.automorphism
            w = complex(np.exp(1j * theta) * (w - c) / (1 - c.conjugate() * w))
        return w

    def _points(self, z: complex) -> list[complex]:
        if not self.square_variant:
            return [self.ginv(z)]
        r = np.sqrt(z)
        return [self.ginv(r), self.ginv(-r)]

    def check_point(self, w):
        if w.imag == 0.0:
            x = w.real
            for lo, hi in self.slits:
                if lo <= x <= hi:
                    raise DomainViolation(f"{self.name}: point {x!r} lies on a slit", w)

    def _eval(self, lam, z):
        gz = np.array(self._points(z))
        gl = np.array(self._points(lam))
        return 1.0 / (1.0 - np.outer(gz, gl.conj()))

    def char_singularities(self):
        return (-1j,)

    boundary_evaluable = True

    def describe(self):
        d = {"type": self.name, "a": self.a, "square_variant": self.square_variant,
             "mirrored": self.mirrored, "n": self.n}
        if self.automorphism:
            c, th = self.automorphism
            d["automorphism"] = [[c.real, c.imag], th]
        return d


def g_inverse_eval(model: ToeplitzSlitModel, z: complex) -> complex:
    return model.ginv(z)


# ---------------------------------------------------------------------------
# atomic measure


class AtomicMeasureModel(KernelModel):
    """Cauchy transforms of a finite atomic matrix measure.

    ``K_lam(z) = sum_j W_j / ((x_j - z)(x_j - conj lam))``.
    """

    name = "atomic"

    def __init__(self, atoms: Sequence[tuple[float, object]]):
        if not atoms:
            raise ValueError("need at least one atom")
        xs = [float(x) for x, _ in atoms]
        if len(set(xs)) != len(xs):
            raise ValueError("atom locations must be distinct")
        ws = [cplx.as_cmatrix(w) for _, w in atoms]
        n = ws[0].shape[0]
        for w in ws:
            if w.shape != (n, n):
                raise DimensionMismatch("all weights must have the same size")
            ev, _ = cplx.hermitian_eigen(w)
            if ev[0] < -1e-12 * max(1.0, abs(ev[-1])):
                raise ValueError("weights must be positive semidefinite")
        order = np.argsort(xs)
        self.x = np.array(xs)[order]
        self.W = [ws[k] for k in order]
        self.n = n
        self.total_mass = sum(self.W)

    def _eval(self, lam, z):
        out = np.zeros((self.n, self.n), dtype=complex)
        for x, w in zip(self.x, self.W):
            out += w / ((x - z) * (x - lam.conjugate()))
        return out

    def notes(self):
        return ["finite total mass: the associated symmetric operator is not densely defined"]

    def describe(self):
        return {"type": self.name, "n": self.n, "atoms": [[float(x), w] for x, w in zip(self.x, self.W)]}


# ---------------------------------------------------------------------------
# kernels built directly from a contractive function


def cayley_omega(v: np.ndarray, clark: np.ndarray) -> np.ndarray:
    """``(I + A V)(I - A V)^{-1}``."""
    n = v.shape[0]
    av = clark @ v
    eye = np.eye(n, dtype=complex)
    return (eye + av) @ cplx.mat_inverse(eye - av)


def herglotz_quotient(omega: Callable[[complex], np.ndarray], lam: complex, z: complex) -> np.ndarray:
    """``(Omega(z) + Omega(lam)*)/(pi i (conj lam - z))``.

    Near ``z = conj lam`` the quotient is replaced by its limit
    ``i Omega'(z)/pi``, which assumes ``Omega(conj w) = -Omega(w)*``.
    """
    d = lam.conjugate() - z
    if abs(d) < REMOVABLE_RADIUS:
        mid = 0.5 * (z + lam.conjugate())
        h = min(1e-4, 1e-2 * abs(mid.imag))
        deriv = (omega(mid + h) - omega(mid - h)) / (2 * h)
        return 1j * deriv / math.pi
    return (omega(z) + omega(lam).conj().T) / (math.pi * 1j * d)


class DirectCharModel(KernelModel):
    """Herglotz kernel of a prescribed contractive ``V`` with ``V(i) = 0``.

    ``V`` is only ever evaluated on the upper half-plane; ``Omega`` is
    continued to the lower half-plane by ``Omega(z) = -Omega(conj z)*``.
    With the Clark parameter ``A = I`` used here the characteristic function
    the factorization engine extracts from this kernel is ``V`` itself.
    """

    name = "direct"

    def __init__(self, v: Callable[[complex], object], n: int = 1, label: str = "direct"):
        self._v = v
        self.n = int(n)
        self.label = label
        v_i = self.v(1j)
        if cplx.frob(v_i) > 1e-8:
            raise ValueError("V(i) must vanish")

    def v(self, z: complex) -> np.ndarray:
        out = np.array(self._v(complex(z)), dtype=complex)
        out = out.reshape(1, 1) if out.ndim == 0 else out
        if out.shape != (self.n, self.n):
            raise DimensionMismatch(f"V returned shape {out.shape}, expected {(self.n, self.n)}")
        return out

    def omega(self, z: complex) -> np.ndarray:
        eye = np.eye(self.n, dtype=complex)
        if z.imag > 0:
            return cayley_omega(self.v(z), eye)
        return -cayley_omega(self.v(z.conjugate()), eye).conj().T

    def _eval(self, lam, z):
        return herglotz_quotient(self.omega, lam, z)

    def describe(self):
        return {"type": self.name, "label": self.label, "n": self.n}


# ---------------------------------------------------------------------------
# model validation


def validate_model(model: KernelModel, grid: PointGrid | Sequence[complex], tol: float = 1e-8,
                   subset_size: int = 6):
    """Grid checks of the kernel axioms.

    Hermitian symmetry is measured per pair relative to the Cauchy-Schwarz
    scale ``sqrt(||K_lam(lam)|| ||K_z(z)||)``, which stays meaningful where
    ``K_lam(z)`` itself vanishes.

    Returns
    -------
    VerificationReport
        checks ``hermitian_symmetry``, ``diagonal_psd``, ``same_half_invertible``
        and ``gram_psd``.
    """
    from .report import VerificationReport

    points = [complex(p) for p in grid]
    if hasattr(model, "prefetch"):
        model.prefetch(points + [p.conjugate() for p in points])
    report = VerificationReport("validate_model", {"model": model.describe(), "points": len(points)})
    report.notes.extend(model.notes())

    diag = {}
    worst_psd, worst_inv, bad_diag = 0.0, math.inf, None
    for p in points:
        try:
            k = model.eval(p, p)
        except Exception as exc:
            if getattr(exc, "point", None) is None:
                exc.point = p
            raise
        diag[p] = cplx.frob(k)
        ev, _ = cplx.hermitian_eigen(0.5 * (k + k.conj().T))
        scale = max(abs(ev[-1]), np.finfo(float).tiny)
        neg = max(0.0, -ev[0] / scale)
        ratio = ev[0] / scale
        if neg > worst_psd:
            worst_psd = neg
        if ratio < worst_inv:
            worst_inv, bad_diag = ratio, p
    report.add("diagonal_psd", worst_psd, tol,
               passed=worst_psd <= tol and worst_inv >= cplx.SINGULAR_GUARD,
               min_eigen_ratio=worst_inv, worst_point=bad_diag)

    worst_sym, sym_at, worst_cond, cond_at = 0.0, None, 0.0, None
    for lam in points:
        for z in points:
            k = model.eval(lam, z)
            kt = model.eval(z, lam)
            r = cplx.frob(k.conj().T - kt) / math.sqrt(diag[lam] * diag[z])
            if not r <= worst_sym:
                worst_sym, sym_at = r, (lam, z)
            if (lam.imag > 0) == (z.imag > 0):
                s = cplx.singular_values(k)
                inv_cond = s[-1] / s[0] if s[0] > 0 else 0.0
                c = math.inf if inv_cond == 0 else 1.0 / inv_cond
                if c > worst_cond:
                    worst_cond, cond_at = c, (lam, z)
    report.add("hermitian_symmetry", worst_sym, tol, worst_pair=sym_at)
    report.add("same_half_invertible", 1.0 / worst_cond if worst_cond else 1.0, cplx.SINGULAR_GUARD,
               passed=worst_cond < 1.0 / cplx.SINGULAR_GUARD, worst_pair=cond_at, condition=worst_cond)

    order = np.random.default_rng(0).permutation(len(points))
    worst_gram, gram_min = 0.0, math.inf
    subsets = [[points[i] for i in order[s:s + subset_size]] for s in range(0, len(points), subset_size)]
    for sub in subsets:
        if len(sub) < 2:
            continue
        try:
            verdict = cplx.gram_psd_check(sub, model.eval, tol)
        except NotHermitian:
            gram_min, worst_gram = -math.inf, math.inf
            break
        gram_min = min(gram_min, verdict.min_eigenvalue / verdict.norm)
        worst_gram = max(worst_gram, -verdict.min_eigenvalue / verdict.norm)
    report.add("gram_psd", max(worst_gram, 0.0), tol, min_eigen_ratio=gram_min, subsets=len(subsets))
    return report
