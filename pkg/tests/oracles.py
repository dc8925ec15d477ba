"""Independent reference values used by the tests.

None of these go through the package's kernel code: they come from
closed-form integrals, Gauss-Legendre quadrature or printed formulas.
"""

from __future__ import annotations

import math

import numpy as np

from livsic.models import KernelModel


def _sinc_integral(a: complex, h: float) -> complex:
    """``int_{-h}^{h} cos(a t) dt = 2 sin(a h)/a`` with the removable point filled in."""
    if abs(a) < 1e-8:
        return 2 * h * (1 - (a * h) ** 2 / 6)
    return 2 * np.sin(a * h) / a


def sl_free_kernel(lam: complex, z: complex, half_width: float = math.pi / 2) -> np.ndarray:
    """Kernel of ``-f''`` on an interval of width ``2 h`` centred at the base point.

    The solutions are ``u = cos(k t)`` and ``v = sin(k t)/k`` with ``k^2 = z``,
    ``t = x - x0``.  On a symmetric interval ``u`` and ``v`` are orthogonal,
    so the kernel is diagonal.
    """
    k = np.sqrt(complex(z))
    m = np.sqrt(complex(lam).conjugate())
    h = half_width
    minus, plus = _sinc_integral(k - m, h), _sinc_integral(k + m, h)
    uu = 0.5 * (minus + plus)
    if abs(k) < 1e-8 or abs(m) < 1e-8:
        raise ValueError("oracle not set up for k = 0")
    vv = 0.5 * (minus - plus) / (k * m)
    return np.array([[uu, 0.0], [0.0, vv]], dtype=complex)


def pw_quadrature_kernel(lam: complex, z: complex, half_length: float = math.pi, nodes: int = 200) -> complex:
    """``int_{-L}^{L} exp(i t (z - conj lam)) dt`` by Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = half_length * x
    return complex(half_length * np.sum(w * np.exp(1j * t * (z - complex(lam).conjugate()))))


def free_printed_v(z: complex) -> complex:
    """Closed form ``b(z) (sqrt z - (1 - i)/sqrt 2)/(sqrt z + (1 + i)/sqrt 2)``, principal root."""
    s = np.sqrt(complex(z))
    r = math.sqrt(2.0)
    return (z - 1j) / (z + 1j) * (s - (1 - 1j) / r) / (s + (1 + 1j) / r)


def toeplitz_printed_v(z: complex) -> complex:
    """``-(sqrt(z^2 - 3) - 2 z)/(sqrt 3 (z + i))`` on the branch of modulus below one."""
    s = np.sqrt(complex(z) ** 2 - 3)
    cands = [-(t - 2 * z) / (math.sqrt(3) * (z + 1j)) for t in (s, -s)]
    return min(cands, key=abs)


def helson_g(w: complex, a: float = 0.5) -> complex:
    q = (w - a) / (1 - a * w)
    return 1j * (q + w) / (q - w)


class CorruptedModel(KernelModel):
    """Wraps a model and adds ``eps (z - conj lam)``, which breaks Hermitian symmetry."""

    name = "corrupted"

    def __init__(self, base: KernelModel, eps: float = 0.1):
        self.base = base
        self.n = base.n
        self.eps = eps

    def exclusions(self):
        return self.base.exclusions()

    def _eval(self, lam, z):
        return self.base.eval(lam, z) + self.eps * (z - lam.conjugate()) * np.eye(self.n)
