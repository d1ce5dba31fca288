"""Exact symbolic qudit Pauli algebra with integer phase bookkeeping.

Generalized Pauli operators on n qudits of dimension d are kept in the
normal form

    omega_hat^phase_exp * (X^x_1 Z^z_1) (x) ... (x) (X^x_n Z^z_n)

where omega_hat is a primitive D-th root of unity (D = d for odd d and
2d for even d), the phase exponent lives in Z(D) and the X/Z exponents
live in Z(d).  All arithmetic is exact integer arithmetic; matrices are
only produced on demand for verification.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "DimensionContext",
    "PauliOperator",
    "pauli_multiply",
    "pauli_conjugate",
    "pauli_to_matrix",
    "xi_f",
    "xi_p",
]


@lru_cache(maxsize=None)
def _context_cached(d: int) -> "DimensionContext":
    return DimensionContext(d)


class DimensionContext:
    """Dimension d together with the derived constants D, delta_d, omega, omega_hat.

    D is the order of the Pauli phase group: d for odd d, 2d for even d.
    delta_d is 1 for odd d and 0 for even d, omega = exp(2*pi*i/d) and
    omega_hat = exp(2*pi*i/D) so that omega = omega_hat**(D // d).
    """

    __slots__ = ("d", "D", "delta_d", "omega", "omega_hat")

    def __init__(self, d: int):
        if not isinstance(d, int) or d < 2:
            raise ValueError(f"qudit dimension must be an integer >= 2, got {d!r}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "D", d if d % 2 else 2 * d)
        object.__setattr__(self, "delta_d", 1 if d % 2 else 0)
        object.__setattr__(self, "omega", cmath.exp(2j * cmath.pi / d))
        object.__setattr__(self, "omega_hat", cmath.exp(2j * cmath.pi / self.D))

    def __setattr__(self, name, value):
        raise AttributeError("DimensionContext is immutable")

    def __eq__(self, other):
        return isinstance(other, DimensionContext) and self.d == other.d

    def __hash__(self):
        return hash(("DimensionContext", self.d))

    def __repr__(self):
        return f"DimensionContext(d={self.d})"

    @staticmethod
    def of(d: int) -> "DimensionContext":
        """Shared cached context for dimension d."""
        return _context_cached(d)

    def phase(self, exponent: int) -> complex:
        """omega_hat raised to an integer exponent."""
        return cmath.exp(2j * cmath.pi * (exponent % self.D) / self.D)


def xi_f(ctx: DimensionContext, n: int) -> int:
    """Phase-exponent shift picked up when the Fourier gate conjugates X^a Z^b, n = a*b."""
    return (n * (ctx.delta_d - 2)) % ctx.D


def xi_p(ctx: DimensionContext, n: int) -> int:
    """Phase-exponent shift picked up when the phase gate conjugates X^a Z^b, n = a.

    The closed form n*(1 - (n-1)*(delta_d - 2)/2) is evaluated in exact
    integer arithmetic; the numerator is always even.
    """
    num = n * (2 - (n - 1) * (ctx.delta_d - 2))
    if num % 2 != 0:
        raise ArithmeticError(f"phase-gate exponent {num}/2 is not an integer (n={n}, d={ctx.d})")
    return (num // 2) % ctx.D


@dataclass(frozen=True)
class PauliOperator:
    """An n-qudit Pauli in normal form with exact phase exponent.

    Attributes
    ----------
    ctx : DimensionContext
    n : int
        Number of qudit sites.
    phase_exp : int
        Exponent of omega_hat, reduced into Z(D).
    x_exp, z_exp : tuple[int, ...]
        Per-site X and Z powers, reduced into Z(d).
    """

    ctx: DimensionContext
    n: int
    phase_exp: int
    x_exp: tuple[int, ...]
    z_exp: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1 or len(self.x_exp) != self.n or len(self.z_exp) != self.n:
            raise ValueError("exponent vectors must have length n >= 1")
        d, D = self.ctx.d, self.ctx.D
        object.__setattr__(self, "phase_exp", self.phase_exp % D)
        object.__setattr__(self, "x_exp", tuple(a % d for a in self.x_exp))
        object.__setattr__(self, "z_exp", tuple(b % d for b in self.z_exp))

    @classmethod
    def identity(cls, ctx: DimensionContext, n: int) -> "PauliOperator":
        return cls(ctx, n, 0, (0,) * n, (0,) * n)

    @classmethod
    def x_op(cls, ctx: DimensionContext, n: int, site: int, power: int = 1) -> "PauliOperator":
        x = [0] * n
        x[site] = power
        return cls(ctx, n, 0, tuple(x), (0,) * n)

    @classmethod
    def z_op(cls, ctx: DimensionContext, n: int, site: int, power: int = 1) -> "PauliOperator":
        z = [0] * n
        z[site] = power
        return cls(ctx, n, 0, (0,) * n, tuple(z))

    def is_identity(self) -> bool:
        return self.phase_exp == 0 and not any(self.x_exp) and not any(self.z_exp)

    def inverse(self) -> "PauliOperator":
        """The group inverse, in normal form.

        (w^xi X^a Z^b)^-1 = w^-xi Z^-b X^-a, reordered with the Weyl
        relation into X^-a Z^-b at the cost of omega^{a*b}.
        """
        d, D = self.ctx.d, self.ctx.D
        unit = D // d
        xi = -self.phase_exp
        for a, b in zip(self.x_exp, self.z_exp):
            xi += unit * ((-b) % d) * ((-a) % d)
        return PauliOperator(
            self.ctx,
            self.n,
            xi % D,
            tuple((-a) % d for a in self.x_exp),
            tuple((-b) % d for b in self.z_exp),
        )


def _check_compatible(p: PauliOperator, q: PauliOperator) -> None:
    if p.ctx != q.ctx:
        raise ValueError("Pauli operators live in different dimensions")
    if p.n != q.n:
        raise ValueError(f"Pauli operators act on different site counts ({p.n} vs {q.n})")


def pauli_multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    """Normal-form product p*q.

    Per site, X^a Z^b X^c Z^e = omega^{b c} X^{a+c} Z^{b+e}; the omega
    phases accumulate in the Z(D) exponent via omega = omega_hat^{D/d}.
    """
    _check_compatible(p, q)
    ctx = p.ctx
    d, D = ctx.d, ctx.D
    unit = D // d
    xi = p.phase_exp + q.phase_exp
    xs, zs = [], []
    for a, b, c, e in zip(p.x_exp, p.z_exp, q.x_exp, q.z_exp):
        xi += unit * b * c
        xs.append((a + c) % d)
        zs.append((b + e) % d)
    return PauliOperator(ctx, p.n, xi % D, tuple(xs), tuple(zs))


def pauli_conjugate(generator: tuple, p: PauliOperator) -> PauliOperator:
    """Conjugate p by a Clifford generator: U p U^dagger.

    ``generator`` is one of ``("F", site)``, ``("P", site)`` or
    ``("CZ", i, j)``.  The exponent maps are

        F:  (a, b) -> (-b, a),        phase += xi_f(a*b)
        P:  (a, b) -> (a, a + b),     phase += xi_p(a)
        CZ: z_i += x_j, z_j += x_i,   phase += (D/d) * x_i * x_j
    """
    kind = generator[0]
    sites = generator[1:]
    for s in sites:
        if not 0 <= s < p.n:
            raise ValueError(f"site {s} out of range for a {p.n}-site Pauli")
    ctx = p.ctx
    d = ctx.d
    xs, zs = list(p.x_exp), list(p.z_exp)
    xi = p.phase_exp
    if kind == "F":
        (k,) = sites
        a, b = xs[k], zs[k]
        xi += xi_f(ctx, a * b)
        xs[k], zs[k] = (-b) % d, a
    elif kind == "P":
        (k,) = sites
        a = xs[k]
        xi += xi_p(ctx, a)
        zs[k] = (a + zs[k]) % d
    elif kind == "CZ":
        i, j = sites
        if i == j:
            raise ValueError("CZ requires two distinct sites")
        # the cross term: normal-ordering X^{a_i} (x) X^{a_j} through the
        # controlled phase leaves a residual omega^{a_i a_j}
        xi += (ctx.D // d) * xs[i] * xs[j]
        zi = (zs[i] + xs[j]) % d
        zj = (zs[j] + xs[i]) % d
        zs[i], zs[j] = zi, zj
    else:
        raise ValueError(f"unknown Clifford generator {kind!r}")
    return PauliOperator(ctx, p.n, xi % ctx.D, tuple(xs), tuple(zs))


def _single_site_matrix(ctx: DimensionContext, a: int, b: int) -> np.ndarray:
    d = ctx.d
    m = np.zeros((d, d), dtype=np.complex128)
    for n in range(d):
        m[(n + a) % d, n] = ctx.omega ** (b * n)
    return m


def pauli_to_matrix(p: PauliOperator, max_dim: int = 1 << 22) -> np.ndarray:
    """Dense matrix omega_hat^phase * tensor_k X^{x_k} Z^{z_k}.

    Site 0 is the most significant tensor factor, matching the
    statevector amplitude layout.
    """
    dim = p.ctx.d ** p.n
    if dim > max_dim:
        raise MemoryError(f"matrix dimension {dim} exceeds budget {max_dim}")
    out = np.array([[p.ctx.phase(p.phase_exp)]], dtype=np.complex128)
    for a, b in zip(p.x_exp, p.z_exp):
        out = np.kron(out, _single_site_matrix(p.ctx, a, b))
    return out
