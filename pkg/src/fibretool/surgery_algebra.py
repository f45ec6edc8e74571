"""Integer data of a torus surgery on a regular fiber.

A surgery is fixed by the multiplicity ``p``, the auxiliary multiplicity ``q``
and a primitive direction ``alpha`` in H_1(T^2) = Z^2.  After re-identifying
the neighborhood so that ``alpha`` is the second circle factor, the boundary
gluing acts on H_1(T^3) = Z^3 by the integer matrix returned from
:func:`gluing_matrix`.  Everything here is exact integer arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Tuple

from .errors import DegenerateSurgery, NotCoprime, NotPrimitive

IntMatrix = Tuple[Tuple[int, ...], ...]


def _gcd3(a: int, b: int, c: int) -> int:
    return gcd(gcd(a, b), c)


def ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y == g == gcd(a, b) >= 0``."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_x, x = x, old_x - quot * x
        old_y, y = y, old_y - quot * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def solve_k(p: int, q: int) -> int:
    """Residue ``k`` with ``q*k + 1 = 0 (mod p)``, normalized to ``0 <= k < p``.

    ``p == 1`` gives 0.  ``p == 0`` requires ``q = +-1`` and gives ``-q`` so
    that the resulting gluing matrix is unimodular.
    """
    if p < 0:
        raise ValueError(f"multiplicity must be non-negative, got p={p}")
    if p == 0:
        if abs(q) != 1:
            raise DegenerateSurgery(f"p=0 requires q=+-1, got q={q}")
        return -q
    if gcd(p, q) != 1:
        raise NotCoprime(f"gcd(p, q) = {gcd(p, q)} for p={p}, q={q}")
    if p == 1:
        return 0
    return (-pow(q, -1, p)) % p


@dataclass(frozen=True)
class SurgeryData:
    """Validated surgery triple ``(p, q, alpha)`` together with its residue ``k``."""

    p: int
    q: int
    alpha: Tuple[int, int] = (0, 1)
    k: int = None  # type: ignore[assignment]

    def __post_init__(self):
        alpha = (int(self.alpha[0]), int(self.alpha[1]))
        object.__setattr__(self, "alpha", alpha)
        if gcd(*alpha) != 1:
            raise NotPrimitive(f"direction {alpha} is not primitive")
        k = solve_k(self.p, self.q)
        if self.k is not None and self.k != k:
            raise ValueError(f"k={self.k} is not the normalized residue {k} for p={self.p}, q={self.q}")
        object.__setattr__(self, "k", k)

    @property
    def center(self) -> int:
        """The entry ``(qk+1)/p`` (0 when ``p == 0``)."""
        if self.p == 0:
            return 0
        return (self.q * self.k + 1) // self.p

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "alpha": list(self.alpha), "k": self.k}


@dataclass(frozen=True)
class HomologyClass:
    """``a*(first factor) + b*alpha + c*m`` in H_1(T^2) + Z."""

    a: int
    b: int
    c: int

    @property
    def coeffs(self) -> Tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def is_primitive(self) -> bool:
        return _gcd3(self.a, self.b, self.c) == 1


def gluing_matrix(data: SurgeryData) -> IntMatrix:
    """3x3 action on H_1 in the basis (first factor, alpha, meridian)."""
    return (
        (1, 0, 0),
        (0, data.center, data.q),
        (0, data.k, data.p),
    )


def det3(m) -> int:
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def matvec(m, v) -> Tuple[int, ...]:
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in m)


def surgery_class(data: SurgeryData) -> HomologyClass:
    """The class ``gamma = q*alpha + p*m`` of the new meridian, in original coordinates."""
    a0, a1 = data.alpha
    return HomologyClass(data.q * a0, data.q * a1, data.p)


def direction_normalizer(alpha) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """Unimodular ``M`` with ``M @ alpha == (0, 1)``.

    The first row is ``+-(b, -a)`` with the sign making the top-left entry
    non-negative; the second row is the Bezout row reduced against the first.
    """
    a, b = int(alpha[0]), int(alpha[1])
    g, x, y = ext_gcd(a, b)
    if g != 1:
        raise NotPrimitive(f"direction ({a}, {b}) is not primitive")
    sign = -1 if b < 0 else 1
    top = (sign * b, -sign * a)
    # shift (x, y) by t*(b, -a) to make it as short as possible against the first row
    n = a * a + b * b
    dot = x * b - y * a
    t = -((2 * dot + n) // (2 * n))
    bottom = (x + t * b, y - t * a)
    return (top, bottom)


def is_integral(data: SurgeryData) -> bool:
    return abs(data.q) == 1
