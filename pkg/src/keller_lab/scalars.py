"""Exact Gaussian-rational scalars and conversions.

Exact coefficients are plain Python ``int``/``Fraction`` when real and
:class:`GaussianRational` when the imaginary part is nonzero.  Float
coefficients are Python ``complex``.  The two variants never mix.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = [
    "GaussianRational",
    "Exact",
    "is_exact",
    "exact",
    "to_complex",
    "format_fraction",
    "parse_fraction",
    "real_part",
    "imag_part",
    "rationalize",
]


class GaussianRational:
    """re + i*im with both parts exact fractions in lowest terms."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # construction helpers -------------------------------------------------
    @staticmethod
    def _parts(v):
        if isinstance(v, GaussianRational):
            return v.re, v.im
        if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
            return v, 0
        if isinstance(v, bool):
            return int(v), 0
        return NotImplemented

    def __add__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return exact(GaussianRational(self.re + p[0], self.im + p[1]))

    __radd__ = __add__

    def __sub__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return exact(GaussianRational(self.re - p[0], self.im - p[1]))

    def __rsub__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return exact(GaussianRational(p[0] - self.re, p[1] - self.im))

    def __mul__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        a, b = self.re, self.im
        c, d = p
        return exact(GaussianRational(a * c - b * d, a * d + b * c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        c, d = p
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        a, b = self.re, self.im
        return exact(GaussianRational(Fraction(a * c + b * d, 1) / den,
                                      Fraction(b * c - a * d, 1) / den))

    def __rtruediv__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return GaussianRational(*p) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        result = 1
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        p = self._parts(other)
        if p is NotImplemented:
            return NotImplemented
        return self.re == p[0] and self.im == p[1]

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.re == 0:
            if abs(self.im) == 1:
                return "I" if self.im > 0 else "-I"
            return f"{self.im}*I"
        sign = "+" if self.im >= 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*I)"


Exact = Union[int, Fraction, GaussianRational]


def is_exact(v) -> bool:
    return isinstance(v, (int, Fraction, GaussianRational)) and not isinstance(v, bool)


def exact(v) -> Exact:
    """Canonical exact form: collapse a zero imaginary part to a real fraction."""
    if isinstance(v, GaussianRational):
        if v.im == 0:
            return v.re.numerator if v.re.denominator == 1 else v.re
        return v
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else v
    if isinstance(v, Rational):
        return Fraction(v.numerator, v.denominator)
    raise TypeError(f"cannot convert {type(v).__name__} to an exact scalar (lossy)")


def real_part(v: Exact) -> Fraction:
    return v.re if isinstance(v, GaussianRational) else Fraction(v)


def imag_part(v: Exact) -> Fraction:
    return v.im if isinstance(v, GaussianRational) else Fraction(0)


def to_complex(v) -> complex:
    if isinstance(v, GaussianRational):
        return complex(v)
    return complex(v)


def rationalize(z: complex) -> Exact:
    """Exact value of a double-precision complex (every double is a dyadic rational)."""
    z = complex(z)
    return exact(GaussianRational(Fraction(z.real), Fraction(z.imag)))


def format_fraction(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(s: str) -> Fraction:
    s = s.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        den_i = int(den)
        if den_i == 0:
            raise ValueError(f"zero denominator in {s!r}")
        return Fraction(int(num), den_i)
    return Fraction(int(s))
