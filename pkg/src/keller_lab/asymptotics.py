"""Canonical rational maps R = (X^-a, X^b Y + X^-a Phi(X)) and Laurent substitution.

For a polynomial map F the composite F∘R lives in C[X, X^-1, Y]^2.  When it
has no negative X exponents it is a polynomial map, the R-dual of F.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import List, Sequence, Tuple

import numpy as np

from .poly import BivarPoly, LaurentBivar, PolyMap, compose, evaluate_at
from .scalars import exact


class CanonicalError(ValueError):
    """A (alpha, beta, Phi) triple violates a side condition."""

    def __init__(self, invariant: str, message: str):
        super().__init__(message)
        self.invariant = invariant


class NotPolynomialError(ValueError):
    """F∘R still carries negative X exponents."""


@dataclass(frozen=True)
class CanonicalRational:
    """The triple (alpha, beta, Phi); see :func:`validate_canonical` for the side conditions.

    Construction does not validate, so that degenerate triples can still be
    substituted (several worked examples use them).
    """

    alpha: int
    beta: int
    phi: BivarPoly

    def __post_init__(self):
        if self.alpha < 1 or self.beta < 0:
            raise ValueError("need alpha >= 1 and beta >= 0")
        if any(j for _, j in self.phi.terms):
            raise ValueError("Phi must be a polynomial in X alone")

    @classmethod
    def of(cls, alpha: int, beta: int, phi: "BivarPoly | str | None" = None) -> "CanonicalRational":
        from .poly import parse_poly
        if phi is None:
            phi = BivarPoly.zero()
        elif isinstance(phi, str):
            phi = parse_poly(phi)
        return cls(alpha, beta, phi)

    @property
    def exponents(self) -> set:
        """X-exponents occurring in X^(alpha+beta) Y + Phi(X)."""
        return {self.alpha + self.beta} | {i for i, _ in self.phi.terms}

    def components(self) -> Tuple[LaurentBivar, LaurentBivar]:
        u = LaurentBivar.x_power(-self.alpha)
        phi = LaurentBivar._raw(dict(self.phi.terms), True)
        v = LaurentBivar._raw({(self.beta, 1): 1}, True) + u * phi
        return u, v

    def __str__(self):
        return f"(alpha={self.alpha}, beta={self.beta}, Phi={self.phi})"


def validate_canonical(alpha: int, beta: int, phi) -> CanonicalRational:
    """Return the triple if deg Phi < alpha + beta and the exponent gcd is 1.

    Raises :class:`CanonicalError` whose ``invariant`` is ``"range"``,
    ``"degree"`` or ``"gcd"``.
    """
    if alpha < 1 or beta < 0:
        raise CanonicalError("range", f"need alpha >= 1 and beta >= 0, got alpha={alpha}, beta={beta}")
    r = CanonicalRational.of(alpha, beta, phi)
    if r.phi.degree_x >= alpha + beta:
        raise CanonicalError("degree", f"deg Phi = {r.phi.degree_x} is not below alpha + beta = {alpha + beta}")
    g = reduce(gcd, r.exponents)
    if g != 1:
        raise CanonicalError("gcd", f"exponents {sorted(r.exponents)} have gcd {g}, not 1")
    return r


@dataclass(frozen=True)
class LaurentMapPair:
    first: LaurentBivar
    second: LaurentBivar

    def is_polynomial(self) -> bool:
        return self.first.is_polynomial() and self.second.is_polynomial()

    def to_map(self) -> PolyMap:
        if not self.is_polynomial():
            raise NotPolynomialError(
                f"negative X exponent remains (min {min(self.first.min_x_exponent(), self.second.min_x_exponent())})")
        return PolyMap(self.first.to_bivar(), self.second.to_bivar())

    def __eq__(self, other):
        if not isinstance(other, LaurentMapPair):
            return NotImplemented
        return self.first == other.first and self.second == other.second

    def __hash__(self):
        return hash((self.first, self.second))

    def __str__(self):
        return f"({self.first}, {self.second})"


def substitute(f: PolyMap, r: CanonicalRational) -> LaurentMapPair:
    """Exact Laurent expansion of F∘R."""
    u, v = r.components()
    one = LaurentBivar.one(f.exact)
    return LaurentMapPair(evaluate_at(f.p, u, v, one), evaluate_at(f.q, u, v, one))


def laurent_compose(f: PolyMap, pair: LaurentMapPair) -> LaurentMapPair:
    one = LaurentBivar.one(f.exact)
    return LaurentMapPair(evaluate_at(f.p, pair.first, pair.second, one),
                          evaluate_at(f.q, pair.first, pair.second, one))


def is_polynomial(pair: LaurentMapPair) -> bool:
    return pair.is_polynomial()


def dual_map(f: PolyMap, r: CanonicalRational) -> PolyMap:
    """G_R = F∘R as a polynomial map; NotPolynomialError otherwise."""
    return substitute(f, r).to_map()


def component_parametrization(g_r: PolyMap, samples: int) -> List[Tuple[complex, complex]]:
    """G_R(0, y) for ``samples`` evenly spaced real y in [-2, 2]."""
    if samples <= 0:
        return []
    ys = np.linspace(-2.0, 2.0, samples) + 0j
    num = g_r.numeric
    p, q = num(np.zeros_like(ys), ys)
    return [(complex(a), complex(b)) for a, b in zip(p, q)]


@dataclass(frozen=True)
class MonotonicityReport:
    g_polynomial: bool
    fg_polynomial: bool

    @property
    def violation(self) -> bool:
        return self.g_polynomial and not self.fg_polynomial

    def as_dict(self) -> dict:
        return {"g_polynomial": self.g_polynomial, "fg_polynomial": self.fg_polynomial,
                "violation": self.violation}


def check_basis_monotonicity(f: PolyMap, g: PolyMap, r: CanonicalRational) -> MonotonicityReport:
    """Is g∘R polynomial, and is (f∘g)∘R polynomial?"""
    return MonotonicityReport(is_polynomial(substitute(g, r)), is_polynomial(substitute(compose(f, g), r)))


# --------------------------------------------------------------------------
# polynomials p with p∘R polynomial
# --------------------------------------------------------------------------

def _nullspace(rows: List[List], ncols: int) -> List[List[Fraction]]:
    """Basis of {v : rows · v = 0} over Q(i) scalars by exact RREF."""
    m = [[exact(c) for c in row] for row in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((k for k in range(r, len(m)) if m[k][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = Fraction(1) / m[r][c]
        m[r] = [exact(v * inv) for v in m[r]]
        for k in range(len(m)):
            if k != r and m[k][c] != 0:
                fac = m[k][c]
                m[k] = [exact(a - fac * b) for a, b in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [0] * ncols
        v[fcol] = 1
        for row, pc in zip(m, pivots):
            v[pc] = exact(-row[fcol])
        basis.append(v)
    return basis


def polynomial_subspace(r: CanonicalRational, degree: int) -> List[BivarPoly]:
    """Basis of the polynomials p of total degree <= ``degree`` with p∘R polynomial.

    The negative-X-exponent part of p∘R is linear in the coefficients of p,
    so the admissible p form the kernel of that linear map.
    """
    monos = [(i, d - i) for d in range(degree + 1) for i in range(d + 1)]
    u, v = r.components()
    one = LaurentBivar.one()
    images = [evaluate_at(BivarPoly({mono: 1}), u, v, one) for mono in monos]
    bad = sorted({k for img in images for k in img.terms if k[0] < 0})
    rows = [[img.terms.get(k, 0) for img in images] for k in bad]
    if not rows:
        return [BivarPoly({mono: 1}) for mono in monos]
    return [BivarPoly({mono: c for mono, c in zip(monos, vec) if c != 0})
            for vec in _nullspace(rows, len(monos))]


def random_dual_source(rng: np.random.Generator, r: CanonicalRational, degree: int,
                       coef_range: int = 3) -> PolyMap:
    """A random map g of degree <= ``degree`` with g∘R polynomial."""
    basis = polynomial_subspace(r, degree)

    def combo() -> BivarPoly:
        out = BivarPoly.zero()
        for b in basis:
            c = int(rng.integers(-coef_range, coef_range + 1))
            if c:
                out = out + b * c
        return out

    return PolyMap(combo(), combo())


def canonical_library(max_alpha: int = 3, max_beta: int = 3) -> List[CanonicalRational]:
    """All valid triples with Phi a sum of distinct monomials of degree < alpha + beta, up to small bounds."""
    out = []
    for a in range(1, max_alpha + 1):
        for b in range(0, max_beta + 1):
            top = a + b
            for mask in range(1 << min(top, 3)):
                phi = BivarPoly({(i, 0): 1 for i in range(min(top, 3)) if mask >> i & 1})
                try:
                    out.append(validate_canonical(a, b, phi))
                except CanonicalError:
                    pass
    return out


def sample_canonical(rng: np.random.Generator, library: Sequence[CanonicalRational]) -> CanonicalRational:
    return library[int(rng.integers(0, len(library)))]
