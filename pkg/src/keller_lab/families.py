"""Generators for test maps: shear automorphisms, power maps, random polynomials."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import BivarPoly, PolyMap, compose

X = BivarPoly.x()
Y = BivarPoly.y()


def univariate(coeffs: Sequence, var: BivarPoly = Y) -> BivarPoly:
    """sum coeffs[k] * var**k."""
    out = BivarPoly.zero()
    for k, c in enumerate(coeffs):
        if c:
            out = out + var ** k * c
    return out


def shear(p_coeffs: Sequence) -> PolyMap:
    """(Y, -X + p(Y)); det J = 1 for every p."""
    return PolyMap(Y, -X + univariate(p_coeffs, Y))


def triangular(p_coeffs: Sequence) -> PolyMap:
    """(X + p(Y), Y)."""
    return PolyMap(X + univariate(p_coeffs, Y), Y)


def translation(a, b) -> PolyMap:
    return PolyMap(X + a, Y + b)


def linear_shear(t) -> PolyMap:
    """(X + tY, Y)."""
    return PolyMap(X + Y * t, Y)


def power_map(a: int, b: int) -> PolyMap:
    return PolyMap(X ** a, Y ** b)


def shear_conjugate(f: PolyMap, t) -> PolyMap:
    """L_t ∘ f ∘ L_{-t} with L_t = (X + tY, Y); same geometric degree as f."""
    return compose(linear_shear(t), compose(f, linear_shear(-t)))


def random_sparse_coeffs(rng: np.random.Generator, max_degree: int, coef_range: int = 3,
                         density: float = 0.6, exact_degree: bool = False) -> list:
    deg = max_degree if exact_degree else int(rng.integers(1, max_degree + 1))
    coeffs = [0] * (deg + 1)
    for k in range(deg + 1):
        if rng.random() < density:
            coeffs[k] = int(rng.integers(-coef_range, coef_range + 1))
    lead = 0
    while lead == 0:
        lead = int(rng.integers(-coef_range, coef_range + 1))
    coeffs[deg] = lead
    return coeffs


def random_shear(rng: np.random.Generator, max_degree: int = 4, exact_degree: bool = False,
                 coef_range: int = 3) -> PolyMap:
    return shear(random_sparse_coeffs(rng, max_degree, coef_range=coef_range, exact_degree=exact_degree))


def random_shear_composite(rng: np.random.Generator, max_total_degree: int = 16,
                           max_factor_degree: int = 4, max_factors: int = 3,
                           coef_range: int = 3) -> PolyMap:
    """Composite of shears (Y, -X + p(Y)) whose degree stays within the cap."""
    f = random_shear(rng, min(max_factor_degree, max_total_degree), coef_range=coef_range)
    for _ in range(int(rng.integers(0, max_factors))):
        room = max_total_degree // max(f.degree, 1)
        if room < 1:
            break
        g = random_shear(rng, min(max_factor_degree, room), coef_range=coef_range)
        f = compose(g, f)
    return f


def random_power_map(rng: np.random.Generator, max_exp: int = 3, conjugate: bool = True) -> PolyMap:
    f = power_map(int(rng.integers(1, max_exp + 1)), int(rng.integers(1, max_exp + 1)))
    if conjugate and rng.random() < 0.5:
        f = shear_conjugate(f, int(rng.integers(1, 3)))
    return f


_SMALL = [Fraction(k, 4) for k in (-3, -2, -1, 1, 2, 3)]


def random_elementary(rng: np.random.Generator) -> PolyMap:
    """A small automorphism: translation, linear shear or quadratic triangular shear."""
    kind = int(rng.integers(0, 4))
    c = _SMALL[int(rng.integers(0, len(_SMALL)))]
    c2 = _SMALL[int(rng.integers(0, len(_SMALL)))]
    if kind == 0:
        return translation(c, c2)
    if kind == 1:
        return PolyMap(X + Y * c, Y + c2)
    if kind == 2:
        return PolyMap(X + Y ** 2 * c, Y + c2)
    return PolyMap(X + c2, Y + X ** 2 * c)


def random_small_automorphism(rng: np.random.Generator, factors: int = 2) -> PolyMap:
    f = random_elementary(rng)
    for _ in range(factors - 1):
        f = compose(random_elementary(rng), f)
    return f


def random_poly(rng: np.random.Generator, degree: int, n_terms: int = 6, coef_range: int = 5) -> BivarPoly:
    terms = {}
    monos = [(i, d - i) for d in range(degree + 1) for i in range(d + 1)]
    for _ in range(n_terms):
        k = monos[int(rng.integers(0, len(monos)))]
        terms[k] = int(rng.integers(-coef_range, coef_range + 1))
    return BivarPoly(terms)


def random_map(rng: np.random.Generator, degree: int, n_terms: int = 6) -> PolyMap:
    return PolyMap(random_poly(rng, degree, n_terms), random_poly(rng, degree, n_terms))
