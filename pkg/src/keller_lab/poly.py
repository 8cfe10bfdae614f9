"""Sparse bivariate (and Laurent) polynomials and polynomial maps of C^2.

Terms are stored as ``{(i, j): coefficient}`` meaning ``c * X**i * Y**j``.
Zero coefficients are never stored.  Every polynomial carries a variant
flag: ``exact=True`` (int / Fraction / GaussianRational coefficients) or
``exact=False`` (Python complex).  Arithmetic between variants raises
``TypeError``.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from .scalars import (
    GaussianRational,
    exact,
    format_fraction,
    imag_part,
    is_exact,
    parse_fraction,
    real_part,
    to_complex,
)

Monomial = Tuple[int, int]


class VariantError(TypeError):
    """Exact and floating polynomials were combined."""


def _coerce(c, is_exact_variant: bool):
    if is_exact_variant:
        return exact(c)
    if is_exact(c):
        return to_complex(c)
    return complex(c)


class _SparsePoly:
    """Shared machinery for BivarPoly and LaurentBivar."""

    __slots__ = ("terms", "exact", "__weakref__")
    _allow_negative_x = False

    def __init__(self, terms: Mapping[Monomial, object] | None = None, exact: bool = True):
        clean: Dict[Monomial, object] = {}
        if terms:
            for (i, j), c in terms.items():
                i, j = int(i), int(j)
                if j < 0 or (i < 0 and not self._allow_negative_x):
                    raise ValueError(f"invalid exponent ({i}, {j}) for {type(self).__name__}")
                c = _coerce(c, exact)
                if c != 0:
                    clean[(i, j)] = c
        self.terms = clean
        self.exact = exact

    @classmethod
    def _raw(cls, terms: Dict[Monomial, object], exact: bool):
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.exact = exact
        return obj

    @classmethod
    def constant(cls, c, exact: bool = True):
        return cls({(0, 0): c}, exact=exact)

    @classmethod
    def zero(cls, exact: bool = True):
        return cls._raw({}, exact)

    @classmethod
    def one(cls, exact: bool = True):
        return cls._raw({(0, 0): 1 if exact else 1 + 0j}, exact)

    @classmethod
    def x(cls, exact: bool = True):
        return cls._raw({(1, 0): 1 if exact else 1 + 0j}, exact)

    @classmethod
    def y(cls, exact: bool = True):
        return cls._raw({(0, 1): 1 if exact else 1 + 0j}, exact)

    # arithmetic -------------------------------------------------------------
    def _check(self, other):
        if self.exact != other.exact:
            raise VariantError("mixed exact/float operands")

    def _lift(self, other):
        if isinstance(other, _SparsePoly):
            if isinstance(other, BivarPoly) and isinstance(self, LaurentBivar):
                other = LaurentBivar._raw(dict(other.terms), other.exact)
            elif isinstance(other, LaurentBivar) and isinstance(self, BivarPoly):
                return NotImplemented
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, GaussianRational)) and not isinstance(other, bool):
            if not self.exact:
                raise VariantError("exact scalar with float polynomial")
            return type(self).constant(other, True)
        if isinstance(other, (float, complex)):
            if self.exact:
                raise VariantError("float scalar with exact polynomial")
            return type(self).constant(other, False)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k, 0) + c
            if v == 0:
                out.pop(k, None)
            else:
                out[k] = v
        return type(self)._raw(out, self.exact)

    __radd__ = __add__

    def __neg__(self):
        return type(self)._raw({k: -c for k, c in self.terms.items()}, self.exact)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        out: Dict[Monomial, object] = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, 0) + c1 * c2
        return type(self)._raw({k: c for k, c in out.items() if c != 0}, self.exact)

    __rmul__ = __mul__

    def scale(self, c):
        return self * c

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        result = type(self).one(self.exact)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, _SparsePoly):
            return self.exact == other.exact and self.terms == other.terms
        try:
            other = self._lift(other)
        except VariantError:
            return False
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash((self.exact, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # degrees ----------------------------------------------------------------
    @property
    def total_degree(self) -> int:
        """max(i + j); -1 for the zero polynomial."""
        return max((i + j for i, j in self.terms), default=-1)

    @property
    def degree_y(self) -> int:
        return max((j for _, j in self.terms), default=-1)

    @property
    def degree_x(self) -> int:
        return max((i for i, _ in self.terms), default=-1)

    def is_constant(self) -> bool:
        return all(k == (0, 0) for k in self.terms)

    def constant_term(self):
        return self.terms.get((0, 0), 0 if self.exact else 0j)

    def to_float(self):
        return type(self)._raw({k: to_complex(c) for k, c in self.terms.items()}, False)

    def evaluate(self, x, y):
        """Evaluate at a point; exact for exact inputs on an exact polynomial."""
        if self.exact and not (is_exact(x) and is_exact(y)):
            x, y = complex(x), complex(y)
            return sum((to_complex(c) * x**i * y**j for (i, j), c in self.terms.items()), 0j)
        total = 0 if self.exact else 0j
        xp: Dict[int, object] = {}
        yp: Dict[int, object] = {}
        for (i, j), c in self.terms.items():
            if i not in xp:
                xp[i] = x**i if i >= 0 else Fraction(1) / (x ** (-i))
            if j not in yp:
                yp[j] = y**j
            total = total + c * xp[i] * yp[j]
        return exact(total) if self.exact else total

    __call__ = evaluate

    def __repr__(self):
        return f"{type(self).__name__}({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (i, j) in sorted(self.terms, key=lambda k: (-(k[0] + k[1]), -k[1])):
            c = self.terms[(i, j)]
            mono = []
            if i:
                mono.append("X" if i == 1 else f"X^{i}")
            if j:
                mono.append("Y" if j == 1 else f"Y^{j}")
            if not mono:
                parts.append(_fmt_coef(c))
            elif c == 1:
                parts.append("*".join(mono))
            elif c == -1:
                parts.append("-" + "*".join(mono))
            else:
                parts.append(_fmt_coef(c) + "*" + "*".join(mono))
        s = " + ".join(parts)
        return s.replace("+ -", "- ")


def _fmt_coef(c) -> str:
    if isinstance(c, complex):
        return f"({c.real:.17g}{c.imag:+.17g}j)" if c.imag else f"{c.real:.17g}"
    return str(c)


class BivarPoly(_SparsePoly):
    """Polynomial in C[X, Y]."""

    __slots__ = ()

    def dx(self) -> "BivarPoly":
        return BivarPoly._raw({(i - 1, j): c * i for (i, j), c in self.terms.items() if i}, self.exact)

    def dy(self) -> "BivarPoly":
        return BivarPoly._raw({(i, j - 1): c * j for (i, j), c in self.terms.items() if j}, self.exact)

    def homogeneous_part(self, d: int) -> "BivarPoly":
        return BivarPoly._raw({k: c for k, c in self.terms.items() if sum(k) == d}, self.exact)

    def dense(self) -> np.ndarray:
        """Complex coefficient matrix C with C[i, j] = coefficient of X^i Y^j."""
        out = np.zeros((max(self.degree_x, 0) + 1, max(self.degree_y, 0) + 1), dtype=complex)
        for (i, j), c in self.terms.items():
            out[i, j] = to_complex(c)
        return out

    def numeric(self) -> "NumericPoly":
        return NumericPoly(self)


class LaurentBivar(_SparsePoly):
    """Element of C[X, X^-1, Y]: the X exponent may be negative."""

    __slots__ = ()
    _allow_negative_x = True

    def is_polynomial(self) -> bool:
        return all(i >= 0 for i, _ in self.terms)

    def min_x_exponent(self) -> int:
        return min((i for i, _ in self.terms), default=0)

    def to_bivar(self) -> BivarPoly:
        if not self.is_polynomial():
            raise ValueError("Laurent polynomial has negative X exponents")
        return BivarPoly._raw(dict(self.terms), self.exact)

    @classmethod
    def x_power(cls, k: int, exact: bool = True):
        return cls._raw({(k, 0): 1 if exact else 1 + 0j}, exact)


class NumericPoly:
    """Vectorised float evaluation of a BivarPoly."""

    def __init__(self, p: BivarPoly):
        self.dense = p.dense()
        self.degx = self.dense.shape[0] - 1
        self.degy = self.dense.shape[1] - 1
        keys = list(p.terms)
        self.ii = np.array([k[0] for k in keys], dtype=int)
        self.jj = np.array([k[1] for k in keys], dtype=int)
        self.cc = np.array([to_complex(p.terms[k]) for k in keys], dtype=complex)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        xp = _powers(x, self.degx)
        yp = _powers(y, self.degy)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for i, j, c in zip(self.ii, self.jj, self.cc):
            out = out + c * xp[i] * yp[j]
        return out

    def y_coefficients(self, x) -> np.ndarray:
        """Coefficients (ascending in Y) of Y -> p(x, Y); shape x.shape + (degy+1,)."""
        x = np.asarray(x, dtype=complex)
        xp = np.moveaxis(_powers(x, self.degx), 0, -1)
        return xp @ self.dense


def _powers(x: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((n + 1,) + x.shape, dtype=complex)
    out[0] = 1.0
    for k in range(1, n + 1):
        out[k] = out[k - 1] * x
    return out


def evaluate_at(p: _SparsePoly, u, v, one):
    """p(u, v) for ring elements u, v (polynomials, Laurent polynomials, numbers).

    Powers are cached so each u**i, v**j is built once.
    """
    up = {0: one}
    vp = {0: one}

    def upow(i):
        if i not in up:
            up[i] = upow(i - 1) * u
        return up[i]

    def vpow(j):
        if j not in vp:
            vp[j] = vpow(j - 1) * v
        return vp[j]

    total = one * 0
    for (i, j), c in sorted(p.terms.items()):
        if i < 0:
            raise ValueError("cannot substitute into a negative power")
        total = total + upow(i) * vpow(j) * c
    return total


@dataclass(frozen=True, eq=False)
class PolyMap:
    """(P, Q) in C[X, Y]^2, acting as (x, y) -> (P(x, y), Q(x, y))."""

    p: BivarPoly
    q: BivarPoly

    def __post_init__(self):
        if self.p.exact != self.q.exact:
            raise VariantError("map components must share a variant")

    @classmethod
    def identity(cls, exact: bool = True) -> "PolyMap":
        return cls(BivarPoly.x(exact), BivarPoly.y(exact))

    @property
    def exact(self) -> bool:
        return self.p.exact

    @property
    def n(self) -> int:
        return self.p.total_degree

    @property
    def m(self) -> int:
        return self.q.total_degree

    @property
    def degree(self) -> int:
        return max(self.n, self.m)

    @property
    def bezout_bound(self) -> int:
        return max(self.n, 0) * max(self.m, 0)

    def __call__(self, x, y):
        return self.p.evaluate(x, y), self.q.evaluate(x, y)

    def compose(self, other: "PolyMap") -> "PolyMap":
        """self ∘ other."""
        return compose(self, other)

    def __matmul__(self, other: "PolyMap") -> "PolyMap":
        return compose(self, other)

    def to_float(self) -> "PolyMap":
        return PolyMap(self.p.to_float(), self.q.to_float())

    @cached_property
    def numeric(self) -> "NumericMap":
        return NumericMap(self)

    def __eq__(self, other):
        return isinstance(other, PolyMap) and equal_exact(self, other)

    def __hash__(self):
        return hash((self.p, self.q))

    def __repr__(self):
        return f"PolyMap(p={self.p}, q={self.q})"


class NumericMap:
    """Float evaluation of a PolyMap, its Jacobian and |det J|^2."""

    def __init__(self, f: PolyMap):
        self.P = NumericPoly(f.p)
        self.Q = NumericPoly(f.q)
        self.Px = NumericPoly(f.p.dx())
        self.Py = NumericPoly(f.p.dy())
        self.Qx = NumericPoly(f.q.dx())
        self.Qy = NumericPoly(f.q.dy())
        # det J from its own expansion so that det J ≡ c evaluates to exactly c
        self.J = NumericPoly(jacobian_det(f))

    def __call__(self, x, y):
        return self.P(x, y), self.Q(x, y)

    def jacobian(self, x, y):
        return self.Px(x, y), self.Py(x, y), self.Qx(x, y), self.Qy(x, y)

    def det_sq(self, x, y) -> np.ndarray:
        return np.abs(self.J(x, y)) ** 2


def compose(f: PolyMap, g: PolyMap) -> PolyMap:
    """f ∘ g, i.e. (x, y) -> f(g(x, y))."""
    if f.exact != g.exact:
        raise VariantError("mixed exact/float maps")
    one = BivarPoly.one(f.exact)
    up = {0: one, 1: g.p}
    vp = {0: one, 1: g.q}

    def pw(cache, i):
        if i not in cache:
            cache[i] = pw(cache, i - 1) * cache[1]
        return cache[i]

    def sub(h: BivarPoly) -> BivarPoly:
        out = BivarPoly.zero(f.exact)
        for (i, j), c in sorted(h.terms.items()):
            out = out + pw(up, i) * pw(vp, j) * c
        return out

    return PolyMap(sub(f.p), sub(f.q))


def jacobian_det(f: PolyMap) -> BivarPoly:
    return f.p.dx() * f.q.dy() - f.p.dy() * f.q.dx()


def equal_exact(f: PolyMap, g: PolyMap) -> bool:
    if not (f.exact and g.exact):
        raise VariantError("equal_exact requires exact maps")
    return f.p.terms == g.p.terms and f.q.terms == g.q.terms


@dataclass(frozen=True)
class NormalizationReport:
    det_ok: bool
    p_degree_ok: bool
    q_degree_ok: bool
    strict: bool

    @property
    def passed(self) -> bool:
        if self.strict:
            return self.det_ok and self.p_degree_ok and self.q_degree_ok
        return self.det_ok

    def as_dict(self) -> dict:
        return {
            "det_condition": self.det_ok,
            "p_y_degree": self.p_degree_ok,
            "q_y_degree": self.q_degree_ok,
            "strict": self.strict,
            "passed": self.passed,
        }


def is_keller_normalized(f: PolyMap, strict: bool = True) -> NormalizationReport:
    """det J ≡ 1, and (strict) deg P = deg_Y P, deg Q = deg_Y Q.

    The identity fails the strict form since deg_Y X = 0.
    """
    if not f.exact:
        raise VariantError("normalization predicate needs exact coefficients")
    det = jacobian_det(f)
    det_ok = det.terms == {(0, 0): 1}
    return NormalizationReport(
        det_ok=det_ok,
        p_degree_ok=f.p.total_degree == f.p.degree_y,
        q_degree_ok=f.q.total_degree == f.q.degree_y,
        strict=strict,
    )


def shear_sequence(count: int):
    """1, -1, 2, -2, 3, ... (count values)."""
    out = []
    k = 1
    while len(out) < count:
        out.extend([k, -k])
        k += 1
    return out[:count]


def normalize_by_shear(f: PolyMap) -> PolyMap:
    """Precompose with X -> X + tY so both components reach full Y-degree.

    The coefficient of Y^n in P(X + tY, Y) is P_n(t, 1) (P_n the top
    homogeneous part), so only finitely many t fail.  Precomposition by a
    determinant-one linear map leaves det J unchanged.
    """
    det = jacobian_det(f)
    if not det.is_constant() or det.is_zero():
        raise ValueError("normalize_by_shear needs a nonzero constant Jacobian determinant")
    if det.constant_term() != 1:
        # rescale Q so that det J = 1
        c = det.constant_term()
        f = PolyMap(f.p, f.q * (Fraction(1) / c if f.exact else 1 / complex(c)))
    rep = is_keller_normalized(f)
    if rep.p_degree_ok and rep.q_degree_ok:
        return f
    tries = shear_sequence(2 * (f.degree + 1))
    last = None
    for t in tries:
        lin = PolyMap(BivarPoly.x(f.exact) + BivarPoly.y(f.exact) * t, BivarPoly.y(f.exact))
        g = compose(f, lin)
        r = is_keller_normalized(g)
        if r.p_degree_ok and r.q_degree_ok:
            return g
        last = r
    failed = []
    if last is not None and not last.p_degree_ok:
        failed.append("P")
    if last is not None and not last.q_degree_ok:
        failed.append("Q")
    raise ValueError(f"no shear among {tries} normalizes component(s) {', '.join(failed)}")


# --------------------------------------------------------------------------
# text parsing
# --------------------------------------------------------------------------

_ALLOWED_NAMES = {"X", "Y", "I"}


def parse_poly(text: str, exact: bool = True) -> BivarPoly:
    """Parse e.g. ``"3/2*X^2 - X*Y + I*Y + 1"`` into a BivarPoly."""
    return _parse(text, exact, laurent=False)


def _parse(text: str, exact_variant: bool, laurent: bool):
    cls = LaurentBivar if laurent else BivarPoly
    try:
        tree = ast.parse(text.replace("^", "**").strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse polynomial {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return cls.constant(node.value, True)
        if isinstance(node, ast.Name) and node.id in _ALLOWED_NAMES:
            if node.id == "X":
                return cls.x(True)
            if node.id == "Y":
                return cls.y(True)
            return cls.constant(GaussianRational(0, 1), True)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a = ev(node.left)
            if isinstance(node.op, ast.Pow):
                if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)):
                    raise ValueError("exponents must be integer literals")
                return a ** node.right.value
            b = ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if not b.is_constant() or b.is_zero():
                    raise ValueError("division only by nonzero constants")
                return a * (Fraction(1) / b.constant_term())
        raise ValueError(f"unsupported syntax in polynomial {text!r}")

    out = ev(tree)
    return out if exact_variant else out.to_float()


def parse_map(p_text: str, q_text: str, exact: bool = True) -> PolyMap:
    return PolyMap(parse_poly(p_text, exact), parse_poly(q_text, exact))


# --------------------------------------------------------------------------
# JSON map-definition format
# --------------------------------------------------------------------------

def poly_to_json(p: BivarPoly) -> list:
    rows = []
    for (i, j) in sorted(p.terms):
        c = p.terms[(i, j)]
        if p.exact:
            rows.append([i, j, format_fraction(real_part(c)), format_fraction(imag_part(c))])
        else:
            rows.append([i, j, c.real, c.imag])
    return rows


def poly_from_json(rows: Iterable) -> BivarPoly:
    rows = list(rows)
    terms: Dict[Monomial, object] = {}
    kinds = set()
    for row in rows:
        if not isinstance(row, (list, tuple)) or len(row) != 4:
            raise ValueError(f"term must be [i, j, re, im], got {row!r}")
        i, j, re, im = row
        if not (isinstance(i, int) and isinstance(j, int)) or i < 0 or j < 0:
            raise ValueError(f"exponents must be nonnegative integers, got {row!r}")
        if isinstance(re, str) and isinstance(im, str):
            kinds.add("exact")
            c = exact(GaussianRational(parse_fraction(re), parse_fraction(im)))
        elif isinstance(re, (int, float)) and isinstance(im, (int, float)):
            kinds.add("float")
            c = complex(re, im)
        else:
            raise ValueError(f"coefficient parts must both be strings or both numbers: {row!r}")
        if (i, j) in terms:
            raise ValueError(f"duplicate monomial ({i}, {j})")
        terms[(i, j)] = c
    if len(kinds) > 1:
        raise ValueError("mixed exact and float coefficients")
    return BivarPoly(terms, exact=(kinds != {"float"}))


def map_to_json(f: PolyMap) -> dict:
    return {"p": poly_to_json(f.p), "q": poly_to_json(f.q)}


def map_from_json(obj) -> PolyMap:
    if not isinstance(obj, dict) or "p" not in obj or "q" not in obj:
        raise ValueError("map definition needs 'p' and 'q' keys")
    p = poly_from_json(obj["p"])
    q = poly_from_json(obj["q"])
    if p.exact != q.exact:
        if p.is_zero():
            p = BivarPoly.zero(q.exact)
        elif q.is_zero():
            q = BivarPoly.zero(p.exact)
        else:
            raise ValueError("components use different coefficient variants")
    return PolyMap(p, q)


def dumps_map(f: PolyMap) -> str:
    return json.dumps(map_to_json(f), separators=(", ", ": ")) + "\n"


def load_map(path) -> PolyMap:
    with open(path) as fh:
        return map_from_json(json.load(fh))


def save_map(f: PolyMap, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_map(f))
