"""Star-based characteristic sets E and domains D = B(0, R) - E in C^2.

Layout, for a unit u (largest power of two <= R/4):

* slices sit over z_k = a + u / 2^(k+1) with limit point a = u/2;
* every slice carries the segment l = [-u/2, u/2] of the real axis in the
  second coordinate W, plus K thick stars centred at dyadic points of l;
* star j of slice k has valence S*j + k + 1, so slices use disjoint
  residue classes of valences;
* stars are grouped in bundles of five; the rays of bundle b+1 are at most a
  tenth of the longest ray of bundle b.

E is a finite union of real 2-dimensional pieces, so it is null in C^2 and
closed with empty interior; D therefore has no slits.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from .poly import PolyMap, equal_exact
from .scalars import format_fraction, parse_fraction

BUNDLE_SIZE = 5
BUNDLE_DECAY = 10   # bundle b+1 rays <= bundle b rays / BUNDLE_DECAY
GAP_FRACTION = 0.45
SHAPES = ("ball", "polydisk")


class DomainInvariantError(RuntimeError):
    """A constructed domain failed one of its structural checks."""


Triangle = Tuple[complex, complex, complex]


@dataclass(frozen=True)
class ThickStar:
    center: Fraction
    m: int
    ray_length: float
    angle_offset: float
    triangles: Tuple[Triangle, ...]

    @property
    def max_ray_length(self) -> float:
        # legs have length ray_length and apex angles are at most pi/3
        return self.ray_length

    @property
    def measured_diameter(self) -> float:
        return max(_diameter(t) for t in self.triangles)

    def contains(self, w: complex) -> bool:
        return any(_in_triangle(w, t) for t in self.triangles)


def _diameter(t: Triangle) -> float:
    a, b, c = t
    return max(abs(a - b), abs(b - c), abs(a - c))


def _cross(o: complex, a: complex, b: complex) -> float:
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)


def _in_triangle(w: complex, t: Triangle) -> bool:
    a, b, c = t
    d1, d2, d3 = _cross(a, b, w), _cross(b, c, w), _cross(c, a, w)
    neg = d1 < 0 or d2 < 0 or d3 < 0
    pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (neg and pos)


def build_thick_star(center, m: int, ray_length: float, angle_offset: float = 0.0) -> ThickStar:
    """2m congruent isosceles triangles with apex at ``center``.

    Ray directions are spaced by pi/m; each apex angle is half that spacing
    (capped at pi/3), so two triangles meet only at the centre.
    """
    if m < 1:
        raise ValueError("valence m must be at least 1")
    if not ray_length > 0:
        raise ValueError("ray_length must be positive")
    c = complex(center)
    half = min(0.5 * math.pi / m, math.pi / 3) / 2
    tris = []
    for k in range(2 * m):
        phi = angle_offset + k * math.pi / m
        tris.append((c, c + ray_length * cmath.exp(1j * (phi - half)), c + ray_length * cmath.exp(1j * (phi + half))))
    return ThickStar(Fraction(center), m, float(ray_length), float(angle_offset), tuple(tris))


@dataclass(frozen=True)
class StaredSegment:
    z: Fraction
    segment: Tuple[Fraction, Fraction]
    stars: Tuple[ThickStar, ...]

    @property
    def valences(self) -> List[int]:
        return [s.m for s in self.stars]

    @property
    def bundles(self) -> List[Tuple[ThickStar, ...]]:
        return [self.stars[i:i + BUNDLE_SIZE] for i in range(0, len(self.stars), BUNDLE_SIZE)]

    def contains_w(self, w: complex) -> bool:
        lo, hi = self.segment
        if w.imag == 0 and float(lo) <= w.real <= float(hi):
            return True
        return any(s.contains(w) for s in self.stars)

    def reach(self) -> float:
        """max |w| over the slice."""
        return max([abs(float(e)) for e in self.segment]
                   + [abs(v) for s in self.stars for t in s.triangles for v in t])


@dataclass(frozen=True)
class CharacteristicDomain:
    radius: float
    shape: str
    unit: Fraction
    limit: Fraction
    slices: Tuple[StaredSegment, ...]
    K: int
    angle_offset: float = 0.0

    @property
    def z_sequence(self) -> List[Fraction]:
        return [s.z for s in self.slices]

    def volume(self) -> float:
        """4-volume of the ambient region (E is null)."""
        r4 = self.radius ** 4
        return math.pi ** 2 * r4 / 2 if self.shape == "ball" else math.pi ** 2 * r4

    def in_region(self, z: complex, w: complex) -> bool:
        if self.shape == "ball":
            return abs(z) ** 2 + abs(w) ** 2 < self.radius ** 2
        return abs(z) < self.radius and abs(w) < self.radius

    def in_E(self, z: complex, w: complex) -> bool:
        z = complex(z)
        if z.imag != 0:
            return False
        for s in self.slices:
            if z.real == float(s.z) and s.contains_w(complex(w)):
                return True
        return False

    def contains(self, point) -> bool:
        z, w = complex(point[0]), complex(point[1])
        return self.in_region(z, w) and not self.in_E(z, w)

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`contains` over an (..., 2) complex array."""
        pts = np.asarray(pts, dtype=complex)
        z, w = pts[..., 0], pts[..., 1]
        if self.shape == "ball":
            inside = np.abs(z) ** 2 + np.abs(w) ** 2 < self.radius ** 2
        else:
            inside = (np.abs(z) < self.radius) & (np.abs(w) < self.radius)
        zs = np.array([float(s.z) for s in self.slices])
        hit = inside & (z.imag == 0) & np.isin(z.real, zs)
        for idx in zip(*np.nonzero(hit)):
            if self.in_E(z[idx], w[idx]):
                inside[idx] = False
        return inside

    # -- serialisation ----------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "shape": self.shape,
            "unit": format_fraction(self.unit),
            "limit": format_fraction(self.limit),
            "K": self.K,
            "angle_offset": self.angle_offset,
            "slices": [
                {
                    "z": format_fraction(s.z),
                    "segment": [format_fraction(e) for e in s.segment],
                    "stars": [{"center": format_fraction(t.center), "valence": t.m,
                               "ray_length": t.ray_length, "angle_offset": t.angle_offset}
                              for t in s.stars],
                }
                for s in self.slices
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, obj: dict) -> "CharacteristicDomain":
        try:
            slices = tuple(
                StaredSegment(
                    z=parse_fraction(s["z"]),
                    segment=tuple(parse_fraction(e) for e in s["segment"]),
                    stars=tuple(build_thick_star(parse_fraction(t["center"]), int(t["valence"]),
                                                 float(t["ray_length"]), float(t["angle_offset"]))
                                for t in s["stars"]),
                )
                for s in obj["slices"]
            )
            d = cls(radius=float(obj["radius"]), shape=obj.get("shape", "ball"),
                    unit=parse_fraction(obj["unit"]), limit=parse_fraction(obj["limit"]),
                    slices=slices, K=int(obj["K"]), angle_offset=float(obj.get("angle_offset", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed domain description: {exc}") from exc
        verify_domain(d)
        return d


def van_der_corput(n: int) -> Fraction:
    """n-th term (n >= 1) of the base-2 radical inverse: 1/2, 1/4, 3/4, 1/8, ..."""
    q, denom = Fraction(0), 1
    while n:
        denom *= 2
        n, bit = divmod(n, 2)
        q += Fraction(bit, denom)
    return q


def dyadic_points(lo: Fraction, hi: Fraction, count: int) -> List[Fraction]:
    """``count`` distinct dyadic points of the segment, dense as count grows."""
    return [lo + (hi - lo) * van_der_corput(j + 1) for j in range(count)]


def _unit_for(radius: float) -> Fraction:
    if not radius > 0:
        raise ValueError("radius must be positive")
    e = math.floor(math.log2(radius / 4))
    u = Fraction(2) ** e
    while u > Fraction(radius) / 4:
        u /= 2
    while 2 * u <= Fraction(radius) / 4:
        u *= 2
    return u


def build_domain(R: float, num_slices: int, K: int, shape: str = "ball",
                 seed_geometry: float = 0.0) -> CharacteristicDomain:
    """Build and verify D = B(0, R) - E with ``num_slices`` stared segments of K stars.

    ``seed_geometry`` is the angular offset of every star's first ray.
    """
    if shape not in SHAPES:
        raise ValueError(f"shape must be one of {SHAPES}")
    if num_slices < 1 or K < 1:
        raise ValueError("need at least one slice and one star")
    u = _unit_for(R)
    a = u / 2
    lo, hi = -u / 2, u / 2
    centers = dyadic_points(lo, hi, K)
    gaps = []
    for j, c in enumerate(centers):
        others = [abs(c - o) for k, o in enumerate(centers) if k != j]
        gaps.append(float(min(others)) if others else float(u))
    slices = []
    for k in range(num_slices):
        z = a + u / 2 ** (k + 1)
        stars = []
        cap = float(u / 8)
        for b0 in range(0, K, BUNDLE_SIZE):
            bundle = []
            for j in range(b0, min(b0 + BUNDLE_SIZE, K)):
                length = min(cap, GAP_FRACTION * gaps[j])
                bundle.append(build_thick_star(centers[j], num_slices * j + k + 1, length, seed_geometry))
            stars.extend(bundle)
            cap = max(s.max_ray_length for s in bundle) / BUNDLE_DECAY
        slices.append(StaredSegment(z=z, segment=(lo, hi), stars=tuple(stars)))
    d = CharacteristicDomain(radius=float(R), shape=shape, unit=u, limit=a, slices=tuple(slices),
                             K=K, angle_offset=float(seed_geometry))
    verify_domain(d)
    return d


def verify_domain(d: CharacteristicDomain) -> None:
    """Raise DomainInvariantError unless every structural invariant holds."""
    zs = d.z_sequence
    if len(set(zs)) != len(zs):
        raise DomainInvariantError("slice coordinates z_k are not distinct")
    all_valences: set = set()
    for s in d.slices:
        vals = s.valences
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainInvariantError(f"valences of slice z={s.z} not strictly increasing")
        if all_valences & set(vals):
            raise DomainInvariantError(f"valences of slice z={s.z} overlap another slice")
        all_valences |= set(vals)
        lo, hi = s.segment
        for t in s.stars:
            if not lo <= t.center <= hi:
                raise DomainInvariantError(f"star centre {t.center} is off the segment")
            if len(t.triangles) != 2 * t.m:
                raise DomainInvariantError("thick star must have 2m triangles")
            if t.measured_diameter > t.ray_length + 1e-12 * (1 + abs(float(t.center))):
                raise DomainInvariantError("triangle diameter exceeds the ray length")
        # stars lie in disjoint disks around their centres
        for i, t1 in enumerate(s.stars):
            for t2 in s.stars[i + 1:]:
                if float(abs(t1.center - t2.center)) <= t1.ray_length + t2.ray_length:
                    raise DomainInvariantError(f"stars at {t1.center} and {t2.center} intersect")
        bundles = s.bundles
        if any(len(b) != BUNDLE_SIZE for b in bundles[:-1]):
            raise DomainInvariantError("bundles must hold five stars")
        for b1, b2 in zip(bundles, bundles[1:]):
            m1 = max(t.max_ray_length for t in b1)
            m2 = max(t.max_ray_length for t in b2)
            if m2 > m1 / BUNDLE_DECAY:
                raise DomainInvariantError("bundle ray lengths do not decay by 1/10")
        reach = s.reach()
        z = float(s.z)
        fits = z ** 2 + reach ** 2 < d.radius ** 2 if d.shape == "ball" else max(abs(z), reach) < d.radius
        if not fits:
            raise DomainInvariantError(f"slice z={s.z} leaves the ball of radius {d.radius}")


def load_domain(path) -> CharacteristicDomain:
    with open(path) as fh:
        return CharacteristicDomain.from_json(json.load(fh))


def save_domain(d: CharacteristicDomain, path) -> None:
    with open(path, "w") as fh:
        fh.write(d.dumps() + "\n")


def grid_points(d: CharacteristicDomain, count: int) -> Tuple[List[Fraction], List[Fraction]]:
    """``count`` slice coordinates z_k and ``count`` dyadic points of l."""
    zs = d.z_sequence
    if len(zs) < count:
        raise ValueError(f"need {count} distinct z_k but the domain has {len(zs)} slices")
    lo, hi = d.slices[0].segment
    return zs[:count], dyadic_points(lo, hi, count)


def equality_witness(f1: PolyMap, f2: PolyMap, d: CharacteristicDomain, degree_bound: int) -> bool:
    """Exact agreement of f1 and f2 on a (degree_bound+1)^2 grid inside E.

    For maps of degree <= degree_bound, agreement on a product grid with
    distinct coordinates forces equality.
    """
    if not (f1.exact and f2.exact):
        raise ValueError("equality_witness needs exact maps")
    top = max(f1.degree, f2.degree)
    if top > degree_bound:
        raise ValueError(f"degree_bound violated: maps have degree {top} > {degree_bound}")
    zs, ws = grid_points(d, degree_bound + 1)
    for z in zs:
        for w in ws:
            if f1(z, w) != f2(z, w):
                return False
    return True


def witness_is_sound(f1: PolyMap, f2: PolyMap, d: CharacteristicDomain, degree_bound: int) -> bool:
    """equality_witness never claims equality of exactly-distinct maps."""
    return not equality_witness(f1, f2, d, degree_bound) or equal_exact(f1, f2)
