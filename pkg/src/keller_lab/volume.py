"""Monte Carlo estimates of multiplicity-weighted volumes and of the metric rho_D.

For a holomorphic map g the real Jacobian of g on R^4 is |det J_g|^2, so
integrating |det J_g|^2 over D gives the volume of g(D) counted with
multiplicity.  The distance between g1 and g2 is the multiplicity-weighted
volume of g1(D) Δ g2(D):

    rho = vol(D)/N * sum_i |J_g1(z_i)|^2 [g1(z_i) not in g2(D)]
                         + |J_g2(z_i)|^2 [g2(z_i) not in g1(D)]

with z_i uniform in D.  Image membership goes through the fiber solver.
Every pass draws chunk c from substream (seed, tag, c), so estimates do not
depend on the thread count.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .domains import CharacteristicDomain
from .fiber import CLUSTER_SCALE, FiberSolver, geometric_degree, solver_for
from .poly import PolyMap, compose, is_keller_normalized
from .sampling import (TAG_BOX, TAG_DOMAIN, TAG_ORACLE, TAG_RESAMPLE, TAG_TARGET,
                       chunk_sizes, map_chunks, substream, uniform_ball_c2, uniform_bidisk,
                       uniform_polydisk)

MIN_SAMPLES = 10_000
MAX_DISCARD_FRACTION = 0.01
SIGMA_SLACK = 3.0
RESAMPLE_ROUNDS = 8
BOX_MARGIN = 1.05


class PreconditionError(ValueError):
    """Inputs violate a documented precondition."""


class DegenerateOverflowError(RuntimeError):
    """Too many samples hit degenerate fibers."""


@dataclass(frozen=True)
class MetricEstimate:
    value: float
    std_error: float
    n: int
    seed: int
    g1_side: float
    g2_side: float
    discarded: int = 0
    resampled: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Estimate:
    """A plain Monte Carlo mean times a known volume."""

    value: float
    std_error: float
    n: int
    seed: int
    discarded: int = 0
    resampled: int = 0


@dataclass(frozen=True)
class VolumeReport:
    geometric_vol: float
    geometric_se: float
    mult_vol: float
    mult_se: float
    n: int
    seed: int
    discarded: int = 0

    @property
    def excess(self) -> float:
        return self.mult_vol - self.geometric_vol

    @property
    def excess_se(self) -> float:
        return math.hypot(self.geometric_se, self.mult_se)

    def consistent(self, slack: float = SIGMA_SLACK) -> bool:
        """mult_vol >= geometric_vol >= 0 up to Monte Carlo error."""
        return self.geometric_vol >= 0 and self.excess >= -slack * self.excess_se


def _check_n(n: int) -> None:
    if n < MIN_SAMPLES:
        raise PreconditionError(f"need at least {MIN_SAMPLES} samples, got {n}")


def _mean_se(values: np.ndarray, scale: float) -> Tuple[float, float]:
    n = values.size
    if n == 0:
        return 0.0, 0.0
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return scale * mean, scale * se


# --------------------------------------------------------------------------
# sampling D
# --------------------------------------------------------------------------

def _draw_region(rng: np.random.Generator, d: CharacteristicDomain, n: int) -> np.ndarray:
    if d.shape == "ball":
        return uniform_ball_c2(rng, n, d.radius)
    return uniform_polydisk(rng, n, d.radius)


def _draw_domain(rng: np.random.Generator, d: CharacteristicDomain, n: int) -> np.ndarray:
    """Uniform points of D; draws landing on E (a null set) are replaced."""
    z = _draw_region(rng, d, n)
    bad = ~d.contains_many(z)
    while bad.any():
        z[bad] = _draw_region(rng, d, int(bad.sum()))
        bad = ~d.contains_many(z)
    return z


def sample_domain(d: CharacteristicDomain, n: int, seed: int, tag: int = TAG_DOMAIN) -> np.ndarray:
    """n uniform points of D, assembled from fixed-size chunks."""
    return np.concatenate([_draw_domain(substream(seed, tag, c), d, s)
                           for c, s in enumerate(chunk_sizes(n))]) if n else np.zeros((0, 2), complex)


def _boundary_distance(d: CharacteristicDomain, pts: np.ndarray) -> np.ndarray:
    z, w = np.abs(pts[..., 0]), np.abs(pts[..., 1])
    if d.shape == "ball":
        return np.abs(np.sqrt(z ** 2 + w ** 2) - d.radius)
    return np.abs(np.maximum(z, w) - d.radius)


@dataclass
class _Membership:
    inside: np.ndarray       # some verified preimage lies in D
    count: np.ndarray        # number of verified preimages in D
    ambiguous: np.ndarray    # a preimage sits within cluster_tol of the boundary of D
    degenerate: np.ndarray


def _membership(solver: FiberSolver, w: np.ndarray, d: CharacteristicDomain) -> _Membership:
    if w.shape[0] == 0:
        e = np.zeros(0, dtype=bool)
        return _Membership(e, np.zeros(0, dtype=int), e, e)
    batch = solver.solve_chunked(w)
    pts = batch.points
    keep = batch.keep
    within = keep & d.contains_many(pts)
    tol = CLUSTER_SCALE * (1 + np.sqrt(np.abs(pts[..., 0]) ** 2 + np.abs(pts[..., 1]) ** 2))
    near = keep & (_boundary_distance(d, pts) <= tol)
    return _Membership(within.any(axis=1), within.sum(axis=1), near.any(axis=1), batch.degenerate)


# --------------------------------------------------------------------------
# rho_D
# --------------------------------------------------------------------------

@dataclass
class _RhoChunk:
    z: np.ndarray
    a: np.ndarray            # |J_g1|^2 [g1 z not in g2 D]
    b: np.ndarray            # |J_g2|^2 [g2 z not in g1 D]
    out1: np.ndarray
    out2: np.ndarray
    keep: np.ndarray         # not degenerate
    resampled: int


def _rho_chunk(g1: PolyMap, g2: PolyMap, d: CharacteristicDomain, seed: int, c: int, size: int,
               s1: FiberSolver, s2: FiberSolver) -> _RhoChunk:
    z = _draw_domain(substream(seed, TAG_DOMAIN, c), d, size)
    re_rng = substream(seed, TAG_RESAMPLE, c)
    n1, n2 = g1.numeric, g2.numeric
    out1 = np.zeros(size, dtype=bool)
    out2 = np.zeros(size, dtype=bool)
    degen = np.zeros(size, dtype=bool)
    todo = np.arange(size)
    resampled = 0
    for round_ in range(RESAMPLE_ROUNDS + 1):
        zt = z[todo]
        w1 = np.stack(n1(zt[:, 0], zt[:, 1]), axis=1)
        w2 = np.stack(n2(zt[:, 0], zt[:, 1]), axis=1)
        # z itself witnesses membership wherever the two images coincide
        same = np.all(w1 == w2, axis=1)
        solve = ~same
        m2 = _membership(s2, w1[solve], d)   # is g1(z) in g2(D)?
        m1 = _membership(s1, w2[solve], d)   # is g2(z) in g1(D)?
        o1 = np.zeros(todo.size, dtype=bool)
        o2 = np.zeros(todo.size, dtype=bool)
        amb = np.zeros(todo.size, dtype=bool)
        dg = np.zeros(todo.size, dtype=bool)
        o1[solve] = ~m2.inside
        o2[solve] = ~m1.inside
        amb[solve] = m1.ambiguous | m2.ambiguous
        dg[solve] = m1.degenerate | m2.degenerate
        out1[todo], out2[todo], degen[todo] = o1, o2, dg
        if not amb.any() or round_ == RESAMPLE_ROUNDS:
            break
        todo = todo[amb]
        resampled += todo.size
        z[todo] = _draw_domain(re_rng, d, todo.size)
    j1 = n1.det_sq(z[:, 0], z[:, 1])
    j2 = n2.det_sq(z[:, 0], z[:, 1])
    keep = ~degen
    return _RhoChunk(z, np.where(out1, j1, 0.0), np.where(out2, j2, 0.0), out1, out2, keep, resampled)


def _rho_pass(g1: PolyMap, g2: PolyMap, d: CharacteristicDomain, n: int, seed: int,
              threads: Optional[int]) -> List[_RhoChunk]:
    _check_n(n)
    if g1.exact != g2.exact:
        raise PreconditionError("maps must share a scalar variant")
    s1, s2 = solver_for(g1), solver_for(g2)
    return map_chunks(lambda c, s: _rho_chunk(g1, g2, d, seed, c, s, s1, s2), chunk_sizes(n), threads)


def _summarise(chunks: List[_RhoChunk], d: CharacteristicDomain, n: int, seed: int,
               weight: Optional[Callable[[_RhoChunk], Tuple[np.ndarray, np.ndarray]]] = None) -> MetricEstimate:
    keep = np.concatenate([c.keep for c in chunks])
    discarded = int((~keep).sum())
    if discarded > MAX_DISCARD_FRACTION * n:
        raise DegenerateOverflowError(f"{discarded} of {n} samples hit degenerate fibers")
    if weight is None:
        a = np.concatenate([c.a for c in chunks])[keep]
        b = np.concatenate([c.b for c in chunks])[keep]
    else:
        parts = [weight(c) for c in chunks]
        a = np.concatenate([p[0] for p in parts])[keep]
        b = np.concatenate([p[1] for p in parts])[keep]
    vol = d.volume()
    side1, _ = _mean_se(a, vol)
    side2, _ = _mean_se(b, vol)
    _, se = _mean_se(a + b, vol)
    return MetricEstimate(value=side1 + side2, std_error=se, n=n, seed=seed, g1_side=side1, g2_side=side2,
                          discarded=discarded, resampled=sum(c.resampled for c in chunks))


def rho(g1: PolyMap, g2: PolyMap, d: CharacteristicDomain, n: int = 100_000, seed: int = 0,
        threads: Optional[int] = None) -> MetricEstimate:
    """Multiplicity-weighted volume of g1(D) Δ g2(D)."""
    return _summarise(_rho_pass(g1, g2, d, n, seed, threads), d, n, seed)


# --------------------------------------------------------------------------
# volumes
# --------------------------------------------------------------------------

def coefficient_box(g: PolyMap, d: CharacteristicDomain) -> Tuple[float, float]:
    """Radii of a bidisk containing g(D): sum |c| R^(i+j) per component, plus a margin."""
    r = d.radius

    def bound(p) -> float:
        return sum(abs(complex(c)) * r ** (i + j) for (i, j), c in p.terms.items())

    return BOX_MARGIN * bound(g.p), BOX_MARGIN * bound(g.q)


def _target_pass(g: PolyMap, d: CharacteristicDomain, n: int, seed: int, tag: int,
                 threads: Optional[int]) -> Tuple[np.ndarray, np.ndarray, float, int]:
    """Preimage counts in D of uniform targets in the coefficient box.

    Returns (counts, keep, box volume, resampled).
    """
    r1, r2 = coefficient_box(g, d)
    box = math.pi ** 2 * r1 ** 2 * r2 ** 2
    solver = solver_for(g)

    def work(c: int, size: int):
        rng = substream(seed, tag, c)
        re_rng = substream(seed, TAG_BOX, c * 64 + tag)
        w = uniform_bidisk(rng, size, r1, r2)
        counts = np.zeros(size, dtype=int)
        degen = np.zeros(size, dtype=bool)
        todo = np.arange(size)
        resampled = 0
        for round_ in range(RESAMPLE_ROUNDS + 1):
            m = _membership(solver, w[todo], d)
            counts[todo], degen[todo] = m.count, m.degenerate
            if not m.ambiguous.any() or round_ == RESAMPLE_ROUNDS:
                break
            todo = todo[m.ambiguous]
            resampled += todo.size
            w[todo] = uniform_bidisk(re_rng, todo.size, r1, r2)
        return counts, ~degen, resampled

    parts = map_chunks(work, chunk_sizes(n), threads)
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), box,
            sum(p[2] for p in parts))


def jacobian_volume(g: PolyMap, d: CharacteristicDomain, n: int, seed: int,
                    threads: Optional[int] = None) -> Estimate:
    """vol(D) * mean |det J_g|^2 over uniform samples of D."""
    _check_n(n)
    num = g.numeric

    def work(c: int, size: int) -> np.ndarray:
        z = _draw_domain(substream(seed, TAG_DOMAIN, c), d, size)
        return num.det_sq(z[:, 0], z[:, 1])

    vals = np.concatenate(map_chunks(work, chunk_sizes(n), threads))
    value, se = _mean_se(vals, d.volume())
    return Estimate(value, se, n, seed)


def _count_estimate(counts, keep, box, n, seed, resampled, indicator: bool) -> Estimate:
    discarded = int((~keep).sum())
    if discarded > MAX_DISCARD_FRACTION * n:
        raise DegenerateOverflowError(f"{discarded} of {n} target samples hit degenerate fibers")
    vals = counts[keep]
    if indicator:
        vals = vals > 0
    value, se = _mean_se(vals.astype(float), box)
    return Estimate(value, se, n, seed, discarded, resampled)


def geometric_volume(g: PolyMap, d: CharacteristicDomain, n: int, seed: int,
                     threads: Optional[int] = None) -> Estimate:
    """vol g(D), by hit-or-miss on targets with at least one preimage in D."""
    _check_n(n)
    counts, keep, box, res = _target_pass(g, d, n, seed, TAG_TARGET, threads)
    return _count_estimate(counts, keep, box, n, seed, res, indicator=True)


def preimage_count_volume(g: PolyMap, d: CharacteristicDomain, n: int, seed: int,
                          threads: Optional[int] = None) -> Estimate:
    """Independent oracle for the multiplicity-weighted volume: integral of #(g^-1(w) ∩ D) dw."""
    _check_n(n)
    counts, keep, box, res = _target_pass(g, d, n, seed, TAG_ORACLE, threads)
    return _count_estimate(counts, keep, box, n, seed, res, indicator=False)


def mult_volume(g: PolyMap, d: CharacteristicDomain, n: int = 100_000, seed: int = 0,
                threads: Optional[int] = None) -> VolumeReport:
    """Multiplicity-weighted and geometric volume of g(D)."""
    mult = jacobian_volume(g, d, n, seed, threads)
    geo = geometric_volume(g, d, n, seed, threads)
    return VolumeReport(geometric_vol=geo.value, geometric_se=geo.std_error, mult_vol=mult.value,
                        mult_se=mult.std_error, n=n, seed=seed, discarded=geo.discarded)


def domain_volume(d: CharacteristicDomain, n: int, seed: int) -> Estimate:
    """Hit-or-miss estimate of vol(D) from the cube [-R, R]^4."""
    _check_n(n)
    r = d.radius
    hits = []
    for c, s in enumerate(chunk_sizes(n)):
        u = substream(seed, TAG_BOX, c).uniform(-r, r, size=(s, 4))
        pts = np.stack([u[:, 0] + 1j * u[:, 1], u[:, 2] + 1j * u[:, 3]], axis=1)
        hits.append(d.contains_many(pts).astype(float))
    value, se = _mean_se(np.concatenate(hits), (2 * r) ** 4)
    return Estimate(value, se, n, seed)


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

def combined_sigma(*ses: float) -> float:
    return math.sqrt(sum(s * s for s in ses))


@dataclass(frozen=True)
class IsometryReport:
    base: MetricEstimate
    composed: MetricEstimate
    slack: float = SIGMA_SLACK

    @property
    def difference(self) -> float:
        return self.composed.value - self.base.value

    @property
    def sigma(self) -> float:
        return combined_sigma(self.base.std_error, self.composed.std_error)

    @property
    def ratio(self) -> float:
        return self.composed.value / self.base.value if self.base.value else float("nan")

    @property
    def holds(self) -> bool:
        return abs(self.difference) <= self.slack * self.sigma


def isometry_experiment(f: PolyMap, g1: PolyMap, g2: PolyMap, d: CharacteristicDomain,
                        n: int = 100_000, seed: int = 0, threads: Optional[int] = None) -> IsometryReport:
    """rho(f∘g1, f∘g2) against rho(g1, g2) on the same samples."""
    base = rho(g1, g2, d, n, seed, threads)
    composed = rho(compose(f, g1), compose(f, g2), d, n, seed, threads)
    return IsometryReport(base, composed)


@dataclass(frozen=True)
class ContractionReport:
    lhs: MetricEstimate              # rho(f∘g1, f∘g2)
    rhs: MetricEstimate              # rho(g1, g2)
    weighted_rhs: MetricEstimate     # g1 D Δ g2 D weighted by |J_f|^2 at the image point
    d_f: int
    keller: bool
    slack: float = SIGMA_SLACK

    @property
    def ratio(self) -> float:
        return self.lhs.value / self.rhs.value if self.rhs.value else float("nan")

    @property
    def holds(self) -> bool:
        """rho(f∘g1, f∘g2) <= rho(g1, g2) within the slack."""
        return self.lhs.value <= self.rhs.value + self.slack * combined_sigma(self.lhs.std_error, self.rhs.std_error)

    @property
    def weighted_holds(self) -> bool:
        """The set-containment bound, which needs no Keller hypothesis."""
        return self.lhs.value <= self.weighted_rhs.value + self.slack * combined_sigma(
            self.lhs.std_error, self.weighted_rhs.std_error)


def contraction_experiment(f: PolyMap, g1: PolyMap, g2: PolyMap, d: CharacteristicDomain,
                           n: int = 100_000, seed: int = 0, threads: Optional[int] = None,
                           d_f: Optional[int] = None) -> ContractionReport:
    """Compare rho(f∘g1, f∘g2) with rho(g1, g2).

    For det J_f ≡ 1 the plain inequality is the claim under test.  Without
    that hypothesis f can expand volume, so the report also carries the
    bound from (f g1 D) Δ (f g2 D) ⊆ f(g1 D Δ g2 D): the right side
    weighted by |det J_f|^2 at g_i(z), evaluated on the same samples.
    """
    chunks = _rho_pass(g1, g2, d, n, seed, threads)
    rhs = _summarise(chunks, d, n, seed)
    nf = f.numeric
    n1, n2 = g1.numeric, g2.numeric

    def weight(c: _RhoChunk):
        x1, y1 = n1(c.z[:, 0], c.z[:, 1])
        x2, y2 = n2(c.z[:, 0], c.z[:, 1])
        return c.a * nf.det_sq(x1, y1), c.b * nf.det_sq(x2, y2)

    weighted = _summarise(chunks, d, n, seed, weight)
    lhs = rho(compose(f, g1), compose(f, g2), d, n, seed, threads)
    if d_f is None:
        d_f = geometric_degree(f).d
    keller = is_keller_normalized(f, strict=False).passed
    return ContractionReport(lhs, rhs, weighted, d_f, keller)


@dataclass(frozen=True)
class BoundsReport:
    region_vol: float
    image: Estimate
    d_f: int
    slack: float = SIGMA_SLACK

    @property
    def upper_ok(self) -> bool:
        """vol f(A) <= vol A."""
        return self.image.value <= self.region_vol + self.slack * self.image.std_error

    @property
    def lower_ok(self) -> bool:
        """vol A <= d_f vol f(A)."""
        return self.region_vol <= self.d_f * (self.image.value + self.slack * self.image.std_error)

    @property
    def holds(self) -> bool:
        return self.upper_ok and self.lower_ok


def volume_bounds_check(f: PolyMap, region: CharacteristicDomain, n: int = 100_000, seed: int = 0,
                        threads: Optional[int] = None, d_f: Optional[int] = None) -> BoundsReport:
    """vol(A)/d_f <= vol f(A) <= vol(A) for det J_f ≡ 1."""
    if not is_keller_normalized(f, strict=False).passed:
        raise PreconditionError("volume bounds need det J_f ≡ 1")
    image = geometric_volume(f, region, n, seed, threads)
    if d_f is None:
        d_f = geometric_degree(f).d
    return BoundsReport(region.volume(), image, d_f)
