"""Composition-operator probes, degree multiplicativity, primality and iteration."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .families import random_map
from .fiber import DegreeEstimate, geometric_degree, solver_for
from .poly import BivarPoly, PolyMap, compose, equal_exact
from .sampling import TAG_PROBE, substream
from .volume import PreconditionError

DEFAULT_DEGREE_CAP = 512
DENSE_FRACTION = 0.8


@dataclass
class OperatorProbe:
    """Trials of g -> g∘f (right) or g -> f∘g (left) on distinct pairs."""

    f: PolyMap
    side: str
    pairs: List[Tuple[PolyMap, PolyMap]] = field(default_factory=list)
    verdicts: List[bool] = field(default_factory=list)
    coincidences: List[Tuple[int, Tuple[complex, complex]]] = field(default_factory=list)

    @property
    def collisions(self) -> int:
        return sum(not v for v in self.verdicts)

    @property
    def passed(self) -> bool:
        return self.collisions == 0


def _perturb(rng: np.random.Generator, g: PolyMap) -> PolyMap:
    """g changed in one coefficient of one component (never a no-op)."""
    i, j = int(rng.integers(0, 3)), int(rng.integers(0, 3))
    delta = 0
    while delta == 0:
        delta = int(rng.integers(-3, 4))
    bump = BivarPoly({(i, j): delta})
    return PolyMap(g.p + bump, g.q) if rng.random() < 0.5 else PolyMap(g.p, g.q + bump)


def random_distinct_pair(rng: np.random.Generator, degree: int = 3) -> Tuple[PolyMap, PolyMap]:
    """Two exactly distinct maps: independent, or one a one-coefficient perturbation of the other."""
    g = random_map(rng, int(rng.integers(1, degree + 1)), n_terms=4)
    kind = int(rng.integers(0, 3))
    if kind == 0:
        h = random_map(rng, int(rng.integers(1, degree + 1)), n_terms=4)
    elif kind == 1:
        h = PolyMap(g.p + int(rng.integers(1, 4)), g.q)
    else:
        h = _perturb(rng, g)
    if equal_exact(g, h):
        h = PolyMap(g.p, g.q + 1)
    return g, h


def _probe(f: PolyMap, side: str, trials: int, seed: int, degree: int) -> OperatorProbe:
    if not f.exact:
        raise PreconditionError("probes need exact maps")
    probe = OperatorProbe(f, side)
    for t in range(trials):
        g, h = random_distinct_pair(substream(seed, TAG_PROBE, t), degree)
        if side == "right":
            a, b = compose(g, f), compose(h, f)
        else:
            a, b = compose(f, g), compose(f, h)
        distinct = not equal_exact(a, b)
        probe.pairs.append((g, h))
        probe.verdicts.append(distinct)
        if not distinct and side == "left":
            for pt in coincidence_points(g, h):
                probe.coincidences.append((t, pt))
    return probe


def right_injectivity_probe(f: PolyMap, trials: int = 100, seed: int = 0, degree: int = 3) -> OperatorProbe:
    """g ≠ h must give g∘f ≠ h∘f."""
    return _probe(f, "right", trials, seed, degree)


def left_injectivity_probe(f: PolyMap, trials: int = 100, seed: int = 0, degree: int = 3) -> OperatorProbe:
    """g ≠ h must give f∘g ≠ f∘h; a collision is followed by a search for points where g = h."""
    return _probe(f, "left", trials, seed, degree)


def coincidence_points(g: PolyMap, h: PolyMap, grid: int = 9) -> List[Tuple[complex, complex]]:
    """Grid points (exact dyadic) where g and h agree exactly."""
    vals = [Fraction(2 * k - grid + 1, grid) for k in range(grid)]
    return [(complex(x), complex(y)) for x in vals for y in vals if g(x, y) == h(x, y)]


# --------------------------------------------------------------------------
# degrees
# --------------------------------------------------------------------------

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


@dataclass(frozen=True)
class PrimalityReport:
    d: int
    classification: str          # "unit" | "prime-degree" | "composite-degree"
    estimate: Optional[DegreeEstimate] = None

    @property
    def implies_prime_map(self) -> bool:
        """Prime d forces a prime map; composite d decides nothing."""
        return self.classification == "prime-degree"


def classify_degree(d: int) -> str:
    if d < 1:
        raise ValueError("geometric degree must be positive")
    if d == 1:
        return "unit"
    return "prime-degree" if _is_prime(d) else "composite-degree"


def primality_classify(f: PolyMap, k_targets: int = 25, seed: int = 0) -> PrimalityReport:
    est = geometric_degree(f, k_targets, seed)
    if not est.confident:
        raise PreconditionError(f"degree estimate not confident: histogram {est.histogram}")
    return PrimalityReport(est.d, classify_degree(est.d), est)


@dataclass(frozen=True)
class MultiplicativityReport:
    d_f: int
    d_g: int
    d_fg: int

    @property
    def holds(self) -> bool:
        return self.d_fg == self.d_f * self.d_g


def degree_multiplicativity(f: PolyMap, g: PolyMap, k_targets: int = 25, seed: int = 0) -> MultiplicativityReport:
    return MultiplicativityReport(geometric_degree(f, k_targets, seed).d,
                                  geometric_degree(g, k_targets, seed).d,
                                  geometric_degree(compose(f, g), k_targets, seed).d)


class DegreeCapError(ValueError):
    def __init__(self, required: int, cap: int):
        super().__init__(f"iterate needs degree cap >= {required} (configured {cap})")
        self.required = required
        self.cap = cap


def iterate(f: PolyMap, n: int, cap: int = DEFAULT_DEGREE_CAP) -> PolyMap:
    """n-fold composite f∘...∘f, refused when deg(f)^n exceeds ``cap``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    bound = max(f.degree, 1) ** n
    if bound > cap:
        raise DegreeCapError(bound, cap)
    out = f
    for _ in range(n - 1):
        out = compose(f, out)
    return out


# --------------------------------------------------------------------------
# B_n sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BnReport:
    histogram: Dict[int, int]
    b_counts: List[int]           # b_counts[k] = #{samples with fiber size <= k}
    d_f: int
    samples: int
    degenerate: int

    @property
    def nested(self) -> bool:
        return all(a <= b for a, b in zip(self.b_counts, self.b_counts[1:]))

    @property
    def dense_fraction(self) -> float:
        return self.histogram.get(self.d_f, 0) / max(self.samples, 1)

    @property
    def dense(self) -> bool:
        return self.dense_fraction >= DENSE_FRACTION


def target_grid(grid: int, half_width: float = 2.0) -> np.ndarray:
    """grid^2 targets from cell midpoints, nudged off the real axes so no coordinate vanishes."""
    step = 2 * half_width / grid
    mids = -half_width + step * (np.arange(grid) + 0.5)
    a = mids + 0.25j
    b = mids - 0.125j
    aa, bb = np.meshgrid(a, b, indexing="ij")
    return np.stack([aa.ravel(), bb.ravel()], axis=1)


def bn_sampler(f: PolyMap, n: int, grid: int = 10, d_f: Optional[int] = None) -> BnReport:
    """Fiber sizes over a target grid; B_k = targets with at most k preimages."""
    targets = target_grid(grid)
    batch = solver_for(f).solve_chunked(targets)
    ok = ~batch.degenerate
    counts = batch.counts[ok]
    hist = dict(sorted(Counter(int(c) for c in counts).items()))
    if d_f is None:
        d_f = max(hist) if hist else 0
    top = max(n, d_f)
    b_counts = [int((counts <= k).sum()) for k in range(top + 1)]
    return BnReport(hist, b_counts, d_f, int(ok.sum()), int((~ok).sum()))
