"""Fibers F^-1(a, b) of polynomial maps by resultant elimination.

Pipeline for a target (a, b):

1. Eliminate Y: the eliminant Res_Y(P - a, Q - b) is sampled at K nodes on
   the unit circle (Sylvester determinants) and interpolated by FFT.  K is
   one more than the generic X-degree of the eliminant, found once per map
   by an exact computation modulo a large prime.
2. All roots of the eliminant by Aberth iteration.
3. For each root x, candidate y are the roots of P(x, Y) - a and
   Q(x, Y) - b; every candidate pair is polished by 2-D Newton.
4. Candidates are kept when the residual is below
   1e-8 * (1 + |target|) and deduplicated at 1e-8 * (1 + |point|).

Everything is vectorised over batches of targets so that Monte Carlo passes
can push 10^5 - 10^6 targets through one solver.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .poly import BivarPoly, PolyMap, jacobian_det
from .roots import roots_batch
from .sampling import TAG_DEGREE, substream, uniform_ball_c2
from .scalars import imag_part, real_part

RESIDUAL_SCALE = 1e-8
# floor relative to sum |c| |x|^i |y|^j: what double evaluation can certify
ROUNDOFF_SCALE = 1e-12
CLUSTER_SCALE = 1e-8
# eliminant below this fraction of the Hadamard bound is treated as identically zero
DEGENERATE_REL = 1e-11
NEWTON_STEPS = 30
TARGET_RADIUS = 10.0
K_TARGETS = 25

STATUS_FINITE = "finite"
STATUS_EMPTY = "empty"
STATUS_DEGENERATE = "degenerate"
_STATUS = (STATUS_FINITE, STATUS_EMPTY, STATUS_DEGENERATE)

# prime p = 1 mod 4, so sqrt(-1) exists in Z/p
_PRIME = 4611686018427388073


def _sqrt_minus_one(p: int) -> int:
    for a in range(2, 1000):
        r = pow(a, (p - 1) // 4, p)
        if r * r % p == p - 1:
            return r
    raise RuntimeError("no sqrt(-1) found")


_I_MOD = _sqrt_minus_one(_PRIME)


class DegenerateFiberError(RuntimeError):
    """A fiber looked positive-dimensional (eliminant numerically zero)."""


@dataclass
class FiberResult:
    target: Tuple[complex, complex]
    points: List[Tuple[complex, complex]]
    residuals: List[float]
    status: str
    bezout_bound: int

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def residual_max(self) -> float:
        return max(self.residuals, default=0.0)


@dataclass
class DegreeEstimate:
    d: int
    samples: int
    histogram: Dict[int, int]
    confident: bool
    seed: Optional[int] = None

    @property
    def generic_fraction(self) -> float:
        return self.histogram.get(self.d, 0) / max(self.samples, 1)


@dataclass
class BatchFibers:
    """Solver output for B targets with up to C candidate points each."""

    targets: np.ndarray          # (B, 2)
    points: np.ndarray           # (B, C, 2)
    keep: np.ndarray             # (B, C) verified and deduplicated
    residuals: np.ndarray        # (B, C)
    status: np.ndarray           # (B,) index into _STATUS

    @property
    def counts(self) -> np.ndarray:
        return self.keep.sum(axis=1)

    @property
    def degenerate(self) -> np.ndarray:
        return self.status == 2

    def result(self, b: int, bezout_bound: int) -> FiberResult:
        pts = self.points[b][self.keep[b]]
        res = self.residuals[b][self.keep[b]]
        order = np.lexsort((pts[:, 1].imag, pts[:, 1].real, pts[:, 0].imag, pts[:, 0].real)) if len(pts) else []
        return FiberResult(
            target=(complex(self.targets[b, 0]), complex(self.targets[b, 1])),
            points=[(complex(pts[k, 0]), complex(pts[k, 1])) for k in order],
            residuals=[float(res[k]) for k in order],
            status=_STATUS[int(self.status[b])],
            bezout_bound=bezout_bound,
        )


# ---------------------------------------------------------------------------
# exact eliminant degree (mod p)
# ---------------------------------------------------------------------------

def _mod(c) -> int:
    re, im = real_part(c), imag_part(c)
    p = _PRIME
    r = re.numerator % p * pow(re.denominator % p, -1, p)
    i = im.numerator % p * pow(im.denominator % p, -1, p)
    return (r + _I_MOD * i) % p


def _det_mod(m: List[List[int]]) -> int:
    p = _PRIME
    a = [row[:] for row in m]
    n = len(a)
    det = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det = det * a[col][col] % p
        inv = pow(a[col][col], -1, p)
        for r in range(col + 1, n):
            f = a[r][col] * inv % p
            if f:
                ar, ac = a[r], a[col]
                for k in range(col, n):
                    ar[k] = (ar[k] - f * ac[k]) % p
    return det % p


def _sylvester_rows(f: Sequence, g: Sequence) -> List[List]:
    """Sylvester matrix of f, g given highest-degree-first coefficient lists."""
    p, q = len(f) - 1, len(g) - 1
    s = p + q
    rows = []
    for i in range(q):
        rows.append([0] * i + list(f) + [0] * (s - i - p - 1))
    for i in range(p):
        rows.append([0] * i + list(g) + [0] * (s - i - q - 1))
    return rows


def _y_coeffs_mod(poly: BivarPoly, x: int, shift: int, dy: int) -> List[int]:
    """Coefficients of Y -> poly(x, Y) - shift mod p, highest first, length dy+1."""
    p = _PRIME
    asc = [0] * (dy + 1)
    for (i, j), c in poly.terms.items():
        asc[j] = (asc[j] + _mod(c) * pow(x, i, p)) % p
    asc[0] = (asc[0] - shift) % p
    return asc[::-1]


def eliminant_degree(P: BivarPoly, Q: BivarPoly, trials: int = 2, seed: int = 12345) -> int:
    """Generic X-degree of Res_Y(P - a, Q - b); -1 if identically zero.

    Exact over Z/p at random targets: degree of a polynomial sampled at
    x = 0..N equals the order of its last nonzero finite difference.
    """
    dyP, dyQ = max(P.degree_y, 0), max(Q.degree_y, 0)
    bound = max(P.total_degree, 0) * max(Q.total_degree, 0)
    rnd = random.Random(seed)
    best = -1
    for _ in range(trials):
        a = rnd.randrange(1, _PRIME)
        b = rnd.randrange(1, _PRIME)
        vals = []
        for x in range(bound + 1):
            f = _y_coeffs_mod(P, x, a, dyP)
            g = _y_coeffs_mod(Q, x, b, dyQ)
            vals.append(_det_mod(_sylvester_rows(f, g)))
        deg = -1
        diffs = vals
        for k in range(bound + 1):
            if any(diffs):
                deg = k
            diffs = [(diffs[t + 1] - diffs[t]) % _PRIME for t in range(len(diffs) - 1)]
            if not diffs:
                break
        # deg is the largest k with a nonzero k-th difference
        best = max(best, deg)
    return best


# ---------------------------------------------------------------------------
# batched numeric solver
# ---------------------------------------------------------------------------

def _sylvester_batch(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Batched Sylvester matrices; f (..., p+1), g (..., q+1) highest first."""
    p, q = f.shape[-1] - 1, g.shape[-1] - 1
    s = p + q
    out = np.zeros(f.shape[:-1] + (s, s), dtype=complex)
    for i in range(q):
        out[..., i, i:i + p + 1] = f
    for i in range(p):
        out[..., q + i, i:i + q + 1] = g
    return out


class FiberSolver:
    """Reusable solver for one map; ``solve(targets)`` handles a batch."""

    def __init__(self, f: PolyMap, eliminant_deg: int | None = None):
        if f.p.is_constant() or f.q.is_constant():
            raise ValueError("fiber solving needs both components nonconstant")
        self.map = f
        P, Q = f.p, f.q
        # eliminate Y unless neither component involves Y
        self.swap = max(P.degree_y, 0) + max(Q.degree_y, 0) == 0
        if self.swap:
            P = BivarPoly({(j, i): c for (i, j), c in P.terms.items()}, P.exact)
            Q = BivarPoly({(j, i): c for (i, j), c in Q.terms.items()}, Q.exact)
        self.P, self.Q = P, Q
        self.work = PolyMap(P, Q)
        self.dyP, self.dyQ = max(P.degree_y, 0), max(Q.degree_y, 0)
        self.bezout_bound = f.bezout_bound
        if eliminant_deg is None:
            eliminant_deg = eliminant_degree(P, Q) if f.exact else self.bezout_bound
        self.e = eliminant_deg
        # a curve inside a fiber makes det J vanish along it, so constant nonzero det rules it out
        det = jacobian_det(f)
        self.finite_fibers = det.is_constant() and not det.is_zero()
        num = self.work.numeric
        self._num = num
        self._absP = PolyMap(_abs_poly(P), _abs_poly(Q)).numeric
        if self.e >= 0:
            k = self.e + 1
            self.nodes = np.exp(2j * np.pi * np.arange(k) / k)
            self.Pn = num.P.y_coefficients(self.nodes)   # (K, dyP+1) ascending
            self.Qn = num.Q.y_coefficients(self.nodes)

    # -- stage 1: eliminant --------------------------------------------------
    def _eliminant(self, a: np.ndarray, b: np.ndarray):
        B = a.shape[0]
        fP = np.broadcast_to(self.Pn, (B,) + self.Pn.shape).copy()
        fQ = np.broadcast_to(self.Qn, (B,) + self.Qn.shape).copy()
        fP[..., 0] -= a[:, None]
        fQ[..., 0] -= b[:, None]
        S = _sylvester_batch(fP[..., ::-1], fQ[..., ::-1])
        vals = np.linalg.det(S)                              # (B, K)
        coeffs = np.fft.fft(vals, axis=-1) / vals.shape[-1]  # ascending in X
        if self.finite_fibers:
            return coeffs, np.zeros(B, dtype=bool)
        hadamard = np.prod(np.linalg.norm(S, axis=-1), axis=-1).max(axis=-1)
        cnorm = np.linalg.norm(coeffs, axis=-1)
        degenerate = cnorm < DEGENERATE_REL * hadamard
        return coeffs, degenerate

    # -- stage 3: Newton ------------------------------------------------------
    def _newton(self, x, y, a, b):
        """2-D Newton on each candidate; keeps the lowest-residual iterate.

        A candidate leaves the active set once its step is at roundoff
        level or its residual has not improved for two iterations.
        """
        num = self._num
        shape = np.broadcast(x, a).shape
        x = np.broadcast_to(x, shape).ravel().copy()
        y = np.broadcast_to(y, shape).ravel().copy()
        a = np.broadcast_to(a, shape).ravel()
        b = np.broadcast_to(b, shape).ravel()
        best = np.full(x.shape, np.inf)
        bx, by = x.copy(), y.copy()
        stall = np.zeros(x.shape, dtype=int)
        idx = np.arange(x.size)
        with np.errstate(all="ignore"):
            for _ in range(NEWTON_STEPS + 1):
                if idx.size == 0:
                    break
                xi, yi = x[idx], y[idx]
                fp = num.P(xi, yi) - a[idx]
                fq = num.Q(xi, yi) - b[idx]
                res = np.sqrt(np.abs(fp) ** 2 + np.abs(fq) ** 2)
                better = res < best[idx]
                best[idx] = np.where(better, res, best[idx])
                bx[idx] = np.where(better, xi, bx[idx])
                by[idx] = np.where(better, yi, by[idx])
                stall[idx] = np.where(better, 0, stall[idx] + 1)
                px, py, qx, qy = num.jacobian(xi, yi)
                det = px * qy - py * qx
                dx = (qy * fp - py * fq) / det
                dy = (px * fq - qx * fp) / det
                ok = np.isfinite(dx) & np.isfinite(dy) & np.isfinite(res)
                x[idx] = np.where(ok, xi - dx, xi)
                y[idx] = np.where(ok, yi - dy, yi)
                tiny = np.abs(dx) + np.abs(dy) <= 4e-16 * (1 + np.abs(xi) + np.abs(yi))
                done = ~ok | tiny | (stall[idx] >= 2) | (res == 0)
                # the final iterate of a tiny step is evaluated once more below
                last = ok & tiny
                if last.any():
                    li = idx[last]
                    fp2 = num.P(x[li], y[li]) - a[li]
                    fq2 = num.Q(x[li], y[li]) - b[li]
                    r2 = np.sqrt(np.abs(fp2) ** 2 + np.abs(fq2) ** 2)
                    imp = r2 < best[li]
                    best[li] = np.where(imp, r2, best[li])
                    bx[li] = np.where(imp, x[li], bx[li])
                    by[li] = np.where(imp, y[li], by[li])
                idx = idx[~done]
            ax, ay = np.abs(bx), np.abs(by)
            scale = np.sqrt(self._absP.P(ax, ay).real ** 2 + self._absP.Q(ax, ay).real ** 2)
            px, py, qx, qy = num.jacobian(bx, by)
            det = np.abs(px * qy - py * qx)
            # spectral norm of J^-1 is at most ||J||_F / |det J|
            jinv = np.sqrt(np.abs(px) ** 2 + np.abs(py) ** 2 + np.abs(qx) ** 2 + np.abs(qy) ** 2) / det
        r = lambda v: v.reshape(shape)
        return r(bx), r(by), r(best), r(scale), r(jinv)

    def solve(self, targets) -> BatchFibers:
        t = np.atleast_2d(np.asarray(targets, dtype=complex))
        B = t.shape[0]
        a, b = t[:, 0], t[:, 1]
        if self.e < 0:
            return BatchFibers(t, np.zeros((B, 0, 2), complex), np.zeros((B, 0), bool),
                               np.zeros((B, 0)), np.full(B, 2))
        coeffs, degenerate = self._eliminant(a, b)
        xr = roots_batch(coeffs[:, ::-1])                            # (B, e)
        E = xr.shape[1]
        cands = []
        for poly_n, shift, dy in ((self._num.P, a, self.dyP), (self._num.Q, b, self.dyQ)):
            if dy == 0 or E == 0:
                continue
            yc = poly_n.y_coefficients(np.nan_to_num(xr, nan=0.0))  # (B, E, dy+1)
            yc[..., 0] -= shift[:, None]
            yr = roots_batch(yc.reshape(B * E, dy + 1)[:, ::-1]).reshape(B, E, dy)
            xs = np.broadcast_to(xr[:, :, None], yr.shape)
            cands.append((xs.reshape(B, -1), yr.reshape(B, -1)))
        if cands:
            X = np.concatenate([c[0] for c in cands], axis=1)
            Y = np.concatenate([c[1] for c in cands], axis=1)
        else:
            X = np.zeros((B, 0), complex)
            Y = np.zeros((B, 0), complex)
        valid = np.isfinite(X) & np.isfinite(Y)
        X = np.where(valid, X, 0)
        Y = np.where(valid, Y, 0)
        X, Y, res, scale, jinv = self._newton(X, Y, a[:, None], b[:, None])
        tnorm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
        tol = np.maximum(RESIDUAL_SCALE * (1 + tnorm[:, None]), ROUNDOFF_SCALE * scale)
        ok = valid & np.isfinite(res) & (res <= tol)
        ok &= ~degenerate[:, None]
        # points closer than the residual tolerance can resolve are one point
        resolve = np.where(np.isfinite(jinv), jinv * tol, 0.0)
        keep = _dedupe(X, Y, ok, resolve)
        if self.swap:
            X, Y = Y, X
        pts = np.stack([X, Y], axis=-1)
        counts = keep.sum(axis=1)
        status = np.where(degenerate, 2, np.where(counts == 0, 1, 0))
        return BatchFibers(t, pts, keep, np.where(ok, res, np.inf), status)

    def solve_chunked(self, targets, chunk: int | None = None) -> BatchFibers:
        t = np.atleast_2d(np.asarray(targets, dtype=complex))
        C = max(1, self.max_candidates)
        if chunk is None:
            chunk = int(max(16, min(4096, 2_000_000 // (C * C + 1))))
        parts = [self.solve(t[i:i + chunk]) for i in range(0, t.shape[0], chunk)]
        if len(parts) == 1:
            return parts[0]
        width = max(p.points.shape[1] for p in parts)
        return BatchFibers(
            targets=t,
            points=np.concatenate([_pad(p.points, width, 0j) for p in parts]),
            keep=np.concatenate([_pad(p.keep, width, False) for p in parts]),
            residuals=np.concatenate([_pad(p.residuals, width, np.inf) for p in parts]),
            status=np.concatenate([p.status for p in parts]),
        )

    @property
    def max_candidates(self) -> int:
        return max(self.e, 0) * (self.dyP + self.dyQ)


def _abs_poly(p: BivarPoly) -> BivarPoly:
    return BivarPoly({k: abs(complex(c)) for k, c in p.terms.items()}, exact=False)


def _pad(arr: np.ndarray, width: int, fill) -> np.ndarray:
    extra = width - arr.shape[1]
    if extra <= 0:
        return arr
    shape = list(arr.shape)
    shape[1] = extra
    return np.concatenate([arr, np.full(shape, fill, dtype=arr.dtype)], axis=1)


def _dedupe(X: np.ndarray, Y: np.ndarray, ok: np.ndarray, resolve=None) -> np.ndarray:
    """Drop candidate j when some earlier valid candidate is within cluster_tol."""
    B, C = X.shape
    if C <= 1:
        return ok.copy()
    d = np.sqrt(np.abs(X[:, :, None] - X[:, None, :]) ** 2 + np.abs(Y[:, :, None] - Y[:, None, :]) ** 2)
    scale = CLUSTER_SCALE * (1 + np.sqrt(np.abs(X) ** 2 + np.abs(Y) ** 2))
    if resolve is not None:
        scale = np.maximum(scale, resolve)
    close = d <= scale[:, None, :]                     # close[b, i, j] uses tol of j
    earlier = np.tril(np.ones((C, C), dtype=bool), k=-1).T  # earlier[i, j] = i < j
    dup = (close & earlier[None] & ok[:, :, None]).any(axis=1)
    return ok & ~dup


_SOLVERS: "Dict[int, Tuple[PolyMap, FiberSolver]]" = {}


def solver_for(f: PolyMap) -> FiberSolver:
    """Cached solver per map object (the exact degree probe runs once)."""
    hit = _SOLVERS.get(id(f))
    if hit is not None and hit[0] is f:
        return hit[1]
    s = FiberSolver(f)
    if len(_SOLVERS) > 256:
        _SOLVERS.clear()
    _SOLVERS[id(f)] = (f, s)
    return s


def solve_fiber(f: PolyMap, target) -> FiberResult:
    """All points of F^-1(target) as a FiberResult."""
    a, b = target
    solver = solver_for(f)
    batch = solver.solve(np.array([[complex(a), complex(b)]]))
    return batch.result(0, solver.bezout_bound)


def random_targets(seed: int, k: int, radius: float = TARGET_RADIUS) -> np.ndarray:
    return uniform_ball_c2(substream(seed, TAG_DEGREE), k, radius)


def geometric_degree(f: PolyMap, k_targets: int = K_TARGETS, rng_seed: int = 0,
                     target_radius: float = TARGET_RADIUS) -> DegreeEstimate:
    """Maximal fiber size over random targets in the ball of radius ``target_radius``."""
    if k_targets < 5:
        raise ValueError("k_targets must be at least 5")
    solver = solver_for(f)
    targets = random_targets(rng_seed, k_targets, target_radius)
    batch = solver.solve_chunked(targets)
    if batch.degenerate.any():
        raise DegenerateFiberError(f"{int(batch.degenerate.sum())} degenerate fibers among {k_targets} targets")
    counts = batch.counts
    hist = dict(sorted(Counter(int(c) for c in counts).items()))
    d = max(hist)
    if d < 1:
        raise DegenerateFiberError("no target had a nonempty fiber")
    confident = hist[d] >= 0.8 * k_targets
    return DegreeEstimate(d=d, samples=k_targets, histogram=hist, confident=confident, seed=rng_seed)


def image_contains(f: PolyMap, w, region) -> bool:
    """True iff some point of F^-1(w) lies in ``region`` (anything with ``contains``)."""
    res = solve_fiber(f, w)
    if res.status == STATUS_DEGENERATE:
        raise DegenerateFiberError(f"degenerate fiber over {w}")
    return any(region.contains(p) for p in res.points)
