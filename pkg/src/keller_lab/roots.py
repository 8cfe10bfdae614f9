"""Batched Aberth–Ehrlich simultaneous root finding."""

from __future__ import annotations

import numpy as np

MAX_ITER = 200
REL_TOL = 1e-12


def _horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Evaluate rows of ``coeffs`` (highest degree first) at ``z`` of shape (B, k)."""
    out = np.broadcast_to(coeffs[:, :1], z.shape).astype(complex)
    for c in range(1, coeffs.shape[1]):
        out = out * z + coeffs[:, c:c + 1]
    return out


def _initial_guess(coeffs: np.ndarray) -> np.ndarray:
    b, n1 = coeffs.shape
    d = n1 - 1
    lead = coeffs[:, 0]
    center = -coeffs[:, 1] / (d * lead)
    # radius from the geometric mean of |a0/ad| around the centroid; floor keeps it off zero
    tail = np.abs(coeffs[:, -1] / lead)
    radius = np.where(tail > 0, tail ** (1.0 / d), 1.0)
    radius = np.maximum(radius, np.abs(center) * 0.5 + 1e-3)
    ang = 2 * np.pi * np.arange(d) / d + 0.4
    return center[:, None] + radius[:, None] * np.exp(1j * ang)[None, :]


def aberth(coeffs, max_iter: int = MAX_ITER, tol: float = REL_TOL) -> np.ndarray:
    """All roots of each row of ``coeffs`` (highest degree first, shape (B, d+1)).

    Rows must have a nonzero leading coefficient; use :func:`roots_batch`
    for rows whose effective degree varies.  Returns shape (B, d).
    Stops a row once max |correction| < tol * (1 + |z|).
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    b, n1 = coeffs.shape
    d = n1 - 1
    if d <= 0:
        return np.zeros((b, 0), dtype=complex)
    if d == 1:
        return (-coeffs[:, 1] / coeffs[:, 0])[:, None]
    dcoeffs = coeffs[:, :-1] * np.arange(d, 0, -1)[None, :]
    z = _initial_guess(coeffs)
    active = np.ones(b, dtype=bool)
    eye = np.eye(d, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            za = z[idx]
            p = _horner(coeffs[idx], za)
            dp = _horner(dcoeffs[idx], za)
            w = p / dp
            diff = za[:, :, None] - za[:, None, :]
            diff[:, eye] = np.inf
            s = (1.0 / diff).sum(axis=2)
            corr = w / (1.0 - w * s)
            bad = ~np.isfinite(corr)
            if bad.any():
                # stalled on a critical point: nudge instead of stepping
                corr = np.where(bad, -1e-3 * (1 + np.abs(za)) * np.exp(1j * 0.7), corr)
            za = za - corr
            z[idx] = za
            done = np.all(np.abs(corr) < tol * (1 + np.abs(za)), axis=1)
            active[idx[done]] = False
    return z


def effective_degree(coeffs: np.ndarray, rel: float = 1e-14) -> np.ndarray:
    """Degree after trimming numerically-zero leading coefficients (highest first)."""
    coeffs = np.atleast_2d(coeffs)
    mag = np.abs(coeffs)
    scale = mag.max(axis=1, keepdims=True)
    keep = mag > rel * np.where(scale > 0, scale, 1.0)
    d = coeffs.shape[1] - 1
    first = np.where(keep.any(axis=1), keep.argmax(axis=1), coeffs.shape[1])
    return np.maximum(d - first, -1)


def roots_batch(coeffs, rel: float = 1e-14) -> np.ndarray:
    """Roots of many polynomials with possibly degenerate leading terms.

    ``coeffs`` has shape (B, d+1), highest degree first.  Output has shape
    (B, d); slots beyond a row's effective degree are NaN.  All-zero rows
    give all-NaN output.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    b, n1 = coeffs.shape
    d = n1 - 1
    out = np.full((b, max(d, 0)), np.nan + 0j, dtype=complex)
    if d <= 0:
        return out
    eff = effective_degree(coeffs, rel)
    for k in np.unique(eff):
        if k <= 0:
            continue
        rows = np.nonzero(eff == k)[0]
        sub = coeffs[rows, d - k:]
        out[rows, :k] = aberth(sub)
    return out
