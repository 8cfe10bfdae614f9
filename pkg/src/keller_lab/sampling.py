"""Deterministic random substreams and uniform samplers on C^2 regions."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

# substream tags; every Monte Carlo pass draws from (seed, tag, chunk)
TAG_DOMAIN = 1
TAG_TARGET = 2
TAG_RESAMPLE = 3
TAG_DEGREE = 4
TAG_PROBE = 5
TAG_ORACLE = 6
TAG_BOX = 7

CHUNK = 4096


def substream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Generator for chunk ``index`` of pass ``tag``; independent of worker count."""
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=(int(tag), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_sizes(n: int, chunk: int = CHUNK) -> List[int]:
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[int, int], T], sizes: Sequence[int], threads: int | None = None) -> List[T]:
    """Apply ``fn(index, size)`` over chunks; results returned in chunk order."""
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(sizes) <= 1:
        return [fn(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def uniform_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    th = 2 * np.pi * rng.random(n)
    return r * np.exp(1j * th)


def uniform_ball_c2(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """Uniform points of the open ball in C^2 = R^4, shape (n, 2).

    Gaussian direction times radius * U^(1/4).
    """
    g = rng.standard_normal((n, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** 0.25
    g *= r[:, None]
    return np.stack([g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]], axis=1)


def uniform_polydisk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    return np.stack([uniform_disk(rng, n, radius), uniform_disk(rng, n, radius)], axis=1)


def uniform_bidisk(rng: np.random.Generator, n: int, r1: float, r2: float) -> np.ndarray:
    """Uniform on {|w1| < r1} x {|w2| < r2}."""
    return np.stack([uniform_disk(rng, n, r1), uniform_disk(rng, n, r2)], axis=1)
