"""Segmented sieve of Eratosthenes streaming ordered prime segments.

Odd-only: the working set is one byte per odd number, 2 is emitted
specially with the first segment. The segment grid depends only on
segment_size, never on the limit, so a resume token taken at a grid
boundary stays valid when the run is extended to a larger limit.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# 2^18 odd slots = 256 KiB mask per segment, sized for a typical L2.
DEFAULT_SEGMENT_SIZE = 1 << 18

_LIMIT_CAP = 1 << 53  # primes must stay exactly representable as float64 downstream


@dataclass(frozen=True)
class SieveConfig:
    limit: int
    segment_size: int = DEFAULT_SEGMENT_SIZE
    worker_count: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.limit, int) or self.limit < 2:
            raise ConfigurationError(f"limit must be an integer >= 2 (got {self.limit!r})")
        if self.limit > _LIMIT_CAP:
            raise ConfigurationError(f"limit must be <= 2^53 (got {self.limit})")
        if not isinstance(self.segment_size, int) or self.segment_size < 2:
            raise ConfigurationError(
                f"segment_size must be an integer >= 2 (got {self.segment_size!r})"
            )
        if not isinstance(self.worker_count, int) or self.worker_count < 1:
            raise ConfigurationError(
                f"worker_count must be a positive integer (got {self.worker_count!r})"
            )


@dataclass(frozen=True)
class Segment:
    lo: int
    hi: int
    primes: np.ndarray = field(repr=False)  # int64, strictly increasing


def segment_bounds(config: SieveConfig, start_index: int = 0):
    """Yield (index, lo, hi) tiles of [2, limit]; grid is limit-independent."""
    span = 2 * config.segment_size
    i = start_index
    while True:
        lo = 2 + span * i
        if lo > config.limit:
            return
        hi = min(config.limit, span * (i + 1) + 1)
        yield i, lo, hi
        i += 1


def _odd_base_primes(n: int) -> np.ndarray:
    """Odd primes <= n via a plain odds-only sieve (n is at most sqrt(limit))."""
    if n < 3:
        return np.empty(0, dtype=np.int64)
    half = (n - 1) // 2  # index j <-> odd 2j+3
    mask = np.ones(half + 1, dtype=bool)
    p = 3
    while p * p <= n:
        if mask[(p - 3) // 2]:
            first = (p * p - 3) // 2
            mask[first::p] = False
        p += 2
    return (2 * np.flatnonzero(mask) + 3).astype(np.int64)


def _sieve_segment(lo: int, hi: int, base: np.ndarray, segment_size: int) -> Segment:
    # odds in [lo, hi]; lo is even by grid construction (lo = 2 + 2*S*i)
    first_odd = lo + 1
    n_odds = (hi - first_odd) // 2 + 1 if hi >= first_odd else 0
    try:
        mask = np.ones(n_odds, dtype=bool)
    except MemoryError as exc:
        raise ConfigurationError(
            f"cannot allocate segment buffer of {n_odds} odd slots; "
            f"reduce segment_size={segment_size}"
        ) from exc
    if n_odds:
        bp = base[base * base <= hi]
        if bp.size:
            start = ((first_odd + bp - 1) // bp) * bp
            start = np.maximum(start, bp * bp)
            start = start + np.where(start & 1 == 0, bp, 0)
            idx0 = (start - first_odd) >> 1
            sel = np.flatnonzero(start <= hi)
            for j in sel:
                mask[idx0[j] :: bp[j]] = False
        primes = first_odd + 2 * np.flatnonzero(mask).astype(np.int64)
    else:
        primes = np.empty(0, dtype=np.int64)
    if lo <= 2 <= hi:
        primes = np.concatenate((np.array([2], dtype=np.int64), primes))
    return Segment(lo=lo, hi=hi, primes=primes)


def sieve_stream(config: SieveConfig, consumer, start_index: int = 0) -> None:
    """Invoke consumer(segment) once per segment, in ascending order.

    Segments may be computed concurrently (worker_count > 1) but delivery is
    serial and ordered, so downstream folds are deterministic regardless of
    worker_count. ``start_index`` lets a resumed run skip completed segments.
    """
    base = _odd_base_primes(math.isqrt(config.limit))
    bounds = segment_bounds(config, start_index)
    if config.worker_count == 1:
        for _, lo, hi in bounds:
            consumer(_sieve_segment(lo, hi, base, config.segment_size))
        return
    window = 2 * config.worker_count
    with ThreadPoolExecutor(max_workers=config.worker_count) as pool:
        pending: deque = deque()
        for _, lo, hi in bounds:
            pending.append(pool.submit(_sieve_segment, lo, hi, base, config.segment_size))
            if len(pending) >= window:
                consumer(pending.popleft().result())
        while pending:
            consumer(pending.popleft().result())


def prime_count(config: SieveConfig, x: int) -> int:
    """Exact pi(x) for x <= config.limit."""
    if x > config.limit:
        raise ConfigurationError(f"x={x} exceeds configured limit {config.limit}")
    if x < 2:
        return 0
    sub = SieveConfig(limit=x, segment_size=config.segment_size,
                      worker_count=config.worker_count)
    total = 0

    def count(seg: Segment) -> None:
        nonlocal total
        total += seg.primes.size

    sieve_stream(sub, count)
    return total
