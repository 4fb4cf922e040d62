"""Segmented sieve: equality with dense reference sieves, tiling geometry,
worker-count independence, and configuration validation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_primes, trial_division_primes
from sector_primes.errors import ConfigurationError
from sector_primes.sieve import (SieveConfig, prime_count, segment_bounds,
                                 sieve_stream)


def collect(config: SieveConfig, start_index: int = 0):
    segs = []
    sieve_stream(config, segs.append, start_index=start_index)
    return segs


def all_primes(config: SieveConfig) -> np.ndarray:
    segs = collect(config)
    if not segs:
        return np.empty(0, dtype=np.int64)
    return np.concatenate([s.primes for s in segs])


@pytest.mark.parametrize("limit", [2, 3, 4, 5, 10, 97, 100, 1000, 10000, 65537])
@pytest.mark.parametrize("segment_size", [2, 3, 16, 1 << 10])
def test_matches_dense_sieve(limit, segment_size):
    got = all_primes(SieveConfig(limit=limit, segment_size=segment_size))
    assert np.array_equal(got, naive_primes(limit))


def test_matches_trial_division():
    got = all_primes(SieveConfig(limit=200, segment_size=8))
    assert got.tolist() == trial_division_primes(200)


def test_segment_tiling():
    config = SieveConfig(limit=10 ** 5, segment_size=1 << 10)
    segs = collect(config)
    assert segs[0].lo == 2
    assert segs[-1].hi == config.limit
    for prev, cur in zip(segs, segs[1:]):
        assert cur.lo == prev.hi + 1
    for s in segs:
        if s.primes.size:
            assert s.lo <= s.primes[0] and s.primes[-1] <= s.hi


def test_grid_is_limit_independent():
    small = list(segment_bounds(SieveConfig(limit=10 ** 4, segment_size=1 << 10)))
    large = list(segment_bounds(SieveConfig(limit=10 ** 5, segment_size=1 << 10)))
    # every full tile of the smaller run appears verbatim in the larger one
    assert small[:-1] == large[: len(small) - 1]


def test_primes_sorted_int64():
    primes = all_primes(SieveConfig(limit=10 ** 4, segment_size=1 << 8))
    assert primes.dtype == np.int64
    assert np.all(np.diff(primes) > 0)


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_change_output(workers):
    base = SieveConfig(limit=10 ** 6, segment_size=1 << 14, worker_count=1)
    multi = SieveConfig(limit=10 ** 6, segment_size=1 << 14, worker_count=workers)
    ref = collect(base)
    got = collect(multi)
    assert len(ref) == len(got)
    for a, b in zip(ref, got):
        assert (a.lo, a.hi) == (b.lo, b.hi)
        assert np.array_equal(a.primes, b.primes)


def test_prime_count_known_values():
    config = SieveConfig(limit=10 ** 6, segment_size=1 << 16)
    for x, pi_x in [(2, 1), (10, 4), (100, 25), (1000, 168), (10 ** 4, 1229),
                    (10 ** 5, 9592), (10 ** 6, 78498)]:
        assert prime_count(config, x) == pi_x
    assert prime_count(config, 1) == 0
    with pytest.raises(ConfigurationError):
        prime_count(config, 10 ** 6 + 1)


def test_start_index_skips_earlier_segments():
    config = SieveConfig(limit=10 ** 5, segment_size=1 << 10)
    full = collect(config)
    for k in (1, 3, len(full) - 1):
        tail = collect(config, start_index=k)
        assert len(tail) == len(full) - k
        for a, b in zip(full[k:], tail):
            assert (a.lo, a.hi) == (b.lo, b.hi)
            assert np.array_equal(a.primes, b.primes)


@pytest.mark.parametrize("bad", [
    dict(limit=1),
    dict(limit=0),
    dict(limit=2.0),
    dict(limit=True),
    dict(limit=(1 << 53) + 2),
    dict(limit=100, segment_size=1),
    dict(limit=100, segment_size=2.5),
    dict(limit=100, worker_count=0),
    dict(limit=100, worker_count=-1),
])
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        SieveConfig(**bad)


@settings(max_examples=25, deadline=None)
@given(limit=st.integers(min_value=2, max_value=30000),
       log_seg=st.integers(min_value=1, max_value=12))
def test_random_limits_match_reference(limit, log_seg):
    config = SieveConfig(limit=limit, segment_size=1 << log_seg)
    assert np.array_equal(all_primes(config), naive_primes(limit))
