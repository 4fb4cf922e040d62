"""Ray scanning and triple certificates: exact integer checks, frozen hit
baselines, and soundness against the extended-precision reference."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mp_ray_distance, naive_primes
from sector_primes.errors import ConfigurationError, PreconditionError
from sector_primes.lemma import (RaySpec, check_triple, is_prime,
                                 rational_exponent_guess, scan_ray)
from sector_primes.sieve import SieveConfig

CFG_1E6 = SieveConfig(limit=10 ** 6, segment_size=1 << 18)


def test_certificate_smallest_triple():
    cert = check_triple(2, 3, 5, 1, 2)
    assert (cert.lhs, cert.rhs) == (20, 18)  # 2^2*5 vs 2*3^2
    assert cert.exact_inequality_holds
    assert cert.residual == pytest.approx(0.1053605156578263, rel=1e-12)
    assert cert.residual > 0.0


def test_certificate_larger_exponents():
    cert = check_triple(3, 5, 7, 2, 3)
    assert (cert.lhs, cert.rhs) == (1323, 1125)  # 3^3*7^2 vs 3^2*5^3
    assert cert.exact_inequality_holds


@pytest.mark.parametrize("args", [
    (2, 3, 5, 1, 1),   # needs h < k
    (2, 3, 5, 2, 1),
    (2, 3, 5, 0, 1),
    (4, 5, 7, 1, 2),   # 4 is not prime
    (2, 3, 9, 1, 2),
    (5, 3, 7, 1, 2),   # not increasing
    (3, 3, 5, 1, 2),
])
def test_certificate_validation(args):
    with pytest.raises(ConfigurationError):
        check_triple(*args)


def test_certificate_exponent_budget_guard():
    with pytest.raises(PreconditionError, match="guard"):
        check_triple(2, 3, 5, 1, 100000)  # k*ln p2 ~ 1.1e5


def test_octave_ray_hits_only_two():
    spec = RaySpec(y=2.0 * math.pi / math.log(2.0), gamma=0.0, tolerance=1e-9)
    hits = scan_ray(spec, CFG_1E6)
    assert len(hits) == 1
    p, n, dist = hits[0]
    assert (p, n) == (2, 1)
    assert dist < 1e-9


def test_tolerance_pi_is_vacuous():
    spec = RaySpec(y=1.0, gamma=0.0, tolerance=math.pi)
    hits = scan_ray(spec, SieveConfig(limit=10 ** 4, segment_size=1 << 18))
    assert len(hits) == 1229  # every prime <= 10^4


def test_hit_count_baselines_and_thinning():
    counts = {}
    for tol in (1e-2, 1e-3, 1e-4):
        hits = scan_ray(RaySpec(y=1.0, gamma=0.0, tolerance=tol), CFG_1E6)
        counts[tol] = len(hits)
        expected = tol / math.pi * 78498  # equidistribution heuristic
        assert expected / 3.0 <= len(hits) <= expected * 3.0
    assert counts == {1e-2: 448, 1e-3: 43, 1e-4: 6}
    # shrinking the tolerance tenfold thins the hits roughly tenfold
    assert 10.0 / 3.0 <= counts[1e-2] / counts[1e-3] <= 30.0
    assert 10.0 / 3.0 <= counts[1e-3] / counts[1e-4] <= 30.0


def test_hits_sorted_and_consistent_at_high_precision():
    spec = RaySpec(y=1.0, gamma=0.0, tolerance=1e-2)
    hits = scan_ray(spec, CFG_1E6)
    assert hits == sorted(hits, key=lambda t: (t[2], t[0]))
    for p, n, dist in hits:
        n_ref, dist_ref = mp_ray_distance(1.0, 0.0, p)
        assert n == n_ref
        assert dist_ref <= 2.0 * spec.tolerance
        assert dist == pytest.approx(dist_ref, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(y=st.floats(min_value=0.5, max_value=20.0),
       gamma=st.floats(min_value=0.0, max_value=6.28),
       tolerance=st.floats(min_value=1e-4, max_value=0.5),
       limit=st.integers(min_value=100, max_value=3000))
def test_scan_is_sound_and_complete(y, gamma, tolerance, limit):
    spec = RaySpec(y=y, gamma=gamma, tolerance=tolerance)
    hits = {p: (n, dist) for p, n, dist in
            scan_ray(spec, SieveConfig(limit=limit, segment_size=1 << 10))}
    for p in naive_primes(limit):
        p = int(p)
        n_ref, dist_ref = mp_ray_distance(y, gamma, p)
        if abs(dist_ref - tolerance) < 1e-11:
            continue  # knife edge between in and out
        if dist_ref <= tolerance:
            assert p in hits
            assert hits[p][0] == n_ref
        else:
            assert p not in hits


@pytest.mark.parametrize("bad", [
    dict(y=0.0, gamma=0.0, tolerance=1e-3),
    dict(y=-2.0, gamma=0.0, tolerance=1e-3),
    dict(y=1.0, gamma=-0.1, tolerance=1e-3),
    dict(y=1.0, gamma=2.0 * math.pi, tolerance=1e-3),
    dict(y=1.0, gamma=0.0, tolerance=0.0),
    dict(y=1.0, gamma=0.0, tolerance=3.2),
])
def test_ray_spec_validation(bad):
    with pytest.raises(ConfigurationError):
        RaySpec(**bad)


def test_rational_exponent_guess():
    # (ln 5 - ln 2)/(ln 3 - ln 2) ~ 2.2598
    assert rational_exponent_guess(2, 3, 5, 4) == (4, 9)
    assert rational_exponent_guess(2, 3, 5, 1) == (1, 2)  # round(ratio)
    assert rational_exponent_guess(5, 11, 23, 1) == (1, 2)
    with pytest.raises(ConfigurationError):
        rational_exponent_guess(2, 3, 5, 0)
    with pytest.raises(ConfigurationError):
        rational_exponent_guess(2, 4, 5, 3)


def test_guess_then_certify_round_trip():
    h, k = rational_exponent_guess(2, 3, 5, 4)
    cert = check_triple(2, 3, 5, h, k)
    assert cert.exact_inequality_holds


def test_is_prime():
    assert [n for n in range(60) if is_prime(n)] == [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
    assert not is_prime(561)      # Carmichael number
    assert not is_prime(7917)
    assert is_prime(7919)
    assert is_prime((1 << 61) - 1)
    assert not is_prime((1 << 61) + 1)
    assert not is_prime(1)
    assert not is_prime(0)
    assert not is_prime(-7)
