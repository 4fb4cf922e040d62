"""Rational-ray diagnostics: find primes whose angle y*ln p lands near a
fixed ray, and certify that no three distinct primes can sit in exact
multiplicative alignment.

A hit (p, n, dist) means y*ln p = 2*pi*n + gamma + r with |r| = dist within
the tolerance. Exact alignment of a triple p1 < p2 < p3 with exponents
h < k would force p3^h * p1^k = p2^k * p1^h, which unique factorization
rules out; check_triple evaluates both sides in exact integer arithmetic
and reports the logarithmic residual that quantifies the miss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ConfigurationError, PreconditionError
from .phase import PI_HI, PI_LO, _dd_add_d, _two_prod, _two_sum, raw_phase_dd
from .sieve import SieveConfig, sieve_stream

TWO_PI_HI = 2.0 * PI_HI
TWO_PI_LO = 2.0 * PI_LO

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_EXPONENT_GUARD = 1.0e5


@dataclass(frozen=True)
class RaySpec:
    y: float
    gamma: float
    tolerance: float

    def __post_init__(self):
        if not (math.isfinite(self.y) and self.y > 0.0):
            raise ConfigurationError(f"y must be a positive finite real (got {self.y!r})")
        if not (0.0 <= self.gamma < 2.0 * math.pi):
            raise ConfigurationError(f"gamma must lie in [0, 2*pi) (got {self.gamma!r})")
        if not (0.0 < self.tolerance <= math.pi):
            raise ConfigurationError(
                f"tolerance must lie in (0, pi] (got {self.tolerance!r})")


@dataclass(frozen=True)
class TripleCertificate:
    p1: int
    p2: int
    p3: int
    h: int
    k: int
    lhs: int
    rhs: int
    exact_inequality_holds: bool
    residual: float


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def scan_ray(spec: RaySpec, config: SieveConfig) -> list[tuple[int, int, float]]:
    """All primes up to config.limit within tolerance of the ray, as
    (p, n, distance) sorted by (distance, p). Distance is the circular gap
    between y*ln p and gamma (mod 2*pi), wrapped into (-pi, pi] and taken
    absolute. Memory grows with the hit count, so keep the tolerance narrow
    at large limits.
    """
    hits: list[tuple[int, int, float]] = []

    def consume(segment):
        primes = segment.primes
        if primes.size == 0:
            return
        h, l = raw_phase_dd(spec.y, primes)
        dh, dl = _dd_add_d(h, l, -spec.gamma)
        n = np.rint((dh + dl) / TWO_PI_HI)
        ph, pe = _two_prod(n, TWO_PI_HI)
        rh, rl = _dd_add_d(dh, dl, -ph)
        rl = rl - pe - n * TWO_PI_LO
        rh, rl = _two_sum(rh, rl)
        resid = rh + rl
        dist = np.abs(resid)
        sel = np.flatnonzero(dist <= spec.tolerance)
        for j in sel:
            hits.append((int(primes[j]), int(n[j]), float(dist[j])))

    sieve_stream(config, consume)
    hits.sort(key=lambda t: (t[2], t[0]))
    return hits


def check_triple(p1: int, p2: int, p3: int, h: int, k: int) -> TripleCertificate:
    """Certify the non-alignment of a prime triple for exponents h < k by
    comparing p3^h * p1^k with p2^k * p1^h exactly."""
    for p in (p1, p2, p3):
        if not is_prime(p):
            raise ConfigurationError(f"{p} is not prime")
    if not p1 < p2 < p3:
        raise ConfigurationError(
            f"primes must be strictly increasing (got {p1}, {p2}, {p3})")
    if not (isinstance(h, int) and isinstance(k, int) and 1 <= h < k):
        raise ConfigurationError(f"exponents must satisfy 1 <= h < k (got h={h!r}, k={k!r})")
    if k * math.log(p2) > _EXPONENT_GUARD:
        raise PreconditionError(
            f"k*ln(p2) = {k * math.log(p2):.3g} exceeds the {_EXPONENT_GUARD:.0e} "
            f"exact-arithmetic guard")
    lhs = p3 ** h * p1 ** k
    rhs = p2 ** k * p1 ** h
    with mpmath.workprec(240):
        residual = abs(h * (mpmath.log(p3) - mpmath.log(p1))
                       - k * (mpmath.log(p2) - mpmath.log(p1)))
        residual = float(residual)
    return TripleCertificate(p1=p1, p2=p2, p3=p3, h=h, k=k, lhs=lhs, rhs=rhs,
                             exact_inequality_holds=lhs != rhs, residual=residual)


def rational_exponent_guess(p1: int, p2: int, p3: int,
                            max_denominator: int) -> tuple[int, int]:
    """Best rational approximation h/k of the alignment ratio: returns (h, k)
    with (ln p3 - ln p1)/(ln p2 - ln p1) ~ k/h and h <= max_denominator."""
    for p in (p1, p2, p3):
        if not is_prime(p):
            raise ConfigurationError(f"{p} is not prime")
    if not p1 < p2 < p3:
        raise ConfigurationError(
            f"primes must be strictly increasing (got {p1}, {p2}, {p3})")
    if max_denominator < 1:
        raise ConfigurationError(f"max_denominator must be >= 1 (got {max_denominator})")
    ratio = (math.log(p3) - math.log(p1)) / (math.log(p2) - math.log(p1))
    guess = Fraction(ratio).limit_denominator(max_denominator)
    return guess.denominator, guess.numerator
