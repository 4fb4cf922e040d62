"""Closed-form bounds: the constants c and d, per-shell count and
reciprocal-sum lower bounds, the divergent comparison series, the starting
index N, and the empirical prime-counting envelope threshold M.

Shells are addressed here by their flat ordinal m (A_n at m = 2n, B_n at
m = 2n+1); every formula below is a function of m*pi, which makes the A/B
pairs share one code path. Cancellation-prone differences are evaluated
through expm1 so the working-precision results track the arbitrary-precision
oracle to near machine epsilon.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import mpmath
import numpy as np

from .errors import ConfigurationError, PreconditionError
from .phase import KIND_A, KIND_B, SectorParams, shell_interval
from .sieve import Segment, SieveConfig, sieve_stream

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BoundConstants:
    c: float
    d: float
    N: int | None = None   # first index from which shell bounds are asserted
    M: float | None = None  # empirical envelope threshold, when reached


@dataclass(frozen=True)
class EnvelopeReport:
    beta_over_2y: float
    m_found: float
    reached: bool
    max_upper_violation_x: float | None
    max_lower_violation_x: float | None
    samples_checked: int
    limit: int


def _ordinal(kind: str, n: int) -> int:
    if kind == KIND_A:
        return 2 * n
    if kind == KIND_B:
        return 2 * n + 1
    raise ConfigurationError(f"kind must be 'A' or 'B' (got {kind!r})")


def _exp_factors(params: SectorParams) -> tuple[float, float, float]:
    """(e^{-beta/2y}, 1 - e^{-beta/y}, 1 + e^{-beta/y}); the first two
    multiply to the cancellation-prone e^{-beta/2y} - e^{-3beta/2y}."""
    r = params.beta / params.y
    e_half = math.exp(-0.5 * r)
    return e_half, -math.expm1(-r), 1.0 + math.exp(-r)


def constants_of(params: SectorParams) -> BoundConstants:
    e_half, u, v = _exp_factors(params)
    diff = e_half * u
    total = e_half * v
    c = params.y * math.pi * diff
    d = params.y * params.alpha * diff + params.y * params.beta * total
    if not c > 0.0:
        raise ConfigurationError(f"c must be strictly positive (got {c!r})")
    return BoundConstants(c=c, d=d)


def find_N(params: SectorParams, M: float) -> int:
    """Least N so that for every n > N the A_n lower endpoint exceeds M and
    all bound-formula positivity side-conditions hold.

    The positivity threshold is d/(2c) = [alpha + beta*coth(beta/2y)]/(2pi),
    which dominates the denominator condition (alpha+beta)/(2pi) and implies
    the B-kind and count-bound conditions as well.
    """
    if not M > 0.0:
        raise ConfigurationError(f"M must be positive (got {M!r})")
    k = constants_of(params)
    t_env = (params.y * math.log(M) + params.beta + params.alpha) / TWO_PI
    t_pos = k.d / (2.0 * k.c)
    return max(0, math.floor(max(t_env, t_pos)))


def validity_start_index(params: SectorParams) -> int:
    """First n at which the bound formulas are positive for both kinds
    (find_N with the envelope condition degenerate at M=1)."""
    return find_N(params, 1.0)


def _require_index(constants: BoundConstants, n: int, what: str) -> None:
    if constants.N is None:
        raise PreconditionError(f"{what} requires constants with N resolved (run find_N first)")
    if n <= constants.N:
        raise PreconditionError(
            f"{what} is only valid for n > N = {constants.N} (got n={n})",
            n_threshold=constants.N,
        )


def _recip_parts(params: SectorParams, m: float) -> tuple[float, float, float]:
    """Numerator, denominator and m*pi - alpha for the reciprocal bound,
    assembled without the c,d cancellation:
    c*m - d = y*e^{-beta/2y}*[(m*pi - alpha)*u - beta*v]."""
    e_half, u, v = _exp_factors(params)
    base = m * math.pi - params.alpha
    num = params.y * e_half * (base * u - params.beta * v)
    den = (base - params.beta) * (base + params.beta)
    return num, den, base


def _recip_term(params: SectorParams, m: float) -> float:
    num, den, _ = _recip_parts(params, m)
    return num / den


def _recip_guard(params: SectorParams, m: float) -> None:
    num, _, base = _recip_parts(params, m)
    if not base - params.beta > 0.0:
        raise PreconditionError(
            f"denominator positivity failed: m*pi - alpha - beta = {base - params.beta!r} <= 0"
        )
    if num < 0.0:
        side = "2cn >= d" if m % 2 == 0 else "c(2n+1) >= d"
        raise PreconditionError(f"numerator positivity failed: {side} (c*m - d = {num!r})")


def shell_recip_lower_bound(params: SectorParams, constants: BoundConstants,
                            kind: str, n: int) -> float:
    """Closed-form lower bound for sum of 1/p over one complete shell;
    0.0 exactly when the numerator sits on its zero (2cn = d)."""
    _require_index(constants, n, "shell_recip_lower_bound")
    m = _ordinal(kind, n)
    _recip_guard(params, m)
    return _recip_term(params, m)


def recip_bound_two_fraction(params: SectorParams, kind: str, n: int) -> float:
    """Unsimplified form y*e^{-b/2y}/(m*pi+b-a) - y*e^{-3b/2y}/(m*pi-b-a);
    algebraically equal to the simplified single-line form (no guards).
    The fractions nearly cancel for n close to N, so the difference is taken
    in extended precision to keep the returned double correctly rounded."""
    m = _ordinal(kind, n)
    with mpmath.workprec(120):
        y = mpmath.mpf(params.y)
        b = mpmath.mpf(params.beta)
        base = m * mpmath.pi - mpmath.mpf(params.alpha)
        f1 = y * mpmath.exp(-b / (2 * y)) / (base + b)
        f2 = y * mpmath.exp(-3 * b / (2 * y)) / (base - b)
        return float(f1 - f2)


def _count_bound_value(params: SectorParams, m: int) -> float:
    y, a, b = params.y, params.alpha, params.beta
    base = m * math.pi
    t1 = y * math.exp((b - 2.0 * a) / (2.0 * y)) / (base + b - a)
    t2 = y * math.exp(-(b + 2.0 * a) / (2.0 * y)) / (base - b - a)
    grow = base / y
    if grow > 709.0:
        return math.inf if t1 - t2 > 0 else -math.inf
    return (t1 - t2) * math.exp(grow)


def shell_count_lower_bound(params: SectorParams, constants: BoundConstants,
                            kind: str, n: int) -> float:
    """Closed-form lower bound for the number of primes in one complete shell."""
    _require_index(constants, n, "shell_count_lower_bound")
    m = _ordinal(kind, n)
    base = m * math.pi - params.alpha
    if not base - params.beta > 0.0:
        raise PreconditionError(
            f"denominator positivity failed: m*pi - alpha - beta = {base - params.beta!r} <= 0"
        )
    return _count_bound_value(params, m)


def count_bound_envelope_form(params: SectorParams, kind: str, n: int) -> float:
    """Pre-simplification form e^{-b/2y}*hi/ln hi - e^{b/2y}*lo/ln lo with
    hi, lo the shell interval endpoints (no guards; equals the single-line form)."""
    iv = shell_interval(params, kind, n)
    r = params.beta / (2.0 * params.y)
    return (math.exp(-r) * iv.hi_inclusive / math.log(iv.hi_inclusive)
            - math.exp(r) * iv.lo_exclusive / math.log(iv.lo_exclusive))


def _recip_terms_array(params: SectorParams, kind: str, n_arr: np.ndarray) -> np.ndarray:
    e_half, u, v = _exp_factors(params)
    m = 2.0 * n_arr if kind == KIND_A else 2.0 * n_arr + 1.0
    base = m * math.pi - params.alpha
    num = params.y * e_half * (base * u - params.beta * v)
    den = (base - params.beta) * (base + params.beta)
    return num / den


def comparison_series_partial_sum(params: SectorParams, constants: BoundConstants,
                                  kind: str, from_n: int, to_n: int) -> float:
    """Sum of shell_recip_lower_bound over n in [from_n, to_n]; diverges like
    (c/2pi^2)*ln(to_n) as to_n grows."""
    _require_index(constants, from_n, "comparison_series_partial_sum")
    if to_n < from_n:
        raise ConfigurationError(f"to_n must be >= from_n (got {from_n}..{to_n})")
    _recip_guard(params, _ordinal(kind, from_n))
    total = 0.0
    chunk = 1 << 20
    for lo in range(from_n, to_n + 1, chunk):
        hi = min(to_n, lo + chunk - 1)
        n_arr = np.arange(lo, hi + 1, dtype=np.float64)
        total += float(np.sum(_recip_terms_array(params, kind, n_arr)))
    return total


def first_index_exceeding(params: SectorParams, constants: BoundConstants, kind: str,
                          threshold: float, max_terms: int) -> tuple[int, float] | None:
    """Smallest to_n with comparison_series_partial_sum(N+1 .. to_n) > threshold,
    scanning at most max_terms terms; returns (to_n, partial) or None."""
    if constants.N is None:
        raise PreconditionError("first_index_exceeding requires constants with N resolved")
    from_n = constants.N + 1
    total = 0.0
    chunk = 1 << 20
    lo = from_n
    end = from_n + max_terms - 1
    while lo <= end:
        hi = min(end, lo + chunk - 1)
        n_arr = np.arange(lo, hi + 1, dtype=np.float64)
        csum = total + np.cumsum(_recip_terms_array(params, kind, n_arr))
        over = np.flatnonzero(csum > threshold)
        if over.size:
            i = int(over[0])
            return lo + i, float(csum[i])
        total = float(csum[-1])
        lo = hi + 1
    return None


# ---------------------------------------------------------------------------
# empirical envelope: e^{-b/2y} * x/ln x <= pi(x) <= e^{b/2y} * x/ln x

_GRID_RATIO = 1.05
_STATE_FMT = "<QQQdddd"  # count, samples, grid_pos, min_sample, vl, vu, last_grid


def _grid_value(j: int) -> float:
    return math.floor(2.0 * _GRID_RATIO ** j)


class EnvelopeScan:
    """Streaming band check over the ordered segment stream.

    pi(x) only jumps at primes, and both band edges increase, so checking at
    every prime (upper side at x=p with pi(p), lower side just below p with
    pi(p)-1) covers every real x; a geometric grid of extra sample points is
    folded in as well, plus the final x=limit sample.
    """

    def __init__(self, params: SectorParams):
        self.params = params
        self.r_lo = math.exp(-params.beta / (2.0 * params.y))
        self.r_hi = math.exp(params.beta / (2.0 * params.y))
        self.count = 0
        self.samples = 0
        self.min_sample = math.nan
        self.max_lower_violation = math.nan
        self.max_upper_violation = math.nan
        self.grid_pos = 0

    def _check_points(self, xs: np.ndarray, pis: np.ndarray) -> None:
        if xs.size == 0:
            return
        lx = np.log(xs)
        scale = xs / lx
        low = np.flatnonzero(pis < self.r_lo * scale)
        high = np.flatnonzero(pis > self.r_hi * scale)
        if low.size:
            x = float(xs[low[-1]])
            if math.isnan(self.max_lower_violation) or x > self.max_lower_violation:
                self.max_lower_violation = x
        if high.size:
            x = float(xs[high[-1]])
            if math.isnan(self.max_upper_violation) or x > self.max_upper_violation:
                self.max_upper_violation = x
        self.samples += int(xs.size)

    def feed(self, segment: Segment) -> None:
        primes = segment.primes
        k = primes.size
        if k:
            if math.isnan(self.min_sample):
                self.min_sample = float(primes[0])
            pf = primes.astype(np.float64)
            idx = self.count + np.arange(1, k + 1, dtype=np.float64)
            self._check_points(pf, idx)        # upper side at x=p
            self._check_points(pf, idx - 1.0)  # lower side just below p
        grid_x = []
        grid_pi = []
        while True:
            g = _grid_value(self.grid_pos)
            if g > segment.hi:
                break
            if g >= max(2, segment.lo):
                grid_x.append(g)
                grid_pi.append(self.count + int(np.searchsorted(primes, g, side="right")))
            self.grid_pos += 1
        if grid_x:
            self._check_points(np.array(grid_x, dtype=np.float64),
                               np.array(grid_pi, dtype=np.float64))
        self.count += int(k)

    def finalize(self, limit: int) -> EnvelopeReport:
        self._check_points(np.array([float(limit)]), np.array([float(self.count)]))
        violations = [v for v in (self.max_lower_violation, self.max_upper_violation)
                      if not math.isnan(v)]
        if violations:
            m_found = max(violations)
        else:
            m_found = self.min_sample if not math.isnan(self.min_sample) else float(limit)
        reached = m_found < float(limit)
        return EnvelopeReport(
            beta_over_2y=self.params.beta / (2.0 * self.params.y),
            m_found=m_found,
            reached=reached,
            max_upper_violation_x=(None if math.isnan(self.max_upper_violation)
                                   else self.max_upper_violation),
            max_lower_violation_x=(None if math.isnan(self.max_lower_violation)
                                   else self.max_lower_violation),
            samples_checked=self.samples,
            limit=limit,
        )

    def state_bytes(self) -> bytes:
        return struct.pack(
            _STATE_FMT, self.count, self.samples, self.grid_pos, self.min_sample,
            self.max_lower_violation, self.max_upper_violation, 0.0,
        )

    def load_state_bytes(self, blob: bytes) -> None:
        (self.count, self.samples, self.grid_pos, self.min_sample,
         self.max_lower_violation, self.max_upper_violation, _) = struct.unpack(_STATE_FMT, blob)


def find_envelope_M(params: SectorParams, config: SieveConfig) -> EnvelopeReport:
    scan = EnvelopeScan(params)
    sieve_stream(config, scan.feed)
    return scan.finalize(config.limit)


def resolve_constants(params: SectorParams, constants: BoundConstants,
                      envelope: EnvelopeReport) -> BoundConstants:
    """Fill N and M from an envelope report. When the band was never reached,
    M stays unset and N falls back to the pure positivity threshold."""
    if envelope.reached:
        return replace(constants, M=envelope.m_found, N=find_N(params, envelope.m_found))
    return replace(constants, M=None, N=validity_start_index(params))
