"""Phase classification: theta(p) = (y*ln p + alpha) mod 2pi.

A prime lands in sector Plus/Minus when cos(theta) clears +K/-K, and in
shell (A, n) / (B, n) when its raw phase lies within +-beta of an even/odd
multiple of pi (left-open, right-closed). The raw phase is computed in
paired working precision (double-double) so the reduction mod pi keeps
enough bits; anything whose cosine lands within 2^-40 of the K-crossing
is reclassified at >= 200-bit precision before being returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * math.pi

# double-double constants: hi is the rounded double, lo the residual
PI_HI = 3.141592653589793
PI_LO = 1.2246467991473532e-16
LN2_HI = 0.6931471805599453
LN2_LO = 2.3190468138462996e-17

GUARD_BAND = 2.0 ** -40
_MP_PREC = 240  # bits for the extended-precision fallback
_MP_TIE = mpmath.mpf(2) ** -200
_FLOAT_EXACT = 1 << 53

SECTOR_PLUS = "Plus"
SECTOR_MINUS = "Minus"
SECTOR_NEITHER = "Neither"
KIND_A = "A"
KIND_B = "B"


@dataclass(frozen=True)
class SectorParams:
    y: float
    alpha: float
    K: float
    beta: float = field(init=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.y) and self.y > 0):
            raise ConfigurationError(f"y must be a positive finite real (got {self.y!r})")
        if not (math.isfinite(self.alpha) and 0.0 <= self.alpha < TWO_PI):
            raise ConfigurationError(f"alpha must lie in [0, 2*pi) (got {self.alpha!r})")
        if not (math.isfinite(self.K) and 0.0 < self.K < 1.0):
            raise ConfigurationError(f"K must lie in the open interval (0, 1) (got {self.K!r})")
        object.__setattr__(self, "beta", math.acos(self.K))


@dataclass(frozen=True)
class PhaseResult:
    p: int
    theta: float
    cos_theta: float
    sector: str
    shell: tuple[str, int] | None
    boundary_flag: bool


@dataclass(frozen=True)
class ShellInterval:
    kind: str
    n: int
    lo_exclusive: float
    hi_inclusive: float


# ---------------------------------------------------------------------------
# double-double kernels (vectorized; work on scalars and arrays alike)

_SPLITTER = 134217729.0  # 2^27 + 1, Veltkamp split


def _two_sum(a, b):
    s = a + b
    v = s - a
    e = (a - (s - v)) + (b - v)
    return s, e


def _two_prod(a, b):
    p = a * b
    ah = _SPLITTER * a
    ah = ah - (ah - a)
    al = a - ah
    bh = _SPLITTER * b
    bh = bh - (bh - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _dd_add_d(h, l, x):
    s, e = _two_sum(h, x)
    e = e + l
    hr, lr = _two_sum(s, e)
    return hr, lr


def _dd_mul_d(h, l, x):
    p, e = _two_prod(h, x)
    e = e + l * x
    hr, lr = _two_sum(p, e)
    return hr, lr


def _dd_div_d(h, l, x):
    q = h / x
    p, e = _two_prod(q, x)
    r = ((h - p) - e + l) / x
    hr, lr = _two_sum(q, r)
    return hr, lr


def raw_phase_dd(y: float, primes: np.ndarray, alpha: float = 0.0):
    """y*ln p + alpha as a double-double pair of arrays.

    ln p is assembled from frexp as e*ln2 + ln(mantissa), keeping the
    absolute error near 2^-53 even for large p, so the phase error stays
    ~ y*2^-52 — far inside the 2^-40 guard band for desk-scale y.
    """
    pf = primes.astype(np.float64)
    frac, e = np.frexp(pf)
    lm = np.log(frac)
    ef = e.astype(np.float64)
    h, l = _two_prod(ef, LN2_HI)
    l = l + ef * LN2_LO
    h, l = _dd_add_d(h, l, lm)
    h, l = _dd_mul_d(h, l, y)
    if alpha != 0.0:
        h, l = _dd_add_d(h, l, alpha)
    return h, l


# ---------------------------------------------------------------------------


@dataclass
class SegmentClassification:
    """Vectorized classification of one ascending block of primes."""

    primes: np.ndarray                 # int64
    m: np.ndarray                      # int64, nearest multiple of pi
    theta: np.ndarray                  # float64
    cos_theta: np.ndarray              # float64
    in_shell: np.ndarray               # bool
    sector: np.ndarray                 # int8: +1 Plus, -1 Minus, 0 Neither
    boundary: np.ndarray               # bool
    exceptions: list[tuple[int, str]]  # in-shell primes exactly on the cosine boundary


def _mp_decide(params: SectorParams, p: int):
    """Classify one prime at _MP_PREC bits. Returns the same facts the
    vectorized path produces, plus an exception detail for exact boundary ties."""
    with mpmath.workprec(_MP_PREC):
        y = mpmath.mpf(params.y)
        alpha = mpmath.mpf(params.alpha)
        K = mpmath.mpf(params.K)
        beta = mpmath.acos(K)
        th_raw = y * mpmath.log(p) + alpha
        m = int(mpmath.nint(th_raw / mpmath.pi))
        delta = th_raw - m * mpmath.pi
        cos_d = mpmath.cos(delta)
        even = m % 2 == 0
        detail = None
        if abs(cos_d - K) < _MP_TIE:
            # |delta| is indistinguishable from beta at this precision: the
            # right endpoint (delta = +beta) is in the shell, the sector is not.
            in_shell = delta > 0
            in_sector = False
            if in_shell:
                side = KIND_A if even else KIND_B
                detail = (
                    f"cos distance to K below 2^-200 at {_MP_PREC}-bit precision; "
                    f"on the inclusive {side}-shell edge (delta=+beta), outside the open sector"
                )
        else:
            in_sector = cos_d > K
            in_shell = (delta > -beta) and (delta <= beta)
        cos_theta = float(cos_d if even else -cos_d)
        theta = float(delta + (0 if even else mpmath.pi))
        if theta < -params.beta:
            theta += TWO_PI
        return m, theta, cos_theta, in_shell, in_sector, detail


def classify(params: SectorParams, primes: np.ndarray) -> SegmentClassification:
    """Classify an ascending int64 array of primes (all < 2^53)."""
    n = primes.size
    if n == 0:
        return SegmentClassification(
            primes=primes,
            m=np.empty(0, np.int64),
            theta=np.empty(0),
            cos_theta=np.empty(0),
            in_shell=np.empty(0, bool),
            sector=np.empty(0, np.int8),
            boundary=np.empty(0, bool),
            exceptions=[],
        )
    h, l = raw_phase_dd(params.y, primes, params.alpha)
    mf = np.rint((h + l) / PI_HI)
    ph, pe = _two_prod(mf, PI_HI)
    dh, dl = _dd_add_d(h, l, -ph)
    dl = dl - pe - mf * PI_LO
    dh, dl = _two_sum(dh, dl)
    delta = dh + dl
    cos_d = np.cos(dh) - dl * np.sin(dh)

    beta = params.beta
    K = params.K
    m = mf.astype(np.int64)
    even = (m & 1) == 0
    in_shell = (delta > -beta) & (delta <= beta)
    in_sector = cos_d > K
    cos_theta = np.where(even, cos_d, -cos_d)
    sector = np.zeros(n, dtype=np.int8)
    sector[in_sector & even] = 1
    sector[in_sector & ~even] = -1
    boundary = np.abs(np.abs(cos_d) - K) < GUARD_BAND
    theta = np.where(even, delta, np.pi + delta)
    theta = np.where(theta < -beta, theta + TWO_PI, theta)

    exceptions: list[tuple[int, str]] = []
    if boundary.any():
        for i in np.flatnonzero(boundary):
            p = int(primes[i])
            mi, th_i, ct_i, shl_i, sec_i, detail = _mp_decide(params, p)
            m[i] = mi
            theta[i] = th_i
            cos_theta[i] = ct_i
            in_shell[i] = shl_i
            sector[i] = (1 if mi % 2 == 0 else -1) if sec_i else 0
            if detail is not None:
                exceptions.append((p, detail))

    return SegmentClassification(
        primes=primes,
        m=m,
        theta=theta,
        cos_theta=cos_theta,
        in_shell=in_shell,
        sector=sector,
        boundary=boundary,
        exceptions=exceptions,
    )


def phase_of(params: SectorParams, p: int) -> PhaseResult:
    if p < 2:
        raise ConfigurationError(f"p must be an integer >= 2 (got {p!r})")
    if p < _FLOAT_EXACT:
        cls = classify(params, np.array([p], dtype=np.int64))
        m = int(cls.m[0])
        in_shell = bool(cls.in_shell[0])
        sec_code = int(cls.sector[0])
        theta = float(cls.theta[0])
        cos_theta = float(cls.cos_theta[0])
        flag = bool(cls.boundary[0])
    else:
        m, theta, cos_theta, in_shell, in_sector, _ = _mp_decide(params, p)
        sec_code = ((1 if m % 2 == 0 else -1) if in_sector else 0)
        flag = abs(abs(cos_theta) - params.K) < GUARD_BAND
    sector = SECTOR_PLUS if sec_code > 0 else SECTOR_MINUS if sec_code < 0 else SECTOR_NEITHER
    shell = None
    if in_shell:
        shell = (KIND_A if m % 2 == 0 else KIND_B, m // 2)
    return PhaseResult(p=p, theta=theta, cos_theta=cos_theta, sector=sector,
                       shell=shell, boundary_flag=flag)


def shell_index_of(params: SectorParams, p: int) -> tuple[str, int] | None:
    return phase_of(params, p).shell


def _interval_endpoint(params: SectorParams, m: int, sign: float) -> float:
    # exp((m*pi + sign*beta - alpha)/y) with the exponent held in double-double
    h, l = _two_prod(float(m), PI_HI)
    l = l + m * PI_LO
    h, l = _dd_add_d(h, l, sign * params.beta)
    h, l = _dd_add_d(h, l, -params.alpha)
    h, l = _dd_div_d(h, l, params.y)
    if h > 709.0:  # exp overflows the double range
        return math.inf
    return math.exp(h) * (1.0 + l)


def shell_interval(params: SectorParams, kind: str, n: int) -> ShellInterval:
    if kind not in (KIND_A, KIND_B):
        raise ConfigurationError(f"kind must be 'A' or 'B' (got {kind!r})")
    if n < 0:
        raise ConfigurationError(f"shell index n must be >= 0 (got {n!r})")
    m = 2 * n if kind == KIND_A else 2 * n + 1
    lo = _interval_endpoint(params, m, -1.0)
    hi = _interval_endpoint(params, m, +1.0)
    return ShellInterval(kind=kind, n=n, lo_exclusive=lo, hi_inclusive=hi)


def shell_ordinal_interval(params: SectorParams, m: int) -> ShellInterval:
    """Shell by flat ordinal m (A_n at m=2n, B_n at m=2n+1)."""
    kind = KIND_A if m % 2 == 0 else KIND_B
    return shell_interval(params, kind, m // 2)


def max_shell_ordinal(params: SectorParams, limit: int) -> int:
    """Largest m whose interval lower endpoint is <= limit (shell examined
    by a sieve run up to `limit`); -1 when even m=0 starts beyond limit."""
    m = int(math.floor((params.y * math.log(limit) + params.alpha + params.beta) / math.pi))
    while m >= 0 and shell_ordinal_interval(params, m).lo_exclusive > limit:
        m -= 1
    while shell_ordinal_interval(params, m + 1).lo_exclusive <= limit:
        m += 1
    return m
