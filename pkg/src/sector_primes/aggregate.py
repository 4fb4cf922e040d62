"""Streaming aggregation of classified primes into per-shell statistics and
compensated sector reciprocal sums, with resumable checkpoint tokens.

Per segment the reciprocals are reduced in 80-bit extended precision over
contiguous runs of equal shell key (ascending primes visit shells in order,
so runs are long), and each run partial is folded into a Neumaier-compensated
double accumulator per shell. Results are bit-for-bit independent of worker
count and of checkpoint/resume splits because segments arrive in grid order
and every fold happens in the same sequence.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundConstants, shell_count_lower_bound, shell_recip_lower_bound
from .errors import ConfigurationError, PreconditionError, TokenError
from .phase import (KIND_A, KIND_B, SectorParams, classify, max_shell_ordinal,
                    shell_ordinal_interval)
from .sieve import Segment, SieveConfig, sieve_stream

TOKEN_MAGIC = b"SPRM"
TOKEN_VERSION = 1


class NeumaierSum:
    """Kahan-Babuska compensated summation; value = s + c."""

    __slots__ = ("s", "c")

    def __init__(self, s: float = 0.0, c: float = 0.0):
        self.s = s
        self.c = c

    def add(self, x: float) -> None:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    def add_extended(self, x: np.longdouble) -> None:
        hi = float(x)
        lo = float(x - np.longdouble(hi))
        self.add(hi)
        if lo != 0.0:
            self.add(lo)

    @property
    def value(self) -> float:
        return self.s + self.c


@dataclass(frozen=True)
class DecadeSnapshot:
    x: int
    prime_count: int
    sum_plus: float
    sum_minus: float
    sum_all: float


@dataclass(frozen=True)
class ShellStats:
    kind: str
    n: int
    lo: float
    hi: float
    count: int
    recip_sum: float
    complete: bool
    above_M: bool
    count_bound: float | None
    recip_bound: float | None


@dataclass(frozen=True)
class SectorSums:
    plus: float
    minus: float
    total: float
    prime_count: int
    non_shell_count: int
    shell_not_sector_a: int  # |A \ Plus|: in an A-shell yet outside the open sector
    shell_not_sector_b: int  # |B \ Minus|
    decades: list[DecadeSnapshot] = field(default_factory=list)
    boundary_exceptions: list[tuple[int, str]] = field(default_factory=list)


class StreamAccumulator:
    def __init__(self, params: SectorParams, limit: int):
        self.params = params
        self.limit = limit
        self.next_lo = 2
        self.prime_count = 0
        self.non_shell_count = 0
        self.shell_not_sector_a = 0
        self.shell_not_sector_b = 0
        self.sum_plus = NeumaierSum()
        self.sum_minus = NeumaierSum()
        self.sum_all = NeumaierSum()
        self.shell_counts: dict[int, int] = {}
        self.shell_sums: dict[int, NeumaierSum] = {}
        self.exceptions: list[tuple[int, str]] = []
        self.decades: list[DecadeSnapshot] = []
        self.next_decade = 10

    def _snapshot(self, x: int) -> None:
        self.decades.append(DecadeSnapshot(
            x=x, prime_count=self.prime_count, sum_plus=self.sum_plus.value,
            sum_minus=self.sum_minus.value, sum_all=self.sum_all.value,
        ))

    def _fold(self, cls, a: int, b: int) -> None:
        primes = cls.primes[a:b]
        if primes.size == 0:
            return
        recip = 1.0 / primes.astype(np.longdouble)
        keys = np.where(cls.in_shell[a:b], cls.m[a:b], -1)
        change = np.flatnonzero(keys[1:] != keys[:-1]) + 1
        starts = np.concatenate((np.zeros(1, dtype=np.int64), change))
        ends = np.concatenate((change, np.array([keys.size], dtype=np.int64)))
        partials = np.add.reduceat(recip, starts)
        run_keys = keys[starts]
        for i in range(starts.size):
            rk = int(run_keys[i])
            if rk < 0:
                self.non_shell_count += int(ends[i] - starts[i])
                continue
            self.shell_counts[rk] = self.shell_counts.get(rk, 0) + int(ends[i] - starts[i])
            acc = self.shell_sums.get(rk)
            if acc is None:
                acc = self.shell_sums[rk] = NeumaierSum()
            acc.add_extended(partials[i])
        sector = cls.sector[a:b]
        stray = cls.in_shell[a:b] & (sector == 0)
        if stray.any():
            odd = int(np.count_nonzero(cls.m[a:b][stray] & 1))
            self.shell_not_sector_b += odd
            self.shell_not_sector_a += int(np.count_nonzero(stray)) - odd
        plus = recip[sector == 1]
        minus = recip[sector == -1]
        if plus.size:
            self.sum_plus.add_extended(plus.sum())
        if minus.size:
            self.sum_minus.add_extended(minus.sum())
        self.sum_all.add_extended(recip.sum())
        self.prime_count += int(primes.size)

    def feed(self, segment: Segment) -> None:
        if segment.lo != self.next_lo:
            raise ConfigurationError(
                f"segments must arrive in grid order (expected lo={self.next_lo}, "
                f"got {segment.lo})")
        cls = classify(self.params, segment.primes)
        self.exceptions.extend(cls.exceptions)
        folded = 0
        while self.next_decade <= segment.hi:
            cut = int(np.searchsorted(segment.primes, self.next_decade, side="right"))
            self._fold(cls, folded, cut)
            folded = cut
            if self.next_decade <= self.limit:
                self._snapshot(self.next_decade)
            self.next_decade *= 10
        self._fold(cls, folded, segment.primes.size)
        self.next_lo = segment.hi + 1

    # -- checkpoint state ---------------------------------------------------

    def state_bytes(self) -> bytes:
        out = bytearray()
        out += struct.pack("<QQQQQQ", self.next_lo, self.prime_count,
                           self.non_shell_count, self.next_decade,
                           self.shell_not_sector_a, self.shell_not_sector_b)
        for acc in (self.sum_plus, self.sum_minus, self.sum_all):
            out += struct.pack("<dd", acc.s, acc.c)
        out += struct.pack("<I", len(self.shell_counts))
        for m in sorted(self.shell_counts):
            acc = self.shell_sums[m]
            out += struct.pack("<qQdd", m, self.shell_counts[m], acc.s, acc.c)
        out += struct.pack("<I", len(self.decades))
        for snap in self.decades:
            out += struct.pack("<QQddd", snap.x, snap.prime_count, snap.sum_plus,
                               snap.sum_minus, snap.sum_all)
        out += struct.pack("<I", len(self.exceptions))
        for p, detail in self.exceptions:
            blob = detail.encode("utf-8")
            out += struct.pack("<QI", p, len(blob)) + blob
        return bytes(out)

    def load_state_bytes(self, data: bytes) -> None:
        off = 0

        def take(fmt: str):
            nonlocal off
            vals = struct.unpack_from(fmt, data, off)
            off += struct.calcsize(fmt)
            return vals

        (self.next_lo, self.prime_count, self.non_shell_count, self.next_decade,
         self.shell_not_sector_a, self.shell_not_sector_b) = take("<QQQQQQ")
        for acc in (self.sum_plus, self.sum_minus, self.sum_all):
            acc.s, acc.c = take("<dd")
        (n_shells,) = take("<I")
        self.shell_counts = {}
        self.shell_sums = {}
        for _ in range(n_shells):
            m, count, s, c = take("<qQdd")
            self.shell_counts[m] = count
            self.shell_sums[m] = NeumaierSum(s, c)
        (n_decades,) = take("<I")
        self.decades = []
        for _ in range(n_decades):
            x, pc, sp, sm, sa = take("<QQddd")
            self.decades.append(DecadeSnapshot(x, pc, sp, sm, sa))
        (n_exc,) = take("<I")
        self.exceptions = []
        for _ in range(n_exc):
            p, ln = take("<QI")
            detail = data[off:off + ln].decode("utf-8")
            off += ln
            self.exceptions.append((p, detail))

    # -- results ------------------------------------------------------------

    def finalize(self, constants: BoundConstants) -> tuple[list[ShellStats], SectorSums]:
        shells = []
        top = max_shell_ordinal(self.params, self.limit)
        known = max(self.shell_counts, default=-1)
        for m in range(0, max(top, known) + 1):
            iv = shell_ordinal_interval(self.params, m)
            n = m // 2
            kind = KIND_A if m % 2 == 0 else KIND_B
            acc = self.shell_sums.get(m)
            complete = iv.hi_inclusive <= self.limit
            above_m = constants.M is not None and iv.lo_exclusive >= constants.M
            count_bound = recip_bound = None
            if constants.N is not None and n > constants.N:
                try:
                    count_bound = shell_count_lower_bound(self.params, constants, kind, n)
                    recip_bound = shell_recip_lower_bound(self.params, constants, kind, n)
                except PreconditionError:
                    count_bound = recip_bound = None
            shells.append(ShellStats(
                kind=kind, n=n, lo=iv.lo_exclusive, hi=iv.hi_inclusive,
                count=self.shell_counts.get(m, 0),
                recip_sum=acc.value if acc is not None else 0.0,
                complete=complete, above_M=above_m,
                count_bound=count_bound, recip_bound=recip_bound,
            ))
        sums = SectorSums(
            plus=self.sum_plus.value, minus=self.sum_minus.value,
            total=self.sum_all.value, prime_count=self.prime_count,
            non_shell_count=self.non_shell_count,
            shell_not_sector_a=self.shell_not_sector_a,
            shell_not_sector_b=self.shell_not_sector_b,
            decades=list(self.decades),
            boundary_exceptions=list(self.exceptions),
        )
        return shells, sums


# ---------------------------------------------------------------------------
# resume tokens

def params_digest(params: SectorParams) -> bytes:
    return hashlib.sha256(struct.pack("<ddd", params.y, params.alpha, params.K)).digest()


def encode_token(params: SectorParams, segment_size: int, segment_index: int,
                 blocks: dict[str, bytes]) -> bytes:
    body = bytearray()
    body += TOKEN_MAGIC
    body += struct.pack("<H", TOKEN_VERSION)
    body += params_digest(params)
    body += struct.pack("<QQH", segment_index, segment_size, len(blocks))
    for name, data in blocks.items():
        blob = name.encode("ascii")
        body += struct.pack("<H", len(blob)) + blob
        body += struct.pack("<I", len(data)) + data
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    return bytes(body)


def decode_token(data: bytes) -> tuple[bytes, int, int, dict[str, bytes]]:
    if len(data) < 4 + 2 + 32 + 8 + 8 + 2 + 4:
        raise TokenError("resume token is truncated", reason="format")
    if data[:4] != TOKEN_MAGIC:
        raise TokenError("resume token has wrong magic bytes", reason="format")
    if zlib.crc32(data[:-4]) != struct.unpack("<I", data[-4:])[0]:
        raise TokenError("resume token checksum mismatch", reason="format")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != TOKEN_VERSION:
        raise TokenError(f"unsupported resume token version {version}", reason="format")
    digest = data[6:38]
    segment_index, segment_size, n_blocks = struct.unpack_from("<QQH", data, 38)
    off = 56
    blocks = {}
    try:
        for _ in range(n_blocks):
            (name_len,) = struct.unpack_from("<H", data, off)
            off += 2
            name = data[off:off + name_len].decode("ascii")
            off += name_len
            (data_len,) = struct.unpack_from("<I", data, off)
            off += 4
            blocks[name] = data[off:off + data_len]
            if len(blocks[name]) != data_len:
                raise TokenError("resume token block is truncated", reason="format")
            off += data_len
    except struct.error as exc:
        raise TokenError("resume token block table is malformed", reason="format") from exc
    return digest, segment_size, segment_index, blocks


def validate_token(data: bytes, params: SectorParams,
                   config: SieveConfig) -> tuple[int, dict[str, bytes]]:
    digest, segment_size, segment_index, blocks = decode_token(data)
    if digest != params_digest(params):
        raise TokenError(
            "resume token was produced under different sector parameters (y, alpha, K)",
            reason="parameter-mismatch")
    if segment_size != config.segment_size:
        raise TokenError(
            f"resume token segment grid (segment_size={segment_size}) does not match "
            f"the requested segment_size={config.segment_size}",
            reason="segment-alignment")
    resume_lo = 2 + 2 * segment_size * segment_index
    if resume_lo - 1 > config.limit:
        raise TokenError(
            f"resume token is already past the requested limit (checkpoint covers "
            f"[2, {resume_lo - 1}], limit is {config.limit})",
            reason="limit")
    return segment_index, blocks


def accumulate(params: SectorParams, constants: BoundConstants,
               config: SieveConfig) -> tuple[list[ShellStats], SectorSums]:
    """One-shot aggregation over a fresh sieve stream."""
    acc = StreamAccumulator(params, config.limit)
    sieve_stream(config, acc.feed)
    return acc.finalize(constants)
