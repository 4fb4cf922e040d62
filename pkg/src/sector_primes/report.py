"""Run reports: one JSON-native structure holding parameters, constants,
envelope findings, the per-shell table with verdicts, sector sums, and decade
snapshots, plus table and CSV renderers.

Verdicts are three-valued. A bound is only asserted on a shell that is
complete (entirely below the run limit), entirely above the envelope
threshold M, and indexed past N; everything else reports not_applicable
rather than a vacuous pass.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from importlib import metadata

from .aggregate import SectorSums, ShellStats
from .bounds import BoundConstants, EnvelopeReport
from .phase import SectorParams
from .sieve import SieveConfig

try:
    VERSION = metadata.version("sector-primes")
except metadata.PackageNotFoundError:
    VERSION = "0.1.0"

SCHEMA_VERSION = 1

VERDICT_HOLDS = "holds"
VERDICT_VIOLATED = "violated"
VERDICT_NA = "not_applicable"

CSV_COLUMNS = ("kind", "n", "lo", "hi", "complete", "above_M", "count",
               "count_bound", "recip_sum", "recip_bound", "count_ok", "recip_ok")


def shell_verdicts(stat: ShellStats) -> tuple[str, str]:
    if not (stat.complete and stat.above_M):
        return VERDICT_NA, VERDICT_NA
    count_ok = VERDICT_NA
    recip_ok = VERDICT_NA
    if stat.count_bound is not None:
        count_ok = VERDICT_HOLDS if stat.count >= stat.count_bound else VERDICT_VIOLATED
    if stat.recip_bound is not None:
        recip_ok = VERDICT_HOLDS if stat.recip_sum >= stat.recip_bound else VERDICT_VIOLATED
    return count_ok, recip_ok


def shell_row(stat: ShellStats) -> dict:
    count_ok, recip_ok = shell_verdicts(stat)
    return {
        "kind": stat.kind, "n": stat.n, "lo": stat.lo, "hi": stat.hi,
        "complete": stat.complete, "above_M": stat.above_M, "count": stat.count,
        "count_bound": stat.count_bound, "recip_sum": stat.recip_sum,
        "recip_bound": stat.recip_bound, "count_ok": count_ok, "recip_ok": recip_ok,
    }


@dataclass
class RunReport:
    schema_version: int
    version: str
    params: dict
    config: dict
    constants: dict
    envelope: dict
    shells: list
    sums: dict
    decades: list
    lemma_findings: dict | None = None
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


def build_report(params: SectorParams, config: SieveConfig, constants: BoundConstants,
                 envelope: EnvelopeReport, shells: list[ShellStats], sums: SectorSums,
                 lemma_findings: dict | None = None,
                 timings: dict | None = None) -> RunReport:
    return RunReport(
        schema_version=SCHEMA_VERSION,
        version=VERSION,
        params={"y": params.y, "alpha": params.alpha, "K": params.K, "beta": params.beta},
        config={"limit": config.limit, "segment_size": config.segment_size,
                "worker_count": config.worker_count},
        constants={"c": constants.c, "d": constants.d, "N": constants.N, "M": constants.M},
        envelope={
            "beta_over_2y": envelope.beta_over_2y,
            "m_found": envelope.m_found,
            "reached": envelope.reached,
            "max_upper_violation_x": envelope.max_upper_violation_x,
            "max_lower_violation_x": envelope.max_lower_violation_x,
            "samples_checked": envelope.samples_checked,
            "limit": envelope.limit,
        },
        shells=[shell_row(st) for st in shells],
        sums={
            "plus": sums.plus, "minus": sums.minus, "total": sums.total,
            "prime_count": sums.prime_count, "non_shell_count": sums.non_shell_count,
            "shell_not_sector_A": sums.shell_not_sector_a,
            "shell_not_sector_B": sums.shell_not_sector_b,
            "boundary_exceptions": [[p, detail] for p, detail in sums.boundary_exceptions],
        },
        decades=[asdict(snap) for snap in sums.decades],
        lemma_findings=lemma_findings,
        timings=dict(timings or {}),
    )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_shells_csv(report: RunReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.shells:
        writer.writerow([_cell(row[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def _format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _sig(value, digits: int = 6) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def render_shells_table(report: RunReport) -> str:
    headers = ["shell", "interval", "count", "count_bound", "recip_sum",
               "recip_bound", "complete", "above_M", "count_ok", "recip_ok"]
    rows = []
    for r in report.shells:
        rows.append([
            f"{r['kind']}{r['n']}",
            f"({_sig(r['lo'])}, {_sig(r['hi'])}]",
            str(r["count"]), _sig(r["count_bound"]), _sig(r["recip_sum"]),
            _sig(r["recip_bound"]), _cell(r["complete"]), _cell(r["above_M"]),
            r["count_ok"], r["recip_ok"],
        ])
    return _format_table(headers, rows)


def render_envelope_table(report: RunReport) -> str:
    env = report.envelope
    lines = [
        f"band half-width beta/2y = {_sig(env['beta_over_2y'])}",
        f"samples checked         = {env['samples_checked']}",
        f"last lower violation x  = {_sig(env['max_lower_violation_x']) or 'none'}",
        f"last upper violation x  = {_sig(env['max_upper_violation_x']) or 'none'}",
        f"M_found                 = {_sig(env['m_found'])}",
    ]
    if env["reached"]:
        lines.append(f"envelope reached: holds on ({_sig(env['m_found'])}, {env['limit']}]")
    else:
        lines.append(
            f"envelope NOT reached within limit {env['limit']}: violations persist "
            f"to the last sample; bound verdicts are reported as not_applicable "
            f"(increase --limit)")
    return "\n".join(lines) + "\n"


def render_sums_table(report: RunReport) -> str:
    sums = report.sums
    headers = ["x", "pi(x)", "sum_plus", "sum_minus", "sum_all", "d_plus", "d_minus"]
    rows = []
    prev_plus = prev_minus = 0.0
    for snap in report.decades:
        rows.append([
            str(snap["x"]), str(snap["prime_count"]),
            f"{snap['sum_plus']:.9f}", f"{snap['sum_minus']:.9f}",
            f"{snap['sum_all']:.9f}",
            f"{snap['sum_plus'] - prev_plus:.9f}",
            f"{snap['sum_minus'] - prev_minus:.9f}",
        ])
        prev_plus = snap["sum_plus"]
        prev_minus = snap["sum_minus"]
    table = _format_table(headers, rows) if rows else ""
    tail = [
        f"primes counted      = {sums['prime_count']}",
        f"sector sum (Plus)   = {sums['plus']:.12f}",
        f"sector sum (Minus)  = {sums['minus']:.12f}",
        f"reciprocal sum, all = {sums['total']:.12f}",
        f"in shell, not in sector: A {sums['shell_not_sector_A']}, "
        f"B {sums['shell_not_sector_B']}",
        f"boundary exceptions = {len(sums['boundary_exceptions'])}",
    ]
    return table + "\n".join(tail) + "\n"


def render_constants_table(report: RunReport) -> str:
    k = report.constants
    n_text = "unset" if k["N"] is None else str(k["N"])
    m_text = "unset (envelope not reached)" if k["M"] is None else _sig(k["M"])
    return (f"c = {_sig(k['c'], 10)}\nd = {_sig(k['d'], 10)}\n"
            f"N = {n_text}\nM = {m_text}\n")
