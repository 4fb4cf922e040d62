"""Command line front end.

Every data-producing subcommand drives the same single pipeline pass: one
ordered sweep of sieve segments feeds the shell accumulator and the envelope
scan together, then the closed-form constants are resolved against the
envelope findings and the per-shell verdicts are rendered. The subcommands
differ only in which slice of the run report they print.

Exit codes: 0 success, 2 invalid flags or config, 3 output I/O failure,
4 a bound violated on a complete above-threshold shell.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import struct
import sys
import time
from dataclasses import dataclass

from .aggregate import StreamAccumulator, encode_token, validate_token
from .bounds import EnvelopeScan, constants_of, resolve_constants
from .errors import (BoundViolation, ConfigurationError, PreconditionError,
                     TokenError)
from .lemma import RaySpec, check_triple, rational_exponent_guess, scan_ray
from .phase import TWO_PI, SectorParams
from .report import (SCHEMA_VERSION, VERDICT_VIOLATED, VERSION, RunReport,
                     build_report, render_constants_table,
                     render_envelope_table, render_shells_csv,
                     render_shells_table, render_sums_table)
from .sieve import DEFAULT_SEGMENT_SIZE, SieveConfig, sieve_stream

ENV_THREADS = "SECTOR_PRIMES_THREADS"

_DEFAULTS = {
    "y": 10.0,
    "alpha": 0.0,
    "K": 0.5,
    "limit": 10 ** 8,
    "segment_size": DEFAULT_SEGMENT_SIZE,
    "threads": 1,
    "format": "table",
    "out": None,
    "checkpoint": None,
    "tolerance": 1.0e-3,
    "gamma": 0.0,
}
_FORMATS = ("table", "csv", "json")


def _add_common_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--y", type=float, default=None, metavar="Y",
                    help="angular frequency, positive real (default 10)")
    sp.add_argument("--alpha", type=float, default=None, metavar="A",
                    help="phase offset in [0, 2*pi) (default 0)")
    sp.add_argument("--K", type=float, default=None, metavar="K",
                    help="sector cosine threshold in (0, 1) (default 0.5)")
    sp.add_argument("--limit", type=int, default=None, metavar="X",
                    help="sieve everything up to X inclusive (default 10^8)")
    sp.add_argument("--segment-size", dest="segment_size", type=int, default=None,
                    metavar="S", help="odd slots per sieve segment (default 2^18)")
    sp.add_argument("--threads", type=int, default=None, metavar="T",
                    help=f"sieve worker threads (default ${ENV_THREADS} or 1)")
    sp.add_argument("--format", choices=_FORMATS, default=None,
                    help="output format (default table)")
    sp.add_argument("--out", default=None, metavar="PATH",
                    help="write output to PATH instead of stdout")
    sp.add_argument("--checkpoint", default=None, metavar="PATH",
                    help="resume token file: loaded if present, rewritten at the "
                         "last completed segment boundary")
    sp.add_argument("--tolerance", type=float, default=None, metavar="T",
                    help="ray hit tolerance in (0, pi] (default 1e-3)")
    sp.add_argument("--gamma", type=float, default=None, metavar="G",
                    help="ray angle in [0, 2*pi) (default 0)")
    sp.add_argument("--config", default=None, metavar="PATH",
                    help="JSON file holding defaults for these options "
                         "(explicit flags win)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sector-primes",
        description="Sieve primes, classify them by the angle y*ln p + alpha "
                    "into cosine sectors and shells, and check the closed-form "
                    "count and reciprocal-sum lower bounds against the data.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, text in (
        ("sum", cmd_sum, "sector reciprocal sums with decade growth snapshots"),
        ("shells", cmd_shells, "per-shell counts, sums, bounds and verdicts"),
        ("envelope", cmd_envelope, "prime-counting envelope scan and threshold M"),
        ("lemma", cmd_lemma, "rational-ray hits and triple non-alignment certificates"),
        ("report", cmd_report, "full JSON artifact with everything above"),
    ):
        sp = sub.add_parser(name, help=text, description=text)
        _add_common_flags(sp)
        sp.set_defaults(func=func)
    return parser


def resolve_options(args: argparse.Namespace) -> tuple[dict, set]:
    opts = dict(_DEFAULTS)
    explicit: set[str] = set()
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {args.config}: {exc}")
        try:
            file_cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {args.config} is not valid JSON: {exc}")
        if not isinstance(file_cfg, dict):
            raise ConfigurationError(
                f"config file {args.config} must hold a JSON object of options")
        unknown = sorted(set(file_cfg) - set(_DEFAULTS))
        if unknown:
            raise ConfigurationError(
                f"unknown config keys {unknown}; valid keys are {sorted(_DEFAULTS)}")
        opts.update(file_cfg)
        explicit.update(file_cfg)
    if args.threads is None and "threads" not in explicit:
        env = os.environ.get(ENV_THREADS)
        if env is not None:
            try:
                opts["threads"] = int(env)
            except ValueError:
                raise ConfigurationError(
                    f"{ENV_THREADS} must be a positive integer (got {env!r})")
    for key in _DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            opts[key] = value
            explicit.add(key)
    _validate(opts)
    return opts, explicit


def _validate(opts: dict) -> None:
    y, alpha, k = opts["y"], opts["alpha"], opts["K"]
    if not (isinstance(y, (int, float)) and math.isfinite(y) and y > 0):
        raise ConfigurationError(f"--y must be a positive finite real (got {y!r})")
    if not (isinstance(alpha, (int, float)) and 0.0 <= alpha < TWO_PI):
        raise ConfigurationError(f"--alpha must lie in [0, 2*pi) (got {alpha!r})")
    if not (isinstance(k, (int, float)) and 0.0 < k < 1.0):
        raise ConfigurationError(
            f"--K must lie in the open interval (0, 1) (got {k!r})")
    limit = opts["limit"]
    if isinstance(limit, bool) or not isinstance(limit, int) or limit < 2:
        raise ConfigurationError(f"--limit must be an integer >= 2 (got {limit!r})")
    seg = opts["segment_size"]
    if isinstance(seg, bool) or not isinstance(seg, int) or seg < 2:
        raise ConfigurationError(f"--segment-size must be an integer >= 2 (got {seg!r})")
    threads = opts["threads"]
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigurationError(f"--threads must be an integer >= 1 (got {threads!r})")
    if opts["format"] not in _FORMATS:
        raise ConfigurationError(
            f"--format must be one of {_FORMATS} (got {opts['format']!r})")
    tol = opts["tolerance"]
    if not (isinstance(tol, (int, float)) and 0.0 < tol <= math.pi):
        raise ConfigurationError(f"--tolerance must lie in (0, pi] (got {tol!r})")
    gamma = opts["gamma"]
    if not (isinstance(gamma, (int, float)) and 0.0 <= gamma < TWO_PI):
        raise ConfigurationError(f"--gamma must lie in [0, 2*pi) (got {gamma!r})")


@dataclass
class PipelineResult:
    params: SectorParams
    config: SieveConfig
    constants: object
    envelope: object
    shells: list
    sums: object
    timings: dict


def run_pipeline(params: SectorParams, config: SieveConfig,
                 checkpoint_path: str | None = None) -> PipelineResult:
    acc = StreamAccumulator(params, config.limit)
    scan = EnvelopeScan(params)
    start_index = 0
    if checkpoint_path and os.path.exists(checkpoint_path) \
            and os.path.getsize(checkpoint_path) > 0:
        with open(checkpoint_path, "rb") as fh:
            data = fh.read()
        start_index, blocks = validate_token(data, params, config)
        try:
            acc.load_state_bytes(blocks["acc"])
            scan.load_state_bytes(blocks["env"])
        except (KeyError, struct.error, UnicodeDecodeError) as exc:
            raise TokenError(f"resume token payload is malformed: {exc}",
                             reason="format") from exc

    span = 2 * config.segment_size
    state = {"index": start_index, "token": None}
    if checkpoint_path is not None:
        state["token"] = encode_token(params, config.segment_size, start_index,
                                      {"acc": acc.state_bytes(),
                                       "env": scan.state_bytes()})

    def consume(segment) -> None:
        acc.feed(segment)
        scan.feed(segment)
        state["index"] += 1
        if checkpoint_path is not None and segment.hi - segment.lo + 1 == span:
            state["token"] = encode_token(params, config.segment_size, state["index"],
                                          {"acc": acc.state_bytes(),
                                           "env": scan.state_bytes()})

    t0 = time.perf_counter()
    sieve_stream(config, consume, start_index=start_index)
    t1 = time.perf_counter()
    if checkpoint_path is not None:
        with open(checkpoint_path, "wb") as fh:
            fh.write(state["token"])
    envelope = scan.finalize(config.limit)
    constants = resolve_constants(params, constants_of(params), envelope)
    shells, sums = acc.finalize(constants)
    t2 = time.perf_counter()
    timings = {"sieve_classify_s": t1 - t0, "finalize_s": t2 - t1, "total_s": t2 - t0}
    return PipelineResult(params=params, config=config, constants=constants,
                          envelope=envelope, shells=shells, sums=sums,
                          timings=timings)


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _raise_on_violation(report: RunReport) -> None:
    bad = [r for r in report.shells
           if VERDICT_VIOLATED in (r["count_ok"], r["recip_ok"])]
    if bad:
        r = bad[0]
        raise BoundViolation(
            f"lower bound violated on complete shell {r['kind']}{r['n']}: "
            f"count {r['count']} vs {r['count_bound']}, "
            f"recip {r['recip_sum']} vs {r['recip_bound']}")


def _pipeline_report(opts: dict, lemma_findings: dict | None = None) -> RunReport:
    params = SectorParams(y=opts["y"], alpha=opts["alpha"], K=opts["K"])
    config = SieveConfig(limit=opts["limit"], segment_size=opts["segment_size"],
                         worker_count=opts["threads"])
    result = run_pipeline(params, config, opts["checkpoint"])
    return build_report(params, config, result.constants, result.envelope,
                        result.shells, result.sums, lemma_findings=lemma_findings,
                        timings=result.timings)


def _emit_pipeline(report: RunReport, opts: dict, table_text: str) -> int:
    if opts["format"] == "json":
        _emit(report.to_json() + "\n", opts["out"])
    elif opts["format"] == "csv":
        _emit(render_shells_csv(report), opts["out"])
    else:
        _emit(table_text, opts["out"])
    _raise_on_violation(report)
    return 0


def cmd_sum(opts: dict, explicit: set) -> int:
    report = _pipeline_report(opts)
    table = render_constants_table(report) + "\n" + render_sums_table(report)
    return _emit_pipeline(report, opts, table)


def cmd_shells(opts: dict, explicit: set) -> int:
    report = _pipeline_report(opts)
    table = render_constants_table(report) + "\n" + render_shells_table(report)
    return _emit_pipeline(report, opts, table)


def cmd_envelope(opts: dict, explicit: set) -> int:
    report = _pipeline_report(opts)
    return _emit_pipeline(report, opts, render_envelope_table(report))


def _lemma_findings(opts: dict) -> dict:
    spec = RaySpec(y=opts["y"], gamma=opts["gamma"], tolerance=opts["tolerance"])
    config = SieveConfig(limit=opts["limit"], segment_size=opts["segment_size"],
                         worker_count=opts["threads"])
    hits = scan_ray(spec, config)
    certificate = None
    note = None
    if len(hits) >= 3:
        trio = sorted(h[0] for h in hits[:3])
        h_exp, k_exp = rational_exponent_guess(trio[0], trio[1], trio[2],
                                               max_denominator=64)
        if 1 <= h_exp < k_exp:
            try:
                cert = check_triple(trio[0], trio[1], trio[2], h_exp, k_exp)
                certificate = {
                    "p1": cert.p1, "p2": cert.p2, "p3": cert.p3,
                    "h": cert.h, "k": cert.k, "lhs": cert.lhs, "rhs": cert.rhs,
                    "exact_inequality_holds": cert.exact_inequality_holds,
                    "residual": cert.residual,
                }
            except PreconditionError as exc:
                note = str(exc)
        else:
            note = (f"best rational exponent guess {k_exp}/{h_exp} is not a "
                    f"proper ratio with h < k")
    else:
        note = "fewer than three ray hits; no triple to certify"
    return {
        "ray": {"y": spec.y, "gamma": spec.gamma, "tolerance": spec.tolerance,
                "limit": config.limit},
        "hit_count": len(hits),
        "hits": [[p, n, d] for p, n, d in hits[:1000]],
        "closest_triple": certificate,
        "note": note,
    }


def cmd_lemma(opts: dict, explicit: set) -> int:
    findings = _lemma_findings(opts)
    if opts["format"] == "json":
        payload = {"schema_version": SCHEMA_VERSION, "version": VERSION,
                   "lemma_findings": findings}
        _emit(json.dumps(payload, indent=2) + "\n", opts["out"])
    elif opts["format"] == "csv":
        lines = ["p,n,distance"]
        lines += [f"{p},{n},{d!r}" for p, n, d in findings["hits"]]
        _emit("\n".join(lines) + "\n", opts["out"])
    else:
        lines = [
            f"ray y={findings['ray']['y']:g} gamma={findings['ray']['gamma']:g} "
            f"tolerance={findings['ray']['tolerance']:g} limit={findings['ray']['limit']}",
            f"hits within tolerance: {findings['hit_count']}",
        ]
        for p, n, d in findings["hits"][:20]:
            lines.append(f"  p={p:<12d} n={n:<8d} distance={d:.6e}")
        cert = findings["closest_triple"]
        if cert is not None:
            lines.append(
                f"closest triple ({cert['p1']}, {cert['p2']}, {cert['p3']}) with "
                f"exponents h={cert['h']}, k={cert['k']}: "
                f"p3^h*p1^k = {cert['lhs']} != {cert['rhs']} = p2^k*p1^h "
                f"(residual {cert['residual']:.6e})")
        if findings["note"]:
            lines.append(findings["note"])
        _emit("\n".join(lines) + "\n", opts["out"])
    return 0


def cmd_report(opts: dict, explicit: set) -> int:
    findings = None
    if "gamma" in explicit or "tolerance" in explicit:
        findings = _lemma_findings(opts)
    report = _pipeline_report(opts, lemma_findings=findings)
    _emit(report.to_json() + "\n", opts["out"])
    _raise_on_violation(report)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0
    try:
        opts, explicit = resolve_options(args)
        return args.func(opts, explicit)
    except BoundViolation as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 4
    except (ConfigurationError, PreconditionError, TokenError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
