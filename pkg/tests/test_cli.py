"""Command-line surface: flag validation, output formats, config and env
precedence, checkpoint flows, and byte-level determinism."""

import json
import os

import pytest

from sector_primes import __version__
from sector_primes.cli import main
from sector_primes.report import CSV_COLUMNS, RunReport


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_help_exits_zero(capsys):
    code, out, _ = run_cli(capsys, ["--help"])
    assert code == 0
    assert "sum" in out and "shells" in out and "envelope" in out


def test_missing_subcommand_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, [])
    assert code == 2


def test_k_out_of_range_names_the_interval(capsys):
    code, _, err = run_cli(capsys, ["sum", "--K", "1.5", "--limit", "100"])
    assert code == 2
    assert "(0, 1)" in err


@pytest.mark.parametrize("flags", [
    ["--y", "0"],
    ["--y", "-3"],
    ["--alpha", "6.3"],
    ["--alpha", "-0.5"],
    ["--limit", "1"],
    ["--segment-size", "1"],
    ["--threads", "0"],
    ["--tolerance", "0"],
    ["--tolerance", "4.0"],
    ["--gamma", "-1"],
])
def test_invalid_flags_exit_two(capsys, flags):
    code, _, err = run_cli(capsys, ["sum", "--limit", "100"] + flags)
    assert code == 2
    assert err != ""


def test_unknown_format_is_usage_error(capsys):
    assert run_cli(capsys, ["sum", "--format", "yaml"])[0] == 2


def test_sum_small_run_json(capsys):
    code, out, _ = run_cli(capsys, [
        "sum", "--y", "1", "--alpha", "0", "--K", "0.5", "--limit", "70",
        "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert doc["version"] == __version__
    assert doc["sums"]["plus"] == 0.5  # exactly 1/2, from p=2 alone
    b0 = next(r for r in doc["shells"] if r["kind"] == "B" and r["n"] == 0)
    assert b0["count"] == 14
    assert b0["recip_sum"] == pytest.approx(0.5376665605189457, rel=1e-15)


def test_sum_table_output(capsys):
    code, out, _ = run_cli(capsys, [
        "sum", "--y", "1", "--limit", "70"])
    assert code == 0
    assert "sum_plus" in out and "sum_minus" in out and "sum_all" in out


def test_shells_csv_header_exact(capsys):
    code, out, _ = run_cli(capsys, [
        "shells", "--limit", "10000", "--format", "csv"])
    assert code == 0
    header = out.splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    assert header == ("kind,n,lo,hi,complete,above_M,count,count_bound,"
                      "recip_sum,recip_bound,count_ok,recip_ok")


def test_shells_csv_verdict_vocabulary(capsys):
    _, out, _ = run_cli(capsys, [
        "shells", "--y", "1", "--limit", "1000000", "--format", "csv"])
    rows = [line.split(",") for line in out.splitlines()[1:]]
    verdicts = {r[-1] for r in rows} | {r[-2] for r in rows}
    assert verdicts <= {"holds", "violated", "not_applicable"}
    assert "violated" not in verdicts
    booleans = {r[4] for r in rows} | {r[5] for r in rows}
    assert booleans <= {"true", "false"}


def test_report_round_trips_losslessly(capsys):
    code, out, _ = run_cli(capsys, ["report", "--limit", "100000"])
    assert code == 0
    report = RunReport.from_json(out)
    assert report.to_json() + "\n" == out
    assert report.lemma_findings is None


def test_report_includes_lemma_when_asked(capsys):
    code, out, _ = run_cli(capsys, [
        "report", "--y", "1", "--limit", "10000", "--tolerance", "0.01"])
    assert code == 0
    doc = json.loads(out)
    findings = doc["lemma_findings"]
    assert findings is not None
    assert findings["hit_count"] == len(findings["hits"])
    for p, n, dist in findings["hits"]:
        assert dist <= 0.01
    cert = findings["closest_triple"]
    if cert is not None:
        assert cert["exact_inequality_holds"] is True


def test_identical_flags_identical_output(capsys):
    argv = ["sum", "--limit", "100000", "--format", "json"]
    _, out1, _ = run_cli(capsys, argv)
    _, out2, _ = run_cli(capsys, argv)
    doc1, doc2 = json.loads(out1), json.loads(out2)
    doc1.pop("timings")
    doc2.pop("timings")
    assert doc1 == doc2


def test_worker_count_does_not_change_csv(capsys):
    base = ["shells", "--limit", "300000", "--format", "csv"]
    _, out1, _ = run_cli(capsys, base + ["--threads", "1"])
    _, out4, _ = run_cli(capsys, base + ["--threads", "4"])
    assert out1 == out4


def test_envelope_command(capsys):
    code, out, _ = run_cli(capsys, [
        "envelope", "--y", "1", "--limit", "1000", "--format", "json"])
    assert code == 0
    env = json.loads(out)["envelope"]
    assert env["reached"] is True
    assert env["m_found"] == 3.0


def test_lemma_command_csv(capsys):
    code, out, _ = run_cli(capsys, [
        "lemma", "--y", "1", "--tolerance", "0.01", "--limit", "100000",
        "--format", "csv"])
    assert code == 0
    assert out.splitlines()[0] == "p,n,distance"


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"y": 1.0, "limit": 70}))
    code, out, _ = run_cli(capsys, [
        "sum", "--config", str(cfg), "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["y"] == 1.0
    assert doc["config"]["limit"] == 70

    code, out, _ = run_cli(capsys, [
        "sum", "--config", str(cfg), "--y", "2", "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["y"] == 2.0  # explicit flag beats the file
    assert doc["config"]["limit"] == 70


def test_config_file_rejections(tmp_path, capsys):
    unknown = tmp_path / "bad.json"
    unknown.write_text(json.dumps({"zz": 1}))
    code, _, err = run_cli(capsys, ["sum", "--config", str(unknown)])
    assert code == 2 and "zz" in err

    invalid = tmp_path / "invalid.json"
    invalid.write_text("{not json")
    assert run_cli(capsys, ["sum", "--config", str(invalid)])[0] == 2

    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    assert run_cli(capsys, ["sum", "--config", str(listy)])[0] == 2

    assert run_cli(capsys, ["sum", "--config", str(tmp_path / "absent.json")])[0] == 2


def test_env_var_thread_fallback(capsys, monkeypatch):
    monkeypatch.setenv("SECTOR_PRIMES_THREADS", "3")
    code, out, _ = run_cli(capsys, ["sum", "--limit", "1000", "--format", "json"])
    assert code == 0
    assert json.loads(out)["config"]["worker_count"] == 3

    code, out, _ = run_cli(capsys, [
        "sum", "--limit", "1000", "--threads", "2", "--format", "json"])
    assert code == 0
    assert json.loads(out)["config"]["worker_count"] == 2  # flag wins

    monkeypatch.setenv("SECTOR_PRIMES_THREADS", "abc")
    assert run_cli(capsys, ["sum", "--limit", "1000"])[0] == 2


def test_out_writes_file(tmp_path, capsys):
    path = tmp_path / "run.json"
    code, out, _ = run_cli(capsys, [
        "sum", "--limit", "1000", "--format", "json", "--out", str(path)])
    assert code == 0
    assert out == ""
    assert json.loads(path.read_text())["schema_version"] == 1


def test_unwritable_out_is_io_error(capsys):
    code, _, err = run_cli(capsys, [
        "sum", "--limit", "1000", "--out", "/nonexistent-dir/x.json"])
    assert code == 3
    assert "i/o" in err.lower()


def test_checkpoint_flow(tmp_path, capsys):
    token_path = tmp_path / "resume.tok"
    argv = ["sum", "--limit", "2000000", "--checkpoint", str(token_path),
            "--format", "json"]
    code, out1, _ = run_cli(capsys, argv)
    assert code == 0
    assert token_path.exists() and token_path.stat().st_size > 0

    code, out2, _ = run_cli(capsys, argv)  # resumes from the final boundary
    assert code == 0
    doc1, doc2 = json.loads(out1), json.loads(out2)
    doc1.pop("timings")
    doc2.pop("timings")
    assert doc1 == doc2

    code, _, err = run_cli(capsys, [
        "sum", "--limit", "1000000", "--checkpoint", str(token_path)])
    assert code == 2 and "limit" in err

    code, _, err = run_cli(capsys, [
        "sum", "--limit", "2000000", "--y", "2", "--checkpoint", str(token_path)])
    assert code == 2 and "parameters" in err

    code, _, err = run_cli(capsys, [
        "sum", "--limit", "2000000", "--segment-size", "8192",
        "--checkpoint", str(token_path)])
    assert code == 2 and "segment" in err

    data = bytearray(token_path.read_bytes())
    data[45] ^= 0xFF
    token_path.write_bytes(bytes(data))
    code, _, _ = run_cli(capsys, argv)
    assert code == 2


def test_checkpoint_mid_run_resume_matches_direct(tmp_path, capsys):
    # build a token stopped partway by running a smaller limit on the same grid
    token_path = tmp_path / "resume.tok"
    _, partial, _ = run_cli(capsys, [
        "sum", "--limit", "1000000", "--checkpoint", str(token_path),
        "--format", "json"])
    code, resumed, _ = run_cli(capsys, [
        "sum", "--limit", "2000000", "--checkpoint", str(token_path),
        "--format", "json"])
    assert code == 0
    _, direct, _ = run_cli(capsys, ["sum", "--limit", "2000000", "--format", "json"])
    a, b = json.loads(resumed), json.loads(direct)
    a.pop("timings")
    b.pop("timings")
    assert a == b
