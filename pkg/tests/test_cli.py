import csv
import json
import os

import pytest
from typer.testing import CliRunner

from app import app
from almost_prime_lab.models import ReportConfig, SearchConfig, TraceConfig
from almost_prime_lab.storage import load_jsonl

runner = CliRunner()


def _json_block(output: str):
    return json.loads(output[output.index("{"): output.rindex("}") + 1])


def _csv(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        rows = list(csv.reader(f))
    assert header.startswith("# ")
    return json.loads(header[2:]), rows


def test_params_command():
    result = runner.invoke(app, ["params", "--c", "1.005", "--s", "2.95"])
    assert result.exit_code == 0, result.output
    report = _json_block(result.output)
    assert report["h"] == 32
    assert report["beta"] == pytest.approx(0.030477, abs=1e-5)
    assert report["range_class"] == "inside-main-range"
    assert report["regime"] == "asymptotic"


def test_params_outside_range_exits_2():
    result = runner.invoke(app, ["params", "--c", "1.0"])
    assert result.exit_code == 2


def test_params_writes_scan_csv(tmp_path):
    out = tmp_path / "scan.csv"
    result = runner.invoke(app, ["params", "--scan", "--coef", "0.75", "--out", str(out)])
    assert result.exit_code == 0, result.output
    header, rows = _csv(out)
    assert header["config"]["coefficient"] == 0.75
    assert rows[0] == ["s", "objective"]
    assert len(rows) == 102
    assert all(float(r[1]) < 0 for r in rows[1:])


def test_weights_command(tmp_path):
    out = tmp_path / "weights.csv"
    result = runner.invoke(app, ["weights", "--D", "100", "--z", "10", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "G- = " in result.output
    header, rows = _csv(out)
    assert header["tool"] == "almost-prime-lab"
    assert header["config"] == {"D": 100.0, "z": 10.0, "out": str(out)}
    assert rows[0] == ["d", "factorization", "lambda_plus", "lambda_minus"]
    by_d = {r[0]: r for r in rows[1:]}
    assert by_d["3"] == ["3", "3", "-1", "-1"]
    assert by_d["7"] == ["7", "7", "0", "-1"]


def test_weights_default_path(data_dir):
    result = runner.invoke(app, ["weights"])
    assert result.exit_code == 0, result.output
    assert (data_dir / "weights.csv").exists()


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"D": 50, "z": 5}), encoding="utf-8")
    out = tmp_path / "w.csv"
    result = runner.invoke(app, ["weights", "--config", str(cfg), "--D", "100", "--out", str(out)])
    assert result.exit_code == 0, result.output
    header, _ = _csv(out)
    assert header["config"]["D"] == 100.0
    assert header["config"]["z"] == 5.0


def test_artifact_config_reruns(tmp_path):
    first = tmp_path / "first.json"
    result = runner.invoke(app, ["report", "--X", "100", "--vartheta", "0.5", "--z", "5", "--D", "50",
                                 "--witness-limit", "3", "--out", str(first)])
    assert result.exit_code == 0, result.output
    second = tmp_path / "second.json"
    result = runner.invoke(app, ["report", "--config", str(first), "--out", str(second)])
    assert result.exit_code == 0, result.output
    a = json.loads(first.read_text(encoding="utf-8"))
    b = json.loads(second.read_text(encoding="utf-8"))
    assert a["result"] == b["result"]
    assert a["result"]["B"] > 0
    assert len(a["result"]["witnesses"]) <= 3


@pytest.mark.parametrize("content", ["not json", json.dumps({"z": "abc"})])
def test_invalid_config_exits_2(tmp_path, content):
    cfg = tmp_path / "bad.json"
    cfg.write_text(content, encoding="utf-8")
    result = runner.invoke(app, ["weights", "--config", str(cfg), "--out", str(tmp_path / "w.csv")])
    assert result.exit_code == 2


def test_missing_config_file_exits_2(tmp_path):
    result = runner.invoke(app, ["kernel-table", "--config", str(tmp_path / "nope.json")])
    assert result.exit_code == 2


def test_verify_params_suite(tmp_path):
    out = tmp_path / "verify.json"
    result = runner.invoke(app, ["verify", "--suite", "params", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "[PASS] params.h_is_32" in result.output
    assert "[FAIL]" not in result.output
    assert "all checks passed" in result.output
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["result"][0]["suite"] == "params"


def test_verify_unknown_suite_exits_2():
    result = runner.invoke(app, ["verify", "--suite", "nonsense"])
    assert result.exit_code == 2


def test_search_command(tmp_path):
    out = tmp_path / "w.jsonl"
    args = ["search", "--c", "1.1", "--X", "100", "--vartheta", "0.5", "--z", "5", "--D", "50",
            "--radius", "50", "--limit", "4", "--out", str(out)]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    summary = _json_block(result.output)
    assert summary["admissible_primes"] == 3
    assert 1 <= summary["witnesses"] <= 4
    rows = load_jsonl(out)
    assert len(rows) == summary["witnesses"]
    assert all(abs(r["distance"]) < 50 for r in rows)
    first = out.read_bytes()
    assert runner.invoke(app, args).exit_code == 0
    assert out.read_bytes() == first


def test_search_larger_z_sifts_more(tmp_path):
    found = {}
    for z in ("5", "3"):
        out = tmp_path / f"w{z}.jsonl"
        result = runner.invoke(app, ["search", "--c", "1.005", "--X", "2000", "--vartheta", "0.05", "--z", z,
                                     "--require-rough", "--limit", "1000", "--out", str(out)])
        assert result.exit_code == 0, result.output
        found[z] = (_json_block(result.output), load_jsonl(out))
    (s5, rows5), (s3, rows3) = found["5"], found["3"]
    assert (s5["admissible_primes"], s3["admissible_primes"]) == (50, 67)
    assert (len(rows5), len(rows3)) == (160, 467)
    assert (s5["matches"], s3["matches"]) == (3696, 10770)
    quads3 = {(r["p1"], r["p2"], r["p3"], r["p4"]) for r in rows3}
    assert all((r["p1"], r["p2"], r["p3"], r["p4"]) in quads3 for r in rows5)


def test_search_default_path(data_dir):
    result = runner.invoke(app, ["search", "--c", "1.1", "--X", "100", "--vartheta", "0.5", "--z", "5",
                                 "--D", "50", "--radius", "50"])
    assert result.exit_code == 0, result.output
    assert (data_dir / "witnesses.jsonl").exists()


def test_trace_minsum(tmp_path):
    out = tmp_path / "minsum.csv"
    result = runner.invoke(app, ["trace", "minsum", "--c", "1.5", "--scale", "8", "--scale", "16", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "Saved 2 rows" in result.output
    header, rows = _csv(out)
    assert header["config"]["scales"] == [8.0, 16.0]
    assert rows[0][:3] == ["X", "lower", "upper"]
    for r in rows[1:]:
        assert float(r[1]) <= float(r[2])


def test_trace_L_and_primes(tmp_path):
    out = tmp_path / "L.csv"
    result = runner.invoke(app, ["trace", "L", "--c", "1.1", "--X", "100", "--points", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    _, rows = _csv(out)
    assert len(rows) == 6
    out = tmp_path / "p.csv"
    result = runner.invoke(app, ["trace", "primes", "--X", "2000", "--segment-size", "128", "--out", str(out)])
    assert result.exit_code == 0, result.output
    _, rows = _csv(out)
    assert sum(int(r[2]) for r in rows[1:]) == 135


def test_trace_unknown_quantity_exits_2(tmp_path):
    result = runner.invoke(app, ["trace", "zeta", "--out", str(tmp_path / "z.csv")])
    assert result.exit_code == 2


def test_kernel_table_command(tmp_path):
    out = tmp_path / "k.csv"
    result = runner.invoke(app, ["kernel-table", "--vartheta", "0.5", "--k", "8", "--points", "11", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "Saved 11 rows" in result.output
    _, rows = _csv(out)
    assert float(rows[1][1]) == pytest.approx(7.0 * 0.5 / 4.0)


def test_threads_default_to_available_cpus(tmp_path):
    expected = os.cpu_count() or 1
    for model in (SearchConfig, TraceConfig, ReportConfig):
        assert model().threads == expected
        assert "threads" not in model(threads=2).model_dump()
    out = tmp_path / "w.jsonl"
    result = runner.invoke(app, ["search", "--c", "1.1", "--X", "100", "--vartheta", "0.5", "--z", "5", "--D", "50",
                                 "--radius", "50", "--threads", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "threads" not in json.loads(out.read_text(encoding="utf-8").splitlines()[0])["config"]
    assert runner.invoke(app, ["search", "--threads", "0", "--out", str(out)]).exit_code == 2
