import csv
import json

import numpy as np
import pytest

from mspcr import harness, mdscode
from mspcr.params import validate


def write_cfg(tmp_path, name="p.cfg", **kw):
    path = tmp_path / name
    path.write_text("".join(f"{k} = {v}\n" for k, v in kw.items()))
    return str(path)


A = dict(n=12, u=2, k=5, h=3, hbar=3, delta=2, dbar=3, q=29)
G = dict(n=16, u=2, k=7, h=3, hbar=3, delta=1, dbar=4, q=37, construction="grouped")
B2 = dict(n=14, u=2, k=5, h=6, hbar=3, delta=2, dbar=3)


def run(capsys, *argv):
    code = harness.main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_config_parsing_allows_comments(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# twelve nodes\nn = 12\nu=2\nk = 5 # five\nh=3\nhbar=3\ndelta=2\ndbar=3\n")
    assert harness.load_params(path) == validate(n=12, u=2, k=5, h=3, hbar=3, delta=2, dbar=3)


def test_verify_mds(tmp_path, capsys):
    code, rep, _ = run(capsys, "verify-mds", "--config", write_cfg(tmp_path, **A), "--trials", "20", "--seed", "1")
    assert code == 0
    assert rep["passed"] == 20 and rep["verdict"] == "pass"
    assert rep["rng"] == "numpy.PCG64"


def test_verify_zero_trials(tmp_path, capsys):
    code, rep, _ = run(capsys, "verify-mds", "--config", write_cfg(tmp_path, **A), "--trials", "0")
    assert code == 0 and rep["verdict"] == "no trials"


def test_config_error_exit_code(tmp_path, capsys):
    code, rep, err = run(capsys, "verify-mds", "--config", write_cfg(tmp_path, **{**A, "delta": 3}))
    assert code == 2 and rep is None
    assert "delta" in json.loads(err)["error"]
    code, _, _ = run(capsys, "bound", "--config", str(tmp_path / "missing.cfg"))
    assert code == 2


def test_repair_stacked_optimal(tmp_path, capsys):
    code, rep, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **A), "--trials", "3", "--seed", "4")
    assert code == 0
    assert rep["achieved"] == 768 and rep["bound"]["text"] == "768"
    assert rep["ratio"] == {"numerator": 1, "denominator": 1, "text": "1"}
    assert rep["optimality"] == "optimal"
    assert rep["ledger"]["download"] == 576


def test_repair_grouped_optimal(tmp_path, capsys):
    code, rep, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **G), "--random", "--trials", "2")
    assert code == 0 and rep["achieved"] == 1152 and rep["optimality"] == "optimal"


def test_repair_asymptotic_flagged(tmp_path, capsys):
    code, rep, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **B2))
    assert code == 0
    assert rep["ratio"]["text"] == "9/8"
    assert rep["optimality"] == "asymptotically optimal"


def test_repair_pattern_file_csv_and_trace(tmp_path, capsys):
    pat = tmp_path / "pat.json"
    pat.write_text(json.dumps({"hosts": [0, 2, 4], "failed": [[1], [0], [1]], "helpers": [1, 3, 5]}))
    trace, table = tmp_path / "t.jsonl", tmp_path / "s.csv"
    code, rep, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **A), "--pattern", str(pat),
                       "--trace", str(trace), "--csv", str(table))
    assert code == 0 and rep["trials"] == 1
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert sum(r["symbols"] for r in records) == 768
    rows = list(csv.DictReader(table.open()))
    assert rows[0]["total"] == "768" and rows[0]["exact"] == "True"


def test_repair_bad_pattern(tmp_path, capsys):
    pat = tmp_path / "pat.json"
    pat.write_text(json.dumps({"hosts": [0, 2, 4], "failed": [[1], [0], [1]], "helpers": [0, 3, 5]}))
    code, _, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **A), "--pattern", str(pat))
    assert code == 2
    pat.write_text("[1, 2]")
    code, _, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **A), "--pattern", str(pat))
    assert code == 2


def test_repair_enumerate(tmp_path, capsys):
    code, rep, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **A), "--enumerate")
    assert code == 0
    assert rep["trials"] == 160 and rep["enumeration"] == {"space": 160, "cap": 10000, "truncated": False}
    assert rep["achieved_distinct"] == [768]


def test_enumerate_reports_truncation(monkeypatch, tmp_path, capsys):
    monkeypatch.setattr(harness, "ENUMERATE_CAP", 5)
    code, rep, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **A), "--enumerate")
    assert code == 0 and rep["trials"] == 5
    assert rep["enumeration"]["truncated"] and rep["enumeration"]["space"] == 160


def test_reports_are_deterministic(tmp_path, capsys):
    cfg = write_cfg(tmp_path, **A)
    _, a, _ = run(capsys, "repair", "--config", cfg, "--trials", "2", "--seed", "9", "--csv", str(tmp_path / "a.csv"))
    _, b, _ = run(capsys, "repair", "--config", cfg, "--trials", "2", "--seed", "9", "--csv", str(tmp_path / "b.csv"))
    a.pop("wall_time_s"), b.pop("wall_time_s")
    assert a == b
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_ledger_divergence_fails_run(monkeypatch, tmp_path, capsys):
    from fractions import Fraction

    from mspcr.params import Prediction

    monkeypatch.setattr(harness, "predicted_bandwidth", lambda p: Prediction(Fraction(1), Fraction(1), Fraction(2)))
    code, rep, _ = run(capsys, "repair", "--config", write_cfg(tmp_path, **A))
    assert code == 1 and rep["verdict"] == "fail" and rep["ledger_mismatches"] == 1


def test_bound_reports(tmp_path, capsys):
    code, rep, _ = run(capsys, "bound", "--config", write_cfg(tmp_path, **A))
    assert code == 0 and rep["bound"]["text"] == "768"
    assert "h*(dbar+hbar-delta)*l" in rep["formulas"]["bound"]
    assert "error" in rep["schemes"]["grouped"]
    cfg = write_cfg(tmp_path, "n45.cfg", n=45, u=3, k=19, h=12, hbar=6, delta=4, dbar=7, construction="grouped")
    code, rep, _ = run(capsys, "bound", "--config", cfg)
    assert rep["bound_text"] == "27l" and rep["bound"]["numerator"] == 884736
    g = rep["schemes"]["grouped"]["predicted_over_l"]
    assert (g["download"]["text"], g["cooperative"]["text"], g["total"]["text"]) == ("21", "6", "27")


def test_encode_round_trip(tmp_path, capsys):
    p = validate(**A)
    msg = np.random.default_rng(0).integers(0, 29, p.B).astype("<u1")
    (tmp_path / "m.bin").write_bytes(msg.tobytes())
    code, rep, _ = run(capsys, "encode", "--config", write_cfg(tmp_path, **A),
                       "--in", str(tmp_path / "m.bin"), "--out", str(tmp_path / "c.bin"))
    assert code == 0 and rep["parity_ok"]
    cw = mdscode.from_bytes((tmp_path / "c.bin").read_bytes())
    assert np.array_equal(mdscode.message_of(cw), msg)
    (tmp_path / "short.bin").write_bytes(msg[:-1].tobytes())
    code, _, _ = run(capsys, "encode", "--config", write_cfg(tmp_path, **A),
                     "--in", str(tmp_path / "short.bin"), "--out", str(tmp_path / "x.bin"))
    assert code == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "mspcr", "bound", "--config", write_cfg(tmp_path, **A)],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["bound"]["text"] == "768"


@pytest.mark.parametrize("argv", [[], ["repair"], ["repair", "--config", "x", "--enumerate", "--random"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        harness.main(argv)
    assert exc.value.code == 2


def test_seed_from_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path, **A, seed=7)
    _, a, _ = run(capsys, "repair", "--config", cfg, "--trials", "2", "--csv", str(tmp_path / "a.csv"))
    _, b, _ = run(capsys, "repair", "--config", cfg, "--trials", "2", "--seed", "7", "--csv", str(tmp_path / "b.csv"))
    assert a["seed"] == b["seed"] == 7
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
    code, _, _ = run(capsys, "verify-mds", "--config", write_cfg(tmp_path, "bad.cfg", **A, seed="x"))
    assert code == 2
