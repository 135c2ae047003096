import json
import math

import numpy as np

from potts_lab.cli import run_command


def run_to_file(tmp_path, name, argv):
    path = tmp_path / name
    rc = run_command(argv + ["--out" if not name.endswith(".csv") else "--csv", str(path)])
    return rc, path


def test_thresholds_json(tmp_path, capsys):
    rc = run_command(["thresholds", "--q", "3", "--delta", "3", "--json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["Bu"] - (1 + 2 * math.sqrt(2))) < 1e-9
    assert abs(payload["Bo"] - 1 / (2 ** (1 / 3) - 1)) < 1e-12
    assert payload["Brc"] == 4.0
    assert payload["config"] == {"q": 3, "delta": 3}


def test_fixpoints_json(capsys):
    rc = run_command(["fixpoints", "--q", "3", "--delta", "3", "--B", "3.9", "--json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    stabilities = sorted(fp["stability"] for fp in payload["fixpoints"])
    assert stabilities == ["attractive", "attractive", "unstable"]


def test_phase_diagram_regimes(capsys):
    rc = run_command(["phase-diagram", "--q", "3", "--delta", "3", "--B", "3.9"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["regime"] == "ordered-dominant"
    assert payload["dif"] > 0
    assert len(payload["dominant"]) == 3


def test_moments_csv_row(capsys):
    rc = run_command(
        [
            "moments", "--model", "potts", "--q", "3", "--B", "2", "--delta", "3",
            "--alpha", "0.3333333333333333,0.3333333333333333,0.3333333333333334",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    row = lines[1].split(",")
    psi1 = float(row[header.index("psi1")])
    assert abs(psi1 - (1.5 * math.log(12) - 2 * math.log(3))) < 1e-9
    assert row[header.index("dominant")] == "1"


def test_moments_exact_n_column(capsys):
    rc = run_command(
        [
            "moments", "--model", "potts", "--q", "2", "--B", "2", "--delta", "3",
            "--alpha", "0.5,0.5", "--exact-n", "2",
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    row = lines[1].split(",")
    got = float(row[header.index("exact_log_mean_n2")])
    assert abs(got - math.log(5.6) / 2) < 1e-12


def test_norm_command(capsys):
    rc = run_command(["norm", "--model", "potts", "--q", "3", "--B", "2", "--delta", "3"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert abs(payload["delta_ln_norm"] - (1.5 * math.log(12) - 2 * math.log(3))) < 1e-8


def test_graph_sample_reproducible(tmp_path):
    a = tmp_path / "a.graph"
    b = tmp_path / "b.graph"
    assert run_command(["graph", "sample", "--n", "8", "--delta", "3", "--seed", "5", "--out", str(a)]) == 0
    assert run_command(["graph", "sample", "--n", "8", "--delta", "3", "--seed", "5", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert "# config" in a.read_text()


def test_sw_run_reproducible(tmp_path):
    g = tmp_path / "g.graph"
    run_command(["graph", "sample", "--n", "8", "--delta", "3", "--seed", "5", "--out", str(g)])
    t1 = tmp_path / "t1.csv"
    t2 = tmp_path / "t2.csv"
    base = ["sw", "run", "--graph", str(g), "--q", "3", "--B", "2", "--steps", "10", "--seed", "4"]
    assert run_command(base + ["--csv", str(t1)]) == 0
    assert run_command(base + ["--csv", str(t2)]) == 0
    assert t1.read_text() == t2.read_text()
    header_line = [l for l in t1.read_text().splitlines() if l.startswith("t,")][0]
    assert header_line == "t,phase,c_0,c_1,c_2,mono_density"


def test_sw_exact_command(tmp_path, capsys):
    g = tmp_path / "tri.graph"
    g.write_text("3 2\n0 1\n1 2\n0 2\n")
    rc = run_command(["sw", "exact", "--graph", str(g), "--q", "2", "--B", "2", "--cut", "phase:0"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["row_sum_error"] < 1e-12
    assert payload["detailed_balance_error"] < 1e-10
    assert payload["stationarity_error"] < 1e-10
    assert abs(payload["conductance"] - 1.0) < 1e-12


def test_gadget_and_reduce_cli(tmp_path):
    gad = tmp_path / "gadget.graph"
    rc = run_command(
        ["gadget", "--delta", "3", "--trees", "2", "--depth", "2", "--ncore", "16",
         "--seed", "3", "--out", str(gad)]
    )
    assert rc == 0
    h = tmp_path / "h.graph"
    h.write_text("3 2\n0 1\n1 2\n0 2\n")
    red = tmp_path / "hg.graph"
    rc = run_command(
        ["reduce", "--h", str(h), "--delta", "3", "--trees", "2", "--depth", "1",
         "--ncore", "4", "--seed", "3", "--out", str(red)]
    )
    assert rc == 0
    from potts_lab.graphs import read_graph

    hg = read_graph(red)
    assert int(np.max(hg.degrees())) == 3


def test_sweep_dif_crosses_zero_at_bo(tmp_path):
    out = tmp_path / "dif.csv"
    rc = run_command(
        ["sweep", "dif", "--q", "3", "--delta", "3", "--points", "20", "--threads", "1",
         "--csv", str(out)]
    )
    assert rc == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if l and not l.startswith("#")]
    header, data = rows[0], rows[1:]
    bs = [float(r[header.index("B")]) for r in data]
    difs = [float(r[header.index("dif")]) for r in data]
    assert all(b > a for a, b in zip(difs, difs[1:]))
    bo = 1 / (2 ** (1 / 3) - 1)
    crossings = [
        (bs[i], bs[i + 1]) for i in range(len(difs) - 1) if difs[i] < 0 <= difs[i + 1]
    ]
    assert len(crossings) == 1
    lo, hi = crossings[0]
    assert lo < bo <= hi


def test_sweep_records_partial_failures(tmp_path, monkeypatch):
    from potts_lab import moments as mm

    original = mm.potts_phase_diagram
    calls = {"n": 0}

    def flaky(q, delta, B):
        calls["n"] += 1
        if calls["n"] == 2:
            raise ValueError("synthetic failure")
        return original(q, delta, B)

    monkeypatch.setattr("potts_lab.cli.moments.potts_phase_diagram", flaky)
    out = tmp_path / "dif.csv"
    rc = run_command(
        ["sweep", "dif", "--q", "3", "--delta", "3", "--points", "4", "--threads", "1",
         "--csv", str(out)]
    )
    assert rc == 1
    rows = [l.split(",") for l in out.read_text().splitlines() if l and not l.startswith("#")]
    header, data = rows[0], rows[1:]
    errors = [r[header.index("error")] for r in data]
    assert sum(1 for e in errors if e) == 1
    assert len(data) == 4  # failed row still present, in grid order


def test_sweep_dif_empty_grid(tmp_path):
    out = tmp_path / "empty.csv"
    rc = run_command(
        ["sweep", "dif", "--q", "3", "--delta", "3", "--points", "0", "--threads", "1",
         "--csv", str(out)]
    )
    assert rc == 0
    rows = [l for l in out.read_text().splitlines() if l and not l.startswith("#")]
    assert rows == ["B,dif,regime,error"]


def test_sweep_thresholds_table(tmp_path):
    out = tmp_path / "th.csv"
    rc = run_command(["sweep", "thresholds", "--csv", str(out)])
    assert rc == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if l and not l.startswith("#")]
    header, data = rows[0], rows[1:]
    assert len(data) == 36  # q, delta in 3..8
    assert all(r[header.index("ordering")] == "ok" for r in data)


def test_exit_codes(tmp_path, capsys):
    assert run_command(["thresholds", "--q", "3", "--delta", "3", "--nope"]) == 1
    assert run_command(["graph", "enumerate", "--n", "10", "--delta", "3", "--count-only"]) == 2
    assert run_command(["thresholds", "--q", "2", "--delta", "3"]) == 1
    capsys.readouterr()


def test_config_file_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"q": 4}))
    rc = run_command(["--config", str(cfg), "thresholds", "--q", "3", "--delta", "3"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["q"] == 4
    assert abs(payload["Brc"] - 5.0) < 1e-12


def test_env_seed_default(tmp_path, monkeypatch):
    monkeypatch.setenv("POTTSLAB_SEED", "77")
    a = tmp_path / "a.graph"
    assert run_command(["graph", "sample", "--n", "8", "--delta", "3", "--out", str(a)]) == 0
    b = tmp_path / "b.graph"
    assert run_command(["graph", "sample", "--n", "8", "--delta", "3", "--seed", "77", "--out", str(b)]) == 0
    assert a.read_text().splitlines()[1:] == b.read_text().splitlines()[1:]


def test_verify_only_fast_criteria(capsys):
    rc = run_command(["verify", "--suite", "primary", "--only", "1,9"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS criterion 1" in out
    assert "PASS criterion 9" in out
