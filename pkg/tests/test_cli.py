import csv
import json
import socket
import subprocess
import sys
import time

import pytest

from hisam import dtr_mac
from hisam.cli import main


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_negotiate_csv(tmp_path):
    out = tmp_path / "conv.csv"
    assert main(["negotiate", "--seeds", "0", "--out", str(out)]) == 0
    table = rows(out)
    assert table[0] == ["round", "error", "X"]
    errors = [float(r[1]) for r in table[1:]]
    assert [int(r[0]) for r in table[1:]] == list(range(1, len(errors) + 1))
    assert errors[-1] < 1e-10
    assert all(b < a for a, b in zip(errors[1:], errors[2:]))


def test_negotiate_failure_exit_code(tmp_path, monkeypatch, capsys):
    import hisam.cli as cli
    from hisam.params import SystemParams

    monkeypatch.setattr(cli, "_params", lambda cfg: SystemParams(cfg["n"], max_rounds=3))
    out = tmp_path / "o.csv"
    assert main(["negotiate", "--out", str(out)]) == 3
    assert len(rows(out)) == 4
    assert "did not converge" in capsys.readouterr().err


def test_grid_size_rows_and_companion(tmp_path):
    out = tmp_path / "grid.csv"
    assert main(["grid", "--sweep", "size", "--out", str(out)]) == 0
    table = rows(out)
    assert table[0] == ["sweep_name", "sweep_value", "policy", "seed", "loss",
                        "detection_time", "workload"]
    assert len(table) - 1 == 5 * 4 * 10
    means = rows(tmp_path / "grid_mean.csv")
    assert len(means) - 1 == 5 * 4
    meta = json.loads((tmp_path / "grid.meta.json").read_text())
    assert meta["r_max_mode"] == "realized"
    assert meta["demand_stddev"] == pytest.approx(3 ** 0.5)


def test_byte_stable(tmp_path):
    args = ["simulate", "--n", "20", "--seeds", "0,1", "--policy", "hisam,demand_driven"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    for line in a.read_text().splitlines()[1:]:
        for field in line.split(",")[4:]:
            if field not in ("inf", "nan"):
                mantissa = field.split("e")[0].replace("-", "").replace(".", "").lstrip("0")
                assert len(mantissa) <= 12


def test_config_diagnostics(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 100\n# comment\nthis line is wrong\n")
    assert main(["negotiate", "--config", str(cfg)]) == 2
    assert "bad.cfg:3" in capsys.readouterr().err

    cfg.write_text("colour = blue\n")
    assert main(["negotiate", "--config", str(cfg)]) == 2
    assert "colour" in capsys.readouterr().err

    cfg.write_text("mean = ten\n")
    assert main(["negotiate", "--config", str(cfg)]) == 2
    assert "'mean'" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 100\nseeds = 0\n")
    out = tmp_path / "o.csv"
    assert main(["negotiate", "--config", str(cfg), "--n", "10", "--out", str(out)]) == 0
    x = float(rows(out)[-1][2])
    assert x < 10 * 20  # ten devices cannot exceed N * F_m


@pytest.mark.parametrize("argv", [
    ["grid", "--seeds", ""],
    ["grid", "--seeds", " , "],
    ["simulate", "--variance", "0"],
    ["simulate", "--policy", "greedy"],
    ["negotiate", "--n", "1"],
    ["grid", "--sweep", "colour"],
    ["frobnicate"],
])
def test_config_errors_exit_2(argv):
    assert main(argv) == 2


def test_gen_vectors(tmp_path):
    out = tmp_path / "v.txt"
    assert main(["gen-vectors", "--steps", "8", "--seeds", "4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    header = dict(l[2:].split("=", 1) for l in lines if l.startswith("# ") and "=" in l)
    records = [l.split(", ") for l in lines if not l.startswith("#")]
    assert len(records) == 8
    key = bytes.fromhex(header["key"])
    m_ue, m_ap = int(header["m0_ue"], 16), int(header["m0_ap"], 16)
    for step, shift, ue_hex, ap_hex, t1, t2, t3 in records:
        m_ue, m_ap = (dtr_mac.circular_shift(m_ue, int(shift)) ^ m_ap,
                      dtr_mac.circular_shift(m_ap, int(shift)) ^ m_ue)
        assert dtr_mac.word_bytes(m_ue).hex() == ue_hex
        assert dtr_mac.compute_tag(dtr_mac.word_bytes(m_ap), key).hex() == t3
    again = tmp_path / "w.txt"
    main(["gen-vectors", "--steps", "8", "--seeds", "4", "--out", str(again)])
    assert again.read_bytes() == out.read_bytes()


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_ap_and_run_ue_processes():
    port = free_port()
    endpoint = f"127.0.0.1:{port}"
    cli = [sys.executable, "-m", "hisam"]
    ap = subprocess.Popen(cli + ["serve-ap", "--n", "2", "--listen", endpoint],
                          stderr=subprocess.PIPE, text=True)
    try:
        deadline = time.time() + 10
        while time.time() < deadline:
            try:
                socket.create_connection(("127.0.0.1", port), timeout=0.2).close()
                break
            except OSError:
                time.sleep(0.05)
        # the probe connection above closed before registering; the AP ignores it
        ues = [subprocess.Popen(cli + ["run-ue", "--n", "2", "--connect", endpoint,
                                       "--device-id", str(i), "--demand", str(5.0 + 5 * i),
                                       "--auths", "3", "--interval", "0.05"],
                                stdout=subprocess.PIPE, text=True) for i in range(2)]
        results = [json.loads(p.communicate(timeout=30)[0]) for p in ues]
        assert [p.returncode for p in ues] == [0, 0]
        for r in results:
            assert r["status"] == "ok" and r["accepted"] == 3 and r["alpha"] > 0
    finally:
        ap.terminate()
        ap.wait(timeout=10)
