import csv
import json

import numpy as np
import pytest

from aspkit.cli import build_parser, main
from aspkit.integrals_io import builtin_spatial, write_fcidump


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    return main(args + ["--out", str(out)]), out


def test_spectrum_builtin(tmp_path, capsys):
    rc, out = run(["spectrum", "--dataset", "ch2_cas22"], tmp_path)
    assert rc == 0
    rows = read_csv(out / "spectrum.csv")
    assert len(rows) == 4
    levels = [float(r["energy"]) for r in rows]
    assert np.allclose(levels, [-1.245981, -1.1992179, -1.180313, -1.1297221], atol=1e-12)
    assert "E0=-1.2459810000" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "spectrum" and manifest["config"]["dataset"] == "ch2_cas22"


def test_spectrum_from_fcidump(tmp_path):
    path = tmp_path / "h2.fcidump"
    path.write_text(write_fcidump(builtin_spatial("h2_minimal")))
    rc, out = run(["spectrum", "--fcidump", str(path)], tmp_path)
    assert rc == 0
    assert float(read_csv(out / "spectrum.csv")[0]["energy"]) == pytest.approx(-1.85104568, abs=1e-8)


def test_missing_file_exit_code(tmp_path, capsys):
    rc, _ = run(["spectrum", "--fcidump", str(tmp_path / "nope")], tmp_path)
    assert rc == 2
    assert "file not found" in capsys.readouterr().err


def test_infeasible_sector_exit_code(tmp_path, capsys):
    rc, _ = run(["spectrum", "--sector", "3,0"], tmp_path)
    assert rc == 3
    assert "infeasible sector" in capsys.readouterr().err


def test_bad_option_value_is_failure(tmp_path):
    rc, _ = run(["evolve", "--time", "5", "--schedule", "cosine"], tmp_path)
    assert rc == 1
    rc, _ = run(["evolve"], tmp_path)
    assert rc == 1


def test_evolve_mp(tmp_path, capsys):
    rc, out = run(["evolve", "--init", "mp", "--time", "1000"], tmp_path)
    assert rc == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("final_overlap=")
    assert 0.0 <= float(line.split("=")[1]) <= 1.0
    trace = read_csv(out / "trace.csv")
    assert list(trace[0]) == ["t", "s", "norm", "energy", "ov_instant", "ov_final"]
    assert float(trace[-1]["t"]) == 1000.0


def test_power_schedule_recorded(tmp_path):
    rc, out = run(["evolve", "--init", "ag", "--time", "50", "--schedule", "power:0.02"], tmp_path)
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["schedule"] == "power:0.02"


def test_manifest_replay_is_bit_identical(tmp_path):
    rc, first = run(["evolve", "--init", "ag", "--time", "120", "--stride", "7"], tmp_path, "a")
    assert rc == 0
    rc, second = run(["evolve", "--config", str(first / "manifest.json")], tmp_path, "b")
    assert rc == 0
    assert (first / "trace.csv").read_bytes() == (second / "trace.csv").read_bytes()
    a = json.loads((first / "manifest.json").read_text())
    b = json.loads((second / "manifest.json").read_text())
    assert a == b


def test_gap_profile_command(tmp_path, capsys):
    rc, out = run(["gap-profile", "--init", "ag", "--points", "101"], tmp_path)
    assert rc == 0
    rows = read_csv(out / "gap.csv")
    assert len(rows) == 101 and list(rows[0]) == ["s", "E0", "E1", "gap", "m"]
    assert "s_min=1.0000" in capsys.readouterr().out


def test_gap_profile_localx(tmp_path, capsys):
    rc, out = run(["gap-profile", "--init", "localx", "--dataset", "h2_minimal"], tmp_path)
    assert rc == 0
    s_min = json.loads((out / "manifest.json").read_text())["results"]["s_min"]
    assert 0 < s_min < 1


def test_min_time_cas_terminates_immediately(tmp_path, capsys):
    rc, out = run(["min-time", "--init", "cas:1,2"], tmp_path)
    assert rc == 0
    assert "T_star=1" in capsys.readouterr().out
    assert len(read_csv(out / "min_time.csv")) == 1


def test_gadgetize(tmp_path, capsys):
    rc, out = run(["gadgetize", "--lambda", "0.01", "--restrict-c9"], tmp_path)
    assert rc == 0
    text = capsys.readouterr().out
    assert "n_qubits=12" in text and "k_s=-1.5e+08" in text
    sidecar = json.loads((out / "gadget.json").read_text())
    assert sidecar["n_qubits"] == 12
    lines = (out / "gadget_hamiltonian.txt").read_text().splitlines()
    assert all(len(line.split()[1]) == 12 for line in lines)
    eps = json.loads((out / "manifest.json").read_text())["results"]["spectral_error"]
    assert eps < 1.6e-3


def test_gadgetize_full_and_rejected(tmp_path, capsys):
    rc, out = run(["gadgetize", "--lambda", "0.01"], tmp_path)
    assert rc == 0 and "n_qubits=20" in capsys.readouterr().out
    rc, _ = run(["gadgetize", "--lambda", "0.05"], tmp_path, "bad")
    assert rc == 1
    assert "0.046875" in capsys.readouterr().err


def test_sweep_t_ladder(tmp_path):
    rc, out = run(["sweep", "--axis", "T-ladder", "--values", "125,250,500,1000"], tmp_path)
    assert rc == 0
    rows = read_csv(out / "sweep.csv")
    assert [float(r["T"]) for r in rows] == [125, 250, 500, 1000]
    ov = [float(r["final_overlap"]) for r in rows]
    assert all(b >= a - 0.01 for a, b in zip(ov, ov[1:]))


def test_sweep_lambda_grid(tmp_path):
    rc, out = run(["sweep", "--axis", "lambda-grid", "--restrict-c9", "--values", "0.005,0.01,0.02"], tmp_path)
    assert rc == 0
    eps = [float(r["epsilon"]) for r in read_csv(out / "sweep.csv")]
    assert eps[0] < eps[1] < eps[2]


def test_sweep_records_row_failures(tmp_path):
    rc, out = run(["sweep", "--axis", "lambda-grid", "--restrict-c9", "--values", "0.01,0.2"], tmp_path)
    assert rc == 1
    rows = read_csv(out / "sweep.csv")
    assert rows[0]["error"] == "" and rows[1]["error"]


@pytest.mark.slow
def test_sweep_init_comparison(tmp_path):
    rc, out = run(["sweep", "--axis", "init-comparison", "--values", "ag,mp"], tmp_path)
    assert rc == 0
    rows = {r["init"]: float(r["T_star"]) for r in read_csv(out / "sweep.csv")}
    assert set(rows) == {"ag", "mp"} and rows["mp"] < rows["ag"]


@pytest.mark.slow
def test_evolve_gadget_mode(tmp_path, capsys):
    rc, out = run(["evolve", "--lambda", "0.01", "--restrict-c9", "--time", "500"], tmp_path)
    assert rc == 0
    assert json.loads((out / "gadget.json").read_text())["n_qubits"] == 12
    assert len(read_csv(out / "trace.csv")) > 2
    results = json.loads((out / "manifest.json").read_text())["results"]
    assert results["max_norm_drift"] < 1e-8


def test_parser_lists_subcommands():
    parser = build_parser()
    help_text = parser.format_help()
    for cmd in ("spectrum", "evolve", "gap-profile", "min-time", "gadgetize", "sweep"):
        assert cmd in help_text
