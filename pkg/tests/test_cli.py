import csv
import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from dlcsim.cli import load_schema, main
from dlcsim.netlist import parse, to_text
from dlcsim.topologies import generate_topology

import circuits
import oracles


def run(argv, capsys):
    """(exit code, stdout, stderr); argparse errors exit instead of returning."""
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


# -- gen / tran ----------------------------------------------------------------------------

def test_gen_round_trips_through_file(tmp_path, capsys):
    path = tmp_path / "d1.cir"
    code, _, _ = run(["gen", "design1", "--with-testbench", "-o", path], capsys)
    assert code == 0
    assert parse(path.read_text()) == generate_topology("design1", with_testbench=True)


def test_gen_to_stdout_and_sizes(capsys):
    code, out, _ = run(["gen", "msadlc"], capsys)
    assert code == 0 and out == to_text(generate_topology("msadlc"))
    code, out, _ = run(["gen", "design1", "--size", "M5.W=1.44u"], capsys)
    assert code == 0 and parse(out).device("M5").width_m == 1.44e-6


@pytest.mark.parametrize("argv", [["gen", "bogus"], ["gen", "design1", "--size", "M5=1u"],
                                  ["gen", "design1", "--size", "M99.W=1u"], []])
def test_gen_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err


def test_tran_rc_fixture(tmp_path, capsys):
    path = tmp_path / "rc.cir"
    path.write_text(to_text(circuits.rc_netlist(tstop=2e-9)))
    code, out, err = run(["tran", path, "--dt-max", "10p"], capsys)
    assert code == 0 and "steps:" in err
    data = rows(out)
    assert data[0] == ["time_s", "V(in)", "V(out)", "I(V1)"]
    t, v = np.array([[float(r[0]), float(r[2])] for r in data[1:]]).T
    assert np.interp(circuits.RC_TAU, t, v) == pytest.approx(oracles.FROZEN["rc_at_tau"], rel=1e-3)


def test_tran_backward_euler_is_first_order(tmp_path, capsys):
    path = tmp_path / "rc.cir"
    path.write_text(to_text(circuits.rc_netlist(tstop=2e-9)))
    errs = []
    for dt in ("20p", "10p"):
        _, out, _ = run(["tran", path, "--dt-max", dt, "--integration", "be"], capsys)
        t, v = np.array([[float(r[0]), float(r[2])] for r in rows(out)[1:]]).T
        errs.append(abs(np.interp(circuits.RC_TAU, t, v) - oracles.FROZEN["rc_at_tau"]))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.2)


def test_tran_errors(tmp_path, capsys):
    path = tmp_path / "no_tran.cir"
    path.write_text("x\nV1 a 0 DC 1\nR1 a 0 1k\n.end\n")
    code, _, err = run(["tran", path], capsys)
    assert code == 2 and ".tran" in err
    code, out, _ = run(["tran", path, "--tstop", "1n"], capsys)
    assert code == 0 and float(rows(out)[-1][0]) == 1e-9
    code, _, err = run(["tran", tmp_path / "missing.cir"], capsys)
    assert code == 1
    bad = tmp_path / "bad.cir"
    bad.write_text("x\nQ1 a b c\n")
    code, _, err = run(["tran", bad], capsys)
    assert code == 1 and "line 2" in err


# -- analytic ---------------------------------------------------------------------------------

def test_analytic_defaults(capsys):
    code, out, _ = run(["analytic"], capsys)
    assert code == 0 and "t_total  272.3354 ps" in out
    code, out, _ = run(["analytic", "--format", "json"], capsys)
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema("analytic"))
    assert doc["t_total_s"] == pytest.approx(oracles.FROZEN["t_total_worked"], rel=1e-12)


def test_analytic_csv_and_global_flags(capsys):
    # a global flag before the command survives the command parser
    code, out, _ = run(["--format", "csv", "analytic", "--charge", "22.67f"], capsys)
    data = rows(out)
    assert code == 0 and data[0][0] == "t0_s"
    assert float(data[1][data[0].index("p_avg_w")]) == pytest.approx(4.08e-6, abs=0.005e-6)


@pytest.mark.parametrize("argv, flag", [(["--dv-in", "0"], "--dv-in"), (["--c-load", "-1f"], "--c-load"),
                                        (["--overdrive", "-0.1"], "--overdrive")])
def test_analytic_invalid_inputs(argv, flag, capsys):
    code, _, err = run(["analytic", *argv], capsys)
    assert code == 2 and flag in err


def test_help_lists_flags(capsys):
    code, out, _ = run(["analytic", "--help"], capsys)
    assert code == 0
    for flag in ("--c-load", "--v-thp", "--i-tail", "--gm-eff", "--beta", "--dv-in", "--format", "--seed"):
        assert flag in out


def test_console_script():
    done = subprocess.run([sys.executable, "-m", "dlcsim.cli", "--help"], capture_output=True, text=True)
    assert done.returncode == 0
    for command in ("gen", "tran", "measure", "report", "analytic", "mc", "corners", "sweep"):
        assert command in done.stdout


# -- simulation commands ------------------------------------------------------------------------

def test_measure_single_metric(capsys):
    code, out, _ = run(["measure", "design1", "--metric", "avg_delay_s", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["topology"] == "design1"
    assert 10e-12 < doc["avg_delay_s"] < 1e-9


def test_mc_deterministic(tmp_path, capsys):
    argv = ["mc", "design3", "--metric", "avg_delay_s", "--n", "4", "--seed", "7", "--devices", "M1,M2"]
    _, first, _ = run(argv, capsys)
    code, second, _ = run(argv, capsys)
    assert code == 0 and first == second
    assert rows(first)[0] == ["sample_index", "value"] and len(rows(first)) == 5
    summary = tmp_path / "summary.json"
    code, out, _ = run([*argv, "--format", "json", "--bins", "2", "--summary", summary], capsys)
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema("distribution"))
    assert (doc["seed"], doc["n"], doc["topology"]) == (7, 4, "design3")
    assert json.loads(summary.read_text())["std"] == doc["std"]


def test_mc_bad_device_filter(capsys):
    code, _, err = run(["mc", "design3", "--n", "2", "--devices", "M99"], capsys)
    assert code == 1 and "M99" in err


def test_corners(capsys):
    code, out, _ = run(["corners", "design1", "--format", "json"], capsys)
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema("corners"))
    assert code == 0 and list(doc["corners"]) == ["TT", "FF", "SS", "FS", "SF"]
    d = {k: v["avg_delay_s"] for k, v in doc["corners"].items()}
    assert d["FF"] < d["TT"] < d["SS"]


def test_sweep(capsys):
    argv = ["sweep", "design1", "--param", "M5.W", "--values", "720n,1.44u", "--metric", "avg_delay_s"]
    code, out, _ = run(argv, capsys)
    data = rows(out)
    assert code == 0 and data[0] == ["M5.W", "avg_delay_s"] and len(data) == 3
    assert float(data[2][1]) < float(data[1][1])
    code, out, _ = run([*argv, "--format", "json"], capsys)
    jsonschema.validate(json.loads(out), load_schema("sweep"))
    code, _, err = run(["sweep", "design1", "--param", "M5.Q", "--values", "1u"], capsys)
    assert code == 2 and "M5.Q" in err


# -- configuration ------------------------------------------------------------------------------------

def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "dlcsim.toml"
    cfg.write_text('format = "json"\n[analytic]\ndv-in = "100m"\n')
    code, out, _ = run(["--config", cfg, "analytic"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["t_total_s"] < oracles.FROZEN["t_total_worked"]
    # flags still win over the file
    code, out, _ = run(["--config", cfg, "analytic", "--format", "table"], capsys)
    assert "t_total" in out and not out.startswith("{")


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("this is not toml = = \n")
    code, _, err = run(["--config", cfg, "analytic"], capsys)
    assert code == 2 and "config" in err
