import os

import pytest

from hybriddiff.cli import (
    cli_main, EXIT_OK, EXIT_VALIDATION, EXIT_NON_FINITE, EXIT_IO, EXIT_HYPOTHESIS,
    FREQ_COLUMNS, LINEARIZATION_COLUMNS,
)
from hybriddiff.integrator import CSV_COLUMNS
from hybriddiff.metrics import REPORT_COLUMNS
from hybriddiff.scenario import default_scenario, parse_scenario

SMALL = """\
name: small
signal: {kind: sinusoid, amplitude: 2.0, omega: 1.0}
noise: {kind: seeded-uniform, epsilon: 0.01, seed: 5}
sim: {dt: 1.0e-3, t_end: 2.0}
families:
  - family: hybrid
  - family: levant
"""

BAD_GAIN = """\
name: bad
families:
  - family: hybrid
    params:
      k1: -1.0
"""

DIVERGING = """\
name: diverging
signal: {kind: constant}
sim: {dt: 0.1, t_end: 100.0, method: euler, x0: [1.0, 0.0]}
families:
  - family: linear
    params: {a1: 2.0, a2: 1.0, tau: 1.0e-3}
"""

def _write(tmp_path, name, content):
    filename = os.path.join(tmp_path, name)
    with open(filename, "wt") as f:
        f.write(content)
    return filename

def _read(filename):
    with open(filename, "rb") as f:
        return f.read()

####################################################################
# run
####################################################################
def test_run_writes_outputs(tmp_path, capsys):
    scenario = _write(tmp_path, "small.yaml", SMALL)
    out_dir = os.path.join(tmp_path, "out")
    assert cli_main(["run", scenario, "-o", out_dir]) == EXIT_OK
    for name in ("hybrid.csv", "levant.csv", "hybrid.report.txt", "levant.report.txt", "comparison.csv"):
        assert os.path.isfile(os.path.join(out_dir, name))
    assert _read(os.path.join(out_dir, "hybrid.csv")).startswith((",".join(CSV_COLUMNS) + "\n").encode())
    assert _read(os.path.join(out_dir, "comparison.csv")).startswith((",".join(REPORT_COLUMNS) + "\n").encode())
    report = _read(os.path.join(out_dir, "hybrid.report.txt")).decode()
    assert report.startswith("# noise is indexed by integration step")
    assert "theorem2_flag=" in report
    assert "[levant]" in capsys.readouterr().out

def test_run_is_deterministic(tmp_path):
    scenario = _write(tmp_path, "small.yaml", SMALL)
    out_a = os.path.join(tmp_path, "a")
    out_b = os.path.join(tmp_path, "b")
    assert cli_main(["run", scenario, "-o", out_a]) == EXIT_OK
    assert cli_main(["run", scenario, "-o", out_b]) == EXIT_OK
    for name in sorted(os.listdir(out_a)):
        assert _read(os.path.join(out_a, name)) == _read(os.path.join(out_b, name))

def test_run_selects_family(tmp_path):
    scenario = _write(tmp_path, "small.yaml", SMALL)
    out_dir = os.path.join(tmp_path, "out")
    assert cli_main(["run", scenario, "-o", out_dir, "--family", "levant", "--format", "csv"]) == EXIT_OK
    assert not os.path.exists(os.path.join(out_dir, "hybrid.csv"))
    assert os.path.isfile(os.path.join(out_dir, "levant.csv"))

def test_run_seed_override_changes_noise(tmp_path):
    scenario = _write(tmp_path, "small.yaml", SMALL)
    out_a = os.path.join(tmp_path, "a")
    out_b = os.path.join(tmp_path, "b")
    assert cli_main(["run", scenario, "-o", out_a, "--family", "levant"]) == EXIT_OK
    assert cli_main(["run", scenario, "-o", out_b, "--family", "levant", "--seed-override", "6"]) == EXIT_OK
    assert _read(os.path.join(out_a, "levant.csv")) != _read(os.path.join(out_b, "levant.csv"))

def test_run_invalid_gain(tmp_path, capsys):
    scenario = _write(tmp_path, "bad.yaml", BAD_GAIN)
    assert cli_main(["run", scenario, "-o", os.path.join(tmp_path, "out")]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "families.0.params.k1" in err
    assert "line 5" in err

def test_run_missing_file(tmp_path):
    assert cli_main(["run", os.path.join(tmp_path, "missing.yaml")]) == EXIT_IO

def test_run_missing_target():
    assert cli_main(["run"]) == EXIT_VALIDATION

def test_run_non_finite(tmp_path, capsys):
    scenario = _write(tmp_path, "diverging.yaml", DIVERGING)
    assert cli_main(["run", scenario, "-o", os.path.join(tmp_path, "out")]) == EXIT_NON_FINITE
    assert "non-finite" in capsys.readouterr().err

def test_print_defaults(capsys):
    assert cli_main(["run", "--print-defaults"]) == EXIT_OK
    assert parse_scenario(capsys.readouterr().out) == default_scenario()

####################################################################
# certify
####################################################################
def test_certify_nominal(capsys):
    assert cli_main(["certify", "nominal_hybrid"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Gamma1 = [1, 1, -2]" in out
    assert "Gamma2 = [1, 1, -1]" in out
    assert "second_order:" in out
    assert out.rstrip().endswith("result: OK")

def test_certify_example2_fails(capsys):
    assert cli_main(["certify", "example2_certify"]) == EXIT_HYPOTHESIS
    assert "result: FAILED-HYPOTHESIS" in capsys.readouterr().out

def test_certify_curvature_breaks_hypothesis(tmp_path, capsys):
    params = _write(tmp_path, "p.yaml", "hybrid: {k1: 1.0, k2: 1.0, k3: 8.0, k4: 8.0, alpha: 0.2}\nL2: 2.0\nepsilon: 0.01\n")
    assert cli_main(["certify", params]) == EXIT_HYPOTHESIS
    assert "theorem2: bound=inf flag=FAILED-HYPOTHESIS" in capsys.readouterr().out

def test_certify_invalid_gain(tmp_path):
    params = _write(tmp_path, "p.yaml", "hybrid: {k1: 1.0, k2: 1.0, k3: 0.0, k4: 8.0, alpha: 0.2}\n")
    assert cli_main(["certify", params]) == EXIT_VALIDATION

def test_certify_needs_hybrid(tmp_path):
    params = _write(tmp_path, "p.yaml", "levant: {lambda1: 28.0, lambda2: 6.0}\n")
    assert cli_main(["certify", params]) == EXIT_VALIDATION

def test_certify_bad_amplitudes():
    assert cli_main(["certify", "nominal_hybrid", "--amplitudes", "1,-1"]) == EXIT_VALIDATION
    assert cli_main(["certify", "nominal_hybrid", "--amplitudes", "one"]) == EXIT_VALIDATION

####################################################################
# freq
####################################################################
def test_freq_tables(tmp_path):
    out_dir = os.path.join(tmp_path, "out")
    assert cli_main(["freq", "nominal_hybrid", "-o", out_dir, "--grid", "10,100"]) == EXIT_OK

    lines = _read(os.path.join(out_dir, "freq_linear.csv")).decode().splitlines()
    assert lines[0] == ",".join(FREQ_COLUMNS)
    assert len(lines) == 3
    assert float(lines[1].split(",")[1]) == pytest.approx(5.0 ** 0.5 / 2.0)

    lines = _read(os.path.join(out_dir, "linearization.csv")).decode().splitlines()
    assert lines[0] == ",".join(LINEARIZATION_COLUMNS)
    rows = [line.split(",") for line in lines[1:]]
    hybrid_omegas = [float(row[2]) for row in rows if row[0] == "hybrid"]
    levant_zetas = [float(row[3]) for row in rows if row[0] == "levant"]
    assert len(hybrid_omegas) == 4
    assert all(a > b for a, b in zip(hybrid_omegas, hybrid_omegas[1:]))
    assert max(levant_zetas) == pytest.approx(min(levant_zetas))
    assert [row for row in rows if row[0] == "linear"][0][1] == "n/a"

def test_freq_default_grid(tmp_path):
    out_dir = os.path.join(tmp_path, "out")
    assert cli_main(["freq", "nominal_hybrid", "-o", out_dir]) == EXIT_OK
    assert len(_read(os.path.join(out_dir, "freq_linear.csv")).decode().splitlines()) == 42

@pytest.mark.parametrize("grid", ["10", "abc", "0,10"])
def test_freq_bad_grid(tmp_path, grid):
    assert cli_main(["freq", "nominal_hybrid", "-o", os.path.join(tmp_path, "out"), "--grid", grid]) == EXIT_VALIDATION

####################################################################
# sweep
####################################################################
def test_sweep_empty_values(tmp_path):
    assert cli_main(["sweep", "tau_scaling", "--axis", "linear.tau", "-o", os.path.join(tmp_path, "out")]) == EXIT_VALIDATION

def test_sweep_needs_axis(tmp_path):
    assert cli_main(["sweep", "tau_scaling", "--values", "0.1", "-o", os.path.join(tmp_path, "out")]) == EXIT_VALIDATION

def test_sweep_writes_table(tmp_path, capsys):
    scenario = _write(tmp_path, "small.yaml", SMALL)
    out_dir = os.path.join(tmp_path, "out")
    assert cli_main(["sweep", scenario, "--family", "levant", "--axis", "noise.epsilon", "--values", "0.01,0.02", "-o", out_dir]) == EXIT_OK
    lines = _read(os.path.join(out_dir, "sweep.csv")).decode().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("0.01,levant,")
    # fewer than 4 noise levels: no exponent line
    assert "exponents[" not in capsys.readouterr().out
