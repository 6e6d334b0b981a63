import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hybridmech import cli
from hybridmech.constants import active

from conftest import CONFIGS

TWO_PI = 2 * math.pi

EXPECTED_EXIT = {
    "jc_swap": 0, "ion_couplings": 0, "table": 0, "steady_atom_filter": 0, "spectrum_atom_filter": 0,
    "sweep_epsilon": 0, "sweep_sympathetic_n": 0, "sweep_cooperativity": 0, "dispersive": 0,
    "membrane_atom": 0, "steady_unstable": 4, "empty": 2, "truncation_failure": 5,
}


def command_of(path):
    for line in path.read_text().splitlines():
        if line.replace(" ", "").startswith("command="):
            return line.split("=", 1)[1].strip()
    raise AssertionError(f"no command in {path}")


def run_config(name, tmp_path, *extra):
    cfg = CONFIGS / f"{name}.ini"
    out = tmp_path / f"{name}.csv"
    code = cli.main([command_of(cfg), "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_every_regression_config_is_covered():
    assert {p.stem for p in CONFIGS.glob("*.ini")} == set(EXPECTED_EXIT)


@pytest.mark.parametrize("name", sorted(EXPECTED_EXIT))
def test_regression_exit_codes(name, tmp_path):
    code, out = run_config(name, tmp_path)
    assert code == EXPECTED_EXIT[name]
    if code == 0:
        rows = read_rows(out)
        assert rows and all(r["provenance"] for r in rows)
        meta = json.loads(out.with_name(out.name + ".meta.json").read_text())
        assert meta["constants_version"] == active().version
        assert "wall_time_s" in meta and meta["tolerances"]


def test_jc_swap_output(tmp_path):
    _, out = run_config("jc_swap", tmp_path)
    rows = read_rows(out)
    assert float(rows[0]["P_e"]) == pytest.approx(1.0)
    assert float(rows[-1]["P_e"]) <= 1e-4
    assert abs(float(rows[-1]["excitation"]) - 1) <= 1e-10


def test_ion_couplings_rows(tmp_path, oracles):
    _, out = run_config("ion_couplings", tmp_path)
    rows = {r["quantity"]: r for r in read_rows(out)}
    lam = rows["lambda_direct"]
    assert lam["unit"] == "rad/s"
    assert float(lam["value_over_2pi_hz"]) == pytest.approx(oracles["ion_direct_lambda_hz"], rel=1e-12)
    assert float(lam["value_si"]) == pytest.approx(TWO_PI * oracles["ion_direct_lambda_hz"], rel=1e-12)


def test_table_reproduces_quoted_ranges(tmp_path):
    _, out = run_config("table", tmp_path)
    rows = {r["mechanism"]: r for r in read_rows(out)}
    for mech in ("electrostatic", "lorentz", "magnetic_electron", "deformation"):
        assert rows[mech]["overlaps_quoted"] == "1"


def test_epsilon_sweep_is_linear(tmp_path):
    _, out = run_config("sweep_epsilon", tmp_path)
    lam = [float(r["lambda_direct"]) / TWO_PI for r in read_rows(out)]
    assert lam[0] == 0
    assert lam[2] == pytest.approx(2 * lam[1], rel=1e-14)
    assert abs(lam[2] - 150) <= 0.15 * 150


def test_sympathetic_sweep_linear_in_n(tmp_path):
    _, out = run_config("sweep_sympathetic_n", tmp_path)
    rows = read_rows(out)
    n = np.array([float(r["direct.n_atoms"]) for r in rows])
    dg = np.array([float(r["delta_gamma_model"]) for r in rows])
    assert len(rows) == 5 and np.all(np.diff(n) > 0)
    slope, icpt = np.polyfit(n, dg, 1)
    r2 = 1 - np.sum((dg - (slope * n + icpt)) ** 2) / np.sum((dg - dg.mean()) ** 2)
    assert r2 >= 0.999


def test_cooperativity_sweep_tracks_inverse_c(tmp_path):
    _, out = run_config("sweep_cooperativity", tmp_path)
    rows = read_rows(out)
    c = [float(r["cooperativity"]) for r in rows]
    nc = [float(r["n_res_times_c"]) for r in rows]
    assert c == pytest.approx([1, 10, 100])
    assert all(abs(x - 1) <= 0.35 for x in nc)
    n = [float(r["n_res_model"]) for r in rows]
    assert n[0] / n[-1] > 50


def test_parallel_sweep_matches_serial(tmp_path):
    _, serial = run_config("sweep_sympathetic_n", tmp_path)
    data = serial.read_bytes()
    (tmp_path / "p").mkdir()
    _, par = run_config("sweep_sympathetic_n", tmp_path / "p", "--workers", "2")
    assert par.read_bytes() == data


def test_config_error_reports_line(tmp_path, capsys):
    p = write(tmp_path, "[run]\ncommand = couplings\nscenario = ion_direct\n\n[direct]\nepsilon = 0.5 furlongs\n")
    assert cli.main(["couplings", "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 2
    assert ":6:" in capsys.readouterr().err


def test_bare_hz_is_rejected(tmp_path, capsys):
    p = write(tmp_path, "[run]\ncommand = couplings\nscenario = ion_direct\n[direct]\nomega_at = 70 MHz\n")
    assert cli.main(["couplings", "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 2
    assert "ambiguous" in capsys.readouterr().err


def test_override_with_units_changes_result(tmp_path):
    p = write(tmp_path, "[run]\ncommand = couplings\nscenario = ion_direct\n"
                        "[direct]\nomega_at = 2pi*70 MHz\nepsilon = 0.5\n")
    out = tmp_path / "o.csv"
    assert cli.main(["couplings", "--config", str(p), "--out", str(out)]) == 0
    rows = {r["quantity"]: r for r in read_rows(out)}
    assert float(rows["lambda_direct"]["value_over_2pi_hz"]) == pytest.approx(135.39654913294393 / 2, rel=1e-12)
    assert "user override" in rows["param:direct.epsilon"]["provenance"]


@pytest.mark.parametrize("body", [
    "[sweep]\npath = direct.epsilon\nstart = 0\nstop = 1\ncount = 1\n",
    "[sweep]\npath = direct.epsilon\nvalues = 0.5\n",
    "[sweep]\npath = direct.nothing\nstart = 0\nstop = 1\ncount = 3\n",
    "[sweep]\npath = direct.epsilon\nstart = 0\nstop = 1\ncount = 3\nscale = cubic\n",
    "[sweep]\npath = direct.epsilon\nstart = 0\nstop = 1\ncount = 3\noutputs = nonsense\n",
])
def test_bad_sweeps_exit_2(body, tmp_path):
    p = write(tmp_path, "[run]\ncommand = sweep\nscenario = ion_direct\n" + body)
    assert cli.main(["sweep", "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 2


@pytest.mark.parametrize("command,text", [
    ("couplings", "[run]\ncommand = couplings\nscenario = atlantis\n"),
    ("couplings", "[run]\ncommand = couplings\nscenario = ion_direct\n[direct]\nnothing = 1\n"),
    ("evolve", "[run]\ncommand = evolve\nscenario = cpb_resonator\n[evolve]\nmodel = jc\n"),
    ("evolve", "[run]\nscenario = cpb_resonator\n[evolve]\nmodel = magic\n[time]\nt_end = 1 swap\n"),
    ("couplings", "[run\ncommand = couplings\n"),
    ("spectrum", "[run]\nscenario = ion_direct\n[spectrum]\ncount = 1\n"),
])
def test_other_config_errors(command, text, tmp_path):
    p = write(tmp_path, text)
    assert cli.main([command, "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 2


def test_precondition_exit_3(tmp_path):
    p = write(tmp_path, "[run]\ncommand = evolve\nscenario = ion_direct\n[evolve]\nmodel = jc\n"
                        "[time]\nt_end = 1 swap\n")
    assert cli.main(["evolve", "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 3
    p = write(tmp_path, "[run]\ncommand = steady\nscenario = cpb_resonator\n", "s.ini")
    assert cli.main(["steady", "--config", str(p), "--out", str(tmp_path / "s.csv")]) == 3


def test_parse_value_rules():
    h = active().h
    assert cli.parse_value("2pi*10e3 Hz") == pytest.approx(TWO_PI * 10e3)
    assert cli.parse_value("2pi * 1.3 MHz") == pytest.approx(TWO_PI * 1.3e6)
    assert cli.parse_value("h*50 GHz") == pytest.approx(h * 50e9)
    assert cli.parse_value("0.4 ng") == pytest.approx(0.4e-12)
    assert cli.parse_value("1e7 T/m") == 1e7
    assert cli.parse_value("2 eV") == pytest.approx(2 * active().e)
    assert cli.parse_value("20 mK") == pytest.approx(0.02)
    assert cli.parse_value("-3") == -3
    for bad in ("10 MHz", "2pi*3 kg", "abc", "5 parsecs"):
        with pytest.raises(ValueError):
            cli.parse_value(bad)


def test_dims_spec():
    assert cli.parse_dims("4x4") == (4, 4)
    assert cli.parse_dims("6") == (6,)
    with pytest.raises(cli.ConfigError):
        cli.parse_dims("1x4")


def test_number_format_is_17_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert float(cli.fmt(math.pi)) == math.pi
    assert cli.fmt(True) == "1" and cli.fmt(3) == "3"


def test_command_mismatch_is_config_error(tmp_path):
    cfg = CONFIGS / "ion_couplings.ini"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2


def test_console_script_entry_point(tmp_path):
    cfg = CONFIGS / "ion_couplings.ini"
    out = tmp_path / "o.csv"
    res = subprocess.run([sys.executable, "-m", "hybridmech.cli", "couplings", "--config", str(cfg),
                          "--out", str(out)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert out.read_text().startswith("quantity,value_si,unit,value_over_2pi_hz,provenance\n")
