import io as _io
import shutil

import numpy as np
import pytest

from colorcenter import apes, cli, rates, units
from colorcenter import io_config as io


def run(argv):
    out, err = _io.StringIO(), _io.StringIO()
    status = cli.run(argv, stdout=out, stderr=err)
    return status, out.getvalue(), err.getvalue()


@pytest.fixture
def rates_ini(tmp_path):
    p = tmp_path / "rates.ini"
    p.write_text("[rates]\nzpl_eV = 0.652\nmu_debye = 29.8\nn_index = 2.647\n")
    return p


def test_no_arguments_prints_usage():
    status, _, err = run([])
    assert status != 0 and "usage" in err


def test_unknown_subcommand():
    status, _, err = run(["bogus"])
    assert status == 1 and "usage" in err


def test_rates_prints_tau_r(rates_ini, tmp_path):
    status, out, _ = run(["rates", "--config", str(rates_ini), "--out", str(tmp_path / "o")])
    assert status == 0
    summary = io.parse_summary(out)
    assert float(summary["tau_r_ns"]) == pytest.approx(9.3, rel=0.02)
    # files carry the same bytes as the library value
    lib = rates.radiative_lifetime(rates.RadiativeInputs(0.652, 29.8, 2.647))
    assert f"tau_r_ns={io.fmt(lib)}" in (tmp_path / "o" / "rates_summary.txt").read_text()
    assert (tmp_path / "o" / "manifest.json").exists()


def test_outputs_deterministic(rates_ini, tmp_path):
    for name in ("a", "b"):
        assert run(["rates", "--config", str(rates_ini), "--out", str(tmp_path / name), "--quiet"])[0] == 0
    ma = io.RunManifest.from_json((tmp_path / "a" / "manifest.json").read_text())
    mb = io.RunManifest.from_json((tmp_path / "b" / "manifest.json").read_text())
    assert ma.outputs == mb.outputs and ma.config_digest == mb.config_digest


def test_override_validation(rates_ini):
    assert run(["rates", "--config", str(rates_ini), "--set", "mu_debye=-1"])[0] == 1
    assert run(["rates", "--config", str(rates_ini), "--set", "g=2", "--set", "g=3"])[0] == 1
    status, out, _ = run(["rates", "--config", str(rates_ini), "--set", "mu_debye=59.6"])
    assert float(io.parse_summary(out)["tau_r_ns"]) == pytest.approx(9.3275 / 4, rel=1e-3)


def test_missing_config_file(tmp_path):
    assert run(["rates", "--config", str(tmp_path / "nope.ini")])[0] == 1
    assert run(["rates"])[0] == 1


def test_polaron_decoupled(tmp_path):
    p = tmp_path / "p.ini"
    p.write_text("[polaron]\nhw_E_eV = 0.07\nhw_T_eV = 0.06\ndelta_eV = 0.085\no_max = 5\n")
    status, out, _ = run(["polaron-gap", "--config", str(p)])
    assert status == 0
    s = io.parse_summary(out)
    assert float(s["gap_eV"]) == pytest.approx(0.06, abs=1e-9)
    assert float(s["decoupled_gap_eV"]) == pytest.approx(0.06)


def test_apes_fit(tmp_path):
    q = np.linspace(-0.3, 0.3, 11)
    np.savetxt(tmp_path / "scan.dat", np.column_stack([q, apes.scan_model(0.09, 0.05, "T", "zeta", q)]))
    cfg = tmp_path / "a.ini"
    cfg.write_text("[apes-fit]\nscan_file = scan.dat\nmode = T\n")
    status, out, _ = run(["apes-fit", "--config", str(cfg)])
    assert status == 0
    s = io.parse_summary(out)
    assert float(s["F_eV"]) == pytest.approx(0.09, rel=1e-7)
    assert float(s["hw_eV"]) == pytest.approx(0.05, rel=1e-7)


def test_pl_spectrum_files(tmp_path):
    cfg = tmp_path / "l.ini"
    cfg.write_text("[lineshape]\nzpl_eV = 0.652\nhw0_eV = 0.05\nS = 1.605\n")
    status, out, _ = run(["pl-spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert status == 0
    data = np.loadtxt(tmp_path / "o" / "spectrum.txt")
    assert data.shape[1] == 2
    assert int(io.parse_summary(out)["n_points"]) == data.shape[0]


def test_hyperfine_block(tmp_path, make_gaussian_grid):
    io.write_spin_grid(tmp_path / "g.dat", make_gaussian_grid(n=15, shift=(0, 0, 0.4)))
    cfg = tmp_path / "h.ini"
    cfg.write_text("[hyperfine]\ngrid_file = g.dat\n")
    status, out, _ = run(["hyperfine", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert status == 0
    block = (tmp_path / "o" / "hyperfine.txt").read_text().splitlines()
    assert block[0].startswith("#") and block[1].startswith("Si1")
    assert run(["hyperfine", "--config", str(cfg), "--set", "nucleus=Xx"])[0] == 1


def test_numerical_failure_status(tmp_path):
    cfg = tmp_path / "r.ini"
    cfg.write_text("[rates]\nzpl_eV = 0.652\nmu_debye = 29.8\nn_index = 2.647\n"
                   "W_if = 0.15\nhw_i_eV = 0.072\nhw_f_eV = 0.05\nE_rel_eV = 0.339\nlevel_budget = 5\n")
    assert run(["rates", "--config", str(cfg)])[0] == 2


def test_paper_repro_passes():
    status, out, _ = run(["paper-repro"])
    assert status == 0
    lines = out.splitlines()
    for item in ("debye_waller", "tau_r_ns", "quantum_efficiency", "decoupled_gap_eV", "displaced_ground_eV"):
        assert any(line.startswith("PASS") and item in line for line in lines)
    assert any(line.startswith("INFO") and "tau_nr_0_ns" in line for line in lines)


def test_paper_repro_tampered_constant(monkeypatch):
    monkeypatch.setattr(units, "HBAR_EV_S", units.HBAR_EV_S * 1.05)
    status, out, _ = run(["paper-repro"])
    assert status != 0
    assert any(line.startswith("FAIL") and "tau_r_ns" in line for line in out.splitlines())


def test_paper_repro_missing_config(tmp_path):
    shutil.copytree(cli._default_repro_dir(), tmp_path / "repro")
    (tmp_path / "repro" / "rates.ini").unlink()
    status, _, err = run(["paper-repro", "--config", str(tmp_path / "repro")])
    assert status == 1 and "rates.ini" in err
