import json

import numpy as np
import pytest

from ksdft1d import Grid
from ksdft1d import io as kio
from ksdft1d.cli import evaluate_expression, main
from ksdft1d.errors import ConfigurationError

SC = {"kind": "soft_coulomb"}
RHO2 = {"from_potential": "10*cos(2*pi*x)", "lam": 1.0}


def run(tmp_path, command, cfg, name="run", extra=()):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([command, "--config", str(cfg_path), "--out", str(out), *extra])
    return code, out


def manifest_names(out):
    return {e["file"] for e in kio.read_json(out / "manifest.json")["files"]}


def test_forward_free_particle_density_is_one(tmp_path):
    code, out = run(tmp_path, "forward", {"n": 16, "N": 1, "potential": 0})
    assert code == 0
    _, rho = kio.read_field_csv(out / "density.csv")
    np.testing.assert_allclose(rho, 1.0, atol=1e-12)
    assert {"density.csv", "spectral.json", "state.bin", "config.json", "version.json"} <= manifest_names(out)
    spec = kio.read_json(out / "spectral.json")
    assert spec["seed"] == 0 and spec["tol"] == 1e-9


def test_forward_optional_outputs(tmp_path):
    cfg = {"n": 12, "N": 2, "interaction": SC, "lam": 1.0, "potential": "5*cos(2*pi*x)", "pair_density": True, "response": True}
    code, out = run(tmp_path, "forward", cfg)
    assert code == 0
    M = kio.load_matrix(out / "response.bin")
    assert M.shape == (11, 11)
    assert kio.read_json(out / "response.json")["negative_definite"]
    n, N, psi = kio.load_state(out / "state.bin")
    assert (n, N) == (12, 2) and psi.size == 66


def test_forward_missing_potential_file(tmp_path):
    code, out = run(tmp_path, "forward", {"n": 16, "N": 1, "potential": {"file": "nope.csv"}})
    assert code == 2
    err = kio.read_json(out / "error.json")
    assert err["exit_code"] == 2 and err["reason"] == "configuration"


def test_missing_config_file(tmp_path):
    assert main(["forward", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize(
    "cfg",
    [
        {"n": 7, "N": 1, "potential": 0},
        {"n": 16, "N": 1, "potential": 0, "bogus": 1},
        {"n": 16, "N": 1, "potential": "__import__('os')"},
        {"n": 16, "N": 1, "potential": {"values": [1.0, 2.0]}},
        {"n": 16, "N": 1},
    ],
)
def test_config_errors_exit_2(tmp_path, cfg):
    assert run(tmp_path, "forward", cfg)[0] == 2


def test_degenerate_wells_exit_3(tmp_path):
    cfg = {"n": 32, "N": 1, "potential": "where(abs(x-0.5)<0.125, 1e5, 0)"}
    code, out = run(tmp_path, "forward", cfg)
    assert code == 3
    assert kio.read_json(out / "error.json")["reason"] == "degenerate"


def test_degenerate_three_wells_two_fermions_exit_3(tmp_path):
    # end wells of 5 cells mirror to 10-cell wells, so all three wells share a level
    walls = "where(abs(x-7.5/30)<2.5/30, 1e5, 0) + where(abs(x-22.5/30)<2.5/30, 1e5, 0)"
    cfg = {"n": 30, "N": 2, "potential": walls}
    code, out = run(tmp_path, "forward", cfg)
    assert code == 3
    assert kio.read_json(out / "error.json")["reason"] == "degenerate"


def test_invert_roundtrip_outputs(tmp_path):
    cfg = {"n": 16, "N": 2, "interaction": SC, "lam": 1.0, "density": {"from_potential": "10*cos(2*pi*x)"}}
    code, out = run(tmp_path, "invert", cfg)
    assert code == 0
    assert (out / "potential.csv").exists() and (out / "residual_history.csv").exists()
    assert kio.read_json(out / "inversion.json")["quotient_error"] < 1e-7


def test_invert_from_density_file(tmp_path):
    g = Grid(16)
    kio.write_field_csv(tmp_path / "rho.csv", g, 1 + 0.3 * np.cos(2 * np.pi * g.nodes))
    code, out = run(tmp_path, "invert", {"n": 16, "N": 1, "density": {"file": "rho.csv"}})
    assert code == 0
    res = kio.read_json(out / "inversion.json")
    assert res["residual"] < 1e-9


def test_functionals_command(tmp_path):
    cfg = {"n": 12, "N": 2, "interaction": SC, "lam": 0.05, "density": RHO2}
    code, out = run(tmp_path, "functionals", cfg)
    assert code == 0
    f = kio.read_json(out / "functionals.json")
    assert f["E_x"] < 0 and f["E_c"] < 0 and f["F_LL"] > f["T_KS"]


def test_ac_six_rows(tmp_path):
    cfg = {"n": 12, "N": 2, "interaction": SC, "lam_grid": [0, 0.1, 0.2, 0.3, 0.4, 0.5], "density": RHO2}
    code, out = run(tmp_path, "ac", cfg)
    assert code == 0
    lines = (out / "ac.csv").read_text().splitlines()
    assert lines[0] == "lam,F_LL,E_xc,E_H,gap" and len(lines) == 7
    assert kio.read_json(out / "ac_diagnostics.json")["monotone_F_LL"]


def test_gl2_single_particle_zero(tmp_path):
    cfg = {"n": 12, "N": 1, "interaction": SC, "density": {"from_potential": "8*cos(2*pi*x)"}}
    code, out = run(tmp_path, "gl2", cfg)
    assert code == 0
    assert abs(kio.read_json(out / "gl2.json")["energy"]) < 1e-10


def test_lipschitz_seed_override(tmp_path):
    cfg = {"n": 12, "N": 1, "ensemble_size": 3, "density": {"from_potential": "3*cos(2*pi*x)"}}
    code, out = run(tmp_path, "lipschitz", cfg, extra=["--seed", "11", "--threads", "1"])
    assert code == 0
    rep = kio.read_json(out / "lipschitz.json")
    assert rep["seed"] == 11 and kio.read_json(out / "config.json")["seed"] == 11


def test_complex_command(tmp_path):
    cfg = {
        "n": 10,
        "N": 2,
        "interaction": SC,
        "lam": 1.0,
        "potential": "8*cos(2*pi*x)",
        "potential_imag": "0.01*sin(pi*x)",
        "direction": "cos(pi*x)",
        "roundtrip": True,
    }
    code, out = run(tmp_path, "complex", cfg)
    assert code == 0
    res = kio.read_json(out / "complex.json")
    assert res["idempotency"] < 1e-8
    assert res["roundtrip"]["quotient_error"] < 1e-7
    assert min(res["holomorphy"]["density"]["orders"]) > 0.9
    assert max(res["holomorphy"]["conj_density"]["orders"]) < 0.5


def test_tol_override_is_echoed(tmp_path):
    code, out = run(tmp_path, "forward", {"n": 16, "N": 1, "potential": 0}, extra=["--tol", "1e-6"])
    assert code == 0 and kio.read_json(out / "spectral.json")["tol"] == 1e-6


def test_rerun_is_byte_identical(tmp_path):
    cfg = {"n": 12, "N": 2, "interaction": SC, "lam": 1.0, "ensemble_size": 3, "density": RHO2}
    _, a = run(tmp_path, "lipschitz", cfg, name="a")
    _, b = run(tmp_path, "lipschitz", cfg, name="b")
    for name in manifest_names(a):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_expression_whitelist():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(evaluate_expression("2*sin(pi*x)+x**2", x), 2 * np.sin(np.pi * x) + x**2)
    np.testing.assert_allclose(evaluate_expression("3", x), 3.0)
    for bad in ("x.__class__", "open('f')", "[x]", "lambda: 1", "x +"):
        with pytest.raises(ConfigurationError):
            evaluate_expression(bad, x)
