import io
import json

import numpy as np
import pytest

from alelts.cli import main
from alelts.config import RunConfig, parse_config, read_config_text
from alelts.errors import ConfigurationError
from alelts.io import MESH_COLUMNS, read_solution, read_spacetime_mesh, solution_columns, write_solution
from alelts.studies import compare_modes, l1_difference, run
from alelts.systems import Euler


def run_cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


# ------------------------------------------------------------------ config
def test_defaults():
    cfg = parse_config()
    assert cfg == RunConfig()
    assert cfg.order == 3 and cfg.name == "euler/rp1"


def test_overrides_and_aliases():
    cfg = parse_config(system="mhd/rp2", order=4, cells="50", cfl="0.4")
    assert (cfg.system, cfg.case, cfg.M, cfg.cells, cfg.cfl) == ("mhd", "rp2", 3, 50, 0.4)


def test_ini_text_and_file(tmp_path):
    text = "[case]\nsystem = euler\ncase = rp3\n[scheme]\norder = 4  # third degree\nflux = rusanov\n"
    cfg = parse_config(text)
    assert (cfg.case, cfg.M, cfg.flux) == ("rp3", 3, "rusanov")
    path = tmp_path / "run.ini"
    path.write_text("cells = 64\ncausal_bound = off\npositivity = no\n")
    cfg = parse_config(path, cells=32)
    assert cfg.cells == 32 and cfg.causal_bound is False and cfg.positivity is False
    assert read_config_text("a = 1")["a"] == "1"


def test_custom_shock_tube():
    cfg = parse_config(left="1, 0, 1", right="(0.125, 0, 0.1)", x_d="0.0", t_end="0.05",
                       domain="-0.5, 0.5", cells=40)
    assert cfg.case is None and cfg.name == "euler/custom"
    solver, case = cfg.build()
    assert case.t_end == 0.05 and solver.n_cells == 40


@pytest.mark.parametrize("kw, fragment", [
    ({"mode": "async"}, "mode"),
    ({"cfl": 1.5}, "cfl"),
    ({"order": 6}, "degree"),
    ({"order": "three"}, "order"),
    ({"cells": 2}, "cells"),
    ({"case": "rp9"}, "valid cases: euler/rp1"),
    ({"bogus": 1}, "unknown configuration keys"),
    ({"case": "custom", "left": "1,0,1"}, "missing"),
    ({"case": "custom", "left": "1,0", "right": "1,0,1", "x_d": 0, "t_end": 1, "domain": "0,1"}, "3 primitive"),
    ({"domain": "1, 0"}, "increasing"),
    ({"cells": "many"}, "cannot parse"),
])
def test_validation_errors(kw, fragment):
    with pytest.raises(ConfigurationError, match=fragment):
        parse_config(**kw)


def test_missing_file():
    with pytest.raises(ConfigurationError, match="cannot read"):
        parse_config("/nonexistent/run.ini")


def test_case_overrides_apply():
    cfg = parse_config(system="euler", case="rp1", t_end=0.1, domain="0, 2", velocity="zero")
    case = cfg.resolve_case()
    assert (case.t_end, case.domain, case.velocity) == (0.1, (0.0, 2.0), "zero")


# ---------------------------------------------------------------------- io
def test_solution_roundtrip_is_bit_identical(tmp_path):
    cfg = parse_config(system="euler", case="rp1", cells=20, t_end=0.05, order=2)
    report, solver, _ = run(cfg)
    path = write_solution(tmp_path / "s.csv", report, solver.system)
    header, data = read_solution(path)
    assert header == solution_columns(Euler())
    assert np.array_equal(data[:, 0], report.centers)
    assert np.array_equal(data[:, 2:5], report.Q)


def test_mesh_dump(tmp_path):
    code, text = run_cli("solve", "euler", "rp1", "--cells", "12", "--order", "2", "--t-end", "0.02",
                         "--out", str(tmp_path), "--dump-mesh")
    assert code == 0
    summary = json.loads(text)
    mesh = read_spacetime_mesh(tmp_path / "mesh.csv")
    assert mesh.shape == (summary["updates"], len(MESH_COLUMNS))
    assert np.all(mesh[:, 2] > mesh[:, 1])
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["updates"] == summary["updates"] and report["case"] == "euler/rp1"
    assert set(report["diagnostics"]) == {"limited_cells", "damped_predictors"}


# --------------------------------------------------------------------- cli
def test_cli_solve_summary():
    code, text = run_cli("solve", "euler", "rp2", "--cells", "20", "--t-end", "0.01")
    assert code == 0
    summary = json.loads(text)
    assert summary["case"] == "euler/rp2" and summary["max_conservation_rel"] < 1e-12


def test_cli_usage_errors(capsys):
    assert run_cli("solve", "euler", "rp9")[0] == 2
    assert "error[usage]" in capsys.readouterr().err
    assert run_cli("solve", "euler", "rp1", "--cfl", "2")[0] == 2
    assert run_cli("frobnicate")[0] == 2
    assert run_cli("converge", "alfven", "--orders", "x")[0] == 2


def test_cli_solver_error_exit_code(capsys):
    # a single predictor iteration cannot converge
    code, _ = run_cli("solve", "euler", "rp1", "--cells", "10", "--config",
                      _write_ini({"predictor_max_iter": 1, "positivity": "off"}))
    assert code == 1
    assert "error[predictor-divergence]" in capsys.readouterr().err


def _write_ini(values):
    import tempfile

    fh = tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False)
    fh.write("\n".join(f"{k} = {v}" for k, v in values.items()))
    fh.close()
    return fh.name


def test_cli_compare():
    code, text = run_cli("compare", "euler", "rp1", "--cells", "30", "--t-end", "0.05")
    assert code == 0
    res = json.loads(text)
    assert res["ratio"] >= 1.0
    assert res["gts_updates"] >= res["lts_updates"]


def test_cli_converge_small():
    code, text = run_cli("converge", "mhd/alfven", "--orders", "2", "--grids", "20,40", "--t-end", "0.02")
    assert code == 0
    rows = [line.split() for line in text.strip().splitlines()[1:]]
    assert [int(r[1]) for r in rows] == [20, 40]
    assert float(rows[1][3]) > 1.5


# ------------------------------------------------------------------ studies
def test_l1_difference_on_mismatched_meshes():
    xa = np.array([0.0, 0.5, 1.0])
    xb = np.array([0.0, 0.25, 1.0])
    qa = np.array([[1.0], [2.0]])
    qb = np.array([[1.0], [3.0]])
    # [0.25, 0.5]: |1-3| ; [0.5, 1]: |2-3|
    assert l1_difference(xa, qa, xb, qb)[0] == pytest.approx(0.25 * 2 + 0.5 * 1)


def test_gts_and_lts_agree_on_sod():
    res = compare_modes(parse_config(system="euler", case="rp1", cells=100))
    assert res.ratio > 1.0
    assert res.l1_difference[0] <= 1e-2
