import csv
import io
import json

import pytest

from pefill.cli import main
from pefill.config import Settings, load_settings
from pefill.report import fillings, rank_desc, scan
from pefill.schwarzschild import lambda_max

FAST = Settings(profile_points=1501, yamabe_grid=128)


def test_filling_counts():
    assert fillings(3, 0.5, FAST).count == 3
    assert fillings(3, lambda_max(3), FAST).count == 2
    assert [e.kind for e in fillings(3, 0.7, FAST).entries] == ["hyperbolic"]


def test_fillings_content():
    rep = fillings(3, 0.5, FAST)
    hyp, plus, minus = rep.entries
    assert plus.s_h == pytest.approx(1 / 3) and minus.s_h == pytest.approx(1.0)
    assert plus.v_ren_rank == 1 and hyp.v_ren_rank == 2
    assert hyp.gates["nonpositive_curvature"] and not plus.gates["nonpositive_curvature"]
    assert all(e.einstein_residual < 1e-8 for e in rep.entries)
    d = rep.to_dict()
    assert d["count"] == 3 and len(d["entries"]) == 3


def test_rank_ties():
    assert rank_desc([3.0, 1.0, 3.0 + 1e-12]) == [1, 3, 1]


def test_scan_rows_and_determinism():
    text = scan(3, 0.3, 0.5, 3, settings=FAST)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 9
    assert {r["kind"] for r in rows} == {"hyperbolic", "schwarzschild"}
    assert scan(3, 0.3, 0.5, 3, settings=FAST) == text


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("omega_n = 2.5\nweyl-convention = full  # all indices\nmc_radii = 1, 2\n")
    s = load_settings(path, n=4)
    assert s.omega_n == 2.5 and s.weyl_convention == "full" and s.mc_radii == (1.0, 2.0)
    assert s.n == 4
    path.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        load_settings(path)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_fillings_json(capsys):
    code, out, _ = _run(capsys, "fillings", "--lambda", "0.5")
    assert code == 0 and json.loads(out)["count"] == 3


def test_cli_scan_to_file(tmp_path, capsys):
    dest = tmp_path / "scan.csv"
    code, _, _ = _run(capsys, "scan", "--lambda-min", "0.4", "--lambda-max", "0.5", "--steps", "2",
                      "--out", str(dest))
    assert code == 0 and len(dest.read_text().splitlines()) == 7


def test_cli_ode_verify(tmp_path, capsys):
    dest = tmp_path / "p.csv"
    code, out, _ = _run(capsys, "ode-verify", "--n", "4", "--r-max", "5", "--profile-out", str(dest))
    assert code == 0 and json.loads(out)["pass"]
    assert dest.read_text().startswith("r,F,G")


def test_cli_renvol_and_gb(capsys):
    code, out, _ = _run(capsys, "renvol", "--metric", "schwarzschild", "--lambda", "0.5",
                        "--branch", "plus")
    d = json.loads(out)
    assert code == 0 and d["v_ren"] == pytest.approx(1.9495514866, rel=1e-4)
    code, out, _ = _run(capsys, "gb-check", "--metric", "schwarzschild", "--s-h", "1.0",
                        "--method", "closed-form")
    assert code == 0 and json.loads(out)["pass"]
    code, out, _ = _run(capsys, "gb-check", "--metric", "schwarzschild", "--s-h", "1.0",
                        "--method", "closed-form", "--weyl-convention", "full")
    assert code == 1 and not json.loads(out)["pass"]


def test_cli_yamabe(capsys):
    code, out, _ = _run(capsys, "yamabe", "--lambda", "0.05", "--grid", "128")
    d = json.loads(out)
    assert code == 0 and d["Y"] == pytest.approx(d["y_const"])


def test_cli_error_codes(capsys):
    code, _, err = _run(capsys, "renvol", "--metric", "schwarzschild", "--lambda", "5")
    assert code == 2 and "no Schwarzschild filling" in err
    code, _, err = _run(capsys, "renvol", "--metric", "schwarzschild", "--s-h", "1", "--n", "4",
                        "--method", "closed-form")
    assert code == 2  # UnsupportedDimension is also a ValueError
    code, _, err = _run(capsys, "yamabe", "--lambda", "10", "--grid", "128")
    assert code == 1 and "NonConvergence" in err
    with pytest.raises(SystemExit) as exc:
        main(["yamabe", "--lambda", "-1"])
    assert exc.value.code == 2
