import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaselock import cli
from phaselock import io as pio
from phaselock.atlas import GridSpec, build_catalog, sweep
from phaselock.errors import InvalidParams, TruncationError

SPEC = GridSpec(-3.0, 3.0, -2.0, 2.0, 12, 8)


@pytest.fixture(scope="module")
def grid():
    return sweep(2.0, SPEC, threads=1)


# ---------------------------------------------------------------------------
# formatting and config


def test_fmt_round_trips_doubles():
    for x in (0.1, 1 / 3, -2.5e-300, 1e300, 0.0):
        assert float(pio.fmt(x)) == x
    assert pio.fmt(math.nan) == "" and pio.fmt(math.inf) == ""


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_is_exact(x):
    assert float(pio.fmt(x)) == x


def test_to_jsonable_special_values():
    out = pio.to_jsonable({"a": np.array([1.0, np.nan]), "z": 1 + 2j})
    assert out == {"a": [1.0, None], "z": {"re": 1.0, "im": 2.0}}
    json.dumps(out, allow_nan=False)


def test_parse_config_text():
    vals = pio.parse_config_text("omega = 1.5  # angular\n\n# comment\nnB=10\nformat = csv,ppm\n")
    assert vals == {"omega": "1.5", "nB": "10", "format": "csv,ppm"}
    with pytest.raises(InvalidParams):
        pio.parse_config_text("omega 1.5")
    with pytest.raises(InvalidParams):
        pio.parse_config_text("colour = red")


def test_build_config_overrides_file():
    cfg = pio.build_config({"omega": "1.5", "nB": "10"}, {"omega": 3.0, "nB": None})
    assert cfg.omega == 3.0 and cfg.grid.nB == 10
    assert cfg.format == pio.FORMATS


def test_load_config_from_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("omega=0.5\nA_max=3\nA_min=-3\nformat=svg\n")
    cfg = pio.load_config(p, {"nA": 7})
    assert cfg.omega == 0.5 and cfg.grid.A_max == 3.0 and cfg.grid.nA == 7
    assert cfg.format == ("svg",)


@pytest.mark.parametrize("bad", [{"omega": -1}, {"tol": 0}, {"method": "Euler"},
                                 {"format": "png"}, {"threads": -2}, {"nB": "x"}])
def test_invalid_config_rejected(bad):
    with pytest.raises(InvalidParams):
        pio.build_config({}, bad)


def test_cache_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv(pio.CACHE_ENV, str(tmp_path / "env"))
    assert pio.build_config().resolved_cache_dir() == tmp_path / "env"
    cfg = pio.build_config({}, {"cache_dir": str(tmp_path / "cli")})
    assert cfg.resolved_cache_dir() == tmp_path / "cli"
    monkeypatch.delenv(pio.CACHE_ENV)
    assert pio.build_config().resolved_cache_dir().name == "phaselock"


# ---------------------------------------------------------------------------
# cache


def test_cache_key_properties():
    k = pio.cache_key("portrait", {"omega": 2.0, "n": 3}, {"tol": 1e-9})
    assert k == pio.cache_key("portrait", {"n": 3, "omega": 2.0}, {"tol": 1e-9})
    assert k != pio.cache_key("portrait", {"omega": 2.0, "n": 3}, {"tol": 1e-10})
    assert k != pio.cache_key("portrait", {"omega": 2.0000000000000004, "n": 3}, {"tol": 1e-9})
    assert k != pio.cache_key("catalog", {"omega": 2.0, "n": 3}, {"tol": 1e-9})


def test_grid_cache_is_bit_exact(tmp_path, grid):
    cache = pio.GridCache(tmp_path)
    assert cache.get("k", grid.omega, grid.spec, grid.method) is None
    cache.put("k", grid)
    back = cache.get("k", grid.omega, grid.spec, grid.method)
    for name in ("rho", "margin", "kind", "fallback"):
        a, b = getattr(grid, name), getattr(back, name)
        assert a.dtype == b.dtype and np.array_equal(a, b, equal_nan=True)
    assert pio.grid_csv(back) == pio.grid_csv(grid)


# ---------------------------------------------------------------------------
# artifacts


def test_grid_csv_round_trip(grid):
    back = pio.read_grid_csv(pio.grid_csv(grid), grid.spec)
    assert np.array_equal(back["rho"], grid.rho, equal_nan=True)
    assert np.array_equal(back["margin"], grid.margin, equal_nan=True)
    assert np.array_equal(back["kind"], grid.kind)


def test_grid_json_round_trip(grid):
    d = json.loads(pio.grid_json(grid))
    assert d["grid"]["nB"] == SPEC.nB
    assert np.array_equal(np.array(d["rho"], dtype=float), grid.rho)


def test_ppm_valid(grid):
    data = pio.grid_ppm(grid)
    assert data.startswith(b"P6\n12 8\n255\n")
    img = pio.read_ppm(data)
    assert img.shape == (8, 12, 3)
    assert np.array_equal(img, pio.grid_colors(grid))
    # top row of the image is the largest A
    assert np.array_equal(img[0], pio.grid_colors(grid)[0])


def test_svg_valid(grid):
    import xml.etree.ElementTree as ET

    root = ET.fromstring(pio.grid_svg(grid))
    rects = root.findall("{http://www.w3.org/2000/svg}rect")
    covered = {}
    for r in rects:
        y = int(r.get("y"))
        covered[y] = covered.get(y, 0) + int(r.get("width"))
    assert covered == {y: SPEC.nB for y in range(SPEC.nA)}


def test_write_portrait_digests(tmp_path, grid):
    import hashlib

    d = pio.write_portrait(grid, tmp_path)
    assert set(d) == {"portrait.csv", "portrait.json", "portrait.ppm", "portrait.svg"}
    for name, h in d.items():
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == h


def test_catalog_csv_round_trip():
    cat = build_catalog(2.0, 1, 6.0)
    rows = pio.read_catalog_csv(pio.catalog_csv(cat))
    assert len(rows) == len(cat.rows)
    for r, row in zip(rows, cat.rows):
        assert r["kind"] == row.kind and r["r"] == row.r and r["A"] == row.A
    d = json.loads(pio.catalog_json(cat))
    assert d["columns"] == list(pio.CATALOG_COLUMNS)


# ---------------------------------------------------------------------------
# command line


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_cli_rho_examples(capsys):
    code, out = run(capsys, "rho", "--omega", "2", "--B", "2.5", "--A", "0")
    assert code == cli.EXIT_OK
    rho = json.loads(out.out)["rho"]
    assert rho == pytest.approx(math.sqrt(2.5 ** 2 - 1) / 2, abs=1e-9)
    code, out = run(capsys, "rho", "--omega", "2", "--B", "-2.5", "--A", "0", "--method", "ClosedFormA0")
    assert json.loads(out.out)["rho"] == pytest.approx(-rho, abs=1e-12)


def test_cli_rho_direct_agrees(capsys):
    _, a = run(capsys, "rho", "--omega", "1", "--B", "1.3", "--A", "0.7")
    _, b = run(capsys, "rho", "--omega", "1", "--B", "1.3", "--A", "0.7", "--method", "Direct")
    assert json.loads(a.out)["rho"] == pytest.approx(json.loads(b.out)["rho"], abs=1e-6)


def test_cli_trace(capsys):
    code, out = run(capsys, "trace", "--omega", "2", "--B", "2", "--A", "3")
    d = json.loads(out.out)
    assert code == 0 and d["kind"] == "Inside" and abs(d["trace"]) > 2


def test_cli_usage_errors(capsys, tmp_path):
    assert run(capsys, "rho", "--omega", "-1", "--B", "1", "--A", "0")[0] == cli.EXIT_USAGE
    assert run(capsys, "rho", "--omega", "1")[0] == cli.EXIT_USAGE
    assert run(capsys, "frobnicate")[0] == cli.EXIT_USAGE
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _ = run(capsys, "portrait", "--omega", "1", "--nB", "4", "--nA", "4", "--no-cache",
                  "--output", str(blocker / "sub"))
    assert code == cli.EXIT_USAGE
    assert run(capsys, "bessel", "--n", "1", "--omega", "1", "--A-min", "1", "--A-max", "5")[0] == cli.EXIT_USAGE


def test_cli_numeric_failure_exit_code(capsys, monkeypatch):
    import sys

    mono = sys.modules["phaselock.monodromy"]

    def boom(*a, **k):
        raise TruncationError("forced")

    monkeypatch.setattr(mono, "rho_mobius", boom)
    code, out = run(capsys, "rho", "--omega", "1", "--B", "1", "--A", "1")
    assert code == cli.EXIT_NUMERIC and "numeric failure" in out.err


def test_cli_alarm_exit_code(capsys):
    # an impossible tolerance makes theorem-level identities fail
    code, out = run(capsys, "check", "--omega", "2", "--suite", "identities", "--points", "2",
                    "--tol", "1e-30")
    assert code == cli.EXIT_ALARM
    code, out = run(capsys, "check", "--omega", "2", "--suite", "identities", "--points", "3")
    assert code == cli.EXIT_OK


def test_cli_bessel_value(capsys):
    code, out = run(capsys, "bessel", "--n", "0", "--x", "2.404825557695773")
    assert code == 0 and abs(json.loads(out.out)["J"]) < 1e-14


def test_cli_transition(capsys):
    code, out = run(capsys, "transition", "--omega", "2", "--r", "1", "--A", "3")
    d = json.loads(out.out)
    assert code == 0
    assert {"a", "b", "c", "c0", "c1"} <= set(d)


def test_cli_portrait_cache_and_determinism(capsys, tmp_path):
    base = ["portrait", "--omega", "2", "--B-min", "-3", "--B-max", "3", "--A-min", "-2",
            "--A-max", "2", "--nB", "12", "--nA", "8", "--cache-dir", str(tmp_path / "cache")]
    assert run(capsys, *base, "--threads", "1", "--output", str(tmp_path / "a"))[0] == 0
    assert run(capsys, *base, "--threads", "2", "--output", str(tmp_path / "b"))[0] == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert not ma["cache_hit"] and mb["cache_hit"]
    assert ma["config_hash"] == mb["config_hash"]
    assert run(capsys, *base, "--threads", "2", "--no-cache", "--output", str(tmp_path / "c"))[0] == 0
    mc = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert not mc["cache_hit"]
    assert ma["artifacts"] == mb["artifacts"] == mc["artifacts"]
    for name in ma["artifacts"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()


def test_cli_portrait_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("omega = 1\nnB = 6\nnA = 4\nformat = csv\n")
    code, _ = run(capsys, "portrait", "--config", str(cfg), "--no-cache", "--output", str(tmp_path / "o"))
    assert code == 0
    assert sorted(os.listdir(tmp_path / "o")) == ["manifest.json", "portrait.csv"]
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["config"]["omega"] == 1.0
