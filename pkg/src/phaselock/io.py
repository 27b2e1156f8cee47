"""Configuration, caching and serialization.

Numbers are written with 17 significant digits (round-trip safe) in both CSV
and JSON; non-finite values become empty CSV fields and JSON ``null``.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .atlas import Catalog, GridSpec, PortraitGrid
from .errors import InvalidParams
from .monodromy import TOL_BOUNDARY

VERSION = "1.0.0"
CACHE_ENV = "PHASELOCK_CACHE_DIR"
FORMATS = ("csv", "json", "ppm", "svg")

log = logging.getLogger("phaselock")


# ---------------------------------------------------------------------------
# numbers


def fmt(x) -> str:
    """17 significant digits, '.' decimal; empty for NaN/inf."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return ""
    return f"{x:.17g}"


def to_jsonable(obj):
    """Plain JSON data; floats keep 17 digits via ``repr`` round-tripping."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    # Python's float repr is the shortest round-trip form, which never needs
    # more than 17 significant digits
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    omega: float = 2.0
    tol: float = 1e-9
    tol_boundary: float = TOL_BOUNDARY
    grid: GridSpec = field(default_factory=lambda: GridSpec(-6.0, 6.0, -12.0, 12.0, 300, 300))
    method: str = "Mobius"
    threads: int = 0  # 0: all cores
    cache_dir: str = ""
    output: str = "out"
    format: tuple[str, ...] = FORMATS

    def validate(self) -> "RunConfig":
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise InvalidParams(f"omega must be positive, got {self.omega}")
        if not self.tol > 0 or not self.tol_boundary > 0:
            raise InvalidParams("tolerances must be positive")
        if self.grid.nB < 2 or self.grid.nA < 2:
            raise InvalidParams("grid needs nB, nA >= 2")
        if self.method not in ("Mobius", "Direct"):
            raise InvalidParams(f"unknown method {self.method!r}")
        if self.threads < 0:
            raise InvalidParams("threads must be >= 0")
        bad = [f for f in self.format if f not in FORMATS]
        if bad:
            raise InvalidParams(f"unknown format(s) {bad}")
        return self

    def resolved_threads(self) -> int:
        return self.threads or os.cpu_count() or 1

    def resolved_cache_dir(self) -> Path:
        """Explicit setting, then the environment variable, then ~/.cache."""
        if self.cache_dir:
            return Path(self.cache_dir)
        env = os.environ.get(CACHE_ENV)
        if env:
            return Path(env)
        return Path.home() / ".cache" / "phaselock"

    def as_dict(self) -> dict:
        g = self.grid
        return {"omega": self.omega, "tol": self.tol, "tol_boundary": self.tol_boundary,
                "B_min": g.B_min, "B_max": g.B_max, "A_min": g.A_min, "A_max": g.A_max,
                "nB": g.nB, "nA": g.nA, "method": self.method}


_FLOAT_KEYS = {"omega", "tol", "tol_boundary", "B_min", "B_max", "A_min", "A_max"}
_INT_KEYS = {"nB", "nA", "threads"}
_STR_KEYS = {"method", "cache_dir", "output", "format"}
CONFIG_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams(f"config line {n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in CONFIG_KEYS:
            raise InvalidParams(f"config line {n}: unknown key {k!r}")
        out[k] = v
    return out


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge config-file values with overrides (``None`` overrides are ignored)."""
    vals = dict(file_values or {})
    vals.update({k: v for k, v in (overrides or {}).items() if v is not None})
    cfg = RunConfig()
    g = dataclasses.asdict(cfg.grid)
    try:
        for k, v in vals.items():
            if k not in CONFIG_KEYS:
                raise InvalidParams(f"unknown setting {k!r}")
            if k in _FLOAT_KEYS:
                v = float(v)
            elif k in _INT_KEYS:
                v = int(v)
            if k in g:
                g[k] = v
            elif k == "format":
                cfg.format = tuple(s.strip() for s in str(v).split(",") if s.strip())
            else:
                setattr(cfg, k, v)
    except ValueError as exc:
        raise InvalidParams(str(exc)) from exc
    cfg.grid = GridSpec(**g)
    return cfg.validate()


def load_config(path: str | os.PathLike | None, overrides: dict | None = None) -> RunConfig:
    file_values = parse_config_text(Path(path).read_text()) if path else {}
    return build_config(file_values, overrides)


# ---------------------------------------------------------------------------
# cache


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def cache_key(operation: str, inputs: dict, tolerances: dict) -> str:
    """Content hash of (version, operation, canonical inputs, tolerances)."""
    payload = {"version": VERSION, "op": operation, "inputs": inputs, "tol": tolerances}
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


class GridCache:
    """Portrait grids stored as ``.npz`` files named by their cache key."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def path(self, key: str) -> Path:
        return self.root / f"{key}.npz"

    def get(self, key: str, omega: float, spec: GridSpec, method: str) -> PortraitGrid | None:
        p = self.path(key)
        if not p.exists():
            return None
        with np.load(p, allow_pickle=False) as z:
            errors = [tuple(e) for e in json.loads(str(z["errors"]))]
            return PortraitGrid(omega, spec, method, z["rho"], z["margin"], z["kind"],
                                z["fallback"], errors)

    def put(self, key: str, grid: PortraitGrid) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.path(key).with_suffix(".tmp.npz")
        np.savez(tmp, rho=grid.rho, margin=grid.margin, kind=grid.kind, fallback=grid.fallback,
                 errors=np.array(json.dumps(to_jsonable(grid.errors))))
        os.replace(tmp, self.path(key))


# ---------------------------------------------------------------------------
# logging


def log_unit(unit: str, seconds: float, **fields) -> None:
    """One structured line per completed work unit."""
    extra = " ".join(f"{k}={fmt(v) if isinstance(v, (int, float)) else v}" for k, v in fields.items())
    log.info("unit=%s seconds=%.6f %s", unit, seconds, extra)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


# ---------------------------------------------------------------------------
# portrait grids


GRID_COLUMNS = ("i", "j", "B", "A", "rho", "margin", "kind", "fallback")


def grid_csv(grid: PortraitGrid) -> str:
    """Long-form table, one row per cell (row index ``i`` runs over A)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_COLUMNS)
    Bs, As = grid.spec.B_centers, grid.spec.A_centers
    for i in range(grid.nA):
        for j in range(grid.nB):
            w.writerow((i, j, fmt(Bs[j]), fmt(As[i]), fmt(grid.rho[i, j]), fmt(grid.margin[i, j]),
                        int(grid.kind[i, j]), int(grid.fallback[i, j])))
    return buf.getvalue()


def grid_json(grid: PortraitGrid) -> str:
    return dumps({"omega": grid.omega, "method": grid.method, "grid": dataclasses.asdict(grid.spec),
                  "rho": grid.rho, "margin": grid.margin, "kind": grid.kind.astype(int),
                  "fallback": grid.fallback.astype(int), "errors": grid.errors})


def read_grid_csv(text: str, spec: GridSpec) -> dict:
    """Parse :func:`grid_csv` output back into ``(nA, nB)`` arrays."""
    rows = list(csv.DictReader(io.StringIO(text)))
    out = {k: np.full((spec.nA, spec.nB), np.nan) for k in ("rho", "margin", "kind", "fallback")}
    for r in rows:
        i, j = int(r["i"]), int(r["j"])
        for k in out:
            out[k][i, j] = float(r[k]) if r[k] != "" else np.nan
    return out


# categorical palette for locked cells, indexed by rho mod len
PALETTE = np.array([
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40), (148, 103, 189),
    (140, 86, 75), (227, 119, 194), (188, 189, 34), (23, 190, 207), (127, 127, 127),
], dtype=np.uint8)


def grid_colors(grid: PortraitGrid) -> np.ndarray:
    """RGB image ``(nA, nB, 3)`` with the largest A in the top row.

    Locked cells: palette colour of their integer rho.  Unlocked: grey level
    from the fractional part of rho.  Boundary and failed cells: black.
    """
    rgb = np.zeros((grid.nA, grid.nB, 3), dtype=np.uint8)
    rho = np.nan_to_num(grid.rho, nan=0.0)
    inside = grid.kind == 1
    outside = grid.kind == -1
    idx = np.mod(np.round(rho).astype(np.int64), len(PALETTE))
    rgb[inside] = PALETTE[idx[inside]]
    frac = rho - np.floor(rho)
    grey = (235 - 90 * frac).astype(np.uint8)
    rgb[outside] = np.repeat(grey[outside][:, None], 3, axis=1)
    rgb[np.isnan(grid.rho)] = 0
    return rgb[::-1]


def grid_ppm(grid: PortraitGrid) -> bytes:
    rgb = grid_colors(grid)
    header = f"P6\n{grid.nB} {grid.nA}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(rgb).tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(s) for s in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def grid_svg(grid: PortraitGrid) -> str:
    """Rectangles for horizontal runs of equal colour, one unit per cell."""
    rgb = grid_colors(grid)
    h, w = rgb.shape[:2]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}" shape-rendering="crispEdges">']
    for y in range(h):
        x = 0
        row = rgb[y]
        while x < w:
            x1 = x + 1
            while x1 < w and (row[x1] == row[x]).all():
                x1 += 1
            r, g, b = (int(v) for v in row[x])
            out.append(f'<rect x="{x}" y="{y}" width="{x1 - x}" height="1" fill="#{r:02x}{g:02x}{b:02x}"/>')
            x = x1
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_portrait(grid: PortraitGrid, outdir: Path, formats=FORMATS, stem: str = "portrait") -> dict:
    """Write the requested artifacts; returns ``{filename: sha256}``."""
    outdir.mkdir(parents=True, exist_ok=True)
    writers = {"csv": (lambda: grid_csv(grid).encode(), "csv"),
               "json": (lambda: grid_json(grid).encode(), "json"),
               "ppm": (lambda: grid_ppm(grid), "ppm"),
               "svg": (lambda: grid_svg(grid).encode(), "svg")}
    digests = {}
    for f in formats:
        make, ext = writers[f]
        data = make()
        name = f"{stem}.{ext}"
        (outdir / name).write_bytes(data)
        digests[name] = hashlib.sha256(data).hexdigest()
    return digests


def write_manifest(outdir: Path, payload: dict) -> Path:
    p = outdir / "manifest.json"
    p.write_text(dumps(payload))
    return p


# ---------------------------------------------------------------------------
# catalogs


CATALOG_COLUMNS = ("kind", "r", "B", "A", "sign", "cb_ratio", "xi", "c0", "c1", "residuals", "flags")


def catalog_csv(cat: Catalog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CATALOG_COLUMNS)
    for row in cat.rows:
        res = ";".join(f"{k}={fmt(v)}" for k, v in sorted(row.residuals.items()))
        w.writerow((row.kind, row.r, fmt(row.B), fmt(row.A), row.sign, fmt(row.cb_ratio),
                    fmt(row.xi), fmt(row.c0), fmt(row.c1), res, "|".join(row.flags)))
    return buf.getvalue()


def catalog_json(cat: Catalog) -> str:
    return dumps({"omega": cat.omega, "r_max": cat.r_max, "A_max": cat.A_max,
                  "columns": list(CATALOG_COLUMNS),
                  "rows": [dataclasses.asdict(r) for r in cat.rows],
                  "higher_points": {str(k): v for k, v in cat.higher_points.items()},
                  "ray_checks": {str(k): v for k, v in cat.ray_checks.items()},
                  "alarms": cat.alarms, "discrepancies": cat.discrepancies,
                  "evidence": cat.evidence})


def read_catalog_csv(text: str) -> list[dict]:
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        d = dict(r)
        d["r"] = int(d["r"])
        for k in ("B", "A", "cb_ratio", "xi", "c0", "c1"):
            d[k] = float(d[k]) if d[k] != "" else math.nan
        d["residuals"] = {k: (float(v) if v != "" else math.nan)
                          for k, v in (kv.split("=", 1) for kv in d["residuals"].split(";") if kv)}
        d["flags"] = tuple(f for f in d["flags"].split("|") if f)
        rows.append(d)
    return rows
