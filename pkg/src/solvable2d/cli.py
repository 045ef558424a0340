"""Command-line front end.

Exit codes: 0 pass, 1 verification or transform failure, 2 unknown entry,
3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import catalog
from .errors import ParamError, Solvable2DError
from .fields import GridData, GridSpec, Point2, ScalarField2, read_grid_csv, sample, write_grid_csv
from .moutard import (TransformRecord, drift_potential_field, moutard_potential_field, reciprocal,
                      seed_from_drift)
from .recovery import recover_q
from .darboux import log_abs, new_potential_field, new_solution, separable_S_tanh
from . import verify as vf

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN, EXIT_IO = 0, 1, 2, 3

GRID_KEYS = ("x_min", "x_max", "y_min", "y_max", "nx", "ny")
TOLERANCE_KEYS = ("tolerance", "order_min", "order_max", "growth_factor")


class UsageError(Exception):
    """Bad input on the command line or in a config file (exit 3)."""


class UnknownEntry(Exception):
    """Catalog name that does not exist (exit 2)."""


# ---------------------------------------------------------------------------
# argument plumbing

def read_config(path) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _real(key, text) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: not a real number: {text!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"{key}: not finite: {text!r}")
    return v


def _extra_params(extra: list[str]) -> dict:
    """``--name value`` pairs left over by argparse (entry parameters)."""
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"{tok} needs a value")
            val = extra[i + 1]
            i += 2
        out[key] = _real(key, val)
    return out


def _entry_params(name: str, params: dict) -> dict:
    if name not in catalog.BUILDERS:
        raise UnknownEntry(name)
    known = catalog.PARAMETERS[name]
    bad = sorted(set(params) - set(known))
    if bad:
        raise UsageError(f"{name}: unknown parameters {bad}; known: {sorted(known)}")
    return {**known, **params}


def _settings(args, config: dict) -> dict:
    out = dict(config)
    for k in GRID_KEYS + TOLERANCE_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _grid(settings: dict, default: GridSpec) -> GridSpec:
    vals = {}
    for k in GRID_KEYS:
        raw = settings.get(k, getattr(default, k))
        vals[k] = _real(k, raw)
    for k in ("nx", "ny"):
        if vals[k] != int(vals[k]):
            raise UsageError(f"{k} must be an integer")
        vals[k] = int(vals[k])
    try:
        return GridSpec(**vals)
    except ParamError as exc:
        raise UsageError(str(exc)) from exc


def _tolerances(settings: dict) -> dict:
    return {"tolerance": _real("tolerance", settings.get("tolerance", vf.DEFAULT_TOLERANCE)),
            "order_min": _real("order_min", settings.get("order_min", vf.DEFAULT_ORDER_RANGE[0])),
            "order_max": _real("order_max", settings.get("order_max", vf.DEFAULT_ORDER_RANGE[1])),
            "growth_factor": _real("growth_factor",
                                   settings.get("growth_factor", vf.DEFAULT_GROWTH_FACTOR))}


def _build(name: str, params: dict) -> catalog.CatalogEntry:
    try:
        return catalog.build(name, **params)
    except ParamError as exc:
        raise UsageError(str(exc)) from exc


def _write_outputs(out_dir: Path, prefix: str, u: GridData, Y: GridData, meta: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_grid_csv(u, out_dir / f"{prefix}_potential.csv")
    write_grid_csv(Y, out_dir / f"{prefix}_solution.csv")
    (out_dir / f"{prefix}_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _meta(entry: str, params: dict, nonsingular, record: TransformRecord, tolerances: dict,
          spec: GridSpec) -> dict:
    return {"entry": entry, "params": params, "nonsingular": nonsingular,
            "transform_record": record.to_dict(), "tolerances": tolerances,
            "grid": {k: getattr(spec, k) for k in GRID_KEYS}}


def _read_grid(path) -> GridData:
    try:
        return read_grid_csv(path)
    except (OSError, ValueError, ParamError) as exc:
        raise UsageError(f"cannot read grid {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands

def cmd_catalog(args, extra) -> int:
    params = _entry_params(args.entry, _extra_params(extra))
    settings = _settings(args, args.config_values)
    entry = _build(args.entry, params)
    spec = _grid(settings, entry.grid)
    u = sample(entry.potential, spec, region=entry.region)
    Y = sample(entry.solution, spec, region=entry.region)
    meta = _meta(entry.name, entry.params, entry.nonsingular, entry.record, _tolerances(settings), spec)
    _write_outputs(Path(args.out), args.prefix or entry.name, u, Y, meta)
    return EXIT_OK


def _is_file_pair(targets) -> bool:
    return len(targets) == 2 or any(t.endswith(".csv") for t in targets)


def cmd_verify(args, extra) -> int:
    settings = _settings(args, args.config_values)
    tol = _tolerances(settings)
    order_range = (tol["order_min"], tol["order_max"])
    if _is_file_pair(args.target):
        if len(args.target) != 2:
            raise UsageError("verify needs an entry name or a potential/solution CSV pair")
        u, Y = _read_grid(args.target[0]), _read_grid(args.target[1])
        if u.spec != Y.spec:
            raise UsageError("potential and solution grids differ")
        name = Path(args.target[0]).stem.removesuffix("_potential")
        report = vf.verify_grids(name, u, Y, order_range, tol["growth_factor"])
    else:
        name = args.target[0]
        params = _entry_params(name, _extra_params(extra))
        entry = _build(name, params)
        spec = _grid(settings, entry.grid)
        report = vf.verify_pair(name, entry.pair, spec, entry.region, tol["tolerance"], order_range,
                                tol["growth_factor"])
    text = report.to_text()
    out = Path(args.report) if args.report else Path(args.out) / f"{name}_verify.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


def _field_source(text: str, params: dict):
    """Catalog entry or grid CSV; returns ``(entry or None, field, spec, region)``."""
    if text in catalog.BUILDERS:
        entry = _build(text, _entry_params(text, params))
        return entry, entry.potential, entry.grid, entry.region
    if not text.endswith(".csv") and not Path(text).exists():
        raise UnknownEntry(text)
    g = _read_grid(text)
    return None, g.to_field(Path(text).stem), g.spec, None


def _transform_moutard(args, params, settings):
    entry, u, spec, region = _field_source(args.u, params)
    if args.seed == "solution":
        if entry is None:
            raise UsageError("--seed solution needs a catalog entry for --u")
        Yh = entry.solution
    else:
        Yh = _read_grid(args.seed).to_field(Path(args.seed).stem)
    spec = _grid(settings, spec)
    u_new = moutard_potential_field(u, Yh)
    Y_new = reciprocal(Yh)
    if entry is not None:
        record = entry.record.add("moutard", seed="solution" if args.seed == "solution" else args.seed)
        name, eparams = entry.name, entry.params
    else:
        record = TransformRecord(initial={"entry": args.u, "params": {}}).add("moutard", seed=args.seed)
        name, eparams = args.u, {}
    return name, eparams, None, record, spec, region, u_new, Y_new


def _transform_twofold(args, params, settings):
    if args.entry not in catalog.BUILDERS:
        raise UnknownEntry(args.entry)
    if args.entry not in ("radial", "twofold-radial"):
        raise UsageError("the twofold step is available for the radial entry")
    if set(params) - {"C"}:
        raise UsageError(f"twofold takes --C only, got {sorted(params)}")
    entry = _build("twofold-radial", {"C": params.get("C", 0.0)})
    spec = _grid(settings, entry.grid)
    mp = entry.machinery_pair
    return (entry.name, entry.params, entry.nonsingular, entry.record, spec, entry.region,
            mp.u, mp.Y)


def _parse_point(text: str) -> Point2:
    try:
        x, y = (float(t) for t in text.split(","))
        return Point2(x, y)
    except ValueError:
        raise UsageError(f"point must be 'x,y', got {text!r}") from None


def _transform_shift(args, params, settings):
    name = args.entry
    if name not in catalog.BUILDERS:
        raise UnknownEntry(name)
    C = params.pop("C", 0.0)
    if name == "trig":
        p, x0 = params.pop("p", 1.0), params.pop("x0", 0.0)
        if params:
            raise UsageError(f"trig shift takes --p --x0 --C, got extra {sorted(params)}")
        spec = _grid(settings, catalog.TRIG_GRID)
        region = catalog.sin_band()
        h = catalog.trig_H()
        u = drift_potential_field(h)
        Y = ScalarField2.from_expression(lambda x, y: np.sin(x) + 0.0 * y, name="sin x")
        s = -2.0 * h + separable_S_tanh(p, x0)
        base = _parse_point(args.base) if args.base else Point2(math.pi / 2, math.pi / 2)
        bases = ()
        shift = {"h": "-ln sin y", "s": "-2h + ln tanh(p(x-x0))", "p": p, "x0": x0}
    elif name == "radial":
        C1, C2 = params.pop("C1", 1.5), params.pop("C2", 1.0)
        if params:
            raise UsageError(f"radial shift takes --C1 --C2 --C, got extra {sorted(params)}")
        spec = _grid(settings, catalog.RADIAL_GRID)
        region = catalog.annulus()
        h = ScalarField2.constant(0.0, "0")
        u = h
        Y = catalog.seed_L1()
        s = log_abs(catalog.radial_B_closed(C1, C2), floor=catalog.LOG_FLOOR)
        base = _parse_point(args.base) if args.base else Point2(spec.x_max, spec.y_max)
        bases = (Point2(spec.x_max, spec.y_max), Point2(spec.x_min, spec.y_max),
                 Point2(spec.x_min, spec.y_min), Point2(spec.x_max, spec.y_min))
        shift = {"h": "0", "s": "-ln|B|", "C1": C1, "C2": C2}
    else:
        raise UsageError("shift is available for the radial and trig entries")
    Q = recover_q(Y, seed_from_drift(h), base, C, region=region, bases=bases)
    u_new = new_potential_field(u, h, s)
    Y_new = new_solution(Y, Q, h, s)
    record = TransformRecord(initial={"entry": name, "params": {}}).add(
        "nonlocal_shift", seed=Y.name, constant=C, base_point=[base.x, base.y], **shift)
    return name, {**shift, "C": C}, None, record, spec, region, u_new, Y_new


def cmd_transform(args, extra) -> int:
    params = _extra_params(extra)
    settings = _settings(args, args.config_values)
    kind = args.kind
    if kind == "moutard":
        res = _transform_moutard(args, params, settings)
    elif kind == "twofold":
        res = _transform_twofold(args, params, settings)
    else:
        res = _transform_shift(args, params, settings)
    name, eparams, nonsingular, record, spec, region, u_new, Y_new = res
    u = sample(u_new, spec, region=region)
    Y = sample(Y_new, spec, region=region)
    meta = _meta(name, eparams, nonsingular, record, _tolerances(settings), spec)
    _write_outputs(Path(args.out), args.prefix or kind, u, Y, meta)
    return EXIT_OK


def ppm_bytes(g: GridData, lo_pct: float = 2.0, hi_pct: float = 98.0) -> bytes:
    """Binary PPM, one pixel per node, top row = largest y; blue-white-red, masked black."""
    v = g.values
    m = g.mask & np.isfinite(v)
    rgb = np.zeros(v.shape + (3,), dtype=np.uint8)
    if m.any():
        lo, hi = np.percentile(v[m], [lo_pct, hi_pct])
        t = np.full(v.shape, 0.5) if hi <= lo else np.clip((v - lo) / (hi - lo), 0.0, 1.0)
        # blue (t=0) -> white (t=1/2) -> red (t=1)
        r = np.where(t < 0.5, 2 * t, 1.0)
        b = np.where(t < 0.5, 1.0, 2 * (1 - t))
        gch = np.where(t < 0.5, 2 * t, 2 * (1 - t))
        img = np.stack([r, gch, b], axis=-1)
        rgb[m] = np.rint(255 * img[m]).astype(np.uint8)
    header = f"P6\n{g.spec.nx} {g.spec.ny}\n255\n".encode("ascii")
    return header + rgb[::-1].tobytes()


def cmd_export_ppm(args, extra) -> int:
    if extra:
        raise UsageError(f"unexpected arguments {extra}")
    g = _read_grid(args.csv)
    if not (0 <= args.lo < args.hi <= 100):
        raise UsageError("need 0 <= lo < hi <= 100")
    if not g.mask.any():
        print(f"warning: {args.csv}: every node is masked; writing a black image", file=sys.stderr)
    try:
        Path(args.output).write_bytes(ppm_bytes(g, args.lo, args.hi))
    except OSError as exc:
        raise UsageError(f"cannot write {args.output}: {exc}") from exc
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_grid_flags(p):
    for k in GRID_KEYS:
        p.add_argument("--" + k.replace("_", "-"), dest=k, default=None)
    p.add_argument("--config", default=None, help="key=value file (grid bounds, tolerances)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--prefix", default=None, help="output file prefix")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="solvable2d", description=__doc__.splitlines()[0],
                                 allow_abbrev=False)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", allow_abbrev=False, help="sample a catalog entry to CSV plus meta JSON")
    p.add_argument("entry")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("verify", allow_abbrev=False, help="verify a catalog entry or a potential/solution CSV pair")
    p.add_argument("target", nargs="+")
    p.add_argument("--report", default=None)
    for k in TOLERANCE_KEYS:
        p.add_argument("--" + k.replace("_", "-"), dest=k, default=None)
    _add_grid_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transform", allow_abbrev=False, help="apply a Moutard, twofold or shift step")
    p.add_argument("kind", choices=("moutard", "twofold", "shift"))
    p.add_argument("--u", default=None, help="catalog entry or potential CSV (moutard)")
    p.add_argument("--seed", default="solution", help="'solution' or seed CSV (moutard)")
    p.add_argument("--entry", default=None, help="catalog entry (twofold, shift)")
    p.add_argument("--base", default=None, help="base point 'x,y' for Q (shift)")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("export-ppm", allow_abbrev=False, help="heatmap of a grid CSV")
    p.add_argument("csv")
    p.add_argument("output")
    p.add_argument("--lo", type=float, default=2.0)
    p.add_argument("--hi", type=float, default=98.0)
    p.set_defaults(func=cmd_export_ppm)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args, extra = ap.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    try:
        args.config_values = read_config(args.config) if getattr(args, "config", None) else {}
        if args.command == "transform":
            if args.kind == "moutard" and not args.u:
                raise UsageError("transform moutard needs --u")
            if args.kind != "moutard" and not args.entry:
                raise UsageError(f"transform {args.kind} needs --entry")
        return args.func(args, extra)
    except UnknownEntry as exc:
        print(f"unknown entry {exc.args[0]!r}; known: {', '.join(catalog.ENTRY_NAMES)}", file=sys.stderr)
        return EXIT_UNKNOWN
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Solvable2DError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
