"""Command-line entry point: ``wehrlqpt {sweep,classify,surface,husimi}``.

Exit codes: 0 success, 2 configuration error, 3 convergence failure
(partial CSV written), 4 ambiguous classification (report still written).
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__, surfaces
from .config import RunConfig, parse_config
from .errors import ConfigError, ConvergenceError, ParameterError, WehrlError
from .hamiltonians import ground_state
from .models import MODEL_TYPES
from .phasespace import ProductQuadrature, husimi, make_grid, refine_until
from .sweep import WORKERS_ENV, SweepAborted, SweepRow, Thresholds, classify_rows, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_AMBIGUOUS = 0, 2, 3, 4
COLUMNS = ["model", "size", "control_name", "control_value", "energy0", "gap", "wehrl", "norm_deficit",
           "nodes_used"]


def fmt(x) -> str:
    """17 significant digits, lowercase exponent; integers and None pass through."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.16e}"


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    return obj


@contextlib.contextmanager
def _sink(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# ---------------------------------------------------------------------------
# sweep / classify


def write_sweep_csv(fh, cfg: RunConfig, rows, partial=False, failure=None):
    fh.write(f"# wehrlqpt {__version__}\n")
    fh.write(f"# config: {json.dumps(cfg.to_dict(), sort_keys=True)}\n")
    fh.write(f"# partial: {'true' if partial else 'false'}\n")
    if failure is not None:
        fh.write(f"# failure: {json.dumps(jsonable(failure), sort_keys=True, default=str)}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    size_is_int = cfg.model != "cusp"
    for r in rows:
        size = int(r.size) if size_is_int else r.size
        w.writerow([cfg.model, fmt(size), cfg.trajectory.control, fmt(r.control_value), fmt(r.energy0),
                    fmt(r.gap), fmt(r.wehrl), fmt(r.norm_deficit), fmt(r.nodes_used)])


def read_sweep_csv(fh):
    """(header dict, model, control name, rows) from a sweep CSV."""
    header, body = {}, []
    for line in fh:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(":")
            header[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(io.StringIO("".join(body)))
    rows, model, control = [], None, None
    for rec in reader:
        model, control = rec["model"], rec["control_name"]
        gap = rec["gap"]
        rows.append(SweepRow(float(rec["size"]), float(rec["control_value"]), float(rec["energy0"]),
                             float(gap) if gap else None, float(rec["wehrl"]), float(rec["norm_deficit"]),
                             int(rec["nodes_used"])))
    return header, model, control, rows


def build_report(model, control, rows, thresholds: Thresholds) -> dict:
    rep = classify_rows(model, rows, thresholds)
    return jsonable({"model": model, "control": control, **rep.to_dict()})


def _write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    with _sink(path) as fh:
        fh.write(text)


def cmd_sweep(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from None
    out = args.out or cfg.out
    report_path = args.report or cfg.report or (os.path.splitext(out)[0] + ".json" if out else None)
    workers = args.workers or (int(os.environ[WORKERS_ENV]) if os.environ.get(WORKERS_ENV) else cfg.workers)
    if args.levels:
        cfg = dataclasses.replace(cfg, levels=args.levels)
    try:
        result = run_sweep(cfg.spec(), workers=workers)
    except SweepAborted as exc:
        with _sink(out) as fh:
            write_sweep_csv(fh, cfg, exc.result.rows, partial=True, failure=exc.result.failure)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    with _sink(out) as fh:
        write_sweep_csv(fh, cfg, result.rows)
    report = build_report(cfg.model, cfg.trajectory.control, result.rows, cfg.thresholds)
    if report_path:
        _write_json(report_path, report)
    else:
        sys.stderr.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_AMBIGUOUS if report["order"] == "ambiguous" else EXIT_OK


def cmd_classify(args) -> int:
    with open(args.csv, encoding="utf-8") as fh:
        header, model, control, rows = read_sweep_csv(fh)
    if not rows:
        raise ConfigError(["CSV contains no rows"])
    thresholds = Thresholds()
    if "config" in header:
        thresholds = Thresholds(**json.loads(header["config"]).get("thresholds", {}))
    try:
        report = build_report(model, control, rows, thresholds)
    except ParameterError as exc:
        raise ConfigError([str(exc)]) from None
    _write_json(args.out, report)
    return EXIT_AMBIGUOUS if report["order"] == "ambiguous" else EXIT_OK


# ---------------------------------------------------------------------------
# surface / husimi


SURFACE_COORDS = {
    "cusp": ("x",),
    "dicke": ("re_alpha", "im_alpha", "theta", "phi"),
    "lmg": ("theta", "phi"),
    "ibm_lmg": ("beta",),
    "vibron2d": ("r",),
}


def _surface_fn(model, p):
    if model == "cusp":
        return lambda x: surfaces.cusp_potential(x, p["u"], p["v"])
    if model == "dicke":
        d = MODEL_TYPES["dicke"](**p)
        return lambda a, b, t, f: surfaces.dicke_surface(complex(a, b), t, f, d)
    if model == "lmg":
        return lambda t, f: surfaces.lmg_surface(t, f, p["gamma_x"], p["gamma_y"])
    if model == "ibm_lmg":
        return lambda b: surfaces.ibm_surface(b, p["x"], p["y"])
    return lambda r: surfaces.vibron_surface(r, p["xi"])


def parse_range(text: str) -> np.ndarray:
    """'a:b:n' -> n evenly spaced values; a bare number -> one value."""
    parts = text.split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    if len(parts) != 3 or int(parts[2]) < 1:
        raise ConfigError([f"bad range {text!r}; expected start:stop:count"])
    return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))


def _pairs(extra):
    """['--a', '1', '--b', '2'] -> {'a': '1', 'b': '2'}."""
    if len(extra) % 2 or not all(k.startswith("--") for k in extra[::2]):
        raise ConfigError([f"expected --name value pairs, got {' '.join(extra)!r}"])
    return {k[2:].replace("-", "_"): v for k, v in zip(extra[::2], extra[1::2])}


def _model_params(model, values: dict, allowed):
    errors = [f"{model} has no parameter {k!r}" for k in values if k not in allowed]
    if errors:
        raise ConfigError(errors)
    out = {}
    for k, v in values.items():
        try:
            out[k] = int(v) if k in ("two_j", "N", "l") else float(v)
        except ValueError:
            errors.append(f"{k}: not a number: {v!r}")
    if errors:
        raise ConfigError(errors)
    return out


def cmd_surface(args, extra) -> int:
    model = args.model
    kv = _pairs(extra)
    coords = SURFACE_COORDS[model]
    axes = {c: parse_range(kv.pop(c)) if c in kv else np.array([0.0]) for c in coords}
    fields = {f.name for f in dataclasses.fields(MODEL_TYPES[model])}
    p = _model_params(model, kv, fields)
    try:
        fn = _surface_fn(model, p)
    except (KeyError, TypeError) as exc:
        raise ConfigError([f"missing parameter for {model} surface: {exc}"]) from None
    with _sink(args.out) as fh:
        fh.write(f"# wehrlqpt {__version__} surface {json.dumps({'model': model, 'params': p})}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*coords, "energy"])
        grids = np.meshgrid(*axes.values(), indexing="ij")
        for point in zip(*(g.ravel() for g in grids)):
            w.writerow([*(fmt(float(x)) for x in point), fmt(fn(*point))])
    return EXIT_OK


def _husimi_columns(grid):
    if isinstance(grid, ProductQuadrature):
        a = np.repeat(grid.plane.coords["alpha"], grid.sphere.size)
        t = np.tile(grid.sphere.coords["theta"], grid.plane.size)
        f = np.tile(grid.sphere.coords["phi"], grid.plane.size)
        return {"re_alpha": a.real, "im_alpha": a.imag, "theta": t, "phi": f}
    c = grid.coords
    if grid.geometry == "plane":
        return {"re_alpha": c["alpha"].real, "im_alpha": c["alpha"].imag}
    return {k: np.asarray(v) for k, v in c.items()}


def cmd_husimi(args, extra) -> int:
    model = args.model
    fields = {f.name for f in dataclasses.fields(MODEL_TYPES[model])}
    p = _model_params(model, _pairs(extra), fields)
    try:
        params = MODEL_TYPES[model](**p)
    except TypeError as exc:
        raise ConfigError([f"incomplete parameters for {model}: {exc}"]) from None
    state = ground_state(params)
    if args.resolution:
        res = tuple(int(x) for x in args.resolution.split(","))
    else:
        _, diag = refine_until(state)
        res = diag["resolution"]
    grid = make_grid(state.basis, res)
    field = husimi(state, grid)
    cols = _husimi_columns(grid)
    with _sink(args.out) as fh:
        fh.write(f"# wehrlqpt {__version__} husimi {json.dumps({'model': model, 'params': p})}"
                 f" resolution={list(res)} norm_deficit={fmt(field.norm_deficit)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*cols, "weight", "q"])
        weights = grid.weights
        for i in range(len(field.q_values)):
            w.writerow([*(fmt(v[i]) for v in cols.values()), fmt(weights[i]), fmt(field.q_values[i])])
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wehrlqpt", description="Wehrl-entropy diagnosis of quantum phase transitions")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run a control-parameter sweep and classify it")
    s.add_argument("--config", required=True, help="JSON run configuration")
    s.add_argument("--out", help="CSV output path (default stdout)")
    s.add_argument("--report", help="JSON report path (default: CSV path with .json)")
    s.add_argument("--workers", type=int, help=f"worker processes (overrides ${WORKERS_ENV} and the config)")
    s.add_argument("--levels", type=int, help="eigenpairs per point; 2 records the gap")

    c = sub.add_parser("classify", help="classify an existing sweep CSV")
    c.add_argument("csv")
    c.add_argument("--out", help="JSON report path (default stdout)")

    for name, text in (("surface", "tabulate a classical energy surface"),
                       ("husimi", "dump the ground-state Husimi function on a quadrature grid")):
        p = sub.add_parser(name, help=text,
                           description=f"{text}. Model parameters and coordinates are given as --name value; "
                                       "coordinates accept start:stop:count ranges.")
        p.add_argument("--model", required=True, choices=sorted(MODEL_TYPES))
        p.add_argument("--out", help="CSV output path (default stdout)")
        if name == "husimi":
            p.add_argument("--resolution", help="comma-separated node counts (default: converged grid)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    if extra and args.command not in ("surface", "husimi"):
        ap.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "classify":
            return cmd_classify(args)
        if args.command == "surface":
            return cmd_surface(args, extra)
        return cmd_husimi(args, extra)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (WehrlError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
