"""Strict JSON run configuration.

``parse_config`` checks the whole document and reports every problem at
once through :class:`~wehrlqpt.errors.ConfigError`.
"""
from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError, ParameterError
from .models import MODEL_TYPES
from .sweep import SIZE_FIELD, SweepSpec, Thresholds, Tolerances, Trajectory, presets

TOP_KEYS = {"preset", "model", "params", "sizes", "trajectory", "tolerances", "thresholds", "out", "report",
            "workers", "levels"}
TRAJ_KEYS = {"control", "start", "stop", "steps", "line", "spacing", "cluster_center", "cluster_scale"}
TOL_KEYS = {f.name for f in dataclasses.fields(Tolerances)}
THR_KEYS = {f.name for f in dataclasses.fields(Thresholds)}

# neutral values used to check fixed parameters before a trajectory is known
_PROBE = {
    "cusp": {"u": 0.0, "v": 0.0, "K": 1.0},
    "dicke": {"omega0": 1.0, "omega": 1.0, "lam": 0.0, "two_j": 2},
    "lmg": {"gamma_x": 0.0, "gamma_y": 0.0, "two_j": 2},
    "ibm_lmg": {"x": 0.5, "y": 0.0, "N": 2},
    "vibron2d": {"xi": 0.5, "N": 2},
}

_NUM = r"[+-]?\s*(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_LINE = re.compile(rf"^\s*(\w+)\s*=\s*(?:({_NUM}|[+-])\s*\*?\s*)?(\w+)\s*(?:([+-])\s*(\d+\.?\d*(?:[eE][+-]?\d+)?))?\s*$")


def parse_line(text: str):
    """'gamma_y=-gamma_x+2' -> ('gamma_y', 'gamma_x', (-1.0, 2.0))."""
    m = _LINE.match(text)
    if not m:
        raise ValueError(f"cannot parse line constraint {text!r}; expected 'b = s*a + c'")
    linked, coef, control, sign, off = m.groups()
    coef = (coef or "").replace(" ", "")
    slope = {"": 1.0, "+": 1.0, "-": -1.0}.get(coef)
    if slope is None:
        slope = float(coef)
    offset = 0.0 if off is None else float(sign + off)
    return linked, control, (slope, offset)


@dataclass(frozen=True)
class RunConfig:
    model: str
    params: dict
    sizes: tuple
    trajectory: Trajectory
    tolerances: Tolerances = Tolerances()
    thresholds: Thresholds = Thresholds()
    out: str | None = None
    report: str | None = None
    workers: int = 1
    levels: int = 1
    extra: dict = field(default_factory=dict, compare=False)

    def spec(self) -> SweepSpec:
        return SweepSpec(self.model, self.params, self.trajectory, self.sizes, self.tolerances, self.levels)

    def to_dict(self) -> dict:
        """Fully materialized configuration (every default spelled out)."""
        tr = self.trajectory
        traj = {"control": tr.control, "start": tr.start, "stop": tr.stop, "steps": tr.steps,
                "spacing": tr.spacing}
        if tr.linked is not None:
            traj["line"] = {"linked": tr.linked, "slope": tr.line[0], "offset": tr.line[1]}
        if tr.spacing == "clustered":
            traj["cluster_center"] = tr.cluster_center
            traj["cluster_scale"] = tr.cluster_scale
        return {"model": self.model, "params": dict(self.params), "sizes": list(self.sizes), "trajectory": traj,
                "tolerances": dataclasses.asdict(self.tolerances),
                "thresholds": dataclasses.asdict(self.thresholds),
                "out": self.out, "report": self.report, "workers": self.workers, "levels": self.levels}


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _section(doc, key, allowed, errors):
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        errors.append(f"{key}: expected an object")
        return {}
    for k in sorted(set(sec) - allowed):
        errors.append(f"{key}: unknown key {k!r}")
    out = {}
    for k in sorted(set(sec) & allowed):
        if _number(sec[k]):
            out[k] = sec[k]
        else:
            errors.append(f"{key}.{k}: expected a finite number")
    return out


def _trajectory(raw, errors):
    if not isinstance(raw, dict):
        errors.append("trajectory: expected an object")
        return None
    for k in sorted(set(raw) - TRAJ_KEYS):
        errors.append(f"trajectory: unknown key {k!r}")
    kw = {}
    for k in ("control", "start", "stop", "steps"):
        if k not in raw:
            errors.append(f"trajectory: missing {k!r}")
    if "control" in raw:
        if isinstance(raw["control"], str):
            kw["control"] = raw["control"]
        else:
            errors.append("trajectory.control: expected a parameter name")
    for k in ("start", "stop", "cluster_center", "cluster_scale"):
        if k in raw:
            if _number(raw[k]):
                kw[k] = float(raw[k])
            else:
                errors.append(f"trajectory.{k}: expected a finite number")
    if "steps" in raw:
        if isinstance(raw["steps"], int) and not isinstance(raw["steps"], bool):
            kw["steps"] = raw["steps"]
        else:
            errors.append("trajectory.steps: expected an integer")
    if "spacing" in raw:
        kw["spacing"] = raw["spacing"]
    line = raw.get("line")
    if isinstance(line, str):
        try:
            linked, control, coeffs = parse_line(line)
        except ValueError as exc:
            errors.append(f"trajectory.line: {exc}")
        else:
            if control != kw.get("control"):
                errors.append(f"trajectory.line: right-hand side uses {control!r}, not the control parameter")
            kw["linked"], kw["line"] = linked, coeffs
    elif isinstance(line, dict):
        if set(line) != {"linked", "slope", "offset"}:
            errors.append("trajectory.line: object form needs exactly linked, slope, offset")
        else:
            kw["linked"], kw["line"] = line["linked"], (float(line["slope"]), float(line["offset"]))
    elif line is not None:
        errors.append("trajectory.line: expected a string or object")
    if {"control", "start", "stop", "steps"} <= set(kw):
        try:
            return Trajectory(**kw)
        except ParameterError as exc:
            errors.append(f"trajectory: {exc}")
    return None


def _merge_preset(doc, errors):
    name = doc.get("preset")
    if name is None:
        return doc
    table = presets()
    if name not in table:
        errors.append(f"preset: unknown preset {name!r}; choose from {sorted(table)}")
        return doc
    spec = table[name]
    tr = spec.trajectory
    base = {"model": spec.model, "params": dict(spec.params), "sizes": list(spec.sizes),
            "trajectory": {"control": tr.control, "start": tr.start, "stop": tr.stop, "steps": tr.steps,
                           "spacing": tr.spacing, "cluster_center": tr.cluster_center,
                           "cluster_scale": tr.cluster_scale}}
    if tr.linked is not None:
        base["trajectory"]["line"] = {"linked": tr.linked, "slope": tr.line[0], "offset": tr.line[1]}
    merged = {**base, **{k: v for k, v in doc.items() if k != "preset"}}
    if isinstance(doc.get("params"), dict):
        merged["params"] = {**base["params"], **doc["params"]}
    if isinstance(doc.get("trajectory"), dict):
        merged["trajectory"] = {**base["trajectory"], **doc["trajectory"]}
    return merged


def parse_config(text: str) -> RunConfig:
    """Validate a JSON document; raise ConfigError listing every violation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"malformed JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be a JSON object"])
    errors: list[str] = []
    for k in sorted(set(doc) - TOP_KEYS):
        errors.append(f"unknown key {k!r}")
    doc = _merge_preset(doc, errors)

    model = doc.get("model")
    if model is None:
        errors.append("missing 'model'")
    elif model not in MODEL_TYPES:
        errors.append(f"unknown model {model!r}; choose from {sorted(MODEL_TYPES)}")
        model = None

    params = doc.get("params", {})
    if not isinstance(params, dict):
        errors.append("params: expected an object")
        params = {}
    if model is not None:
        fields = {f.name for f in dataclasses.fields(MODEL_TYPES[model])}
        bad = sorted(set(params) - fields)
        for k in bad:
            errors.append(f"params: {model} has no parameter {k!r}")
        for k, v in params.items():
            if k in fields and not _number(v):
                errors.append(f"params.{k}: expected a finite number")
        if not bad and all(_number(v) for v in params.values()):
            try:
                MODEL_TYPES[model](**{**_PROBE[model], **params})
            except ParameterError as exc:
                errors.append(f"params: {exc}")

    sizes = doc.get("sizes")
    if sizes is None and model is not None and SIZE_FIELD[model] in params:
        sizes = [params[SIZE_FIELD[model]]]
    if sizes is None:
        errors.append("missing 'sizes'")
        sizes = []
    elif not isinstance(sizes, list) or not sizes or not all(_number(s) and s > 0 for s in sizes):
        errors.append("sizes: expected a non-empty list of positive numbers")
        sizes = []
    params = {k: v for k, v in params.items() if model is None or k != SIZE_FIELD[model]}

    if "trajectory" not in doc:
        errors.append("missing 'trajectory'")
        traj = None
    else:
        traj = _trajectory(doc["trajectory"], errors)
    if traj is not None and model is not None:
        fields = {f.name for f in dataclasses.fields(MODEL_TYPES[model])}
        for name in filter(None, (traj.control, traj.linked)):
            if name not in fields or name == SIZE_FIELD[model]:
                errors.append(f"trajectory: {name!r} is not a control parameter of {model}")

    tol = Tolerances(**_section(doc, "tolerances", TOL_KEYS, errors))
    thr = Thresholds(**_section(doc, "thresholds", THR_KEYS, errors))
    if tol.max_nodes != int(tol.max_nodes):
        errors.append("tolerances.max_nodes: expected an integer")
    else:
        tol = dataclasses.replace(tol, max_nodes=int(tol.max_nodes))

    workers = doc.get("workers", 1)
    if not (isinstance(workers, int) and not isinstance(workers, bool) and workers >= 1):
        errors.append("workers: expected an integer >= 1")
    levels = doc.get("levels", 1)
    if not (isinstance(levels, int) and not isinstance(levels, bool) and levels >= 1):
        errors.append("levels: expected an integer >= 1")
    for k in ("out", "report"):
        if doc.get(k) is not None and not isinstance(doc[k], str):
            errors.append(f"{k}: expected a path string")

    if errors:
        raise ConfigError(errors)
    sizes = tuple(int(s) if model != "cusp" and float(s).is_integer() else float(s) for s in sizes)
    cfg = RunConfig(model, dict(params), sizes, traj, tol, thr, doc.get("out"), doc.get("report"),
                    workers, levels)
    try:
        cfg.spec()
    except ParameterError as exc:
        raise ConfigError([f"invariant violation: {exc}"]) from None
    return cfg
