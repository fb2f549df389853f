"""Control-parameter sweeps and the peak/step order classifier.

A sweep runs ground state -> converged Wehrl entropy for every (size,
control value) pair. Points are independent, so they may be farmed out to
worker processes; each result lands in a slot fixed by (size, step), which
keeps the output identical whatever the schedule.
"""
from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, ParameterError
from .hamiltonians import ground_state
from .models import MODEL_TYPES
from .phasespace import refine_until
from .surfaces import critical_info

LN2 = math.log(2.0)
WORKERS_ENV = "WEHRLQPT_WORKERS"

# which parameter carries the system size for each model
SIZE_FIELD = {"cusp": "K", "dicke": "two_j", "lmg": "two_j", "ibm_lmg": "N", "vibron2d": "N"}


@dataclass(frozen=True)
class Trajectory:
    """A straight path through parameter space.

    ``linked``/``line`` tie a second parameter to the control,
    ``linked = line[0] * control + line[1]``. With ``spacing="clustered"``
    the points follow a sinh map that concentrates them around
    ``cluster_center`` on the length scale ``cluster_scale``.
    """

    control: str
    start: float
    stop: float
    steps: int
    linked: str | None = None
    line: tuple[float, float] | None = None
    spacing: str = "uniform"
    cluster_center: float = 0.0
    cluster_scale: float = 1e-6

    def __post_init__(self):
        if self.steps < 8:
            raise ParameterError(f"a trajectory needs at least 8 steps, got {self.steps}")
        if self.start == self.stop:
            raise ParameterError("trajectory start and stop coincide")
        if (self.linked is None) != (self.line is None):
            raise ParameterError("linked parameter and line must be given together")
        if self.spacing not in ("uniform", "clustered"):
            raise ParameterError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "clustered":
            lo, hi = sorted((self.start, self.stop))
            if not (lo < self.cluster_center < hi) or not self.cluster_scale > 0:
                raise ParameterError("clustered spacing needs an interior center and a positive scale")

    def values(self) -> np.ndarray:
        if self.spacing == "uniform":
            return np.linspace(self.start, self.stop, self.steps)
        c, h = self.cluster_center, self.cluster_scale
        y = np.linspace(math.asinh((self.start - c) / h), math.asinh((self.stop - c) / h), self.steps)
        x = c + h * np.sinh(y)
        x[np.abs(y) < 1e-12] = c
        x[0], x[-1] = self.start, self.stop
        return x


@dataclass(frozen=True)
class Tolerances:
    eig_tol: float = 1e-10
    w_tol: float = 1e-6
    norm_tol: float = 1e-6
    e_tol: float = 1e-10
    tail_tol: float = 1e-8
    max_nodes: int = 200_000_000


@dataclass(frozen=True)
class SweepSpec:
    model: str
    params: dict
    trajectory: Trajectory
    sizes: tuple
    tolerances: Tolerances = Tolerances()
    levels: int = 1

    def __post_init__(self):
        if self.model not in MODEL_TYPES:
            raise ParameterError(f"unknown model {self.model!r}")
        if not self.sizes:
            raise ParameterError("at least one system size is required")
        object.__setattr__(self, "sizes", tuple(self.sizes))
        object.__setattr__(self, "params", dict(self.params))
        # fail early on bad fixed parameters
        for s in self.sizes:
            point_params(self, s, self.trajectory.start)
        self._check_critical_inside()

    def _check_critical_inside(self):
        tr = self.trajectory
        mid = 0.5 * (tr.start + tr.stop)
        info = critical_info(point_params(self, self.sizes[0], mid), tr.control, tr.line,
                             (tr.start, tr.stop))
        if info is None:
            warnings.warn(f"no analytic critical point known for this {self.model} trajectory", stacklevel=3)
            return
        lo, hi = sorted((tr.start, tr.stop))
        if not lo < info.critical_value < hi:
            raise ParameterError(f"critical value {info.critical_value} lies outside [{lo}, {hi}]")

    def critical(self):
        tr = self.trajectory
        mid = 0.5 * (tr.start + tr.stop)
        return critical_info(point_params(self, self.sizes[0], mid), tr.control, tr.line, (tr.start, tr.stop))


def effective_size(model: str, size) -> float:
    """Size on the 'larger is closer to the classical limit' axis (1/K for the cusp)."""
    return 1.0 / size if model == "cusp" else float(size)


def point_params(spec: SweepSpec, size, value):
    tr = spec.trajectory
    kw = dict(spec.params)
    kw[SIZE_FIELD[spec.model]] = size
    kw[tr.control] = float(value)
    if tr.linked is not None:
        kw[tr.linked] = tr.line[0] * float(value) + tr.line[1]
    try:
        return MODEL_TYPES[spec.model](**kw)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


@dataclass(frozen=True)
class SweepRow:
    size: float
    control_value: float
    energy0: float
    gap: float | None
    wehrl: float
    norm_deficit: float
    nodes_used: int
    wall_time: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple
    partial: bool = False
    failure: dict | None = None

    def curve(self, size):
        rows = [r for r in self.rows if r.size == size]
        return (np.array([r.control_value for r in rows]), np.array([r.wehrl for r in rows]))


class SweepAborted(ConvergenceError):
    """A sweep point failed to converge; ``result`` holds the rows finished so far."""

    def __init__(self, message, result, **diagnostics):
        super().__init__(message, **diagnostics)
        self.result = result


def evaluate_point(params, tolerances: Tolerances, levels: int = 1):
    """(energy0, gap, W, norm_deficit, nodes, seconds) for one parameter point."""
    t0 = time.perf_counter()
    t = tolerances
    gs = ground_state(params, eig_tol=t.eig_tol, e_tol=t.e_tol, tail_tol=t.tail_tol, levels=levels)
    w, diag = refine_until(gs, w_tol=t.w_tol, norm_tol=t.norm_tol, max_nodes=t.max_nodes)
    return gs.energy, gs.gap, w, diag["norm_deficit"], diag["nodes"], time.perf_counter() - t0


def _task(args):
    return evaluate_point(*args)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else 1
    if workers < 1:
        raise ParameterError(f"worker count must be >= 1, got {workers}")
    return workers


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate every (size, control value) point of ``spec``.

    Raises :class:`SweepAborted` if any point fails to converge; its
    ``result`` is flagged partial and contains the completed rows.
    """
    workers = resolve_workers(workers)
    values = spec.trajectory.values()
    slots = [(s, v) for s in spec.sizes for v in values]
    tasks = [(point_params(spec, s, v), spec.tolerances, spec.levels) for s, v in slots]
    out = [None] * len(slots)
    failure = None

    if workers == 1:
        for i, task in enumerate(tasks):
            try:
                out[i] = _task(task)
            except ConvergenceError as exc:
                failure = (i, exc)
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_task, task): i for i, task in enumerate(tasks)}
            _, pending = wait(futures, return_when=FIRST_EXCEPTION)
            for fut in pending:
                fut.cancel()
            # tasks start in slot order, so once every started task has finished the
            # lowest failing slot is the same one a serial run would stop at
            started = [f for f in futures if not f.cancelled()]
            wait(started)
            for fut in sorted(started, key=futures.get):
                i = futures[fut]
                exc = fut.exception()
                if exc is None:
                    out[i] = fut.result()
                elif isinstance(exc, ConvergenceError):
                    if failure is None:
                        failure = (i, exc)
                else:
                    raise exc

    rows = tuple(SweepRow(float(s), float(v), *res[:5], wall_time=res[5])
                 for (s, v), res in zip(slots, out) if res is not None)
    if failure is not None:
        i, exc = failure
        size, value = slots[i]
        info = {"size": size, "control": spec.trajectory.control, "control_value": float(value),
                "error": str(exc), **getattr(exc, "diagnostics", {})}
        result = SweepResult(spec, rows, partial=True, failure=info)
        raise SweepAborted(f"sweep aborted at size={size}, {spec.trajectory.control}={value}: {exc}",
                           result, **info)
    return SweepResult(spec, rows)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Thresholds:
    peak: float = 0.3 * LN2
    ret: float = 0.15 * LN2
    step_lo: float = 0.5 * LN2
    step_hi: float = 1.5 * LN2


@dataclass(frozen=True)
class TransitionReport:
    order: str
    critical_estimate: float
    plateau_left: float
    plateau_right: float
    step_height: float
    peak_height: float
    transition_width: float
    size: float | None = None
    per_size: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["per_size"] = [r.to_dict() for r in self.per_size]
        return d


def _crossing(c, w, level, idx_range):
    """First control value in ``idx_range`` order where w crosses ``level`` (linear interpolation)."""
    prev = None
    for i in idx_range:
        if prev is not None:
            a, b = w[prev] - level, w[i] - level
            if a == 0:
                return c[prev]
            if a * b <= 0:
                return c[prev] + (c[i] - c[prev]) * a / (a - b)
        prev = i
    return math.nan


def _argmax_control(c, vals):
    """Control value at the maximum; exact ties resolve to the midpoint of the outermost tied points."""
    hits = np.flatnonzero(vals == np.max(vals))
    return float(0.5 * (c[hits[0]] + c[hits[-1]]))


def classify_curve(control, wehrl, thresholds: Thresholds = Thresholds(), size=None) -> TransitionReport:
    """Peak/step test on a single W(control) curve."""
    c = np.asarray(control, dtype=float)
    w = np.asarray(wehrl, dtype=float)
    n = len(w)
    if n < 8 or len(c) != n:
        raise ParameterError(f"classification needs >= 8 aligned points, got {n}")
    k = max(1, n // 10)
    pl, pr = float(np.median(w[:k])), float(np.median(w[-k:]))
    delta = pr - pl
    i = int(np.argmax(w))
    base = max(pl, pr)
    prominence = float(w[i] - base)
    diag = {"points": n, "plateau_points": k, "argmax": i}

    returns_left = i > 0 and bool(np.any(w[:i] - pl <= thresholds.ret))
    returns_right = i < n - 1 and bool(np.any(w[i + 1:] - pr <= thresholds.ret))
    if prominence > thresholds.peak and returns_left and returns_right:
        half = base + 0.5 * prominence
        left = _crossing(c, w, half, range(i, -1, -1))
        right = _crossing(c, w, half, range(i, n))
        return TransitionReport("first", _argmax_control(c, w), pl, pr, delta, prominence, abs(right - left), size,
                                diagnostics=diag)

    if thresholds.step_lo <= abs(delta) <= thresholds.step_hi and prominence <= thresholds.peak:
        grad = np.gradient(w, c)
        crit = _argmax_control(c, np.abs(grad))
        lo = _crossing(c, w, pl + 0.1 * delta, range(n))
        hi = _crossing(c, w, pl + 0.9 * delta, range(n))
        return TransitionReport("second", crit, pl, pr, delta, prominence, abs(hi - lo), size, diagnostics=diag)

    diag.update({"prominence": prominence, "returns_left": returns_left, "returns_right": returns_right,
                 "step_window": [thresholds.step_lo, thresholds.step_hi]})
    return TransitionReport("ambiguous", math.nan, pl, pr, delta, prominence, math.nan, size, diagnostics=diag)


def classify_order(result: SweepResult, thresholds: Thresholds = Thresholds()) -> TransitionReport:
    """Classify every size, then summarise; the summary takes its numbers from the largest size."""
    return classify_rows(result.spec.model, result.rows, thresholds)


def classify_rows(model: str, rows, thresholds: Thresholds = Thresholds()) -> TransitionReport:
    sizes = sorted(dict.fromkeys(r.size for r in rows), key=lambda s: effective_size(model, s))
    per = []
    for s in sizes:
        sel = [r for r in rows if r.size == s]
        per.append(classify_curve([r.control_value for r in sel], [r.wehrl for r in sel], thresholds, size=s))
    per = tuple(per)
    if not per:
        raise ParameterError("no rows to classify")
    orders = {r.order for r in per}
    order = per[0].order if len(orders) == 1 else "ambiguous"
    top = per[-1]
    diag = {}
    if len(per) >= 2:
        diag["sharpening"] = sharpening(per)
    if len(orders) > 1:
        diag["orders"] = [r.order for r in per]
    return replace(top, order=order, size=None, per_size=per, diagnostics=diag)


def sharpening(reports) -> dict:
    """Whether transition widths strictly decrease along ``reports`` (ordered by effective size)."""
    reports = list(reports)
    if len(reports) < 2:
        raise ParameterError("sharpening needs at least two sizes")
    widths = [r.transition_width for r in reports]
    orders = {r.order for r in reports}
    if len(orders) != 1 or "ambiguous" in orders:
        return {"sharpens": False, "widths": widths, "flag": "mismatched orders"}
    ok = all(b < a for a, b in zip(widths, widths[1:]))
    return {"sharpens": ok, "widths": widths}


# ---------------------------------------------------------------------------
# reference trajectories


def presets() -> dict:
    """Named sweeps bracketing each model's analytic critical point."""
    return {
        "cusp_first": SweepSpec("cusp", {"u": -1.0}, Trajectory("v", -0.2, 0.2, 41, spacing="clustered",
                                                                  cluster_center=0.0, cluster_scale=1e-6),
                                (0.1, 0.01)),
        "cusp_second": SweepSpec("cusp", {"v": 0.0}, Trajectory("u", -1.0, 1.0, 41), (0.1, 0.01)),
        "dicke": SweepSpec("dicke", {"omega0": 1.0, "omega": 1.0}, Trajectory("lam", 0.05, 1.0, 41), (10, 20)),
        "lmg_first": SweepSpec("lmg", {}, Trajectory("gamma_x", -3.0, -1.0, 41, "gamma_y", (-1.0, -4.0)), (20, 40)),
        "lmg_second": SweepSpec("lmg", {}, Trajectory("gamma_x", -3.0, 1.0, 41, "gamma_y", (-1.0, 2.0)), (20, 40)),
        "ibm_lmg_first": SweepSpec("ibm_lmg", {"y": 1 / math.sqrt(2)}, Trajectory("x", 0.6, 0.95, 41), (40, 80)),
        "ibm_lmg_second": SweepSpec("ibm_lmg", {"y": 0.0}, Trajectory("x", 0.6, 0.95, 41), (40, 80)),
        "vibron2d": SweepSpec("vibron2d", {}, Trajectory("xi", 0.05, 0.6, 41), (8, 16)),
    }


__all__ = [
    "SweepAborted", "SweepResult", "SweepRow", "SweepSpec", "Thresholds", "Tolerances", "Trajectory",
    "TransitionReport", "classify_curve", "classify_order", "classify_rows", "effective_size", "evaluate_point", "presets",
    "run_sweep", "sharpening",
]
