"""Config-driven recovery experiments and their CSV/JSON output.

Each trial is a pure function of ``(config, seed)``. Noise and the
undersampling mask draw from two independent streams derived from the
trial seed, so trial ``k`` is unaffected by how many other trials run.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median
from typing import Iterable

import numpy as np

from . import forward_models as fm
from .grid_signals import build_grid, get_signal, sample
from .metrics import abs_error, rel_error, sparsity_profile, window_preset
from .operators import DEFAULT_ZETA, build_operator, residual_operator
from .solver import (EstimateConfig, LassoProblem, SolverConfig, SolverError,
                     least_squares_estimate, lasso_alpha, solve_generalized_lasso)

__all__ = [
    "TASKS",
    "OPERATORS",
    "DEBLUR_ALPHA",
    "ExperimentConfig",
    "TrialResult",
    "trial_seed",
    "run_trial",
    "run_experiment",
    "run_denoising",
    "run_deblurring",
    "run_undersampling",
    "summarize",
    "emit_results",
    "read_results_json",
    "CSV_COLUMNS",
    "FIGURES",
    "figure_configs",
    "OUTPUT_DIR_ENV",
]

log = logging.getLogger(__name__)

TASKS = ("denoise", "deblur", "undersample")
OPERATORS = ("local", "global", "residual")
# fixed weights for the noise-free deblurring runs
DEBLUR_ALPHA = {"local": 0.1, "global": 0.3, "residual": 0.3}
OUTPUT_DIR_ENV = "RESIDUAL_LASSO_OUTPUT_DIR"

REL_WINDOWS = ("smooth-f1",)
POINT_WINDOWS = ("near-jump-f1", "near-jump-f1-right")


@dataclass(frozen=True)
class ExperimentConfig:
    signal: str = "f1"
    n: int = 128
    task: str = "denoise"
    p: int = 0
    operator: str = "residual"
    zeta: float = DEFAULT_ZETA
    snr_db: float | None = None
    sigma2: float | None = None
    gamma: float | None = None
    blur_units: str = "physical"
    ratio: float | None = None
    alpha: float | str | None = None  # None: "auto", or the fixed deblur weight
    trials: int = 20
    base_seed: int = 0
    rho: float | None = None
    max_iters: int = 10_000
    tol: float = 1e-6
    label: str = ""

    def __post_init__(self):
        get_signal(self.signal)
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.operator not in OPERATORS:
            raise ValueError(f"operator must be one of {OPERATORS}, got {self.operator!r}")
        if self.p not in (0, 1):
            raise ValueError(f"p must be 0 or 1, got {self.p}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        noisy = self.snr_db is not None or self.sigma2 is not None
        if self.snr_db is not None and self.sigma2 is not None:
            raise ValueError("give either snr_db or sigma2, not both")
        if self.task == "denoise":
            if not noisy:
                raise ValueError("denoise needs snr_db or sigma2")
            self._no("gamma", "ratio")
        elif self.task == "deblur":
            if self.gamma is None:
                raise ValueError("deblur needs gamma")
            if noisy:
                raise ValueError("deblur runs are noise-free; drop snr_db/sigma2")
            if self.alpha == "auto":
                raise ValueError("deblur has no noise to calibrate alpha; give a value")
            self._no("ratio")
        else:
            if self.ratio is None:
                raise ValueError("undersample needs ratio")
            if not noisy:
                object.__setattr__(self, "snr_db", 20.0)
            self._no("gamma")
        if self.alpha is not None and self.alpha != "auto":
            object.__setattr__(self, "alpha", float(self.alpha))
            if self.alpha < 0:
                raise ValueError("alpha must be non-negative")
        if not self.label:
            object.__setattr__(self, "label", self.default_label())

    def _no(self, *names):
        for name in names:
            if getattr(self, name) is not None:
                raise ValueError(f"{name} does not apply to task {self.task!r}")

    def default_label(self) -> str:
        parts = [self.signal, self.task, f"{self.operator}-p{self.p}"]
        if self.snr_db is not None:
            parts.append(f"snr{self.snr_db:g}")
        if self.sigma2 is not None:
            parts.append(f"var{self.sigma2:g}")
        if self.gamma is not None:
            parts.append(f"gamma{self.gamma:g}")
        if self.ratio is not None:
            parts.append(f"r{self.ratio:g}")
        return "_".join(parts)

    @property
    def alpha_mode(self) -> str:
        if self.alpha is None:
            return "fixed" if self.task == "deblur" else "auto"
        return "auto" if self.alpha == "auto" else "fixed"

    def fixed_alpha(self) -> float:
        if isinstance(self.alpha, float):
            return self.alpha
        return DEBLUR_ALPHA[self.operator]

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TrialResult:
    label: str
    seed: int
    grid_points: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    e_abs: np.ndarray = field(repr=False)
    e_rel_windows: dict
    e_abs_points: dict
    alpha_used: float
    iterations: int
    converged: bool
    objective: float
    residual_l1: float

    _VECTORS = ("grid_points", "f", "y", "x", "e_abs")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in self._VECTORS:
            d[k] = d[k].tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialResult":
        d = dict(d)
        for k in cls._VECTORS:
            d[k] = np.asarray(d[k], dtype=float)
        return cls(**d)

    def __eq__(self, other):
        if not isinstance(other, TrialResult):
            return NotImplemented
        return json.dumps(self.to_dict()) == json.dumps(other.to_dict())


def trial_seed(cfg: ExperimentConfig, index: int) -> int:
    return cfg.base_seed + index


def _substream_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1, np.uint64)[0])


def _forward(cfg: ExperimentConfig, grid, seed: int):
    """Return (measurement operator, operator assumed during recovery)."""
    n = grid.n
    if cfg.task == "deblur":
        blur = fm.gaussian_blur_model(grid, cfg.gamma, cfg.blur_units)
        return blur, blur
    ident = fm.identity_model(n)
    if cfg.task == "undersample":
        return fm.undersample_model(n, cfg.ratio, _substream_seed(seed, 1)), ident
    return ident, ident


def _window_or_none(name: str, n: int):
    # presets are defined for realistic n; tiny grids report NaN instead
    try:
        return window_preset(name, n)
    except ValueError:
        return None


def run_trial(cfg: ExperimentConfig, index: int = 0) -> TrialResult:
    seed = trial_seed(cfg, index)
    grid = build_grid(cfg.n)
    f = sample(cfg.signal, grid).values
    measure, recover = _forward(cfg, grid, seed)
    clean = measure(f)

    sigma2 = 0.0
    y = clean
    if cfg.task != "deblur":
        spec = fm.NoiseSpec(snr_db=cfg.snr_db, sigma2=cfg.sigma2, seed=_substream_seed(seed, 0))
        sigma2 = fm.resolve_sigma2(spec, clean)
        y = fm.add_noise(clean, spec, reference=clean)

    L = build_operator(cfg.operator, cfg.n, cfg.p, cfg.zeta).matrix
    A = recover.matrix
    try:
        x_est = least_squares_estimate(A, y)
    except SolverError:
        x_est = least_squares_estimate(A, y, EstimateConfig("tikhonov", 1e-6))
    if cfg.alpha_mode == "auto":
        alpha = lasso_alpha(L, x_est, sigma2) if sigma2 > 0 else 0.0
    else:
        alpha = cfg.fixed_alpha()

    scfg = SolverConfig(rho=cfg.rho, max_iters=cfg.max_iters, tol_abs=cfg.tol, tol_rel=cfg.tol)
    rep = solve_generalized_lasso(LassoProblem(A, y, L, alpha), scfg, x_est=x_est)
    x = rep.x

    e_abs = abs_error(x, f)
    e_rel, points = {}, {}
    for w in REL_WINDOWS:
        win = _window_or_none(w, cfg.n)
        e_rel[w] = rel_error(x, f, win, zeros="skip") if win else float("nan")
    for w in POINT_WINDOWS:
        win = _window_or_none(w, cfg.n)
        points[w] = float(e_abs[win.j_min - 1]) if win else float("nan")
    R = residual_operator(cfg.n, cfg.p, cfg.zeta)
    return TrialResult(
        label=cfg.label,
        seed=seed,
        grid_points=np.array(grid.points),
        f=f,
        y=np.asarray(y, dtype=float),
        x=x,
        e_abs=e_abs,
        e_rel_windows=e_rel,
        e_abs_points=points,
        alpha_used=float(alpha),
        iterations=int(rep.iterations),
        converged=bool(rep.converged),
        objective=float(rep.objective),
        residual_l1=sparsity_profile(R, x).l1_norm,
    )


def _run_indexed(args):
    cfg, i = args
    return run_trial(cfg, i)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialResult]:
    """All trials of one config, sorted by seed."""
    n_trials = 1 if cfg.task == "deblur" else cfg.trials  # deblur is deterministic
    work = [(cfg, i) for i in range(n_trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_run_indexed, work))
    else:
        out = [_run_indexed(w) for w in work]
    return sorted(out, key=lambda r: r.seed)


def _require(cfg, task):
    if cfg.task != task:
        raise ValueError(f"expected a {task!r} config, got task={cfg.task!r}")


def run_denoising(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialResult]:
    _require(cfg, "denoise")
    return run_experiment(cfg, jobs)


def run_deblurring(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialResult]:
    _require(cfg, "deblur")
    return run_experiment(cfg, jobs)


def run_undersampling(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialResult]:
    _require(cfg, "undersample")
    return run_experiment(cfg, jobs)


CSV_COLUMNS = (
    ["record", "label", "seed", "j", "s", "f", "y", "x", "e_abs",
     "alpha", "iterations", "converged", "objective", "residual_l1"]
    + [f"e_rel_{w}" for w in REL_WINDOWS]
    + [f"e_abs_{w}" for w in POINT_WINDOWS]
)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_rows(results: Iterable[TrialResult]):
    results = list(results)
    for r in results:
        for j in range(r.x.size):
            yield {"record": "vector", "label": r.label, "seed": r.seed, "j": j + 1,
                   "s": r.grid_points[j], "f": r.f[j], "y": r.y[j], "x": r.x[j],
                   "e_abs": r.e_abs[j]}
    for r in results:
        row = {"record": "summary", "label": r.label, "seed": r.seed,
               "alpha": r.alpha_used, "iterations": r.iterations,
               "converged": r.converged, "objective": r.objective,
               "residual_l1": r.residual_l1}
        row.update({f"e_rel_{k}": v for k, v in r.e_rel_windows.items()})
        row.update({f"e_abs_{k}": v for k, v in r.e_abs_points.items()})
        yield row


def summarize(results: Iterable[TrialResult]) -> list[dict]:
    """Median over seeds of every scalar metric, one record per label."""
    groups: dict[str, list[TrialResult]] = {}
    for r in results:
        groups.setdefault(r.label, []).append(r)
    out = []
    for label, rs in groups.items():
        row = {"label": label, "trials": len(rs),
               "alpha": median(r.alpha_used for r in rs),
               "objective": median(r.objective for r in rs),
               "residual_l1": median(r.residual_l1 for r in rs)}
        for w in rs[0].e_rel_windows:
            row[f"e_rel_{w}"] = median(r.e_rel_windows[w] for r in rs)
        for w in rs[0].e_abs_points:
            row[f"e_abs_{w}"] = median(r.e_abs_points[w] for r in rs)
        out.append(row)
    return out


def _resolve_path(path) -> Path:
    path = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def emit_results(results: Iterable[TrialResult], path, format: str = "csv") -> Path:
    """Write per-trial results.

    CSV: one ``vector`` row per (trial, grid index) followed by one
    ``summary`` row per trial, all under :data:`CSV_COLUMNS`. JSON: a list of
    :meth:`TrialResult.to_dict` records. Relative paths are placed under
    ``$RESIDUAL_LASSO_OUTPUT_DIR`` when it is set.
    """
    path = _resolve_path(path)
    results = list(results)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            for row in _csv_rows(results):
                w.writerow({k: _fmt(v) for k, v in row.items()})
    elif format == "json":
        with open(path, "w") as fh:
            json.dump([r.to_dict() for r in results], fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
    return path


def read_results_json(path) -> list[TrialResult]:
    with open(path) as fh:
        return [TrialResult.from_dict(d) for d in json.load(fh)]


def write_summary_csv(rows: list[dict], path) -> Path:
    path = _resolve_path(path)
    cols = list(rows[0]) if rows else ["label"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})
    return path


FIGURES = (2, 3, 4, 5, 6, 7, 8)


def _pair(base: dict, trials: int, seed: int, ops=("local", "residual")):
    return [ExperimentConfig(operator=op, trials=trials, base_seed=seed, **base) for op in ops]


def figure_configs(figure: int, trials: int = 20, base_seed: int = 0) -> list[ExperimentConfig]:
    """Canned configurations for each figure number (n=128, zeta=1/4)."""
    out: list[ExperimentConfig] = []
    if figure == 2:
        for snr, p in ((20, 0), (10, 0), (5, 0), (20, 1)):
            out += _pair(dict(signal="f1", task="denoise", snr_db=snr, p=p), trials, base_seed)
    elif figure == 3:
        for snr in (4, 8, 16, 32):
            for p in (0, 1):
                out += _pair(dict(signal="f1", task="denoise", snr_db=snr, p=p), trials, base_seed)
    elif figure == 4:
        for gamma, p in ((0.01, 0), (0.05, 0), (0.01, 1)):
            out += _pair(dict(signal="f1", task="deblur", gamma=gamma, p=p), 1, base_seed)
    elif figure == 5:
        for gamma in np.linspace(0.01, 0.08, 8):
            for p in (0, 1):
                out += _pair(dict(signal="f1", task="deblur", gamma=round(float(gamma), 12), p=p),
                             1, base_seed)
    elif figure in (6, 8):
        p = 0 if figure == 6 else 1
        snr = 5 if figure == 6 else 20
        gamma = 0.05 if figure == 6 else 0.01
        out += _pair(dict(signal="f2", task="denoise", snr_db=snr, p=p), trials, base_seed)
        out += _pair(dict(signal="f2", task="deblur", gamma=gamma, p=p), 1, base_seed)
        out += _pair(dict(signal="f2", task="undersample", ratio=0.3, snr_db=20, p=p),
                     trials, base_seed)
    elif figure == 7:
        for r, p in ((0.1, 0), (0.3, 0), (0.5, 0), (0.3, 1)):
            out += _pair(dict(signal="f1", task="undersample", ratio=r, snr_db=20, p=p),
                         trials, base_seed)
    else:
        raise ValueError(f"no canned configuration for figure {figure}; choose from {FIGURES}")
    return out
