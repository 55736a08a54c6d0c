"""Experiment orchestration for the simulation suite.

A JSON experiment document selects an application and its parameter
block; runs execute trial-parallel with per-trial seeds derived from the
base seed, rows are sorted by trial index before writing so the CSV is
byte-identical at any worker count, and a per-group summary with 95%
confidence half-widths goes to standard output.  A sweep repeats the run
over values of one parameter under a shared base seed, which keeps
scheme and value comparisons paired.

The CSV dialect is UTF-8 with a header row, floats printed to 9
significant digits, and a leading schema-version plus config-hash pair
on every row for downstream consumers.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import json
import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import fairness, pilotreuse, powermin, random_access, solvers
from .manifolds import (
    ComplexCircle,
    ComplexStiefel,
    Product,
    project_tangent,
    random_point,
    retract,
)

SCHEMA_VERSION = 1

APPS = ("app1", "app2", "app3", "app4", "selftest")

DEFAULT_DEVICE_COUNTS = (46, 92, 184, 368)

SELFTEST_COLUMNS = ("schema_version", "config_hash", "trial", "check",
                    "passed", "value")

_APP_CONFIG_TYPES = {
    "app1": fairness.FairnessConfig,
    "app2": powermin.EEConfig,
    "app3": pilotreuse.PilotConfig,
    "app4": random_access.GfraConfig,
}

# parameters consumed by the runner rather than the app config
_EXTRA_PARAMS = {"app4": ("device_counts",)}

_MODULE_COLUMNS = {
    "app1": fairness.CSV_COLUMNS,
    "app2": powermin.CSV_COLUMNS,
    "app3": pilotreuse.CSV_COLUMNS,
    "app4": random_access.CSV_COLUMNS,
}

_SUMMARY_GROUPS = {
    "app1": (("method", "p_max_dbm"), ("common_rate_bps_hz",)),
    "app2": (("scheme",), ("p_ut_dbm",)),
    "app3": (("scheme", "user_class"), ("se_bps_hz",)),
    "app4": (("scheme", "device_count"), ("throughput", "sum_se_bpcu")),
    "selftest": (("check",), ("value",)),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an application, its parameters, and run plumbing.

    ``output_path`` may be None to skip the CSV file; ``parallelism``
    and the output location never affect row contents.
    """

    app: str
    params: Mapping = dataclasses.field(default_factory=dict)
    trials: int = 1
    base_seed: int = 0
    parallelism: int = 1
    output_path: Optional[str] = "results.csv"

    def __post_init__(self):
        if self.app not in APPS:
            raise ConfigError(f"unknown app {self.app!r}; expected one of "
                              f"{', '.join(APPS)}")
        object.__setattr__(self, "params", dict(self.params))
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if int(self.parallelism) < 1:
            raise ConfigError("parallelism must be >= 1")


@dataclasses.dataclass
class RunResult:
    """Rows plus bookkeeping from one experiment or sweep."""

    columns: Tuple[str, ...]
    rows: List[Dict]
    failures: List[Tuple[int, str]]
    output_path: Optional[str]

    @property
    def ok(self) -> bool:
        return not self.failures and all(
            row.get("passed", True) for row in self.rows)


@dataclasses.dataclass(frozen=True)
class ExperimentRecord:
    """One metric value from one trial in long format.

    ``extras`` carries the app-specific grouping columns as ordered
    key/value pairs.
    """

    config_hash: str
    seed: int
    metric_name: str
    metric_value: float
    extras: Tuple[Tuple[str, object], ...] = ()


def _tupleize(value):
    if isinstance(value, (list, tuple)):
        return tuple(_tupleize(v) for v in value)
    return value


def _jsonable(value):
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable hex digest of the science-relevant part of the config.

    Parallelism and the output path are deliberately excluded, and keys
    are sorted, so field order and run plumbing never change the hash.
    """
    payload = {"app": cfg.app, "params": _jsonable(cfg.params),
               "trials": int(cfg.trials), "base_seed": int(cfg.base_seed)}
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def build_app_config(app: str, params: Mapping):
    """Instantiate the application's config, splitting runner extras.

    Unknown keys and invalid values raise :class:`ConfigError` naming
    the offending field.
    """
    if app == "selftest":
        if params:
            key = sorted(params)[0]
            raise ConfigError(f"unknown parameter {key!r} for selftest")
        return None, {}
    cls = _APP_CONFIG_TYPES[app]
    known = {f.name for f in dataclasses.fields(cls)}
    extra_keys = _EXTRA_PARAMS.get(app, ())
    kwargs, extras = {}, {}
    for key, value in params.items():
        if key in extra_keys:
            extras[key] = _tupleize(value)
        elif key in known:
            kwargs[key] = _tupleize(value)
        else:
            raise ConfigError(f"unknown parameter {key!r} for {app}")
    try:
        return cls(**kwargs), extras
    except ValueError as exc:
        raise ConfigError(f"{app}: {exc}") from exc


def app_columns(app: str) -> Tuple[str, ...]:
    if app == "selftest":
        return SELFTEST_COLUMNS
    cols = _MODULE_COLUMNS[app]
    if cols[0] != "schema_version":
        cols = ("schema_version", "config_hash") + cols
    return cols


# ---------------------------------------------------------------------------
# Task execution


def _execute_task(task: Dict) -> List[Dict]:
    app = task["app"]
    if app == "app1":
        rows, _ = fairness.run_trial_app1(task["cfg"], task["seed"])
    elif app == "app2":
        rows = powermin.run_trial_app2(task["cfg"], task["seed"])
    elif app == "app3":
        rows = pilotreuse.run_trial_app3(task["cfg"], task["seed"])
    elif app == "app4":
        rows = random_access.run_trial_app4(
            task["cfg"], task["codebook"], task["schedules"], task["seed"],
            task["device_count"])
    else:
        raise ValueError(f"unexpected app {app!r}")
    for row in rows:
        row["trial"] = task["trial"]
    return rows


def _build_tasks(cfg: ExperimentConfig, app_cfg, extras) -> List[Dict]:
    if cfg.app == "app4":
        counts = extras.get("device_counts", DEFAULT_DEVICE_COUNTS)
        if not counts or any(int(c) < 1 for c in counts):
            raise ConfigError("device_counts entries must be >= 1")
        codebook = random_access.dft_beam_codebook(
            app_cfg.n_h, app_cfg.sector_deg)
        schedules = random_access.build_schedules(app_cfg, codebook)
        tasks = []
        for i, count in enumerate(counts):
            for t in range(cfg.trials):
                tasks.append({
                    "app": "app4", "cfg": app_cfg, "codebook": codebook,
                    "schedules": schedules, "device_count": int(count),
                    "seed": cfg.base_seed + i * cfg.trials + t,
                    "trial": t, "order": (i, t),
                })
        return tasks
    return [{"app": cfg.app, "cfg": app_cfg,
             "seed": cfg.base_seed + t, "trial": t, "order": (t,)}
            for t in range(cfg.trials)]


def _run_tasks(tasks: List[Dict], parallelism: int):
    results: Dict[tuple, List[Dict]] = {}
    failures: List[Tuple[int, str]] = []
    if parallelism <= 1 or len(tasks) <= 1:
        for task in tasks:
            try:
                results[task["order"]] = _execute_task(task)
            except Exception as exc:
                failures.append((task["trial"],
                                 f"{type(exc).__name__}: {exc}"))
    else:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=parallelism) as pool:
            pending = {pool.submit(_execute_task, task): task
                       for task in tasks}
            for fut in concurrent.futures.as_completed(pending):
                task = pending[fut]
                try:
                    results[task["order"]] = fut.result()
                except Exception as exc:
                    failures.append((task["trial"],
                                     f"{type(exc).__name__}: {exc}"))
    ordered = []
    for task in sorted(tasks, key=lambda item: item["order"]):
        ordered.extend(results.get(task["order"], []))
    failures.sort()
    return ordered, failures


# ---------------------------------------------------------------------------
# Self test


def _selftest_rows() -> List[Dict]:
    """Deterministic manifold, gradient, and solver spot checks."""
    rows = []

    def record(check, passed, value):
        rows.append({"trial": 0, "check": check, "passed": bool(passed),
                     "value": float(value)})

    worst_point, worst_tan, worst_retract = 0.0, 0.0, 0.0
    kinds = (ComplexCircle(32), ComplexStiefel(12, 3),
             Product((ComplexCircle(8), ComplexStiefel(6, 2))))
    for manifold in kinds:
        for seed in range(20):
            x = random_point(manifold, seed)
            worst_point = max(worst_point, manifold.point_defect(x.ambient))
            rng = np.random.default_rng(1000 + seed)
            raw = rng.standard_normal(np.shape(x.ambient)) \
                + 1j * rng.standard_normal(np.shape(x.ambient))
            v = project_tangent(manifold, x, raw)
            worst_tan = max(worst_tan,
                            manifold.tangent_defect(x.ambient, v.ambient))
            y = retract(manifold, x, v)
            worst_retract = max(worst_retract,
                                manifold.point_defect(y.ambient))
    record("manifold_point_feasibility", worst_point <= 1e-10, worst_point)
    record("manifold_tangency", worst_tan <= 1e-10, worst_tan)
    record("manifold_retraction_feasibility", worst_retract <= 1e-10,
           worst_retract)

    worst_grad = 0.0
    grid_u = np.linspace(-0.8, 0.8, 30)
    rng = np.random.default_rng(5)
    cost, egrad = random_access.mask_fit_objective(
        16, grid_u, rng.random(30), 0.5 + rng.random(30))
    problem = solvers.Problem(ComplexCircle(16), cost, egrad)
    for seed in range(3):
        x = random_point(ComplexCircle(16), seed)
        worst_grad = max(worst_grad, solvers.gradient_check(
            problem, x, num_directions=10, seed=seed))
    record("mask_fit_gradient", worst_grad <= 1e-5, worst_grad)

    worst_gap = 0.0
    for seed in range(5):
        rng = np.random.default_rng(200 + seed)
        z = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        a = 0.5 * (z + z.conj().T)
        sphere = ComplexStiefel(8, 1)

        def cost(x, a=a):
            w = x.ambient
            return float((w.conj().T @ a @ w).real.item())

        def egrad(x, a=a):
            return 2.0 * (a @ x.ambient)

        problem = solvers.Problem(sphere, cost, egrad)
        x0 = random_point(sphere, seed)
        _, trace = solvers.solve_rcg(
            problem, x0, solvers.SolverOptions(max_iters=300))
        gap = abs(trace.final_cost - np.linalg.eigvalsh(a)[0])
        worst_gap = max(worst_gap, gap)
    record("solver_rayleigh_oracle", worst_gap <= 1e-8, worst_gap)
    return rows


# ---------------------------------------------------------------------------
# CSV and summary


def _format_cell(value, column: str):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    if value is None:
        raise ValueError(f"row missing value for column {column!r}")
    return value


def write_csv(path: str, columns: Sequence[str], rows: List[Dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [_format_cell(row.get(col), col) for col in columns])


def iter_records(cfg: ExperimentConfig, result: RunResult):
    """Yield :class:`ExperimentRecord` instances for a single run.

    Seeds are reconstructed from the trial index using the same layout
    the runner used, including the per-load stride for app4.
    """
    group_cols, metric_cols = _SUMMARY_GROUPS[cfg.app]
    counts = None
    if cfg.app == "app4":
        counts = [int(c) for c in cfg.params.get(
            "device_counts", DEFAULT_DEVICE_COUNTS)]
    for row in result.rows:
        trial = int(row.get("trial", 0))
        if counts is None:
            seed = cfg.base_seed + trial
        else:
            seed = cfg.base_seed \
                + counts.index(int(row["device_count"])) * cfg.trials + trial
        extras = tuple((c, row[c]) for c in group_cols)
        for metric in metric_cols:
            yield ExperimentRecord(
                config_hash=row["config_hash"], seed=seed,
                metric_name=metric, metric_value=float(row[metric]),
                extras=extras)


def summarize(app: str, rows: List[Dict],
              extra_groups: Sequence[str] = ()) -> List[str]:
    """Per-group metric means with 95% normal-approximation half-widths."""
    group_cols, metric_cols = _SUMMARY_GROUPS[app]
    group_cols = tuple(extra_groups) + tuple(group_cols)
    groups: Dict[tuple, List[Dict]] = {}
    for row in rows:
        key = tuple(row[c] for c in group_cols)
        groups.setdefault(key, []).append(row)
    lines = []
    for key in sorted(groups, key=str):
        tag = ", ".join(f"{c}={v}" for c, v in zip(group_cols, key))
        for metric in metric_cols:
            vals = np.asarray([float(g[metric]) for g in groups[key]])
            half = 0.0
            if vals.size > 1:
                half = 1.96 * vals.std(ddof=1) / math.sqrt(vals.size)
            lines.append(f"{metric}[{tag}] mean={vals.mean():.6g} "
                         f"+-{half:.3g} (n={vals.size})")
    return lines


# ---------------------------------------------------------------------------
# Entry points


def run_experiment(cfg: ExperimentConfig, quiet: bool = False) -> RunResult:
    """Execute one experiment, write its CSV, and print the summary.

    Failed trials are reported and skipped; surviving rows are still
    written so long runs degrade rather than vanish.
    """
    digest = config_hash(cfg)
    if cfg.app == "selftest":
        rows, failures = _selftest_rows(), []
    else:
        app_cfg, extras = build_app_config(cfg.app, cfg.params)
        tasks = _build_tasks(cfg, app_cfg, extras)
        rows, failures = _run_tasks(tasks, cfg.parallelism)
    for row in rows:
        row["schema_version"] = SCHEMA_VERSION
        row["config_hash"] = digest
    columns = app_columns(cfg.app)
    if cfg.output_path:
        write_csv(cfg.output_path, columns, rows)
    if not quiet:
        for line in summarize(cfg.app, rows):
            print(line)
        for trial, message in failures:
            print(f"trial {trial} failed: {message}")
    return RunResult(columns=columns, rows=rows, failures=failures,
                     output_path=cfg.output_path)


def _sweep_point_value(app: str, param: str, value):
    """Wrap scalar sweep values for tuple-typed parameters."""
    if isinstance(value, (list, tuple)):
        return _tupleize(value)
    for field in dataclasses.fields(_APP_CONFIG_TYPES[app]):
        if field.name == param and isinstance(field.default, tuple):
            return (value,)
    if param in _EXTRA_PARAMS.get(app, ()):
        return (value,)
    return value


def run_sweep(cfg: ExperimentConfig, param: str, values: Sequence,
              quiet: bool = False) -> RunResult:
    """Repeat the experiment over values of one parameter.

    Every value runs under the same base seed, so cross-value
    comparisons are paired.  Sweep identity lands in the app's native
    sweep columns when it has them and in an appended sweep_param /
    sweep_value pair otherwise.
    """
    if cfg.app == "selftest":
        raise ConfigError("selftest does not take parameter sweeps")
    if not values:
        raise ConfigError("sweep needs at least one value")
    columns = app_columns(cfg.app)
    native = "sweep_axis" in columns
    if not native:
        columns = columns + ("sweep_param", "sweep_value")
    combined: List[Dict] = []
    failures: List[Tuple[int, str]] = []
    for value in values:
        applied = _sweep_point_value(cfg.app, param, value)
        point = dataclasses.replace(
            cfg, params={**cfg.params, param: applied}, output_path=None)
        result = run_experiment(point, quiet=True)
        label = value if np.isscalar(value) else str(value)
        for row in result.rows:
            if native:
                row["sweep_axis"] = param
                row["sweep_value"] = label
            else:
                row["sweep_param"] = param
                row["sweep_value"] = label
        combined.extend(result.rows)
        failures.extend(result.failures)
    if cfg.output_path:
        write_csv(cfg.output_path, columns, combined)
    if not quiet:
        sweep_col = "sweep_value"
        for line in summarize(cfg.app, combined, extra_groups=(sweep_col,)):
            print(line)
        for trial, message in failures:
            print(f"trial {trial} failed: {message}")
    return RunResult(columns=columns, rows=combined, failures=failures,
                     output_path=cfg.output_path)
