"""Experiment harness: seeded multi-start runs, summaries, file outputs.

A config describes one problem, a kernel family with one or more shape
parameters, and solver settings.  The harness samples a shared list of
starts, runs the kernel trust-region method per shape parameter and the
direct baseline on the identical starts, measures accuracy against a
tight-tolerance reference solution, and writes deterministic CSV/JSON
outputs (same seed, same bytes).
"""

from __future__ import annotations

import copy
import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .baseline import BaselineConfig, minimize, reference_solution
from .driver import NormSource, RunReport, TRConfig, resolve_norm_bound, run
from .errors import ConfigError, HermiteTrError
from .kernels import FAMILIES, make_kernel
from .problems import make_problem
from .subproblem import SubproblemConfig
from .surrogate import TrainingSet, fit

OUTPUT_DIR_ENV = "HERMITE_TR_OUTPUT_DIR"
PROBLEM_NAMES = ("one_d", "rosenbrock", "pde2d")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    kernel_family: str
    shapes: tuple            # one or more shape parameters (a sweep)
    grid_n: int = 96
    n_starts: int = 5
    seed: int = 0
    output_dir: str = "results"
    start_box: tuple | None = None   # ((lo...), (hi...)) when problem box is unbounded
    tr: TRConfig = field(default_factory=TRConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def __post_init__(self):
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"problem must be one of {PROBLEM_NAMES}, got {self.problem!r}")
        if self.kernel_family not in FAMILIES:
            raise ConfigError(f"kernel.family must be one of {FAMILIES}")
        if len(self.shapes) < 1 or any(not s > 0 for s in self.shapes):
            raise ConfigError("kernel.shape must be a positive number or list of them")
        if self.n_starts < 1:
            raise ConfigError("n_starts must be >= 1")


@dataclass
class SummaryRow:
    label: str
    avg_fom_evals: float
    avg_foc: float
    avg_rel_err_j: float
    n_failures: int


# -- config loading ---------------------------------------------------


def _pop_section(data, key, path):
    section = data.pop(key, {}) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"{path}.{key} must be a mapping")
    return section


def _reject_unknown(section, path):
    if section:
        raise ConfigError(f"unknown keys under {path}: {sorted(section)}")


def _get(section, key, default, path, cast=float):
    raw = section.pop(key, default)
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: cannot interpret {raw!r}") from None


def load_config(path) -> ExperimentConfig:
    """Parse and fully validate a YAML experiment config; unknown keys reject."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, source=str(path))


def config_from_dict(data, source="<dict>") -> ExperimentConfig:
    data = copy.deepcopy(dict(data))
    problem = data.pop("problem", None)
    if problem is None:
        raise ConfigError(f"{source}: missing required key 'problem'")

    kernel = _pop_section(data, "kernel", source)
    family = kernel.pop("family", None)
    if family is None:
        raise ConfigError(f"{source}: kernel.family is required")
    shape_raw = kernel.pop("shape", None)
    if shape_raw is None:
        raise ConfigError(f"{source}: kernel.shape is required")
    shapes = tuple(float(s) for s in (shape_raw if isinstance(shape_raw, (list, tuple)) else [shape_raw]))
    _reject_unknown(kernel, "kernel")

    tr_raw = _pop_section(data, "trust_region", source)
    sub_raw = _pop_section(data, "subproblem", source)
    base_raw = _pop_section(data, "baseline", source)

    tau_foc = _get(tr_raw, "tau_foc", 1e-6, "trust_region")
    sub = SubproblemConfig(
        kappa_bt=_get(sub_raw, "kappa_bt", 0.5, "subproblem"),
        kappa_arm=_get(sub_raw, "kappa_arm", 1e-4, "subproblem"),
        tau_sub=_get(sub_raw, "tau_sub", tau_foc / 10.0, "subproblem"),
        beta2=_get(sub_raw, "beta2", 0.95, "subproblem"),
        l_max=_get(sub_raw, "l_max", 50, "subproblem", cast=int),
        j_max=_get(sub_raw, "j_max", 30, "subproblem", cast=int),
    )
    _reject_unknown(sub_raw, "subproblem")

    norm_kind = str(tr_raw.pop("norm_source", "estimated"))
    if norm_kind == "analytic":
        norm_kind = "analytic1d"
    norm_source = NormSource(
        kind=norm_kind,
        n_samples=_get(tr_raw, "norm_samples", 50, "trust_region", cast=int),
        seed=_get(tr_raw, "norm_seed", 0, "trust_region", cast=int),
        safety=_get(tr_raw, "norm_safety", 1.0, "trust_region"),
        value=_get(tr_raw, "norm_value", 0.0, "trust_region"),
    )
    tr = TRConfig(
        delta0=_get(tr_raw, "delta0", 0.5, "trust_region"),
        i_max=_get(tr_raw, "i_max", 50, "trust_region", cast=int),
        tau_foc=tau_foc,
        tau_j=_get(tr_raw, "tau_j", 1e-14, "trust_region"),
        xi1=_get(tr_raw, "xi1", 0.1, "trust_region"),
        xi2=_get(tr_raw, "xi2", 0.9, "trust_region"),
        beta_radius=_get(tr_raw, "beta_radius", 0.5, "trust_region"),
        beta1_shrink=_get(tr_raw, "beta1_shrink", 0.5, "trust_region"),
        max_rejects=_get(tr_raw, "max_rejects", 15, "trust_region", cast=int),
        sub=sub,
        norm_source=norm_source,
    )
    _reject_unknown(tr_raw, "trust_region")

    baseline = BaselineConfig(
        tau_foc=_get(base_raw, "tau_foc", tau_foc, "baseline"),
        tau_j=_get(base_raw, "tau_j", tr.tau_j, "baseline"),
        i_max=_get(base_raw, "i_max", 200, "baseline", cast=int),
        kappa_bt=_get(base_raw, "kappa_bt", 0.5, "baseline"),
        kappa_arm=_get(base_raw, "kappa_arm", 1e-4, "baseline"),
        j_max=_get(base_raw, "j_max", 30, "baseline", cast=int),
    )
    _reject_unknown(base_raw, "baseline")

    start_box = data.pop("start_box", None)
    if start_box is not None:
        start_box = (tuple(float(v) for v in start_box[0]),
                     tuple(float(v) for v in start_box[1]))

    cfg = ExperimentConfig(
        problem=str(problem),
        kernel_family=str(family),
        shapes=shapes,
        grid_n=_get(data, "grid_n", 96, source, cast=int),
        n_starts=_get(data, "n_starts", 5, source, cast=int),
        seed=_get(data, "seed", 0, source, cast=int),
        output_dir=str(data.pop("output_dir", "results")),
        start_box=start_box,
        tr=tr,
        baseline=baseline,
    )
    _reject_unknown(data, source)
    return cfg


# -- execution --------------------------------------------------------


def _fresh_problem(cfg, cache={}):
    if cfg.problem == "pde2d":
        # share the assembled discretization across problem instances
        key = ("pde2d", cfg.grid_n)
        if key not in cache:
            cache[key] = make_problem("pde2d", grid_n=cfg.grid_n)
        template = cache[key]
        return dataclasses.replace(template, counter=0)
    return make_problem(cfg.problem, grid_n=cfg.grid_n)


def sample_starts(cfg: ExperimentConfig) -> np.ndarray:
    """Shared start list: uniform in the problem box (or cfg.start_box)."""
    probe = _fresh_problem(cfg)
    if cfg.start_box is not None:
        lower, upper = (np.asarray(b, dtype=float) for b in cfg.start_box)
    else:
        lower, upper = probe.lower, probe.upper
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ConfigError(
            f"problem {cfg.problem} has an unbounded box; provide start_box"
        )
    rng = np.random.default_rng(cfg.seed)
    return rng.uniform(lower, upper, size=(cfg.n_starts, probe.dim))


def _rel_err(j_value, j_ref):
    return abs(j_value - j_ref) / max(abs(j_ref), 1.0)


def run_experiment(cfg: ExperimentConfig):
    """Execute the full protocol; returns (rows, per-run reports, metadata)."""
    starts = sample_starts(cfg)
    ref_problem = _fresh_problem(cfg)
    ref_x, ref_j = reference_solution(ref_problem, starts)

    rows = []
    reports = {}   # label -> list of (start_index, RunReport | failure str)
    norm_info = {}

    for shape in cfg.shapes:
        label = f"eps={shape:g}"
        kernel = make_kernel(cfg.kernel_family, shape, _fresh_problem(cfg).dim)
        tr_cfg = cfg.tr
        norm_evals = 0
        if cfg.tr.norm_source.kind == "estimated":
            # one estimate per shape, shared by all starts (deterministic by seed)
            norm_problem = _fresh_problem(cfg)
            value, norm_evals = resolve_norm_bound(
                cfg.tr.norm_source, kernel, norm_problem, box=cfg.start_box
            )
            tr_cfg = dataclasses.replace(
                cfg.tr, norm_source=NormSource(kind="fixed", value=value)
            )
            norm_info[label] = {"norm_bound": value, "norm_evals": norm_evals}

        group = []
        for k, x0 in enumerate(starts):
            problem = _fresh_problem(cfg)
            try:
                report = run(problem, kernel, x0, tr_cfg)
                group.append((k, report))
            except HermiteTrError as exc:
                group.append((k, f"{type(exc).__name__}: {exc}"))
        reports[label] = group
        rows.append(_summarize(label, group, ref_j))

    baseline_group = []
    for k, x0 in enumerate(starts):
        problem = _fresh_problem(cfg)
        try:
            report = minimize(problem, x0, cfg.baseline)
            baseline_group.append((k, report))
        except HermiteTrError as exc:
            baseline_group.append((k, f"{type(exc).__name__}: {exc}"))
    reports["baseline"] = baseline_group
    rows.append(_summarize("baseline", baseline_group, ref_j))

    meta = {
        "reference_iterate": np.asarray(ref_x).tolist(),
        "reference_j": float(ref_j),
        "reference_fom_evals": ref_problem.counter,
        "starts": starts.tolist(),
        "norm_estimation": norm_info,
    }
    return rows, reports, meta


def _summarize(label, group, ref_j) -> SummaryRow:
    ok = [r for _, r in group if isinstance(r, RunReport)]
    failures = len(group) - len(ok)
    if ok:
        return SummaryRow(
            label=label,
            avg_fom_evals=float(np.mean([r.fom_evals for r in ok])),
            avg_foc=float(np.mean([r.final_foc for r in ok])),
            avg_rel_err_j=float(np.mean([_rel_err(r.final_j, ref_j) for r in ok])),
            n_failures=failures,
        )
    return SummaryRow(label=label, avg_fom_evals=float("nan"),
                      avg_foc=float("nan"), avg_rel_err_j=float("nan"),
                      n_failures=failures)


# -- outputs ----------------------------------------------------------


def output_dir(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, cfg.output_dir))


def format_table(rows) -> str:
    header = f"{'label':>14} {'avg_fom_evals':>14} {'avg_foc':>12} {'avg_rel_err_J':>14} {'fails':>6}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.label:>14} {r.avg_fom_evals:>14.6g} {r.avg_foc:>12.3g} "
            f"{r.avg_rel_err_j:>14.3g} {r.n_failures:>6d}"
        )
    return "\n".join(lines)


def emit_outputs(rows, reports, meta, cfg: ExperimentConfig) -> Path:
    """Write summary.csv, a table mirror, per-run records, and metadata."""
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)

    lines = ["label,avg_fom_evals,avg_foc,avg_rel_err_J,n_failures"]
    for r in rows:
        lines.append(
            f"{r.label},{r.avg_fom_evals:.12g},{r.avg_foc:.12g},"
            f"{r.avg_rel_err_j:.12g},{r.n_failures}"
        )
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    (out / "table.txt").write_text(format_table(rows) + "\n")

    runs_dir = out / "runs"
    runs_dir.mkdir(exist_ok=True)
    for label, group in reports.items():
        tag = label.replace("=", "_")
        for k, item in group:
            path = runs_dir / f"{tag}__start{k}.json"
            if isinstance(item, RunReport):
                item.to_json(path)
            else:
                path.write_text(json.dumps({"failure": item}, indent=1))

    with open(out / "experiment.json", "w") as fh:
        json.dump(meta, fh, indent=1)
    return out


def export_power_field(cfg: ExperimentConfig, grid: int = 101, centers: int = 5) -> Path:
    """Fit a small seeded surrogate and export its power function on a grid.

    Rows are x,power (1D) or x,y,power (2D); power vanishes at the fitted
    centers, which makes the CSV an easy visual check of the trust-region
    geometry.
    """
    if grid < 2 or centers < 1:
        raise ConfigError("grid must be >= 2 and centers >= 1")
    problem = _fresh_problem(cfg)
    if problem.dim > 2:
        raise ConfigError("power-field export supports 1D and 2D problems")
    if cfg.start_box is not None:
        lower, upper = (np.asarray(b, dtype=float) for b in cfg.start_box)
    else:
        lower, upper = problem.lower, problem.upper
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ConfigError("power-field export needs a bounded box")

    kernel = make_kernel(cfg.kernel_family, cfg.shapes[0], problem.dim)
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(lower, upper, size=(centers, problem.dim))
    vals = np.empty(centers)
    grads = np.empty((centers, problem.dim))
    for i, x in enumerate(pts):
        vals[i], grads[i] = problem.eval(x)
    surrogate = fit(kernel, TrainingSet(pts, vals, grads), norm_bound=1.0)

    axes = [np.linspace(lower[d], upper[d], grid) for d in range(problem.dim)]
    out = output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "power_field.csv"
    with open(path, "w") as fh:
        if problem.dim == 1:
            # fold the fitted centers into the grid so their (vanishing)
            # power values appear in the export
            xs = np.unique(np.concatenate([axes[0], pts[:, 0]]))
            fh.write("x,power\n")
            for x in xs:
                fh.write(f"{x:.12g},{surrogate.power(np.array([x])):.12g}\n")
        else:
            fh.write("x,y,power\n")
            for x in axes[0]:
                for y in axes[1]:
                    fh.write(f"{x:.12g},{y:.12g},{surrogate.power(np.array([x, y])):.12g}\n")
            for c in pts:
                fh.write(f"{c[0]:.12g},{c[1]:.12g},{surrogate.power(c):.12g}\n")
    return path
