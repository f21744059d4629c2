"""Benchmark and Pareto-scatter experiments, plus result (de)serialization."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conformal import ScoreConfig, jplus_gp_sequences, jplus_ranks
from .errors import ConditioningError, DomainError
from .gp import Dataset, SearchConfig, fit, normal_quantiles, predict, reml_select
from .kernel import CovarianceSpec
from .metrics import coverage_curve, iae, iae_grid, rmse
from .sweep import METHODS, method_bounds
from .testbed import get_function, sample_uniform

log = logging.getLogger(__name__)

CSV_FIELDS = (
    "function",
    "method",
    "p",
    "repetition",
    "seed",
    "coverage",
    "mean_width",
    "iae",
    "rmse",
    "wall_time_s",
)
FAILURE_LIMIT = 0.2


class BenchmarkAborted(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    function: str = "goldstein_price"
    p_values: tuple = (1, 5, 9)
    n_train: int | None = None  # 20 * d when unset
    n_test: int = 1100
    repetitions: int = 40
    alpha: float = 0.9
    beta: float = 1.0
    methods: tuple = ("gaussian_reml", "fcp_gp", "jplus_gp", "asym_jplus_gp")
    base_seed: int = 0
    iae_grid_size: int = 99
    n_starts: int = 8
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p_values", tuple(int(p) for p in self.p_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        fn = get_function(self.function)
        if self.n_train is None:
            object.__setattr__(self, "n_train", 20 * fn.dim)
        if min(self.n_train, self.n_test, self.repetitions, self.iae_grid_size) < 1:
            raise DomainError("counts must be at least 1")
        if not self.p_values or min(self.p_values) < 1:
            raise DomainError("p_values must be a nonempty list of positive integers")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if not self.methods:
            raise DomainError("methods must be nonempty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise DomainError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - names
        if extra:
            raise DomainError(f"unknown config keys {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class RunRecord:
    function: str
    method: str
    p: int
    repetition: int
    seed: int
    coverage: float
    mean_width: float
    iae: float
    rmse: float
    wall_time_s: float = 0.0

    @property
    def failed(self) -> bool:
        return math.isnan(self.coverage)

    def sort_key(self):
        return (self.function, self.method, self.p, self.repetition)


def evaluate_method(method, model, x_test, z_test, alpha, levels, cfg):
    """(coverage at alpha, mean width at alpha, IAE over levels, RMSE)."""
    all_levels = np.append(levels, alpha)
    lower, upper, pred = method_bounds(method, model, x_test, all_levels, cfg)
    curve = coverage_curve(lower, upper, z_test)
    return (
        float(curve[-1]),
        float(np.mean(upper[-1] - lower[-1])),
        iae(curve[:-1], levels),
        rmse(pred, z_test),
    )


def run_repetition(config: ExperimentConfig, r: int) -> list:
    fn = get_function(config.function)
    seed = config.base_seed + r
    rng = np.random.default_rng(seed)
    x_train = sample_uniform(fn.domain, config.n_train, rng)
    x_test = sample_uniform(fn.domain, config.n_test, rng)
    data = Dataset(x_train, fn(x_train))
    z_test = fn(x_test)
    levels = iae_grid(config.iae_grid_size)
    cfg = ScoreConfig(beta=config.beta)
    records = []
    for p in config.p_values:
        try:
            spec = reml_select(data, p, SearchConfig(n_starts=config.n_starts, seed=seed))
            model = fit(spec, data)
        except ConditioningError as exc:
            log.warning("%s p=%d rep=%d: %s", config.function, p, r, exc)
            nan = float("nan")
            records += [
                RunRecord(config.function, m, p, r, seed, nan, nan, nan, nan) for m in config.methods
            ]
            continue
        for method in config.methods:
            t0 = time.perf_counter()
            cov, width, iae_, err = evaluate_method(method, model, x_test, z_test, config.alpha, levels, cfg)
            wall = time.perf_counter() - t0 if config.timing else 0.0
            records.append(RunRecord(config.function, method, p, r, seed, cov, width, iae_, err, wall))
    return records


def _run_one(args):
    return run_repetition(*args)


def run_records(config: ExperimentConfig, jobs: int = 1) -> list:
    tasks = [(config, r) for r in range(config.repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_one, tasks))
    else:
        chunks = [_run_one(t) for t in tasks]
    records = sorted((rec for chunk in chunks for rec in chunk), key=RunRecord.sort_key)
    n_failed = sum(rec.failed for rec in records)
    if records and n_failed / len(records) > FAILURE_LIMIT:
        raise BenchmarkAborted(f"{n_failed} of {len(records)} runs failed to factorize")
    return records


def summarize(records) -> list:
    """Mean metrics per (function, method, p) over successful repetitions."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.function, rec.method, rec.p), []).append(rec)
    rows = []
    for (function, method, p), recs in sorted(groups.items()):
        ok = [r for r in recs if not r.failed]
        mean = lambda attr: float(np.mean([getattr(r, attr) for r in ok])) if ok else float("nan")  # noqa: E731
        rows.append(
            {
                "function": function,
                "method": method,
                "p": p,
                "n_runs": len(ok),
                "n_failed": len(recs) - len(ok),
                "coverage": mean("coverage"),
                "mean_width": mean("mean_width"),
                "iae": mean("iae"),
                "rmse": mean("rmse"),
            }
        )
    return rows


def summary_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_summary.csv")


def run_benchmark(config: ExperimentConfig, out, fmt: str = "csv", jobs: int = 1) -> list:
    """Run all repetitions, write the per-run records to ``out`` and a summary next to it."""
    records = run_records(config, jobs)
    emit_results(records, fmt, out)
    summary = summarize(records)
    _write_csv(summary_path(out), list(summary[0]) if summary else ["function"], summary)
    return summary


# ---------------------------------------------------------------------------
# serialization


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _json_number(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return "%.17g" % v


def _write_csv(path, fields, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


def emit_results(records, fmt: str, out) -> None:
    """Write run records as CSV or as a JSON array with the same field names."""
    if fmt not in ("csv", "json"):
        raise DomainError(f"unknown format {fmt!r}")
    rows = [dataclasses.asdict(r) for r in records]
    if fmt == "csv":
        _write_csv(out, CSV_FIELDS, rows)
        return
    lines = []
    for row in rows:
        parts = []
        for f in CSV_FIELDS:
            v = row[f]
            text = json.dumps(v) if isinstance(v, str) else _json_number(v)
            parts.append(f"{json.dumps(f)}: {text}")
        lines.append("  {" + ", ".join(parts) + "}")
    with open(out, "w") as fh:
        fh.write("[\n" + ",\n".join(lines) + ("\n" if lines else "") + "]\n")


def _coerce(row):
    out = {}
    for f in CSV_FIELDS:
        v = row[f]
        if f in ("function", "method"):
            out[f] = str(v)
        elif f in ("p", "repetition", "seed"):
            out[f] = int(v)
        else:
            out[f] = float(v)
    return RunRecord(**out)


def read_results(path, fmt: str | None = None) -> list:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    if fmt == "json":
        return [_coerce(row) for row in json.loads(path.read_text())]
    with open(path, newline="") as fh:
        return [_coerce(row) for row in csv.DictReader(fh)]


# ---------------------------------------------------------------------------
# IAE versus RMSE scatter


@dataclass(frozen=True)
class ParetoConfig:
    function: str = "goldstein_price"
    n_train: int = 150
    n_test: int = 1500
    n_samples: int = 200
    seed: int = 0
    p: int = 2
    variance_range: tuple = (1e-2, 1e2)  # multiples of the REML variance
    lengthscale_range: tuple = (1e-1, 1e1)  # multiples of each REML lengthscale
    iae_grid_size: int = 99
    beta: float = 1.0
    n_starts: int = 8

    def __post_init__(self):
        get_function(self.function)
        if self.n_samples < 0 or self.n_train < 3 or self.n_test < 1:
            raise DomainError("invalid Pareto sizes")


@dataclass(frozen=True)
class ParetoRow:
    kind: str  # "sample", "reml" or "jplus_gp"
    variance: float
    lengthscales: tuple
    rmse_loo: float
    iae_loo: float
    rmse_test: float
    iae_test: float


@dataclass
class ParetoResult:
    rows: list = field(default_factory=list)
    n_skipped: int = 0

    def of_kind(self, kind):
        return [r for r in self.rows if r.kind == kind]


def _gaussian_iae(mean, sd, truths, levels):
    ql, qu = normal_quantiles(levels)
    lower = mean[None, :] + ql[:, None] * sd[None, :]
    upper = mean[None, :] + qu[:, None] * sd[None, :]
    return iae(coverage_curve(lower, upper, truths), levels)


def gaussian_scores(model, x_test, z_test, levels):
    """(rmse_loo, iae_loo, rmse_test, iae_test) for the posterior intervals."""
    loo_mean, loo_sd = model.loo_cache
    z = model.data.values
    m, s = predict(model, x_test)
    return (
        rmse(loo_mean, z),
        _gaussian_iae(loo_mean, loo_sd, z, levels),
        rmse(m, z_test),
        _gaussian_iae(m, s, z_test, levels),
    )


def _jplus_gp_curve(model, cfg, x, truths, levels):
    lo_seq, hi_seq = jplus_gp_sequences(model, cfg, x)
    ranks = np.array([jplus_ranks(model.n, a, strict=False) for a in levels])
    return coverage_curve(lo_seq[ranks[:, 0] - 1], hi_seq[ranks[:, 1] - 1], truths)


def jplus_gp_scores(model, cfg, x_test, z_test, levels):
    """Like :func:`gaussian_scores` but with J+GP intervals.

    The LOO IAE is nested: for each training point the J+GP interval is
    built from the other n - 1 points.
    """
    loo_mean, _ = model.loo_cache
    z = model.data.values
    hits = np.zeros(len(levels))
    for j in range(model.n):
        sub = fit(model.spec, model.data.drop(j), model.nugget)
        hits += _jplus_gp_curve(sub, cfg, model.data.points[j : j + 1], z[j : j + 1], levels)
    m, _ = predict(model, x_test)
    return (
        rmse(loo_mean, z),
        iae(hits / model.n, levels),
        rmse(m, z_test),
        iae(_jplus_gp_curve(model, cfg, x_test, z_test, levels), levels),
    )


def run_pareto(config: ParetoConfig, out=None) -> ParetoResult:
    fn = get_function(config.function)
    rng = np.random.default_rng(config.seed)
    x_train = sample_uniform(fn.domain, config.n_train, rng)
    x_test = sample_uniform(fn.domain, config.n_test, rng)
    data = Dataset(x_train, fn(x_train))
    z_test = fn(x_test)
    levels = iae_grid(config.iae_grid_size)
    cfg = ScoreConfig(beta=config.beta)

    spec = reml_select(data, config.p, SearchConfig(n_starts=config.n_starts, seed=config.seed))
    model = fit(spec, data)
    result = ParetoResult()
    result.rows.append(ParetoRow("reml", spec.variance, spec.lengthscales, *gaussian_scores(model, x_test, z_test, levels)))
    result.rows.append(
        ParetoRow("jplus_gp", spec.variance, spec.lengthscales, *jplus_gp_scores(model, cfg, x_test, z_test, levels))
    )

    draw_rng = np.random.default_rng([config.seed, 1])
    vlo, vhi = np.log(config.variance_range)
    llo, lhi = np.log(config.lengthscale_range)
    for _ in range(config.n_samples):
        variance = spec.variance * np.exp(draw_rng.uniform(vlo, vhi))
        ls = np.asarray(spec.lengthscales) * np.exp(draw_rng.uniform(llo, lhi, size=fn.dim))
        theta = CovarianceSpec(variance, ls, config.p)
        try:
            m = fit(theta, data)
        except ConditioningError:
            result.n_skipped += 1
            continue
        result.rows.append(ParetoRow("sample", theta.variance, theta.lengthscales, *gaussian_scores(m, x_test, z_test, levels)))
    if out is not None:
        write_pareto(result, fn.dim, out)
    return result


def write_pareto(result: ParetoResult, dim: int, out) -> None:
    fields = ["kind", "variance"] + [f"lengthscale_{i + 1}" for i in range(dim)]
    fields += ["rmse_loo", "iae_loo", "rmse_test", "iae_test"]
    rows = []
    for r in result.rows:
        row = dataclasses.asdict(r)
        for i, v in enumerate(r.lengthscales):
            row[f"lengthscale_{i + 1}"] = v
        rows.append(row)
    _write_csv(out, fields, rows)
