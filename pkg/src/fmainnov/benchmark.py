"""Monte Carlo replication of the estimation-error and order-selection studies.

A benchmark is a list of design cells. Every replication of a cell draws its
own FMA sample from ``(base_seed, rep)``, fits the requested estimators for
each d in the cell's grid and, optionally, runs all selectors. Records are
collected in replication order whatever the pool size, so the output files
are byte-identical between runs with the same configuration.
"""

import csv
import json
import math
import os
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import estimation_error, fma1_innovations, fma1_iterative, fma1_projection
from .core import center, fpca, lag_cov
from .errors import FmaError, ValidationError
from .innovations import fit_fma
from .selection import select_all
from .simulate import SimConfig, simulate_fma

METHODS = ("proj", "iter", "inn")
SELECTORS = ("d_tve", "d_ind", "d_ffpe", "q_aicc", "q_lb", "q_ffpe")


@dataclass(frozen=True)
class DesignCell:
    n: int
    D: int = 21
    q: int = 1
    kappas: tuple = (0.8,)
    sigma_profile: str = "fast"
    d_grid: tuple = (1, 2, 3)
    methods: tuple = METHODS
    reps: int = 200
    base_seed: int = 0
    selection: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        object.__setattr__(self, "d_grid", tuple(int(d) for d in self.d_grid))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.reps < 1:
            raise ValidationError("reps must be at least 1")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValidationError(f"unknown methods {sorted(bad)}; expected {METHODS}")
        if any(d < 1 for d in self.d_grid):
            raise ValidationError("d_grid entries must be positive")
        self.sim_config(0)

    def sim_config(self, seed=None) -> SimConfig:
        return SimConfig(
            n=self.n, D=self.D, q=self.q, kappas=self.kappas,
            sigma_profile=self.sigma_profile,
            seed=self.base_seed if seed is None else seed,
        )

    @property
    def key(self) -> dict:
        return {
            "sigma_profile": self.sigma_profile,
            "n": self.n,
            "D": self.D,
            "q": self.q,
            "kappas": " ".join(repr(k) for k in self.kappas),
        }


@dataclass
class BenchmarkConfig:
    design: list
    selection_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.design:
            raise ValidationError("benchmark design is empty")
        self.design = [c if isinstance(c, DesignCell) else DesignCell(**c) for c in self.design]

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(doc, dict) or "design" not in doc:
            raise ValidationError(f"{path}: expected an object with a 'design' list")
        try:
            return cls(doc["design"], doc.get("selection_params", {}))
        except TypeError as exc:
            raise ValidationError(f"{path}: {exc}") from None


def _estimate(method, sample, d, q, eig):
    if method == "inn":
        return fma1_innovations(fit_fma(sample, d, q, eig=eig))
    if q != 1:
        raise ValidationError(f"{method} estimator is defined for FMA(1) only")
    if method == "proj":
        return fma1_projection(sample, d, eig=eig)
    return fma1_iterative(sample, d, eig=eig)


def run_replication(cell: DesignCell, rep: int, selection_params=None) -> dict:
    """One replication: estimation errors per (d, method) and selector choices.

    Returns ``{"rep", "errors": [(d, method, value, status)], "selection": {..}}``;
    failures are recorded as NaN with the error class name as status.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sample, truth = simulate_fma(cell.sim_config(), rep)
        sample = center(sample)
        eig = fpca(lag_cov(sample, 0))
        target = truth.theta_true[0] if truth.theta_true else np.zeros((cell.D, cell.D))
        errors = []
        for d in cell.d_grid:
            for method in cell.methods:
                try:
                    est = _estimate(method, sample, d, max(cell.q, 1), eig)
                    status = "ok"
                    if method == "iter" and not est.diagnostics["converged"]:
                        status = "no_convergence"
                    errors.append((d, method, estimation_error(target, est), status))
                except FmaError as exc:
                    errors.append((d, method, math.nan, type(exc).__name__))
        chosen = {}
        if cell.selection:
            try:
                rpt = select_all(sample, **(selection_params or {}))
                chosen = {s: getattr(rpt, s) for s in SELECTORS}
            except FmaError as exc:
                chosen = {"error": type(exc).__name__}
    return {"rep": rep, "errors": errors, "selection": chosen}


def _job(args):
    cell, rep, params = args
    return run_replication(cell, rep, params)


def pool_size() -> int:
    raw = os.environ.get("FMA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"FMA_THREADS must be an integer, got {raw!r}") from None


def run_cell(cell: DesignCell, selection_params=None, workers: int | None = None) -> list:
    """All replications of a cell, in replication order."""
    workers = pool_size() if workers is None else workers
    jobs = [(cell, rep, selection_params) for rep in range(cell.reps)]
    if workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def summarize(values):
    """``(count, mean, standard error)`` of the finite values; SE is None below two."""
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if v.size == 0:
        return 0, math.nan, None
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else None
    return int(v.size), mean, se


@dataclass
class BenchmarkResult:
    cells: list
    records: list  # one list of replication dicts per cell

    def table_rows(self):
        rows = []
        for cell, recs in zip(self.cells, self.records):
            for d in cell.d_grid:
                for method in cell.methods:
                    vals = [e[2] for r in recs for e in r["errors"] if e[0] == d and e[1] == method]
                    ok, mean, se = summarize(vals)
                    rows.append({**cell.key, "d": d, "method": method, "reps": len(vals),
                                 "ok": ok, "mean": mean, "se": se})
        return rows

    def selection_rows(self):
        rows = []
        for cell, recs in zip(self.cells, self.records):
            if not cell.selection:
                continue
            for sel in SELECTORS:
                counts = Counter(r["selection"].get(sel) for r in recs if sel in r["selection"])
                for value in sorted(counts):
                    rows.append({**cell.key, "selector": sel, "value": value, "count": counts[value]})
            failed = sum(1 for r in recs if "error" in r["selection"])
            if failed:
                rows.append({**cell.key, "selector": "failed", "value": "", "count": failed})
        return rows

    def audit_rows(self):
        for cell, recs in zip(self.cells, self.records):
            for r in recs:
                for d, method, err, status in r["errors"]:
                    yield {**cell.key, "rep": r["rep"], "d": d, "method": method,
                           "error": err, "status": status}


def run_benchmark(config: BenchmarkConfig, workers: int | None = None) -> BenchmarkResult:
    records = [run_cell(c, config.selection_params, workers) for c in config.design]
    return BenchmarkResult(config.design, records)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _write(path, rows, fields):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


KEY_FIELDS = ["sigma_profile", "n", "D", "q", "kappas"]


def write_outputs(result: BenchmarkResult, report, selection=None, audit=None) -> None:
    _write(report, result.table_rows(), KEY_FIELDS + ["d", "method", "reps", "ok", "mean", "se"])
    if selection:
        _write(selection, result.selection_rows(), KEY_FIELDS + ["selector", "value", "count"])
    if audit:
        _write(audit, result.audit_rows(), KEY_FIELDS + ["rep", "d", "method", "error", "status"])


def cell_to_dict(cell: DesignCell) -> dict:
    out = asdict(cell)
    out["kappas"] = list(cell.kappas)
    out["d_grid"] = list(cell.d_grid)
    out["methods"] = list(cell.methods)
    return out
