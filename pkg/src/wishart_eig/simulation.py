"""Monte Carlo coverage and type I error studies over an (n, beta) grid.

Table 1 measures how often the upper bounds for the largest eigenvalue
cover the true ``lambda_1``; Table 2 measures how often the LR test of
``lambda_2 = lambda_3`` rejects under the null.  The population is
``diag(xi_1 alpha, ..., xi_m alpha, xi_{m+1} beta, ..., xi_p beta)``.

Column conventions
------------------
Table 1: ``U1``/``U2`` are the large-sample and dispersion bounds at
gamma = 0.05 (target rate 0.05); ``L1``/``L2`` the same bounds at
gamma = 0.95 (target 0.95).  One draw per replication feeds all four.
When ``sqrt(2n) z_gamma + n <= 0`` the large-sample interval is the whole
half line and counts as covering.

Table 2: ``5%1``/``1%1`` use the chi-square critical point and
``5%2``/``1%2`` the dispersion critical point.

Replications are split into fixed-size chunks keyed by
``(seed, cell_id, replication)``, so results do not depend on ``workers``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ._backend import BACKEND, kernels
from .inference import (
    DEFAULT_MC_REPS,
    large_sample_factor,
    lr_critical_dispersion,
    lr_critical_large_sample,
    lr_statistic_values,
)
from .matrix import JACOBI_MAX_SWEEPS, JACOBI_TOL, ConvergenceError
from .sampling import DispersionModel, StreamKey, cholesky_factor
from .specfun import DomainError, chi2_upper_quantile

__all__ = [
    "DEFAULT_N_VALUES",
    "DEFAULT_BETA_VALUES",
    "CHUNK_SIZE",
    "SimulationGrid",
    "CellReport",
    "TableResult",
    "run_table1",
    "run_table2",
    "run_table",
    "highlight",
    "to_csv",
    "to_json",
]

DEFAULT_N_VALUES = (5, 10, 20, 50, 100, 500, 1000)
DEFAULT_BETA_VALUES = (1.0, 0.9, 0.8, 0.6, 0.5, 0.3, 0.1, 0.01, 0.001)
CHUNK_SIZE = 10_000
TABLE1_TOL = 0.01
TABLE2_TOL = 0.001
_CRIT_CELL_BASE = 3 << 32


@dataclass(frozen=True)
class SimulationGrid:
    n_values: tuple[int, ...] = DEFAULT_N_VALUES
    beta_values: tuple[float, ...] = DEFAULT_BETA_VALUES
    gammas: tuple[float, ...] | None = None
    reps: int = 50_000
    seed: int = 42
    p: int = 3
    m: int = 1
    xi: tuple[float, ...] = (1.0, 1.0, 1.0)
    alpha: float = 1.0
    mc_reps: int = DEFAULT_MC_REPS

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "beta_values", tuple(float(b) for b in self.beta_values))
        if self.gammas is not None:
            object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
            if not all(0 < g < 1 for g in self.gammas):
                raise DomainError("gammas must lie strictly between 0 and 1")
        xi = tuple(float(x) for x in np.broadcast_to(np.asarray(self.xi, float), (self.p,)))
        object.__setattr__(self, "xi", xi)
        if self.reps < 1:
            raise DomainError(f"reps must be positive, got {self.reps}")
        if not self.n_values or not self.beta_values:
            raise DomainError("grid must contain at least one n and one beta")
        if any(n < self.p for n in self.n_values):
            raise DomainError(f"every n must be at least p={self.p}")
        for beta in self.beta_values:
            self.model(beta)

    def model(self, beta: float) -> DispersionModel:
        return DispersionModel(self.p, self.m, self.xi, self.alpha, beta)

    def cells(self) -> list[tuple[int, int, float]]:
        """``(cell_index, n, beta)`` in row-major (n outer) order."""
        out = []
        for i, n in enumerate(self.n_values):
            for j, beta in enumerate(self.beta_values):
                out.append((i * len(self.beta_values) + j, n, beta))
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


@dataclass
class CellReport:
    n: int
    beta: float
    rates: dict[str, float]
    mc_stderr: dict[str, float]
    reps_used: int
    bold: dict[str, bool] = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "beta": self.beta,
            "rates": self.rates,
            "mc_stderr": self.mc_stderr,
            "bold": self.bold,
            "reps_used": self.reps_used,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CellReport":
        return cls(d["n"], d["beta"], d["rates"], d["mc_stderr"], d["reps_used"], d.get("bold", {}), d.get("error"))


@dataclass
class TableResult:
    table: int
    grid: SimulationGrid
    columns: list[str]
    targets: dict[str, float]
    cells: list[CellReport]

    def cell(self, n: int, beta: float) -> CellReport:
        for c in self.cells:
            if c.n == n and math.isclose(c.beta, beta, rel_tol=0, abs_tol=1e-12):
                return c
        raise KeyError((n, beta))

    def config(self) -> dict:
        return {"table": self.table, "backend": BACKEND, "chunk_size": CHUNK_SIZE, **self.grid.to_dict()}


def highlight(report: CellReport, target: float | dict[str, float], tol: float) -> dict[str, bool]:
    """Flag rates with ``|rate - target| <= tol`` (inclusive).

    ``target`` is either one value for every rate or a per-column mapping.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    out = {}
    for name, rate in report.rates.items():
        t = target[name] if isinstance(target, dict) else target
        out[name] = bool(math.isfinite(rate) and abs(rate - t) <= tol + 1e-12)
    return out


# ---------------------------------------------------------------------------
# column definitions


def _table1_columns(gammas: Sequence[float]) -> list[tuple[str, float, str]]:
    cols = []
    for g in gammas:
        if g == 0.05:
            names = ("U1", "U2")
        elif g == 0.95:
            names = ("L1", "L2")
        else:
            names = (f"large_sample@{g:g}", f"dispersion@{g:g}")
        cols.append((names[0], g, "large_sample"))
        cols.append((names[1], g, "dispersion"))
    order = {"U1": 0, "U2": 1, "L1": 2, "L2": 3}
    return sorted(cols, key=lambda c: (order.get(c[0], 4), gammas.index(c[1])))


def _table2_columns(gammas: Sequence[float]) -> list[tuple[str, float, str]]:
    cols = []
    for g in gammas:
        pct = f"{100 * g:g}%"
        cols.append((pct + "1", g, "large_sample"))
        cols.append((pct + "2", g, "dispersion"))
    return cols


# ---------------------------------------------------------------------------
# workers


def _chunk_counts(task: tuple) -> tuple[int, np.ndarray]:
    """Count events for one chunk of replications; runs in worker processes."""
    (cell_index, kind, seed, cell_id, rep0, reps, n, chol, lambda1, m, thresholds) = task
    vals, conv = kernels.wishart_eigvals(seed, cell_id, rep0, reps, n, chol, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not np.all(conv):
        raise ConvergenceError(f"{int((~conv).sum())} Jacobi decompositions did not converge")
    counts = np.empty(len(thresholds), dtype=np.int64)
    if kind == 1:
        l1 = vals[:, 0]
        for k, divisor in enumerate(thresholds):
            if divisor <= 0:
                counts[k] = reps
            else:
                counts[k] = int(np.count_nonzero(lambda1 <= l1 / divisor))
    else:
        v = lr_statistic_values(vals[:, m:])
        for k, crit in enumerate(thresholds):
            counts[k] = int(np.count_nonzero(v <= crit))
    return cell_index, counts


def _thresholds(table: int, grid: SimulationGrid, n: int, n_index: int, columns) -> list[float]:
    out = []
    for _, g, method in columns:
        if table == 1:
            out.append(large_sample_factor(n, g) if method == "large_sample" else chi2_upper_quantile(n, g))
        elif method == "large_sample":
            out.append(lr_critical_large_sample(grid.p, grid.m, n, g))
        else:
            key = StreamKey(grid.seed, _CRIT_CELL_BASE + n_index)
            out.append(lr_critical_dispersion(grid.p, grid.m, n, g, grid.mc_reps, key))
    return out


def _fingerprint(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def _load_checkpoint(path: str | None, fingerprint: str) -> dict[int, CellReport]:
    done: dict[int, CellReport] = {}
    if not path or not os.path.exists(path):
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue  # partially written trailing line
            if rec.get("fingerprint") == fingerprint:
                done[int(rec["cell_index"])] = CellReport.from_dict(rec["report"])
    return done


def run_table(
    table: int,
    grid: SimulationGrid,
    workers: int = 1,
    checkpoint: str | None = None,
    progress: Callable[[CellReport], None] | None = None,
) -> TableResult:
    """Run Table 1 or Table 2 on ``grid``.

    ``checkpoint`` names a JSON-lines file; each finished cell is appended
    and flushed, and cells already present for the same configuration are
    not recomputed.
    """
    if table not in (1, 2):
        raise DomainError(f"table must be 1 or 2, got {table!r}")
    if table == 1:
        columns = _table1_columns(grid.gammas or (0.05, 0.95))
        tol = TABLE1_TOL
    else:
        if grid.p - grid.m < 2:
            raise DomainError("Table 2 needs p - m >= 2")
        columns = _table2_columns(grid.gammas or (0.05, 0.01))
        tol = TABLE2_TOL
    names = [c[0] for c in columns]
    targets = {name: g for name, g, _ in columns}
    result = TableResult(table, grid, names, targets, [])
    fingerprint = _fingerprint(result.config())
    done = _load_checkpoint(checkpoint, fingerprint)

    cells = grid.cells()
    thresholds: dict[int, list[float]] = {}
    errors: dict[int, str] = {}
    tasks = []
    for cell_index, n, beta in cells:
        if cell_index in done:
            continue
        n_index = grid.n_values.index(n)
        try:
            if n_index not in thresholds:
                thresholds[n_index] = _thresholds(table, grid, n, n_index, columns)
            model = grid.model(beta)
            chol = cholesky_factor(model.covariance())
        except (ArithmeticError, ValueError) as exc:
            errors[cell_index] = f"{type(exc).__name__}: {exc}"
            continue
        cell_id = (table << 32) | cell_index
        for rep0 in range(0, grid.reps, CHUNK_SIZE):
            reps = min(CHUNK_SIZE, grid.reps - rep0)
            tasks.append((cell_index, table, grid.seed, cell_id, rep0, reps, n, chol,
                          float(model.eigenvalues[0]), grid.m, thresholds[n_index]))

    remaining = {}
    for t in tasks:
        remaining[t[0]] = remaining.get(t[0], 0) + 1
    counts = {ci: np.zeros(len(columns), dtype=np.int64) for ci in remaining}
    reports: dict[int, CellReport] = dict(done)
    ckpt = open(checkpoint, "a", encoding="utf-8") if checkpoint else None
    by_index = {ci: (n, beta) for ci, n, beta in cells}

    def finish(ci: int, err: str | None) -> None:
        n, beta = by_index[ci]
        if err is None:
            rates = {name: int(counts[ci][k]) / grid.reps for k, name in enumerate(names)}
            se = {name: math.sqrt(r * (1.0 - r) / grid.reps) for name, r in rates.items()}
            rep = CellReport(n, beta, rates, se, grid.reps)
            rep.bold = highlight(rep, targets, tol)
        else:
            nan = {name: math.nan for name in names}
            rep = CellReport(n, beta, nan, dict(nan), 0, {name: False for name in names}, err)
        reports[ci] = rep
        if ckpt is not None and err is None:
            ckpt.write(json.dumps({"fingerprint": fingerprint, "cell_index": ci, "report": rep.to_dict()}) + "\n")
            ckpt.flush()
        if progress is not None:
            progress(rep)

    def absorb(ci: int, res_counts: np.ndarray | None, err: str | None) -> None:
        if ci in errors:
            return
        if err is not None:
            errors[ci] = err
            finish(ci, err)
            return
        counts[ci] += res_counts
        remaining[ci] -= 1
        if remaining[ci] == 0:
            finish(ci, None)

    try:
        for ci, err in errors.items():
            finish(ci, err)
        if workers <= 1:
            for t in tasks:
                try:
                    _, c = _chunk_counts(t)
                    absorb(t[0], c, None)
                except ArithmeticError as exc:
                    absorb(t[0], None, f"{type(exc).__name__}: {exc}")
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(_chunk_counts, t): t[0] for t in tasks}
                for fut in as_completed(futures):
                    ci = futures[fut]
                    try:
                        _, c = fut.result()
                        absorb(ci, c, None)
                    except ArithmeticError as exc:
                        absorb(ci, None, f"{type(exc).__name__}: {exc}")
    finally:
        if ckpt is not None:
            ckpt.close()

    result.cells = [reports[ci] for ci, _, _ in cells]
    return result


def run_table1(grid: SimulationGrid, workers: int = 1, checkpoint: str | None = None, progress=None) -> TableResult:
    return run_table(1, grid, workers, checkpoint, progress)


def run_table2(grid: SimulationGrid, workers: int = 1, checkpoint: str | None = None, progress=None) -> TableResult:
    return run_table(2, grid, workers, checkpoint, progress)


# ---------------------------------------------------------------------------
# serialisation


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def csv_header(columns: Iterable[str]) -> list[str]:
    columns = list(columns)
    return (["n", "beta"] + columns + [f"{c}_se" for c in columns]
            + [f"{c}_bold" for c in columns] + ["reps_used", "error"])


def to_csv(result: TableResult) -> str:
    """One row per cell: n, beta, rates, standard errors, bold flags.

    The resolved configuration is echoed in a leading ``#`` comment line.
    """
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(result.config(), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(result.columns))
    for c in result.cells:
        row = [str(c.n), repr(float(c.beta))]
        row += [_fmt(c.rates[k]) for k in result.columns]
        row += [_fmt(c.mc_stderr[k]) for k in result.columns]
        row += ["1" if c.bold.get(k) else "0" for k in result.columns]
        row += [str(c.reps_used), c.error or ""]
        w.writerow(row)
    return buf.getvalue()


def to_json(result: TableResult) -> str:
    def clean(x):
        if isinstance(x, float) and math.isnan(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        return x

    doc = {
        "config": result.config(),
        "columns": result.columns,
        "targets": result.targets,
        "cells": [clean(c.to_dict()) for c in result.cells],
    }
    return json.dumps(doc, indent=2) + "\n"
