"""Convergence, Lebesgue-constant and norm-bound sweeps over families of meshes.

Every sweep returns plain records; failures (Padua attribution breaking down,
singular systems) become records with a status instead of aborting the sweep.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from basis import CHEBYSHEV, TotalDegreeBasis, dimension
from data_io import write_json
from histopolation import DEFAULT_QUADRATURE_EXTRA, pipeline, reorder_first
from histopolation_errors import HistopolationError, SelectionError, SolveError
from lebesgue import (
    UNIFORM,
    EvaluationGrid,
    evaluation_grid,
    lebesgue_constant,
    loglog_slope,
    nodal_lebesgue_constant,
    norm_bound,
)
from mesh import Triangulation, friedrichs_keller, random_axes_fk
from quadrature import moment_matrix
from selection import METHODS, PADUA, PaduaConfig, SelectionResult, fk_max_degree, padua_points, select

HISTOPOLATION = "histopolation"
REGRESSION = "regression"
MODES = (HISTOPOLATION, REGRESSION)

FK = "fk"
RANDOM_AXES = "random-axes"
MESH_FAMILIES = (FK, RANDOM_AXES)

STATUS_OK = "ok"
STATUS_SELECTION_FAILED = "selection_failed"
STATUS_SOLVE_FAILED = "solve_failed"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class BenchmarkFunction:
    id: str
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    known_sup_norm: float
    description: str = ""

    def __call__(self, x, y):
        return self.evaluate(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


FUNCTIONS: dict[str, BenchmarkFunction] = {
    "f1": BenchmarkFunction("f1", lambda x, y: np.exp(x + y) * np.sin(np.pi * x * y), 4.71, "exp(x+y) sin(pi x y)"),
    "f2": BenchmarkFunction("f2", lambda x, y: np.abs(x + y), 2.0, "|x+y|"),
    "f3": BenchmarkFunction("f3", lambda x, y: 1.0 / (1.0 + 10.0 * (x * x + y * y)), 1.0, "1/(1+10(x^2+y^2))"),
}


def get_function(function_id: str) -> BenchmarkFunction:
    try:
        return FUNCTIONS[function_id]
    except KeyError:
        raise ValueError(f"unknown test function {function_id!r}; expected one of {', '.join(FUNCTIONS)}") from None


def sup_error(f, h, grid: EvaluationGrid | None = None) -> float:
    """max over the grid of |f - h|."""
    grid = grid or evaluation_grid()
    x, y = grid.x, grid.y
    diff = np.asarray(f(x, y), dtype=float) - np.asarray(h(x, y), dtype=float)
    return float(np.abs(diff).max())


def grid_sup_norm(f, grid: EvaluationGrid | None = None) -> float:
    return sup_error(f, lambda x, y: np.zeros_like(x), grid)


def regression_degree(m: int) -> int:
    """d = m + floor(sqrt(m))."""
    return m + math.isqrt(m)


def build_mesh(family: str, n: int, seed: int | None = None) -> Triangulation:
    if family == FK:
        return friedrichs_keller(n)
    if family == RANDOM_AXES:
        return random_axes_fk(n, 0 if seed is None else seed)
    raise ValueError(f"unknown mesh family {family!r}; expected one of {', '.join(MESH_FAMILIES)}")


def _status_of(error: Exception) -> str:
    if isinstance(error, SelectionError):
        return STATUS_SELECTION_FAILED
    if isinstance(error, SolveError):
        return STATUS_SOLVE_FAILED
    return STATUS_FAILED


@dataclass
class ConvergenceRecord:
    n: int
    N: int
    m: int
    d: int
    method: str
    mode: str
    sup_error: float = float("nan")
    lebesgue: float = float("nan")
    cond_estimate: float = float("nan")
    zeta_eta: float | None = None
    wall_time: float = 0.0
    function: str = ""
    mesh: str = ""
    seed: int | None = None
    status: str = STATUS_OK
    message: str = ""


@dataclass
class SweepConfig:
    ns: Sequence[int] = (10, 20, 40)
    methods: Sequence[str] = METHODS
    functions: Sequence[str] = ("f1",)
    modes: Sequence[str] = (HISTOPOLATION,)
    mesh_family: str = FK
    seeds: Sequence[int] = (0,)
    grid_resolution: int = 101
    grid_kind: str = UNIFORM
    kind: str = CHEBYSHEV
    quadrature_extra: int = DEFAULT_QUADRATURE_EXTRA
    padua: PaduaConfig = field(default_factory=PaduaConfig)
    pivot_tol: float = 1e-12
    compute_lebesgue: bool = True
    compute_bound: bool = False
    # explicit (m, d) override the degree rules
    degree: int | None = None
    ddeg: int | None = None
    progress: bool = True

    def __post_init__(self):
        for method in self.methods:
            if method not in METHODS:
                raise ValueError(f"unknown selection method {method!r}")
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}")
        for function_id in self.functions:
            get_function(function_id)
        if self.mesh_family not in MESH_FAMILIES:
            raise ValueError(f"unknown mesh family {self.mesh_family!r}")

    def degrees(self, n: int) -> tuple[int, int]:
        m = self.degree if self.degree is not None else fk_max_degree(n)
        d = self.ddeg if self.ddeg is not None else regression_degree(m)
        return m, d


def _sort_key(record) -> tuple:
    return (record.n, record.method, record.function, record.mode, -1 if record.seed is None else record.seed)


def _run_case(
    tri: Triangulation,
    selection: SelectionResult,
    f: BenchmarkFunction,
    mode: str,
    m: int,
    d: int,
    cfg: SweepConfig,
    grid: EvaluationGrid,
    record: ConvergenceRecord,
) -> None:
    started = time.perf_counter()
    h = pipeline(
        tri,
        selection.method,
        m,
        d if mode == REGRESSION else None,
        f,
        kind=cfg.kind,
        quadrature_extra=cfg.quadrature_extra,
        selection=selection,
    )
    record.wall_time = time.perf_counter() - started
    record.sup_error = sup_error(f, h, grid)
    record.cond_estimate = float(h.diagnostics["condition"])

    if mode == REGRESSION and cfg.compute_bound:
        ordered = tri.reordered(reorder_first(tri.n_triangles, selection.indices))
        W = moment_matrix(ordered, None, TotalDegreeBasis(d, cfg.kind))
        record.zeta_eta = norm_bound(W, W.take_rows(len(selection))).total


def _failed_records(
    cfg: SweepConfig,
    n: int,
    seeds: Sequence[int | None],
    error: Exception,
    m: int = 0,
    d: int = 0,
) -> list[ConvergenceRecord]:
    """One failed record per (seed, method, function, mode) when no mesh or degree exists for n."""
    return [
        ConvergenceRecord(
            n=n,
            N=0,
            m=m,
            d=d if mode == REGRESSION else m,
            method=method,
            mode=mode,
            function=function_id,
            seed=seed,
            status=_status_of(error),
            message=f"n={n}: {error}",
        )
        for seed in seeds
        for method in cfg.methods
        for function_id in cfg.functions
        for mode in cfg.modes
    ]


def convergence_sweep(cfg: SweepConfig) -> list[ConvergenceRecord]:
    """Sup errors of every (n, seed, method, function, mode) combination, sorted by (n, method, function)."""
    grid = evaluation_grid(cfg.grid_resolution, cfg.grid_kind)
    seeds: Sequence[int | None] = cfg.seeds if cfg.mesh_family == RANDOM_AXES else (None,)
    records: list[ConvergenceRecord] = []

    pbar_n = tqdm(cfg.ns, desc="Processing mesh", position=0, disable=not cfg.progress)
    for n in pbar_n:
        pbar_n.set_description(f"Processing mesh n={n}")
        try:
            m, d = cfg.degrees(n)
        except (HistopolationError, ValueError) as e:
            logging.warning(f"Skipping n={n}: {e}")
            records.extend(_failed_records(cfg, n, seeds, e))
            continue
        for seed in seeds:
            try:
                tri = build_mesh(cfg.mesh_family, n, seed)
            except (HistopolationError, ValueError) as e:
                logging.warning(f"Skipping {cfg.mesh_family} mesh n={n} seed={seed}: {e}")
                records.extend(_failed_records(cfg, n, (seed,), e, m, d))
                continue

            pbar_methods = tqdm(cfg.methods, desc="-Selecting", position=1, leave=False, disable=not cfg.progress)
            for method in pbar_methods:
                pbar_methods.set_description(f"-Selecting {method}")
                selection = None
                selection_error = None
                lebesgue = float("nan")
                try:
                    selection = select(tri, method, m, kind=cfg.kind, padua=cfg.padua, pivot_tol=cfg.pivot_tol)
                    if cfg.compute_lebesgue:
                        lebesgue = lebesgue_constant(selection, TotalDegreeBasis(m, cfg.kind), tri, grid)
                except HistopolationError as e:
                    selection_error = e
                    logging.warning(f"{method} selection failed on {tri.name} (m={m}): {e}")

                for function_id in cfg.functions:
                    f = get_function(function_id)
                    for mode in cfg.modes:
                        record = ConvergenceRecord(
                            n=n,
                            N=tri.n_triangles,
                            m=m,
                            d=d if mode == REGRESSION else m,
                            method=method,
                            mode=mode,
                            lebesgue=lebesgue,
                            function=function_id,
                            mesh=tri.name,
                            seed=seed,
                        )
                        if selection_error is not None:
                            record.status = _status_of(selection_error)
                            record.message = str(selection_error)
                        else:
                            try:
                                _run_case(tri, selection, f, mode, m, d, cfg, grid, record)
                            except HistopolationError as e:
                                record.status = _status_of(e)
                                record.message = str(e)
                                logging.warning(f"{method}/{mode} on {tri.name} failed for {function_id}: {e}")
                        records.append(record)

    records.sort(key=_sort_key)
    return records


@dataclass
class LebesgueRecord:
    n: int
    N: int
    m: int
    method: str
    lebesgue: float = float("nan")
    nodal_padua: float = float("nan")
    dimension: int = 0
    mesh: str = ""
    status: str = STATUS_OK
    message: str = ""


def lebesgue_sweep(
    ns: Iterable[int],
    methods: Sequence[str] = METHODS,
    grid: EvaluationGrid | None = None,
    kind: str = CHEBYSHEV,
    degree: int | None = None,
    progress: bool = True,
) -> list[LebesgueRecord]:
    """Lebesgue constants of each selection on friedrichs_keller(n), with the nodal Padua constant alongside."""
    grid = grid or evaluation_grid()
    nodal_cache: dict[int, float] = {}
    records: list[LebesgueRecord] = []

    pbar_n = tqdm(list(ns), desc="Processing mesh", position=0, disable=not progress)
    for n in pbar_n:
        pbar_n.set_description(f"Processing mesh n={n}")
        try:
            tri = friedrichs_keller(n)
            m = degree if degree is not None else fk_max_degree(n)
        except (HistopolationError, ValueError) as e:
            logging.warning(f"Skipping n={n}: {e}")
            for method in methods:
                records.append(
                    LebesgueRecord(n=n, N=0, m=0, method=method, status=_status_of(e), message=f"n={n}: {e}")
                )
            continue
        if m >= 1 and m not in nodal_cache:
            nodal_cache[m] = nodal_lebesgue_constant(padua_points(m), m, grid, kind)
        basis = TotalDegreeBasis(m, kind)

        for method in methods:
            record = LebesgueRecord(
                n=n,
                N=tri.n_triangles,
                m=m,
                method=method,
                nodal_padua=nodal_cache.get(m, float("nan")),
                dimension=dimension(m),
                mesh=tri.name,
            )
            try:
                selection = select(tri, method, m, kind=kind)
                record.lebesgue = lebesgue_constant(selection, basis, tri, grid)
            except HistopolationError as e:
                record.status = _status_of(e)
                record.message = str(e)
                logging.warning(f"Lebesgue constant of {method} on {tri.name} unavailable: {e}")
            records.append(record)

    records.sort(key=lambda r: (r.n, r.method))
    return records


@dataclass
class BoundRecord:
    n: int
    N: int
    m: int
    d: int
    method: str
    zeta: float = float("nan")
    eta: float = float("nan")
    zeta_eta: float = float("nan")
    mesh: str = ""
    status: str = STATUS_OK
    message: str = ""


def bound_sweep(
    ns: Iterable[int],
    method: str = PADUA,
    kind: str = CHEBYSHEV,
    progress: bool = True,
) -> tuple[list[BoundRecord], float]:
    """zeta + eta on friedrichs_keller(n) with m = fk_max_degree(n), d = m + floor(sqrt(m)).

    Returns the records and the log-log slope of zeta + eta against n over the
    successful ones (nan with fewer than two).
    """
    records: list[BoundRecord] = []
    pbar_n = tqdm(list(ns), desc="Processing mesh", position=0, disable=not progress)
    for n in pbar_n:
        pbar_n.set_description(f"Processing mesh n={n}")
        try:
            tri = friedrichs_keller(n)
            m = fk_max_degree(n)
        except (HistopolationError, ValueError) as e:
            logging.warning(f"Skipping n={n}: {e}")
            records.append(BoundRecord(n=n, N=0, m=0, d=0, method=method, status=_status_of(e), message=f"n={n}: {e}"))
            continue
        d = regression_degree(m)
        record = BoundRecord(n=n, N=tri.n_triangles, m=m, d=d, method=method, mesh=tri.name)
        try:
            selection = select(tri, method, m, kind=kind)
            ordered = tri.reordered(reorder_first(tri.n_triangles, selection.indices))
            W = moment_matrix(ordered, None, TotalDegreeBasis(d, kind))
            factors = norm_bound(W, W.take_rows(len(selection)))
            record.zeta, record.eta, record.zeta_eta = factors.zeta, factors.eta, factors.total
        except HistopolationError as e:
            record.status = _status_of(e)
            record.message = str(e)
            logging.warning(f"Norm bound on {tri.name} unavailable: {e}")
        records.append(record)

    good = [r for r in records if r.status == STATUS_OK]
    slope = loglog_slope([r.n for r in good], [r.zeta_eta for r in good]) if len(good) >= 2 else float("nan")
    logging.info(f"log-log slope of zeta + eta against n: {slope:.3f}")
    return records, slope


def padua_failure_fraction(records: Sequence[ConvergenceRecord]) -> float:
    """Share of Padua meshes (distinct n, seed) on which attribution failed."""
    attempts: dict[tuple[int, int | None], bool] = {}
    for r in records:
        if r.method == PADUA:
            attempts[(r.n, r.seed)] = r.status == STATUS_SELECTION_FAILED
    if not attempts:
        return float("nan")
    return sum(attempts.values()) / len(attempts)


def records_frame(records: Sequence, record_type: type = ConvergenceRecord) -> pd.DataFrame:
    columns = [f.name for f in fields(records[0] if records else record_type)]
    return pd.DataFrame([asdict(r) for r in records], columns=columns)


def write_records_csv(records: Sequence, filepath: str | Path, record_type: type = ConvergenceRecord) -> None:
    """UTF-8, comma separated, header row, columns in record field order."""
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    records_frame(records, record_type).to_csv(path, index=False, encoding="utf-8", float_format="%.17g")


def _json_value(value):
    # JSON has no NaN
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def records_payload(records: Sequence) -> dict:
    return {"records": [{k: _json_value(v) for k, v in asdict(r).items()} for r in records]}


def write_records_json(records: Sequence, filepath: str | Path) -> None:
    write_json(filepath, records_payload(records))
