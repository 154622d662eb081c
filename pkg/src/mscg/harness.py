"""Configuration-driven experiments: base case, scaling, accuracy, variance,
channel flow and method comparison, with CSV/JSON/field exports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .discretize import (LiftedProblem, StencilOperator, apply_operator, boundary_lift,
                         cell_transmissivity)
from .fields import (POWER_LAW, CellField, CorrelationSpec, extract_subgrid,
                     generate_lognormal_field, read_field, read_field_csv,
                     rescale_log_variance, write_field, write_field_csv)
from .grid import BoundarySide, BoundarySpec, Grid2D, rms_residual
from .multiscale import HierarchyParams, LevelHierarchy, build_hierarchy
from .solvers import (POLYNOMIAL, RECURSIVE, TATEBE, SolveParams, SolveReport, solve,
                      standard_multigrid_solve)
from .splitting import SGS

STUDY_COLUMNS = [
    "experiment", "nx", "ny", "n_cells", "variance", "preconditioner", "epsilon",
    "fine_iterations", "time_per_point", "flop_proxy", "final_rms",
    "rms_error", "max_error", "k_ratio", "converged", "semi_coarsen",
]


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment; defaults give the desk-scale
    base case (256^2, power-law variance 2, pressure drop left to right)."""

    experiment: str = "base"
    nx: int = 256
    ny: int = 256
    cell_aspect: float = 1.0  # dx/dy
    model: str = POWER_LAW
    cutoff_major_cells: float = 32.0
    cutoff_minor_cells: float = 4.0
    angle_deg: float = 15.0
    log_mean: float = 0.0
    variance: float = 2.0
    seed: int = 2026
    p_left: float = 1.0
    p_right: float = 0.0
    dirichlet_top_bottom: bool = False
    scale: float = 4.0
    coarsest_n: int = 256
    splitting: str = SGS
    f: float = 0.1
    reduction: float = 1e10  # target drop in ||r||^2/N
    epsilon: float | None = None  # absolute override of the RMS target
    m: int | None = None
    preconditioner: str = RECURSIVE
    semi_coarsen: bool = False
    max_iterations: int = 100
    master_n: int = 1024  # master field size for the truncation protocol
    sizes: tuple[int, ...] = (64, 128, 256, 512, 1024)
    variances: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    tolerances: tuple[float, ...] = tuple(10.0 ** -k for k in range(1, 12))
    outdir: str | None = None


@dataclass
class StudyReport:
    """One row per solve, in a fixed CSV-writable schema."""

    rows: list[dict] = field(default_factory=list)

    def add(self, **kw):
        row = {c: "" for c in STUDY_COLUMNS}
        row.update(kw)
        self.rows.append(row)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=STUDY_COLUMNS)
            w.writeheader()
            w.writerows(self.rows)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]


def export_field(fld: CellField, path, fmt: str = "binary") -> None:
    """Dump a field for external plotting; binary round-trips bit-exactly."""
    if fmt == "binary":
        write_field(fld, path)
    elif fmt == "csv":
        write_field_csv(fld, path)
    else:
        raise ValueError(f"unknown field format {fmt!r}")


def import_field(path, fmt: str = "binary", dx: float | None = None,
                 dy: float | None = None) -> CellField:
    if fmt == "binary":
        return read_field(path, dx, dy)
    if fmt == "csv":
        return read_field_csv(path, dx, dy)
    raise ValueError(f"unknown field format {fmt!r}")


def make_exact_test_problem(op: StencilOperator, b: np.ndarray,
                            x_crude: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fold the residual of a crude solution into the source so that the crude
    solution becomes the exact answer of the new problem."""
    return apply_operator(op, x_crude), np.asarray(x_crude, dtype=float).ravel()


def _boundary_spec(cfg: ExperimentConfig, grid: Grid2D) -> BoundarySpec:
    bc = BoundarySpec.flow_left_right(grid, cfg.p_left, cfg.p_right)
    if cfg.dirichlet_top_bottom:
        # fixed pressure consistent with the left-right drop
        prof = cfg.p_left + (cfg.p_right - cfg.p_left) * grid.cell_centers_x() / grid.length_x
        side = BoundarySide(np.ones(grid.nx, dtype=bool), prof)
        bc = BoundarySpec(left=bc.left, right=bc.right, bottom=side, top=side)
    return bc


def _correlation(cfg: ExperimentConfig, dx: float) -> CorrelationSpec:
    return CorrelationSpec.from_cutoffs(
        cfg.model,
        cutoff_major=cfg.cutoff_major_cells * dx,
        cutoff_minor=cfg.cutoff_minor_cells * dx,
        angle=np.deg2rad(cfg.angle_deg),
        log_mean=cfg.log_mean,
        log_variance=cfg.variance,
    )


@dataclass
class Problem:
    """A discretized instance ready to solve."""

    grid: Grid2D
    permeability: CellField
    bc: BoundarySpec
    lifted: LiftedProblem
    hierarchy: LevelHierarchy

    def params(self, cfg: ExperimentConfig, epsilon: float | None = None) -> SolveParams:
        eps = epsilon if epsilon is not None else cfg.epsilon
        if eps is None:
            rms0 = rms_residual(self.lifted.source)
            eps = max(rms0 / np.sqrt(cfg.reduction), 1e-300)
        return SolveParams(epsilon=eps, f=cfg.f, max_iterations=cfg.max_iterations,
                           m_override=cfg.m)

    def solve(self, cfg: ExperimentConfig, method: str | None = None,
              epsilon: float | None = None,
              b: np.ndarray | None = None) -> tuple[np.ndarray, SolveReport]:
        method = method or cfg.preconditioner
        params = self.params(cfg, epsilon)
        rhs = self.lifted.source if b is None else b
        if method == "standard_mg":
            dp, rep = standard_multigrid_solve(self.hierarchy, rhs, params)
        else:
            dp, rep = solve(self.hierarchy, rhs, params, method=method)
        return dp, rep

    def reconstruct(self, dp: np.ndarray) -> CellField:
        return CellField(self.grid, dp + self.lifted.lift)


def build_problem(cfg: ExperimentConfig, kfield: CellField,
                  semi_coarsen: bool | None = None) -> Problem:
    grid = kfield.grid
    bc = _boundary_spec(cfg, grid)
    lifted = boundary_lift(kfield, grid, bc, CellField(grid, np.zeros(grid.n_cells)))
    hp = HierarchyParams(
        scale=cfg.scale, coarsest_n=cfg.coarsest_n, splitting_kind=cfg.splitting,
        semi_coarsen=cfg.semi_coarsen if semi_coarsen is None else semi_coarsen,
        m_override=cfg.m)
    hier = build_hierarchy(cell_transmissivity(kfield, grid, bc), hp)
    return Problem(grid, kfield, bc, lifted, hier)


def base_field(cfg: ExperimentConfig, grid: Grid2D | None = None) -> CellField:
    """Correlated log-normal field rescaled to the configured variance."""
    if grid is None:
        dy = 1.0 / cfg.ny
        grid = Grid2D(cfg.nx, cfg.ny, cfg.cell_aspect * dy, dy)
    fld = generate_lognormal_field(grid, _correlation(cfg, grid.dx), cfg.seed)
    if cfg.variance > 0:
        fld = rescale_log_variance(fld, cfg.variance)
    return fld


def _study_row(study: StudyReport, cfg: ExperimentConfig, prob: Problem, rep: SolveReport,
               method: str, **extra):
    n = prob.grid.n_cells
    study.add(
        experiment=cfg.experiment, nx=prob.grid.nx, ny=prob.grid.ny, n_cells=n,
        variance=cfg.variance, preconditioner=method,
        fine_iterations=rep.fine_iterations, time_per_point=rep.wall_time / n,
        flop_proxy=rep.flop_proxy, final_rms=rep.final_rms, converged=rep.converged,
        semi_coarsen=cfg.semi_coarsen, **extra)


def _export_run(cfg: ExperimentConfig, prob: Problem, pressure: CellField,
                rep: SolveReport, study: StudyReport, tag: str):
    if not cfg.outdir:
        return
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    export_field(pressure, out / f"{tag}_pressure.bin")
    logk = CellField(prob.grid, np.log(prob.permeability.values))
    export_field(logk, out / f"{tag}_log_permeability.bin")
    if prob.grid.n_cells <= 1 << 16:
        export_field(pressure, out / f"{tag}_pressure.csv", fmt="csv")
        export_field(logk, out / f"{tag}_log_permeability.csv", fmt="csv")
    with open(out / f"{tag}_solve_report.json", "w") as fh:
        json.dump(rep.to_dict(), fh, indent=2)
    with open(out / f"{tag}_hierarchy.json", "w") as fh:
        json.dump(prob.hierarchy.summary(), fh, indent=2)
    study.to_csv(out / f"{tag}_study.csv")


def run_base_case(cfg: ExperimentConfig) -> tuple[StudyReport, SolveReport]:
    """Pressure drop across a heterogeneous field; per-level iteration table."""
    prob = build_problem(cfg, base_field(cfg))
    dp, rep = prob.solve(cfg)
    study = StudyReport()
    _study_row(study, cfg, prob, rep, cfg.preconditioner,
               k_ratio=float(prob.permeability.values.max() / prob.permeability.values.min()),
               epsilon=prob.params(cfg).epsilon)
    _export_run(cfg, prob, prob.reconstruct(dp), rep, study, "base")
    return study, rep


def run_scaling_study(cfg: ExperimentConfig) -> StudyReport:
    """Truncation protocol: one master field, solves on growing subgrids.

    The correlation cutoff is fixed in cells of the master grid, so the
    variance (and difficulty) grows with the subgrid; the variance is not
    rescaled.
    """
    dy = 1.0 / cfg.master_n
    master_grid = Grid2D(cfg.master_n, cfg.master_n, dy, dy)
    master = generate_lognormal_field(master_grid, _correlation(cfg, dy), cfg.seed)
    study = StudyReport()
    for n in cfg.sizes:
        if n > cfg.master_n:
            raise ValueError(f"size {n} exceeds the master grid {cfg.master_n}")
        sub = extract_subgrid(master, (0, 0), (n, n))
        sub_cfg = replace(cfg, variance=float(np.log(sub.values).var()))
        for method in (RECURSIVE, TATEBE):
            prob = build_problem(sub_cfg, sub)
            _, rep = prob.solve(sub_cfg, method=method)
            _, rep2 = prob.solve(sub_cfg, method=method)  # best of two timings
            rep.wall_time = min(rep.wall_time, rep2.wall_time)
            _study_row(study, sub_cfg, prob, rep, method,
                       epsilon=prob.params(sub_cfg).epsilon)
    if cfg.outdir:
        Path(cfg.outdir).mkdir(parents=True, exist_ok=True)
        study.to_csv(Path(cfg.outdir) / "scaling_study.csv")
    return study


def run_accuracy_study(cfg: ExperimentConfig) -> StudyReport:
    """Iteration count against achieved accuracy on a problem solved exactly
    by construction (the crude solution's residual is folded into the source)."""
    prob = build_problem(cfg, base_field(cfg))
    op = prob.hierarchy.levels[0].operator
    b = prob.lifted.source
    rms_b = rms_residual(b)
    crude, _ = prob.solve(cfg, epsilon=1e-2 * rms_b)  # intentionally loose
    b_exact, x_true = make_exact_test_problem(op, b, crude)
    scale = max(float(np.abs(x_true).max()), 1e-300)
    study = StudyReport()
    rms_b2 = rms_residual(b_exact)
    for tol in cfg.tolerances:
        x, rep = prob.solve(cfg, epsilon=tol * rms_b2, b=b_exact)
        err = x - x_true
        _study_row(study, cfg, prob, rep, cfg.preconditioner, epsilon=tol,
                   rms_error=rms_residual(err) / scale,
                   max_error=float(np.abs(err).max()) / scale)
    if cfg.outdir:
        Path(cfg.outdir).mkdir(parents=True, exist_ok=True)
        study.to_csv(Path(cfg.outdir) / "accuracy_study.csv")
    return study


def run_variance_study(cfg: ExperimentConfig) -> StudyReport:
    """Iteration count as the spread of the permeability field grows."""
    fld = base_field(replace(cfg, variance=1.0))
    study = StudyReport()
    for v in cfg.variances:
        scaled = rescale_log_variance(fld, v)
        vcfg = replace(cfg, variance=v)
        prob = build_problem(vcfg, scaled)
        _, rep = prob.solve(vcfg)
        _study_row(study, vcfg, prob, rep, vcfg.preconditioner,
                   k_ratio=float(scaled.values.max() / scaled.values.min()),
                   epsilon=prob.params(vcfg).epsilon)
    if cfg.outdir:
        Path(cfg.outdir).mkdir(parents=True, exist_ok=True)
        study.to_csv(Path(cfg.outdir) / "variance_study.csv")
    return study


def channel_field(cfg: ExperimentConfig) -> CellField:
    """Strip of a square-cell master field reinterpreted with 10:1 cells.

    The strip is the full width and top quarter of the master; the stretched
    cells are equivalent to square cells with a 100x anisotropic permeability.
    """
    n = cfg.nx
    ny = cfg.ny
    if ny * 4 != n:
        raise ValueError("channel expects ny = nx/4 (full width, quarter height strip)")
    d = 1.0 / n
    master_grid = Grid2D(n, n, d, d)
    master = generate_lognormal_field(master_grid, _correlation(cfg, d), cfg.seed)
    strip = extract_subgrid(master, (0, n - ny), (n, ny))
    dy = 0.25 / ny
    grid = Grid2D(n, ny, cfg.cell_aspect * dy, dy)
    fld = CellField(grid, strip.values)
    if cfg.variance > 0:
        fld = rescale_log_variance(fld, cfg.variance)
    return fld


def run_channel_case(cfg: ExperimentConfig) -> tuple[StudyReport, SolveReport]:
    """Anisotropic channel solved with and without semi-coarsening."""
    fld = channel_field(cfg)
    study = StudyReport()
    reports = {}
    for semi in (True, False):
        prob = build_problem(replace(cfg, semi_coarsen=semi), fld)
        dp, rep = prob.solve(cfg)
        reports[semi] = (prob, dp, rep)
        scfg = replace(cfg, semi_coarsen=semi)
        _study_row(study, scfg, prob, rep, cfg.preconditioner,
                   epsilon=prob.params(scfg).epsilon)
    prob, dp, rep = reports[True]
    _export_run(cfg, prob, prob.reconstruct(dp), rep, study, "channel")
    return study, rep


def run_compare(cfg: ExperimentConfig) -> StudyReport:
    """All four methods on the identical problem (same field, same seed)."""
    fld = base_field(cfg)
    study = StudyReport()
    for method in (RECURSIVE, TATEBE, POLYNOMIAL, "standard_mg"):
        prob = build_problem(cfg, fld)
        _, rep = prob.solve(cfg, method=method)
        _study_row(study, cfg, prob, rep, method, epsilon=prob.params(cfg).epsilon)
    if cfg.outdir:
        Path(cfg.outdir).mkdir(parents=True, exist_ok=True)
        study.to_csv(Path(cfg.outdir) / "compare_study.csv")
    return study


RUNNERS = {
    "base": run_base_case,
    "scaling": run_scaling_study,
    "accuracy": run_accuracy_study,
    "variance": run_variance_study,
    "channel": run_channel_case,
    "compare": run_compare,
}


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if "," in raw:
        return tuple(_parse_value(p) for p in raw.split(",") if p.strip())
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    return raw


def read_config_file(path) -> dict:
    """Parse a `key = value` config file ('#' starts a comment)."""
    out = {}
    valid = {f.name for f in fields(ExperimentConfig)}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected 'key = value', got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in valid:
                raise ValueError(f"{path}:{ln}: unknown config key {key!r}")
            out[key] = _parse_value(raw)
    return out


def make_config(file: str | None = None, **overrides) -> ExperimentConfig:
    """Config from optional file plus keyword overrides (flags win)."""
    values = read_config_file(file) if file else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
