"""Preconditioned conjugate gradient with multi-scale preconditioners.

Three preconditioners share one structure: a truncated splitting series
sum_{j=0}^{2m-1} H^j P^-1 (H = P^-1 Q) plus a coarse term H^m W (H^T)^m.
The polynomial preconditioner drops the coarse term (W = P^-1 folded into
the series, giving 2m+1 terms).  The multigrid preconditioner takes W as a
single recursive sweep over the coarser levels.  The recursive multi-scale
preconditioner takes W as the inverse of the coarse-grained operator and
evaluates it with an inner conjugate gradient solve that applies the same
algorithm one level down; the recursion ends in a dense factorization.

Convergence on level k is checked on the residual itself:
||r||^2 / N_k < f^k * epsilon^2, with the same absolute epsilon on every
level, so later fine-level iterations need fewer coarse iterations and the
transition between levels is dynamic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .discretize import StencilOperator, apply_operator, residual
from .grid import dot, rms_residual
from .multiscale import LevelHierarchy
from .splitting import Splitting

RECURSIVE = "recursive"
TATEBE = "tatebe"
POLYNOMIAL = "polynomial"


@dataclass
class SolveParams:
    """Tolerances for a multi-level solve.

    epsilon is the target RMS residual on the finest level; the squared
    threshold on level k is tightened by f^k.
    """

    epsilon: float
    f: float = 0.1
    max_iterations: int = 100
    m_override: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.f <= 1:
            raise ValueError("f must lie in (0, 1]")


def level_tolerance(k: int, params: SolveParams, nk: int) -> float:
    """Threshold on ||r||^2 at level k: N_k * f^k * epsilon^2."""
    if k < 0:
        raise ValueError("level index must be >= 0")
    return nk * params.f**k * params.epsilon**2


class Recorder:
    """Collects per-level iteration counts and the level-transition trace."""

    def __init__(self, dims: list[tuple[int, int]]):
        self.dims = dims
        self.level_iterations = [0] * len(dims)
        self.events: list[dict] = []
        self.step = 0
        self.nonconverged_levels: set[int] = set()
        self._t0 = time.perf_counter()

    def enter(self, level: int):
        self.events.append({"event": "enter", "level": level, "step": self.step,
                            "time": time.perf_counter() - self._t0})

    def leave(self, level: int):
        self.events.append({"event": "leave", "level": level, "step": self.step,
                            "time": time.perf_counter() - self._t0})

    def tick(self, level: int):
        self.level_iterations[level] += 1
        self.step += 1

    def flag_nonconverged(self, level: int):
        self.nonconverged_levels.add(level)


@dataclass
class SolveReport:
    """Outcome of a solve: per-level effort, transitions, final residual."""

    level_dims: list[tuple[int, int]]
    level_iterations: list[int]
    transitions: list[dict]
    final_rms: float
    converged: bool
    diverged: bool = False
    wall_time: float = 0.0
    nonconverged_levels: list[int] = field(default_factory=list)

    @property
    def fine_iterations(self) -> int:
        return self.level_iterations[0]

    @property
    def flop_proxy(self) -> int:
        return sum(it * nx * ny for it, (nx, ny) in zip(self.level_iterations, self.level_dims))

    def table(self) -> list[dict]:
        total = self.flop_proxy or 1
        rows = []
        for k in range(len(self.level_dims) - 1, -1, -1):
            nx, ny = self.level_dims[k]
            it = self.level_iterations[k]
            rows.append({
                "level": k,
                "grid": f"{nx}x{ny}",
                "dimension": nx * ny,
                "iterations": it,
                "iterations_x_dimension": it * nx * ny,
                "percent_total": 100.0 * it * nx * ny / total,
            })
        return rows

    def to_dict(self) -> dict:
        return {
            "levels": self.table(),
            "transitions": self.transitions,
            "final_rms": self.final_rms,
            "converged": self.converged,
            "diverged": self.diverged,
            "wall_time": self.wall_time,
            "flop_proxy": self.flop_proxy,
            "nonconverged_levels": sorted(self.nonconverged_levels),
        }

    @classmethod
    def from_recorder(cls, rec: Recorder, final_rms: float, converged: bool,
                      diverged: bool = False, wall_time: float = 0.0) -> "SolveReport":
        return cls(rec.dims, rec.level_iterations, rec.events, final_rms,
                   converged, diverged, wall_time, sorted(rec.nonconverged_levels))


def _pcg_core(op: StencilOperator, b: np.ndarray, precond, params: SolveParams,
              level: int = 0, x0: np.ndarray | None = None,
              recorder: Recorder | None = None) -> tuple[np.ndarray, bool, bool]:
    """Conventional PCG; the preconditioner is applied at the start of each
    cycle and convergence is checked on the updated residual at the end."""
    n = b.size
    tol2 = level_tolerance(level, params, n)
    if x0 is None:
        x = np.zeros(n)
        r = np.array(b, dtype=float, copy=True)
    else:
        x = np.array(x0, dtype=float, copy=True)
        r = residual(op, x, b)
    rr = dot(r, r)
    if rr <= tol2:
        return x, True, False
    rr0 = rr
    converged = diverged = False
    z = precond(r)
    rz = dot(r, z)
    p = np.array(z, copy=True)
    it = 0
    ap = np.empty(n)
    while it < params.max_iterations:
        apply_operator(op, p, out=ap)
        pap = dot(p, ap)
        if pap <= 0:
            raise ValueError(f"indefinite operator or preconditioner at iteration {it + 1}")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        it += 1
        if recorder is not None:
            recorder.tick(level)
        rr = dot(r, r)
        if rr <= tol2:
            converged = True
            break
        if rr > 100.0 * rr0:  # ||r|| grew 10x: give up
            diverged = True
            break
        z = precond(r)
        rz_new = dot(r, z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    if not converged and recorder is not None:
        recorder.flag_nonconverged(level)
    return x, converged, diverged


def pcg(op: StencilOperator, b: np.ndarray, precond, params: SolveParams,
        x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveReport]:
    """Single-entry PCG on one operator with an arbitrary preconditioner."""
    rec = Recorder([(op.grid.nx, op.grid.ny)])
    t0 = time.perf_counter()
    rec.enter(0)
    x, converged, diverged = _pcg_core(op, b, precond, params, 0, x0, rec)
    rec.leave(0)
    rms = rms_residual(residual(op, x, b))
    return x, SolveReport.from_recorder(rec, rms, converged, diverged,
                                        time.perf_counter() - t0)


def precond_polynomial(s: Splitting, m: int, v: np.ndarray) -> np.ndarray:
    """Truncated splitting series: sum_{k=0}^{2m} H^k P^-1 v."""
    if m < 1:
        raise ValueError("m must be >= 1")
    term = s.apply_p_inverse(v)
    acc = term.copy()
    for _ in range(2 * m):
        term = s.apply_smoother(term)
        acc += term
    return acc


def _series_part(s: Splitting, m: int, v: np.ndarray) -> np.ndarray:
    # sum_{j=0}^{2m-1} H^j P^-1 v
    term = s.apply_p_inverse(v)
    acc = term.copy()
    for _ in range(2 * m - 1):
        term = s.apply_smoother(term)
        acc += term
    return acc


def precond_tatebe(h: LevelHierarchy, k: int, v: np.ndarray,
                   recorder: Recorder | None = None,
                   m_override: int | None = None) -> np.ndarray:
    """Multigrid preconditioner: one recursive sweep, no inner iteration."""
    lvl = h.levels[k]
    if lvl.transfer is None:
        return h.coarsest(v)
    m = m_override or lvl.m
    s = lvl.splitting
    acc = _series_part(s, m, v)
    u = np.array(v, dtype=float, copy=True)
    for _ in range(m):
        u = s.apply_smoother_t(u)
    if recorder is not None:
        recorder.enter(k + 1)
        recorder.tick(k + 1)
    wc = precond_tatebe(h, k + 1, lvl.transfer.restrict(u), recorder, m_override)
    if recorder is not None:
        recorder.leave(k + 1)
    y = lvl.transfer.prolongate(wc)
    for _ in range(m):
        y = s.apply_smoother(y)
    return acc + y


def precond_recursive_ms(h: LevelHierarchy, k: int, v: np.ndarray, params: SolveParams,
                         recorder: Recorder | None = None) -> np.ndarray:
    """Multi-scale preconditioner with the coarse inverse evaluated by an
    inner conjugate gradient solve of the coarse-grained operator; the
    recursion ends in the dense factorization of the coarsest operator."""
    lvl = h.levels[k]
    if lvl.transfer is None:
        return h.coarsest(v)
    m = params.m_override or lvl.m
    s = lvl.splitting
    acc = _series_part(s, m, v)
    u = np.array(v, dtype=float, copy=True)
    for _ in range(m):
        u = s.apply_smoother_t(u)
    bc = lvl.transfer.restrict(u)
    nxt = h.levels[k + 1]
    if recorder is not None:
        recorder.enter(k + 1)
    if nxt.transfer is None:
        if recorder is not None:
            recorder.tick(k + 1)
        xc = h.coarsest(bc)
    else:
        xc, _, _ = _pcg_core(
            nxt.operator, bc,
            lambda w: precond_recursive_ms(h, k + 1, w, params, recorder),
            params, level=k + 1, recorder=recorder)
    if recorder is not None:
        recorder.leave(k + 1)
    y = lvl.transfer.prolongate(xc)
    for _ in range(m):
        y = s.apply_smoother(y)
    return acc + y


def direct_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense symmetric (Cholesky) factorization solve."""
    a = np.asarray(a, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(a)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError("matrix is not symmetric positive definite") from exc
    return scipy.linalg.cho_solve(factor, np.asarray(b, dtype=float))


def solve(h: LevelHierarchy, b: np.ndarray, params: SolveParams,
          method: str = RECURSIVE, x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveReport]:
    """Solve A_0 x = b with PCG and the chosen preconditioner."""
    rec = Recorder([(lv.grid.nx, lv.grid.ny) for lv in h.levels])
    op = h.levels[0].operator
    if method == RECURSIVE:
        precond = lambda r: precond_recursive_ms(h, 0, r, params, rec)
    elif method == TATEBE:
        precond = lambda r: precond_tatebe(h, 0, r, rec, params.m_override)
    elif method == POLYNOMIAL:
        m = params.m_override or h.levels[0].m
        precond = lambda r: precond_polynomial(h.levels[0].splitting, m, r)
    else:
        raise ValueError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    rec.enter(0)
    x, converged, diverged = _pcg_core(op, b, precond, params, 0, x0, rec)
    rec.leave(0)
    wall = time.perf_counter() - t0
    rms = rms_residual(residual(op, x, b))
    return x, SolveReport.from_recorder(rec, rms, converged, diverged, wall)


def standard_multigrid_solve(h: LevelHierarchy, b: np.ndarray, params: SolveParams,
                             x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveReport]:
    """Stationary iteration x <- x + M^-1 (b - A x) with the multigrid sweep.

    May legitimately fail to converge on rough coefficient fields; divergence
    (10x residual growth) is flagged in the report rather than raised.
    """
    rec = Recorder([(lv.grid.nx, lv.grid.ny) for lv in h.levels])
    op = h.levels[0].operator
    t0 = time.perf_counter()
    n = b.size
    tol2 = level_tolerance(0, params, n)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float, copy=True)
    r = residual(op, x, b) if x0 is not None else np.array(b, dtype=float, copy=True)
    rr = dot(r, r)
    rr0 = rr if rr > 0 else 1.0
    converged = rr <= tol2
    diverged = False
    rec.enter(0)
    it = 0
    while not converged and it < params.max_iterations:
        x += precond_tatebe(h, 0, r, rec, params.m_override)
        r = residual(op, x, b)
        it += 1
        rec.tick(0)
        rr = dot(r, r)
        if rr <= tol2:
            converged = True
        elif rr > 100.0 * rr0:
            diverged = True
            break
    rec.leave(0)
    if not converged:
        rec.flag_nonconverged(0)
    return x, SolveReport.from_recorder(rec, float(np.sqrt(rr / n)), converged, diverged,
                                        time.perf_counter() - t0)
