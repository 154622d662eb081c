"""Coarse graining and the level hierarchy.

Transmissivities coarsen like conductances: parallel (arithmetic) sums in
the transverse direction and series (harmonic) sums in the flow direction,
with partial overlaps weighted by the covered height fraction and inversely
by the covered width fraction.  Prolongation is the tensor product of 1-D
linear interpolations between cell centres with zero slope beyond the
outermost coarse centres; restriction is its exact adjoint.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse

from .discretize import StencilOperator, Transmissivity, assemble_operator, to_dense
from .grid import Grid2D, overlap_fractions, round_half_up
from .splitting import SGS, Splitting

LINEAR = "linear"
PIECEWISE_CONSTANT = "piecewise_constant"


def choose_coarse_grid(fine: Grid2D, scale: float, semi_coarsen: bool = False,
                       aspect: float | None = None) -> Grid2D:
    """Next coarser grid: dimensions rounded from fine/scale, domain preserved.

    With semi-coarsening on, while the effective cell aspect (dx/dy scaled by
    the anisotropy of the operator, if supplied) is more than a factor 2 from
    isotropy only the finer-resolved axis is coarsened, by at most the factor
    that restores isotropy.
    """
    if scale <= 1:
        raise ValueError(f"scale factor must exceed 1, got {scale}")
    if aspect is None:
        aspect = fine.dx / fine.dy
    fx = fy = scale
    if semi_coarsen and max(aspect, 1.0 / aspect) > 2.0:
        if aspect > 1.0:  # cells effectively wider than tall: y is over-resolved
            fx, fy = 1.0, min(scale, aspect)
        else:
            fx, fy = min(scale, 1.0 / aspect), 1.0
    nx = max(1, round_half_up(fine.nx / fx)) if fx > 1 else fine.nx
    ny = max(1, round_half_up(fine.ny / fy)) if fy > 1 else fine.ny
    return Grid2D(nx, ny, fine.length_x / nx, fine.length_y / ny)


def coarsen_transmissivity(fine_t: Transmissivity, fine: Grid2D, coarse: Grid2D) -> Transmissivity:
    """Series/parallel coarse graining of cell conductances.

    For the x-component, fine conductances in a coarse cell are summed
    arithmetically along y (parallel) and the column sums combined
    harmonically along x (series); the y-component interchanges the roles.
    Boundary face conductances are combined in parallel along the side and
    rescaled by the width ratio.  A blocked column (zero sum) yields a
    blocked coarse cell, not an error.
    """
    if coarse.nx > fine.nx or coarse.ny > fine.ny:
        raise ValueError("coarse grid must not exceed the fine grid")
    ox = overlap_fractions(coarse.nx, coarse.dx, fine.nx, fine.dx)  # (nxc, nxf)
    oy = overlap_fractions(coarse.ny, coarse.dy, fine.ny, fine.dy)  # (nyc, nyf)

    # blocked columns get a finite huge resistance rather than inf so that
    # zero-overlap products stay zero instead of becoming nan
    big = 1e300

    def series(parallel_sums, overlaps):
        inv = np.where(parallel_sums > 0, 1.0 / np.where(parallel_sums > 0, parallel_sums, 1.0), big)
        s = inv @ overlaps
        with np.errstate(over="ignore"):
            return np.where(s < 1e280, 1.0 / s, 0.0)

    txc = series(oy @ fine_t.tx, ox.T)  # parallel along y, series along x
    tyc = series((fine_t.ty @ ox.T).T, oy.T).T  # parallel along x, series along y

    wx = fine.dx / coarse.dx
    wy = fine.dy / coarse.dy
    return Transmissivity(
        coarse,
        txc,
        tyc,
        west=wx * (oy @ fine_t.west),
        east=wx * (oy @ fine_t.east),
        south=wy * (ox @ fine_t.south),
        north=wy * (ox @ fine_t.north),
    )


def _axis_weights(nf: int, df: float, nc: int, dc: float, kind: str) -> sparse.csr_matrix:
    """1-D interpolation weights from coarse to fine cell centres, (nf, nc)."""
    xf = (np.arange(nf) + 0.5) * df
    if kind == PIECEWISE_CONSTANT:
        cols = np.clip((xf // dc).astype(int), 0, nc - 1)
        return sparse.csr_matrix((np.ones(nf), (np.arange(nf), cols)), shape=(nf, nc))
    xc = (np.arange(nc) + 0.5) * dc
    hi = np.clip(np.searchsorted(xc, xf), 0, nc - 1)
    lo = np.clip(hi - 1, 0, nc - 1)
    gap = xc[hi] - xc[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.where(gap > 0, (xf - xc[lo]) / np.where(gap > 0, gap, 1.0), 1.0)
    theta = np.clip(theta, 0.0, 1.0)  # clamp = zero slope beyond outer centres
    rows = np.concatenate([np.arange(nf), np.arange(nf)])
    cols = np.concatenate([lo, hi])
    data = np.concatenate([1.0 - theta, theta])
    m = sparse.csr_matrix((data, (rows, cols)), shape=(nf, nc))
    m.sum_duplicates()
    return m


@dataclass(frozen=True)
class TransferOperator:
    """Prolongation E (coarse -> fine) and its adjoint restriction R = E^T."""

    fine: Grid2D
    coarse: Grid2D
    kind: str = LINEAR
    wx: sparse.csr_matrix = field(init=False, repr=False)
    wy: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in (LINEAR, PIECEWISE_CONSTANT):
            raise ValueError(f"unknown interpolation kind {self.kind!r}")
        object.__setattr__(
            self, "wx",
            _axis_weights(self.fine.nx, self.fine.dx, self.coarse.nx, self.coarse.dx, self.kind))
        object.__setattr__(
            self, "wy",
            _axis_weights(self.fine.ny, self.fine.dy, self.coarse.ny, self.coarse.dy, self.kind))

    def prolongate(self, xc: np.ndarray) -> np.ndarray:
        xc = np.asarray(xc)
        if xc.size != self.coarse.n_cells:
            raise ValueError(f"dimension mismatch: {xc.size} vs {self.coarse.n_cells}")
        tmp = (self.wx @ xc.reshape(self.coarse.shape).T).T
        return (self.wy @ tmp).ravel()

    def restrict(self, yf: np.ndarray) -> np.ndarray:
        yf = np.asarray(yf)
        if yf.size != self.fine.n_cells:
            raise ValueError(f"dimension mismatch: {yf.size} vs {self.fine.n_cells}")
        tmp = self.wy.T @ yf.reshape(self.fine.shape)
        return (self.wx.T @ tmp.T).T.ravel()

    def dense_prolongation(self) -> np.ndarray:
        """Dense matrix of E (small grids; verification only)."""
        return np.kron(self.wy.toarray(), self.wx.toarray())


def prolongate(t: TransferOperator, xc: np.ndarray) -> np.ndarray:
    return t.prolongate(xc)


def restrict(t: TransferOperator, yf: np.ndarray) -> np.ndarray:
    return t.restrict(yf)


class CoarsestSolver:
    """Dense symmetric factorization of the coarsest operator."""

    def __init__(self, dense_a: np.ndarray, allow_singular: bool = False):
        self.n = dense_a.shape[0]
        self._pinv = None
        try:
            self._factor = scipy.linalg.cho_factor(dense_a)
        except scipy.linalg.LinAlgError as exc:
            if not allow_singular:
                raise ValueError(
                    "singular coarsest operator; enable null-space handling or add a Dirichlet face"
                ) from exc
            vals, vecs = scipy.linalg.eigh(dense_a)
            inv = np.where(vals > 1e-12 * vals.max(), 1.0 / np.where(vals > 0, vals, 1.0), 0.0)
            self._pinv = (vecs, inv)
            self._factor = None

    def __call__(self, v: np.ndarray) -> np.ndarray:
        if self._factor is not None:
            return scipy.linalg.cho_solve(self._factor, v)
        vecs, inv = self._pinv
        return vecs @ (inv * (vecs.T @ v))


@dataclass
class Level:
    """One rung of the hierarchy; transfer/m refer to the next coarser level."""

    grid: Grid2D
    trans: Transmissivity
    operator: StencilOperator
    splitting: Splitting
    m: int = 1
    transfer: TransferOperator | None = None


@dataclass
class HierarchyParams:
    scale: float = 4.0
    coarsest_n: int = 256
    splitting_kind: str = SGS
    semi_coarsen: bool = False
    interpolation: str = LINEAR
    m_override: int | None = None
    allow_singular: bool = False


@dataclass
class LevelHierarchy:
    """Chain of grids/operators/splittings, level 0 finest."""

    levels: list[Level]
    coarsest: CoarsestSolver

    def __len__(self) -> int:
        return len(self.levels)

    def summary(self) -> list[dict]:
        return [
            {"level": k, "nx": lv.grid.nx, "ny": lv.grid.ny,
             "dimension": lv.grid.n_cells, "m": lv.m}
            for k, lv in enumerate(self.levels)
        ]


def _effective_aspect(trans: Transmissivity) -> float:
    """Cell aspect in coupling terms: > 1 means y-coupling dominates."""
    tx = trans.tx[trans.tx > 0]
    ty = trans.ty[trans.ty > 0]
    if tx.size == 0 or ty.size == 0:
        return trans.grid.dx / trans.grid.dy
    return float(np.sqrt(np.median(trans.ty / np.maximum(trans.tx, 1e-300))))


def build_hierarchy(fine_t: Transmissivity, params: HierarchyParams | None = None) -> LevelHierarchy:
    """Coarsen repeatedly until the system is small enough to factorize.

    The smoothing degree on each level is the rounded effective linear scale
    factor to the next level (minimum 1).  Stops at `coarsest_n` unknowns or
    when no axis can shrink further.
    """
    params = params or HierarchyParams()
    levels: list[Level] = []
    current = fine_t
    while True:
        grid = current.grid
        op = assemble_operator(current.face_field())
        level = Level(grid, current, op, Splitting(op, params.splitting_kind))
        levels.append(level)
        if grid.n_cells <= params.coarsest_n:
            break
        coarse_grid = choose_coarse_grid(
            grid, params.scale, params.semi_coarsen, aspect=_effective_aspect(current))
        if coarse_grid.n_cells >= grid.n_cells:
            warnings.warn(f"grid {grid.nx}x{grid.ny} cannot shrink further; stopping hierarchy")
            break
        fx = grid.nx / coarse_grid.nx
        fy = grid.ny / coarse_grid.ny
        level.m = params.m_override or max(1, round_half_up(max(fx, fy)))
        level.transfer = TransferOperator(grid, coarse_grid, params.interpolation)
        current = coarsen_transmissivity(current, grid, coarse_grid)
    coarsest = CoarsestSolver(to_dense(levels[-1].operator), params.allow_singular)
    return LevelHierarchy(levels, coarsest)
