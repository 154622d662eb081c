"""Five-point discretization of div(K grad P) = S on a regular grid.

The operator is stored in transmissivity (conductance) form: the coupling
between two cells is the face transmissivity, obtained from the harmonic
mean of the adjacent cell conductances T_xx = (dy/dx) K_xx and
T_yy = (dx/dy) K_yy.  Equations are scaled as net face fluxes, so the
source entering the linear system is S integrated over the cell.  With the
sign convention used here the assembled matrix is symmetric positive
(semi)definite: diag = sum of adjacent face transmissivities and the
east/north couplings are -T_face.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BoundarySpec, CellField, FaceField, Grid2D


def harmonic_face_mean(ka: float, kb: float) -> float:
    """Series combination of two half-cell conductances: 2*ka*kb/(ka+kb)."""
    if ka < 0 or kb < 0:
        raise ValueError(f"negative conductance: {ka}, {kb}")
    s = ka + kb
    if s == 0.0:
        return 0.0
    return 2.0 * ka * kb / s


def _harmonic_pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    s = a + b
    out = np.zeros_like(s)
    np.divide(2.0 * a * b, s, out=out, where=s > 0)
    return out


@dataclass(frozen=True)
class Transmissivity:
    """Cell-associated conductances plus boundary-face conductances.

    tx/ty hold (dy/dx)K and (dx/dy)K per cell; the four boundary arrays hold
    the half-cell boundary face conductances (0 on no-flow faces).  This is
    the form that coarse graining acts on; `face_field` derives the
    face-centred transmissivities that define the operator.
    """

    grid: Grid2D
    tx: np.ndarray  # (ny, nx)
    ty: np.ndarray  # (ny, nx)
    west: np.ndarray  # (ny,)
    east: np.ndarray  # (ny,)
    south: np.ndarray  # (nx,)
    north: np.ndarray  # (nx,)

    def face_field(self) -> FaceField:
        g = self.grid
        xf = np.empty((g.ny, g.nx + 1))
        xf[:, 0] = self.west
        xf[:, -1] = self.east
        xf[:, 1:-1] = _harmonic_pairwise(self.tx[:, :-1], self.tx[:, 1:])
        yf = np.empty((g.ny + 1, g.nx))
        yf[0, :] = self.south
        yf[-1, :] = self.north
        yf[1:-1, :] = _harmonic_pairwise(self.ty[:-1, :], self.ty[1:, :])
        return FaceField(g, xf, yf)


def cell_transmissivity(cell_k: CellField, grid: Grid2D, bc: BoundarySpec) -> Transmissivity:
    """Scale a cell permeability field into conductances with boundary faces.

    Dirichlet boundary faces get the half-cell conductance 2*T of the
    adjacent cell (half the distance, twice the conductance); Neumann faces
    are blocked (0).
    """
    bc.check_matches(grid)
    k = cell_k.as_2d()
    if np.any(k < 0):
        raise ValueError("permeability must be non-negative")
    tx = (grid.dy / grid.dx) * k
    ty = (grid.dx / grid.dy) * k
    west = np.where(bc.left.is_dirichlet, 2.0 * tx[:, 0], 0.0)
    east = np.where(bc.right.is_dirichlet, 2.0 * tx[:, -1], 0.0)
    south = np.where(bc.bottom.is_dirichlet, 2.0 * ty[0, :], 0.0)
    north = np.where(bc.top.is_dirichlet, 2.0 * ty[-1, :], 0.0)
    return Transmissivity(grid, tx, ty, west, east, south, north)


def build_transmissivities(cell_k: CellField, grid: Grid2D, bc: BoundarySpec) -> FaceField:
    """Face transmissivities: harmonic interior means, half-cell Dirichlet faces."""
    return cell_transmissivity(cell_k, grid, bc).face_field()


@dataclass(frozen=True)
class StencilOperator:
    """Symmetric 5-point operator stored as three coefficient arrays.

    east[j, i] couples cell (i, j) to (i+1, j) and is zero on the last
    column; north[j, i] couples to (i, j+1) and is zero on the last row.
    West/south couplings are implied by symmetry.  Couplings are <= 0 and
    diag > 0 on every non-empty row.
    """

    grid: Grid2D
    diag: np.ndarray  # (ny, nx)
    east: np.ndarray  # (ny, nx), 0 in last column
    north: np.ndarray  # (ny, nx), 0 in last row


def assemble_operator(faces: FaceField) -> StencilOperator:
    """Assemble the positive 5-point operator from face transmissivities."""
    g = faces.grid
    xf, yf = faces.x_faces, faces.y_faces
    if np.any(xf < 0) or np.any(yf < 0):
        raise ValueError("face transmissivities must be non-negative")
    east = np.zeros(g.shape)
    north = np.zeros(g.shape)
    east[:, :-1] = -xf[:, 1:-1]
    north[:-1, :] = -yf[1:-1, :]
    diag = xf[:, :-1] + xf[:, 1:] + yf[:-1, :] + yf[1:, :]
    if np.any(diag == 0):
        j, i = np.argwhere(diag == 0)[0]
        raise ValueError(f"isolated cell ({i}, {j}): all four face transmissivities are zero")
    return StencilOperator(g, diag, east, north)


def apply_operator(op: StencilOperator, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """y = A x using the 3-array symmetric representation."""
    g = op.grid
    x = np.asarray(x)
    if x.size != g.n_cells:
        raise ValueError(f"dimension mismatch: {x.size} vs {g.n_cells}")
    xv = x.reshape(g.shape)
    if out is None:
        out = np.empty(x.size)
    y = out.reshape(g.shape)
    np.multiply(op.diag, xv, out=y)
    y[:, :-1] += op.east[:, :-1] * xv[:, 1:]
    y[:, 1:] += op.east[:, :-1] * xv[:, :-1]
    y[:-1, :] += op.north[:-1, :] * xv[1:, :]
    y[1:, :] += op.north[:-1, :] * xv[:-1, :]
    return out


def residual(op: StencilOperator, x: np.ndarray, b: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """r = b - A x."""
    b = np.asarray(b).ravel()
    if b.size != op.grid.n_cells:
        raise ValueError(f"dimension mismatch: {b.size} vs {op.grid.n_cells}")
    r = apply_operator(op, x, out=out)
    np.subtract(b, r.ravel(), out=r.ravel())
    return r


def to_dense(op: StencilOperator) -> np.ndarray:
    """Dense N x N matrix of the operator (small grids; tests and coarsest level)."""
    g = op.grid
    n = g.n_cells
    a = np.zeros((n, n))
    idx = np.arange(n).reshape(g.shape)
    a[idx.ravel(), idx.ravel()] = op.diag.ravel()
    e = idx[:, :-1].ravel()
    a[e, e + 1] = op.east[:, :-1].ravel()
    a[e + 1, e] = op.east[:, :-1].ravel()
    nn = idx[:-1, :].ravel()
    a[nn, nn + g.nx] = op.north[:-1, :].ravel()
    a[nn + g.nx, nn] = op.north[:-1, :].ravel()
    return a


@dataclass(frozen=True)
class LiftedProblem:
    """Zero-boundary form of a boundary value problem.

    The solution of the original problem is x + lift where A x = source.
    """

    operator: StencilOperator
    source: np.ndarray
    lift: np.ndarray


def _boundary_source(trans: Transmissivity, bc: BoundarySpec) -> np.ndarray:
    """Boundary contributions to the discrete right-hand side."""
    g = trans.grid
    b = np.zeros(g.shape)
    # Dirichlet: conductance times boundary value; Neumann: prescribed
    # outward flux density integrated over the face.
    b[:, 0] += np.where(bc.left.is_dirichlet, trans.west * bc.left.values, -bc.left.values * g.dy)
    b[:, -1] += np.where(bc.right.is_dirichlet, trans.east * bc.right.values, -bc.right.values * g.dy)
    b[0, :] += np.where(bc.bottom.is_dirichlet, trans.south * bc.bottom.values, -bc.bottom.values * g.dx)
    b[-1, :] += np.where(bc.top.is_dirichlet, trans.north * bc.top.values, -bc.top.values * g.dx)
    return b.ravel()


def _boundary_fit(grid: Grid2D, bc: BoundarySpec) -> np.ndarray:
    """Smooth cell field matching the Dirichlet boundary data.

    Built from per-axis interpolation of the side values, blended by inverse
    distance to the Dirichlet sides; constant (zero-slope) toward Neumann
    sides so no-flow data is matched too.
    """
    nx, ny = grid.nx, grid.ny
    xc = grid.cell_centers_x()
    yc = grid.cell_centers_y()
    lx, ly = grid.length_x, grid.length_y

    px = np.zeros((ny, nx))
    wx = np.zeros((ny, nx))
    l_d, r_d = bc.left.is_dirichlet, bc.right.is_dirichlet
    l_v, r_v = bc.left.values, bc.right.values
    both = l_d & r_d
    if both.any():
        t = xc / lx
        px[both, :] = l_v[both, None] * (1 - t) + r_v[both, None] * t
    only_l = l_d & ~r_d
    px[only_l, :] = l_v[only_l, None]
    only_r = r_d & ~l_d
    px[only_r, :] = r_v[only_r, None]
    wx[l_d, :] += 1.0 / xc
    wx[r_d, :] += 1.0 / (lx - xc)

    py = np.zeros((ny, nx))
    wy = np.zeros((ny, nx))
    b_d, t_d = bc.bottom.is_dirichlet, bc.top.is_dirichlet
    b_v, t_v = bc.bottom.values, bc.top.values
    both = b_d & t_d
    if both.any():
        t = (yc / ly)[:, None]
        prof = b_v[None, :] * (1 - t) + t_v[None, :] * t
        py[:, both] = prof[:, both]
    only_b = b_d & ~t_d
    py[:, only_b] = b_v[only_b][None, :]
    only_t = t_d & ~b_d
    py[:, only_t] = t_v[only_t][None, :]
    wy[:, b_d] += 1.0 / yc[:, None]
    wy[:, t_d] += (1.0 / (ly - yc))[:, None]

    w = wx + wy
    fit = np.zeros((ny, nx))
    np.divide(wx * px + wy * py, w, out=fit, where=w > 0)
    return fit.ravel()


def boundary_lift(cell_k: CellField, grid: Grid2D, bc: BoundarySpec, source: CellField,
                  allow_singular: bool = False) -> LiftedProblem:
    """Transform a boundary value problem to zero boundary conditions.

    Returns the operator, the lifted right-hand side b - A*lift, and the
    boundary-fit field itself.  Reconstructing x + lift solves the original
    discretization exactly.  Without any Dirichlet face the problem is
    singular and rejected unless `allow_singular`, in which case the source
    must be compatible (zero total) and the constant mode is handled by the
    caller.
    """
    trans = cell_transmissivity(cell_k, grid, bc)
    op = assemble_operator(trans.face_field())
    b = -source.values * (grid.dx * grid.dy) + _boundary_source(trans, bc)
    if not bc.has_dirichlet:
        total = float(np.sum(b))
        scale = float(np.abs(b).sum()) or 1.0
        if abs(total) > 1e-10 * scale:
            raise ValueError(f"inconsistent pure-Neumann problem: net source {total:.3e} != 0")
        if not allow_singular:
            raise ValueError("pure-Neumann problem is singular; pass allow_singular=True to solve it")
        return LiftedProblem(op, b, np.zeros(grid.n_cells))
    lift = _boundary_fit(grid, bc)
    src = b - apply_operator(op, lift)
    return LiftedProblem(op, src, lift)
