"""Regular 2-D grid geometry, cell/face field containers and vector primitives.

Cell (i, j) has its centre at ((i + 1/2) dx, (j + 1/2) dy).  Flat cell
vectors are row-major with index = j*nx + i, so a flat vector of length
nx*ny reshapes to a (ny, nx) array indexed [j, i].  Every module in the
package shares this layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class Grid2D:
    """Rectangular grid of nx*ny cells with uniform cell size dx*dy."""

    nx: int
    ny: int
    dx: float = 1.0
    dy: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError(f"cell sizes must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (ny, nx) of a cell field on this grid."""
        return (self.ny, self.nx)

    @property
    def length_x(self) -> float:
        return self.nx * self.dx

    @property
    def length_y(self) -> float:
        return self.ny * self.dy

    def cell_centers_x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    def cell_centers_y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy


@dataclass(frozen=True)
class CellField:
    """Scalar value per cell, stored flat row-major (index = j*nx + i)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.n_cells:
            raise ValueError(f"expected {self.grid.n_cells} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("cell field contains non-finite values")
        object.__setattr__(self, "values", v)

    def as_2d(self) -> np.ndarray:
        """(ny, nx) view of the values."""
        return self.values.reshape(self.grid.shape)


@dataclass(frozen=True)
class FaceField:
    """Face-centred field.

    x_faces[j, i] sits at (i - 1/2, j): column 0 is the west boundary,
    column nx the east boundary.  y_faces[j, i] sits at (i, j - 1/2):
    row 0 is the south boundary, row ny the north boundary.
    """

    grid: Grid2D
    x_faces: np.ndarray  # (ny, nx+1)
    y_faces: np.ndarray  # (ny+1, nx)

    def __post_init__(self):
        xf = np.asarray(self.x_faces, dtype=float)
        yf = np.asarray(self.y_faces, dtype=float)
        if xf.shape != (self.grid.ny, self.grid.nx + 1):
            raise ValueError(f"x_faces shape {xf.shape} != {(self.grid.ny, self.grid.nx + 1)}")
        if yf.shape != (self.grid.ny + 1, self.grid.nx):
            raise ValueError(f"y_faces shape {yf.shape} != {(self.grid.ny + 1, self.grid.nx)}")
        if not (np.all(np.isfinite(xf)) and np.all(np.isfinite(yf))):
            raise ValueError("face field contains non-finite values")
        object.__setattr__(self, "x_faces", xf)
        object.__setattr__(self, "y_faces", yf)


@dataclass(frozen=True)
class BoundarySide:
    """Per-face boundary data along one side: kind and value for each face."""

    is_dirichlet: np.ndarray  # bool per boundary face
    values: np.ndarray  # pressure (Dirichlet) or outward flux density (Neumann)

    def __post_init__(self):
        k = np.asarray(self.is_dirichlet, dtype=bool).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if k.size != v.size:
            raise ValueError("boundary kinds and values differ in length")
        object.__setattr__(self, "is_dirichlet", k)
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, n: int, kind: str, value: float = 0.0) -> "BoundarySide":
        if kind not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary kind {kind!r}")
        return cls(np.full(n, kind == DIRICHLET), np.full(n, float(value)))


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary condition on each of the four sides, one entry per boundary face.

    left/right have ny entries (indexed by j), bottom/top have nx entries
    (indexed by i).
    """

    left: BoundarySide
    right: BoundarySide
    bottom: BoundarySide
    top: BoundarySide

    @classmethod
    def uniform(
        cls,
        grid: Grid2D,
        left: tuple[str, float] = (NEUMANN, 0.0),
        right: tuple[str, float] = (NEUMANN, 0.0),
        bottom: tuple[str, float] = (NEUMANN, 0.0),
        top: tuple[str, float] = (NEUMANN, 0.0),
    ) -> "BoundarySpec":
        return cls(
            left=BoundarySide.uniform(grid.ny, *left),
            right=BoundarySide.uniform(grid.ny, *right),
            bottom=BoundarySide.uniform(grid.nx, *bottom),
            top=BoundarySide.uniform(grid.nx, *top),
        )

    @classmethod
    def flow_left_right(cls, grid: Grid2D, p_left: float = 1.0, p_right: float = 0.0) -> "BoundarySpec":
        """Fixed pressure on the left/right sides, no flow through top/bottom."""
        return cls.uniform(
            grid,
            left=(DIRICHLET, p_left),
            right=(DIRICHLET, p_right),
            bottom=(NEUMANN, 0.0),
            top=(NEUMANN, 0.0),
        )

    @property
    def has_dirichlet(self) -> bool:
        return bool(
            self.left.is_dirichlet.any()
            or self.right.is_dirichlet.any()
            or self.bottom.is_dirichlet.any()
            or self.top.is_dirichlet.any()
        )

    def check_matches(self, grid: Grid2D):
        if self.left.values.size != grid.ny or self.right.values.size != grid.ny:
            raise ValueError("left/right boundary data must have ny entries")
        if self.bottom.values.size != grid.nx or self.top.values.size != grid.nx:
            raise ValueError("bottom/top boundary data must have nx entries")


def dot(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean inner product of two cell vectors of equal length."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(np.dot(a, b))


def rms_residual(r: np.ndarray) -> float:
    """Root mean square of a cell vector, sqrt(||r||^2 / N)."""
    r = np.asarray(r).ravel()
    if r.size == 0:
        raise ValueError("empty vector")
    return float(np.sqrt(np.dot(r, r) / r.size))


def round_half_up(x: float) -> int:
    """Round to nearest integer with .5 going up (avoids banker's rounding)."""
    return int(np.floor(x + 0.5))


def overlap_fractions(n_coarse: int, d_coarse: float, n_fine: int, d_fine: float) -> np.ndarray:
    """Overlap matrix O of shape (n_coarse, n_fine) along one axis.

    O[I, i] is the fraction of fine cell i covered by coarse cell I; columns
    sum to 1 when the two axes span the same physical length.
    """
    edges_c = np.arange(n_coarse + 1) * d_coarse
    edges_f = np.arange(n_fine + 1) * d_fine
    lo = np.maximum.outer(edges_c[:-1], edges_f[:-1])
    hi = np.minimum.outer(edges_c[1:], edges_f[1:])
    return np.clip(hi - lo, 0.0, None) / d_fine
