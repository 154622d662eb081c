"""Log-normal random permeability fields with prescribed autocorrelation.

Fields are synthesized spectrally: white noise is filtered by the square
root of the discrete spectrum of the covariance kernel on a periodic
embedding of the grid, then cropped.  Negative spectral values caused by
truncating a non-periodic kernel are clamped to zero with a warning.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .grid import CellField, Grid2D, overlap_fractions

GAUSSIAN = "gaussian"
POWER_LAW = "power_law"

_MAGIC = b"MSCGFLD1"


@dataclass(frozen=True)
class CorrelationSpec:
    """Autocorrelation model for the log of the permeability.

    `lam` is the symmetric positive definite matrix of inverse squared
    cutoff lengths; orientation is folded into it.  The power-law kernel is
    (1 + s^T lam s)^(-1/4), the Gaussian kernel exp(-s^T lam s).
    """

    model: str
    lam: np.ndarray
    log_mean: float = 0.0
    log_variance: float = 1.0

    def __post_init__(self):
        if self.model not in (GAUSSIAN, POWER_LAW):
            raise ValueError(f"unknown correlation model {self.model!r}")
        m = np.asarray(self.lam, dtype=float)
        if m.shape != (2, 2) or not np.allclose(m, m.T):
            raise ValueError("lam must be a symmetric 2x2 matrix")
        if np.any(np.linalg.eigvalsh(m) <= 0):
            raise ValueError("lam must be positive definite")
        if self.log_variance < 0:
            raise ValueError("log_variance must be >= 0")
        object.__setattr__(self, "lam", m)

    @classmethod
    def from_cutoffs(cls, model: str, cutoff_major: float, cutoff_minor: float,
                     angle: float = 0.0, log_mean: float = 0.0,
                     log_variance: float = 1.0) -> "CorrelationSpec":
        """Build lam from two cutoff lengths, the major axis rotated by `angle`
        radians from the x-axis."""
        if cutoff_major <= 0 or cutoff_minor <= 0:
            raise ValueError("cutoff lengths must be positive")
        c, s = np.cos(angle), np.sin(angle)
        rot = np.array([[c, s], [-s, c]])
        diag = np.diag([1.0 / cutoff_major**2, 1.0 / cutoff_minor**2])
        return cls(model, rot.T @ diag @ rot, log_mean, log_variance)

    def min_cutoff(self) -> float:
        return float(1.0 / np.sqrt(np.max(np.linalg.eigvalsh(self.lam))))

    def max_cutoff(self) -> float:
        return float(1.0 / np.sqrt(np.min(np.linalg.eigvalsh(self.lam))))


def correlation_kernel(spec: CorrelationSpec, separation) -> float | np.ndarray:
    """Autocorrelation at a separation vector (or array of them, last axis 2)."""
    s = np.asarray(separation, dtype=float)
    q = (s[..., 0] ** 2 * spec.lam[0, 0]
         + 2.0 * s[..., 0] * s[..., 1] * spec.lam[0, 1]
         + s[..., 1] ** 2 * spec.lam[1, 1])
    if spec.model == GAUSSIAN:
        out = np.exp(-q)
    else:
        out = (1.0 + q) ** -0.25
    return float(out) if out.ndim == 0 else out


def _kernel_grid(spec: CorrelationSpec, mx: int, my: int, dx: float, dy: float) -> np.ndarray:
    """Kernel sampled on the periodic embedding torus (minimum-image lags)."""
    ix = np.arange(mx)
    sx = np.where(ix <= mx // 2, ix, ix - mx) * dx
    iy = np.arange(my)
    sy = np.where(iy <= my // 2, iy, iy - my) * dy
    q = (spec.lam[0, 0] * sx[None, :] ** 2
         + 2.0 * spec.lam[0, 1] * sx[None, :] * sy[:, None]
         + spec.lam[1, 1] * sy[:, None] ** 2)
    if spec.model == GAUSSIAN:
        return np.exp(-q)
    return (1.0 + q) ** -0.25


def generate_lognormal_field(grid: Grid2D, spec: CorrelationSpec, seed: int) -> CellField:
    """Sample exp(g) with g a stationary Gaussian field on the cell centres.

    The same (grid, spec, seed) always produces a bit-identical field.
    """
    if spec.log_variance == 0.0:
        return CellField(grid, np.full(grid.n_cells, np.exp(spec.log_mean)))
    if spec.max_cutoff() > max(grid.length_x, grid.length_y):
        warnings.warn(
            f"correlation cutoff {spec.max_cutoff():.3g} exceeds the domain "
            f"({grid.length_x:.3g} x {grid.length_y:.3g}); the sampled variance will be unreliable")
    mx = scipy.fft.next_fast_len(2 * grid.nx)
    my = scipy.fft.next_fast_len(2 * grid.ny)
    cov = spec.log_variance * _kernel_grid(spec, mx, my, grid.dx, grid.dy)
    lam = scipy.fft.fft2(cov).real
    neg = lam < 0
    if neg.any():
        clipped = -lam[neg].sum() / lam[~neg].sum()
        if clipped > 1e-12:
            warnings.warn(f"clamped negative embedding spectrum (mass fraction {clipped:.2e})")
        lam[neg] = 0.0
        # keep the total variance at its target despite the clamped mass
        lam *= 1.0 / (1.0 + clipped)
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal((my, mx)) + 1j * rng.standard_normal((my, mx))
    sample = np.sqrt(mx * my) * scipy.fft.ifft2(np.sqrt(lam) * eta)
    g = sample.real[: grid.ny, : grid.nx]
    return CellField(grid, np.exp(spec.log_mean + g).ravel())


def rescale_log_variance(fld: CellField, target_variance: float) -> CellField:
    """Scale the log of the field about its mean to hit a target variance."""
    if target_variance < 0:
        raise ValueError("target variance must be >= 0")
    v = fld.values
    if np.any(v <= 0):
        raise ValueError("field must be strictly positive")
    logv = np.log(v)
    mean = logv.mean()
    current = logv.var()
    if target_variance == 0.0:
        return CellField(fld.grid, np.full(v.size, np.exp(mean)))
    if current == 0.0:
        raise ValueError("cannot rescale a constant field to positive variance")
    scaled = (logv - mean) * np.sqrt(target_variance / current) + mean
    return CellField(fld.grid, np.exp(scaled))


def extract_subgrid(fld: CellField, corner: tuple[int, int], shape: tuple[int, int]) -> CellField:
    """Copy an (nx, ny) window whose lower-left cell is `corner` = (i0, j0)."""
    i0, j0 = corner
    nx, ny = shape
    g = fld.grid
    if i0 < 0 or j0 < 0 or nx < 1 or ny < 1 or i0 + nx > g.nx or j0 + ny > g.ny:
        raise ValueError(f"subgrid {shape} at {corner} exceeds {g.nx}x{g.ny}")
    vals = fld.as_2d()[j0:j0 + ny, i0:i0 + nx].copy()
    return CellField(Grid2D(nx, ny, g.dx, g.dy), vals.ravel())


def interpolate_to_grid(fld: CellField, target: Grid2D) -> CellField:
    """Cell-average the log of the field onto a coarser grid of the same domain."""
    g = fld.grid
    if not (np.isclose(g.length_x, target.length_x) and np.isclose(g.length_y, target.length_y)):
        raise ValueError("target grid must span the same physical domain")
    ox = overlap_fractions(target.nx, target.dx, g.nx, g.dx)
    oy = overlap_fractions(target.ny, target.dy, g.ny, g.dy)
    logv = np.log(fld.as_2d())
    avg = (oy @ logv @ ox.T) * (g.dx * g.dy) / (target.dx * target.dy)
    return CellField(target, np.exp(avg).ravel())


def write_field(fld: CellField, path) -> None:
    """Flat binary dump: 16-byte header (magic, nx, ny), then little-endian
    float64 values, row-major."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", fld.grid.nx, fld.grid.ny))
        fh.write(fld.values.astype("<f8").tobytes())


def read_field(path, dx: float | None = None, dy: float | None = None) -> CellField:
    """Read a binary field dump; cell sizes are not stored in the format and
    default to the unit square."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"not a field file: bad magic {magic!r}")
        nx, ny = struct.unpack("<II", fh.read(8))
        vals = np.frombuffer(fh.read(8 * nx * ny), dtype="<f8")
        if vals.size != nx * ny:
            raise ValueError("truncated field file")
    grid = Grid2D(nx, ny, dx if dx is not None else 1.0 / nx, dy if dy is not None else 1.0 / ny)
    return CellField(grid, vals.copy())


def write_field_csv(fld: CellField, path) -> None:
    """CSV dump for small grids: one line per row j, nx comma-separated values."""
    np.savetxt(path, fld.as_2d(), delimiter=",", fmt="%.17g")


def read_field_csv(path, dx: float | None = None, dy: float | None = None) -> CellField:
    vals = np.loadtxt(path, delimiter=",", ndmin=2)
    ny, nx = vals.shape
    grid = Grid2D(nx, ny, dx if dx is not None else 1.0 / nx, dy if dy is not None else 1.0 / ny)
    return CellField(grid, vals.ravel())
