"""Shared fixtures; the expensive studies are session-scoped and reused by
the unit tests and the acceptance suite."""

import warnings

import numpy as np
import pytest

import mscg


def make_random_problem(nx, ny, seed, bc_kind="lr", dx=None, dy=None, log_sigma=1.0):
    """Random log-normal K with independent cells; returns everything a solver
    or oracle needs."""
    rng = np.random.default_rng(seed)
    g = mscg.Grid2D(nx, ny, dx if dx else 1.0 / nx, dy if dy else 1.0 / ny)
    k = mscg.CellField(g, np.exp(log_sigma * rng.standard_normal(g.n_cells)))
    if bc_kind == "lr":
        bc = mscg.BoundarySpec.flow_left_right(g)
    elif bc_kind == "dirichlet":
        bc = mscg.BoundarySpec(
            left=mscg.BoundarySide(np.ones(ny, bool), rng.standard_normal(ny)),
            right=mscg.BoundarySide(np.ones(ny, bool), rng.standard_normal(ny)),
            bottom=mscg.BoundarySide(np.ones(nx, bool), rng.standard_normal(nx)),
            top=mscg.BoundarySide(np.ones(nx, bool), rng.standard_normal(nx)),
        )
    elif bc_kind == "neumann":
        bc = mscg.BoundarySpec.uniform(g)
    else:
        raise ValueError(bc_kind)
    return g, k, bc


def dense_fd_oracle(k2d, grid, bc):
    """Independent dense assembly of the 5-point operator: explicit loops,
    harmonic face means, half-cell Dirichlet faces, zero Neumann faces."""
    ny, nx = k2d.shape
    ax = grid.dy / grid.dx
    ay = grid.dx / grid.dy

    def harm(a, b):
        return 2 * a * b / (a + b) if a + b > 0 else 0.0

    n = nx * ny
    a = np.zeros((n, n))
    for j in range(ny):
        for i in range(nx):
            row = j * nx + i
            faces = []
            if i > 0:
                t = harm(ax * k2d[j, i - 1], ax * k2d[j, i])
                a[row, row - 1] -= t
                faces.append(t)
            else:
                faces.append(2 * ax * k2d[j, i] if bc.left.is_dirichlet[j] else 0.0)
            if i < nx - 1:
                t = harm(ax * k2d[j, i], ax * k2d[j, i + 1])
                a[row, row + 1] -= t
                faces.append(t)
            else:
                faces.append(2 * ax * k2d[j, i] if bc.right.is_dirichlet[j] else 0.0)
            if j > 0:
                t = harm(ay * k2d[j - 1, i], ay * k2d[j, i])
                a[row, row - nx] -= t
                faces.append(t)
            else:
                faces.append(2 * ay * k2d[j, i] if bc.bottom.is_dirichlet[i] else 0.0)
            if j < ny - 1:
                t = harm(ay * k2d[j, i], ay * k2d[j + 1, i])
                a[row, row + nx] -= t
                faces.append(t)
            else:
                faces.append(2 * ay * k2d[j, i] if bc.top.is_dirichlet[i] else 0.0)
            a[row, row] = sum(faces)
    return a


def dense_unlifted_rhs(k2d, grid, bc, source2d):
    """Independent dense right-hand side including boundary source terms."""
    ny, nx = k2d.shape
    ax = grid.dy / grid.dx
    ay = grid.dx / grid.dy
    b = -source2d * grid.dx * grid.dy
    for j in range(ny):
        if bc.left.is_dirichlet[j]:
            b[j, 0] += 2 * ax * k2d[j, 0] * bc.left.values[j]
        else:
            b[j, 0] -= bc.left.values[j] * grid.dy
        if bc.right.is_dirichlet[j]:
            b[j, -1] += 2 * ax * k2d[j, -1] * bc.right.values[j]
        else:
            b[j, -1] -= bc.right.values[j] * grid.dy
    for i in range(nx):
        if bc.bottom.is_dirichlet[i]:
            b[0, i] += 2 * ay * k2d[0, i] * bc.bottom.values[i]
        else:
            b[0, i] -= bc.bottom.values[i] * grid.dx
        if bc.top.is_dirichlet[i]:
            b[-1, i] += 2 * ay * k2d[-1, i] * bc.top.values[i]
        else:
            b[-1, i] -= bc.top.values[i] * grid.dx
    return b.ravel()


def dense_sgs_pq(a):
    """Dense symmetric Gauss-Seidel splitting from first principles."""
    d = np.diag(np.diag(a))
    l = np.tril(a, -1)
    u = np.triu(a, 1)
    p = (d + l) @ np.linalg.solve(d, d + u)
    q = l @ np.linalg.solve(d, u)
    return p, q


@pytest.fixture(scope="session")
def million_cell_field():
    """1000^2 power-law field, cutoffs 32x4 cells, rescaled to variance 2."""
    n = 1000
    g = mscg.Grid2D(n, n, 1.0 / n, 1.0 / n)
    spec = mscg.CorrelationSpec.from_cutoffs(
        "power_law", 32.0 / n, 4.0 / n, np.deg2rad(15.0), 0.0, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fld = mscg.generate_lognormal_field(g, spec, 42)
    return mscg.rescale_log_variance(fld, 2.0)


@pytest.fixture(scope="session")
def base_case_256():
    import time
    cfg = mscg.ExperimentConfig(nx=256, ny=256, seed=1)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        study, rep = mscg.run_base_case(cfg)
    study.elapsed = time.perf_counter() - t0
    return (study, rep), cfg


@pytest.fixture(scope="session")
def base_report_512():
    cfg = mscg.ExperimentConfig(nx=512, ny=512, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        study, rep = mscg.run_base_case(cfg)
    return rep


@pytest.fixture(scope="session")
def scaling_study():
    import time
    cfg = mscg.ExperimentConfig(experiment="scaling", seed=3)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        study = mscg.run_scaling_study(cfg)
    study.elapsed = time.perf_counter() - t0
    return study


@pytest.fixture(scope="session")
def accuracy_study():
    cfg = mscg.ExperimentConfig(experiment="accuracy", nx=128, ny=128, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return mscg.run_accuracy_study(cfg)


@pytest.fixture(scope="session")
def variance_study():
    cfg = mscg.ExperimentConfig(experiment="variance", nx=128, ny=128, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return mscg.run_variance_study(cfg)


@pytest.fixture(scope="session")
def compare_study():
    cfg = mscg.ExperimentConfig(experiment="compare", nx=256, ny=256, seed=1, coarsest_n=16)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return mscg.run_compare(cfg)


@pytest.fixture(scope="session")
def channel_result():
    cfg = mscg.ExperimentConfig(experiment="channel", nx=512, ny=128, cell_aspect=10.0,
                                semi_coarsen=True, coarsest_n=640, seed=4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return mscg.run_channel_case(cfg), cfg
