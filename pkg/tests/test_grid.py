import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mscg
from mscg.grid import overlap_fractions, round_half_up


def test_dot_small_examples():
    assert mscg.dot(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0
    assert mscg.dot(np.zeros(5), np.arange(5.0)) == 0.0


def test_dot_matches_summation_oracle():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(16)
    b = rng.standard_normal(16)
    expected = math.fsum(x * y for x, y in zip(a, b))
    assert mscg.dot(a, b) == pytest.approx(expected, rel=1e-14)


def test_dot_dimension_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        mscg.dot(np.ones(3), np.ones(4))


def test_rms_residual_examples():
    assert mscg.rms_residual(np.array([3.0, 4.0])) == pytest.approx(math.sqrt(12.5))
    assert mscg.rms_residual(np.zeros(7)) == 0.0
    assert mscg.rms_residual(np.full(13, -2.5)) == pytest.approx(2.5)


def test_rms_residual_empty():
    with pytest.raises(ValueError, match="empty"):
        mscg.rms_residual(np.array([]))


@given(st.integers(0, 2**31), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
@settings(max_examples=25, deadline=None)
def test_dot_symmetric_bilinear(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    a, b, c = rng.standard_normal((3, 32))
    assert mscg.dot(a, b) == pytest.approx(mscg.dot(b, a), rel=1e-13, abs=1e-13)
    lhs = mscg.dot(alpha * a + beta * b, c)
    rhs = alpha * mscg.dot(a, c) + beta * mscg.dot(b, c)
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-10)


@given(st.integers(0, 2**31), st.floats(-1e6, 1e6, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_rms_scaling(seed, alpha):
    rng = np.random.default_rng(seed)
    r = rng.standard_normal(40)
    assert mscg.rms_residual(alpha * r) == pytest.approx(
        abs(alpha) * mscg.rms_residual(r), rel=1e-12, abs=1e-12)


def test_grid_validation():
    with pytest.raises(ValueError):
        mscg.Grid2D(0, 4)
    with pytest.raises(ValueError):
        mscg.Grid2D(4, 4, dx=-1.0)
    g = mscg.Grid2D(3, 2, 0.5, 0.25)
    assert g.n_cells == 6
    assert g.shape == (2, 3)
    assert g.length_x == pytest.approx(1.5)
    np.testing.assert_allclose(g.cell_centers_x(), [0.25, 0.75, 1.25])


def test_cell_field_validation():
    g = mscg.Grid2D(2, 2)
    with pytest.raises(ValueError, match="expected 4"):
        mscg.CellField(g, np.ones(5))
    with pytest.raises(ValueError, match="finite"):
        mscg.CellField(g, np.array([1.0, np.nan, 0.0, 0.0]))
    f = mscg.CellField(g, np.arange(4.0))
    assert f.as_2d()[1, 0] == 2.0  # index = j*nx + i


def test_face_field_shapes():
    g = mscg.Grid2D(3, 2)
    f = mscg.FaceField(g, np.zeros((2, 4)), np.zeros((3, 3)))
    assert f.x_faces.shape == (2, 4)
    with pytest.raises(ValueError, match="x_faces"):
        mscg.FaceField(g, np.zeros((2, 3)), np.zeros((3, 3)))


def test_boundary_spec():
    g = mscg.Grid2D(3, 2)
    bc = mscg.BoundarySpec.flow_left_right(g, 1.0, 0.0)
    assert bc.has_dirichlet
    assert bc.left.is_dirichlet.all() and not bc.top.is_dirichlet.any()
    assert bc.left.values.size == 2 and bc.top.values.size == 3
    assert not mscg.BoundarySpec.uniform(g).has_dirichlet
    with pytest.raises(ValueError, match="unknown boundary kind"):
        mscg.BoundarySide.uniform(3, "robin")


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(62.5) == 63
    assert round_half_up(250.25) == 250


def test_overlap_fractions_partition():
    o = overlap_fractions(3, 1.0, 7, 3.0 / 7.0)
    assert o.shape == (3, 7)
    np.testing.assert_allclose(o.sum(axis=0), np.ones(7), atol=1e-12)
    # fine cell 2 spans [6/7, 9/7): 1/3 of it in coarse cell 0, 2/3 in cell 1
    assert o[0, 2] == pytest.approx(1.0 / 3.0)
    assert o[1, 2] == pytest.approx(2.0 / 3.0)
