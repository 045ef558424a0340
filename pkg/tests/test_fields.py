import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solvable2d.errors import DomainError, EmptyMaskError
from solvable2d.fields import (GridData, GridSpec, Point2, ScalarField2, grid_to_field,
                               jet3_at, laplacian_at, read_grid_csv, residual_norms, sample,
                               write_grid_csv)


def test_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        Point2(np.nan, 0.0)


def test_nodes_shape_and_spacing():
    s = GridSpec(0.0, 1.0, -1.0, 1.0, 5, 9)
    X, Y = s.nodes()
    assert X.shape == (9, 5)
    assert s.dx == pytest.approx(0.25)
    assert s.dy == pytest.approx(0.25)
    assert s.coarsened(2).nx == 3 and s.coarsened(2).ny == 5


def test_field_arithmetic_and_domain():
    f = ScalarField2.from_expression(lambda x, y: np.log(np.abs(x)) + y, lambda x, y: x > 0, "f")
    g = f * 2.0 + 1.0
    assert g(np.e, 1.0) == pytest.approx(5.0)
    assert not g.valid(-1.0, 0.0)
    with pytest.raises(DomainError):
        jet3_at(g, Point2(-1.0, 0.0))


def test_sample_masks_domain_and_region():
    f = ScalarField2.from_expression(lambda x, y: 1 / x, lambda x, y: np.abs(x) > 0.1)
    s = GridSpec(-1, 1, -1, 1, 21, 21)
    g = sample(f, s, region=lambda x, y: y > 0)
    X, Y = s.nodes()
    assert not g.mask[np.abs(X) <= 0.1].any()
    assert not g.mask[Y <= 0].any()
    assert np.isnan(g.values[~g.mask]).all()


def test_sample_encodes_problems_in_mask():
    f = ScalarField2.from_expression(lambda x, y: x, lambda x, y: x > 10)
    g = sample(f, GridSpec(0, 1, 0, 1, 3, 3))
    assert not g.mask.any()
    with pytest.raises(EmptyMaskError):
        residual_norms(g)


def test_jet3_at_examples():
    f = ScalarField2.from_expression(lambda x, y: x * x * y)
    j = jet3_at(f, Point2(1.0, 2.0))
    assert (j.value, j.dx, j.dxxy, j.dyyy) == (2.0, 4.0, 2.0, 0.0)
    g = ScalarField2(lambda x, y: np.log(x), domain=lambda x, y: x > 0)
    assert jet3_at(g, Point2(2.0, 0.0), 1e-3).dxx == pytest.approx(-0.25, abs=1e-6)
    h = ScalarField2.from_expression(lambda x, y: x / (x * x + y * y))
    assert abs(laplacian_at(h, Point2(1.0, 1.0))) < 1e-8


def test_fd_steps_near_domain_edge_rejected():
    g = ScalarField2(lambda x, y: np.log(x), domain=lambda x, y: x > 0)
    with pytest.raises(DomainError):
        jet3_at(g, Point2(1e-3, 0.0), 1e-2)


def test_laplacian_at_harmonic_is_zero():
    f = ScalarField2.from_expression(lambda x, y: np.exp(x) * np.cos(y))
    assert abs(laplacian_at(f, Point2(0.3, 0.4))) < 1e-12
    # without analytic jets the finite-difference fallback is used
    g = ScalarField2(lambda x, y: np.exp(x) * np.cos(y))
    assert abs(laplacian_at(g, Point2(0.3, 0.4))) < 1e-5


def test_residual_norms():
    s = GridSpec(0, 1, 0, 1, 3, 3)
    v = np.full((3, 3), np.nan)
    v[0, 0], v[2, 1] = 1.0, -3.0
    mx, rms = residual_norms(GridData(s, v, ~np.isnan(v)))
    assert mx == 3.0
    assert rms == pytest.approx(np.sqrt(5))


values = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30, deadline=None)
@given(st.lists(values, min_size=12, max_size=12), st.lists(st.booleans(), min_size=12, max_size=12),
       st.floats(-1e3, 1e3), st.floats(0.001, 1e3))
def test_csv_round_trip_is_exact(vals, mask, x0, w):
    s = GridSpec(x0, x0 + w, -w, 2 * w, 4, 3)
    m = np.array(mask).reshape(3, 4)
    v = np.where(m, np.array(vals).reshape(3, 4), np.nan)
    g = GridData(s, v, m)
    import tempfile, os
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "g.csv")
        write_grid_csv(g, path)
        back = read_grid_csv(path)
    assert back.spec == s
    assert np.array_equal(back.mask, m)
    assert np.array_equal(back.values[m], v[m])


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(0.05, 2))
def test_mask_shrinks_with_region(cut, radius):
    f = ScalarField2.from_expression(lambda x, y: x + y, lambda x, y: x < cut)
    s = GridSpec(-2, 2, -2, 2, 17, 17)
    try:
        big = sample(f, s)
        small = sample(f, s, region=lambda x, y: x * x + y * y < radius**2)
    except EmptyMaskError:
        return
    assert not (small.mask & ~big.mask).any()


def test_grid_to_field_interpolates_smooth_data(tmp_path):
    s = GridSpec(0, 1, 0, 1, 33, 33)
    f = ScalarField2.from_expression(lambda x, y: np.sin(x) * np.cosh(y))
    g = sample(f, s)
    write_grid_csv(g, tmp_path / "f.csv")
    h = grid_to_field(read_grid_csv(tmp_path / "f.csv"))
    assert h(0.37, 0.61) == pytest.approx(f(0.37, 0.61), abs=1e-7)


def test_read_rejects_bad_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,3,1\n")
    with pytest.raises(ValueError):
        read_grid_csv(p)


def test_radial_shift_value_and_laplacian():
    from solvable2d.catalog import radial_B_closed
    B = radial_B_closed(1.5, 1.0)
    p = Point2(0.0, 2.0)
    assert B.at(p) == pytest.approx(7 / 9, abs=1e-12)
    fd = ScalarField2(B._value, domain=B._domain)
    assert laplacian_at(fd, p) == pytest.approx(laplacian_at(B, p), abs=1e-6)


@pytest.mark.parametrize("p", [Point2(0.4, 1.3), Point2(-1.1, 0.6), Point2(1.7, -0.9)])
def test_fd_error_quarters_when_step_halves(p):
    from solvable2d.catalog import radial_B_closed
    from solvable2d.fields import fd_jet
    B = radial_B_closed(1.5, 1.0)
    exact = B.jet(np.array([p.x]), np.array([p.y]), 3)
    errs = []
    for h in (2e-2, 1e-2):
        j, _ = fd_jet(B, np.array([p.x]), np.array([p.y]), h, 3)
        errs.append(max(abs(j.partial(i, k)[0] - exact.partial(i, k)[0]) for i, k in ((2, 0), (1, 1), (0, 2))))
    assert 3.0 <= errs[0] / errs[1] <= 5.0
