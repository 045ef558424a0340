import numpy as np
import pytest

import oracle_values as ov
from solvable2d.catalog import (ENTRY_NAMES, RADIAL_GRID, build, build_radial_example,
                                build_trig_example, build_twofold_radial, oracle_deltas, replay)
from solvable2d.errors import ParamError
from solvable2d.fields import GridSpec, Point2


def test_names():
    assert ENTRY_NAMES == ("radial", "twofold-radial", "trig")
    with pytest.raises(KeyError):
        build("bogus")
    with pytest.raises(ParamError):
        build("radial", K=2.0)


@pytest.mark.parametrize("builder, params, flag", [
    (build_radial_example, dict(C1=1.5, C2=1.0), True),
    (build_radial_example, dict(C1=0.5, C2=1.0), False),
    (build_radial_example, dict(C1=2.0, C2=-1.0), False),
    (build_trig_example, dict(p=1.0, x0=0.0, C=2.5), True),
    (build_trig_example, dict(p=1.0, x0=0.0, C=2.0), False),
])
def test_nonsingular_flag(builder, params, flag):
    assert builder(**params).nonsingular is flag


def test_radial_values(radial):
    assert radial.potential.at(Point2(1.0, 0.0)) == pytest.approx(ov.U_RADIAL_R1)
    assert radial.solution.at(Point2(1.0, 1.0)) == pytest.approx(ov.Y1_AT_11, abs=1e-12)
    assert radial.machinery["Y~_L1"].at(Point2(*ov.P)) == pytest.approx(ov.Y1_AT_P, abs=1e-10)
    assert radial.machinery["Y~_L2"].at(Point2(*ov.P)) == pytest.approx(ov.Y2_AT_P, abs=1e-10)


def test_radial_constant_terms():
    e = build_radial_example(C_L1=0.7, C_L2=-1.3)
    p = Point2(*ov.P)
    assert e.machinery["Y~_L1"].at(p) == pytest.approx(ov.Y1_AT_P + 0.7 * ov.Y_CONST_COEF_AT_P, abs=1e-10)
    assert e.machinery["Y~_L2"].at(p) == pytest.approx(ov.Y2_AT_P - 1.3 * ov.Y_CONST_COEF_AT_P, abs=1e-10)


@pytest.mark.parametrize("C1, C2, key", [(2.0, -1.0, "U_RADIAL_2_M1_AT_P"), (0.5, 1.0, "U_RADIAL_HALF_1_AT_P")])
def test_radial_machinery_other_parameters(C1, C2, key):
    e = build_radial_example(C1, C2)
    p = Point2(*ov.P)
    assert e.machinery["potential"].at(p) == pytest.approx(getattr(ov, key), abs=1e-9)
    assert e.oracles["potential"].at(p) == pytest.approx(getattr(ov, key), abs=1e-12)


def test_twofold_values(twofold):
    assert twofold.potential.at(Point2(1.0, 0.0)) == pytest.approx(ov.U2_R1_C0)
    assert twofold.solution.at(Point2(1.0, 1.0)) == pytest.approx(ov.Y2_AT_11_C0, abs=1e-12)
    assert twofold.oracles["Q12"].at(Point2(1.0, 0.0)) == pytest.approx(12.5)
    # r = 1 itself is excluded from the machinery domain (the shift has a log there)
    near = Point2(1.0 + 1e-3, 0.0)
    assert twofold.machinery["Q12"].at(near) == pytest.approx(twofold.oracles["Q12"].at(near), abs=1e-6)
    p = Point2(*ov.P)
    assert twofold.machinery["Q12"].at(p) == pytest.approx(ov.Q12_AT_P_C0, abs=1e-7)
    assert twofold.machinery["potential"].at(p) == pytest.approx(
        twofold.oracles["potential"].at(p), abs=1e-7)
    assert twofold.record.kinds == ["nonlocal_shift", "scale", "twofold"]


def test_twofold_positive_constant():
    e = build_twofold_radial(1.0)
    assert e.nonsingular
    p = Point2(*ov.P)
    assert e.machinery["potential"].at(p) == pytest.approx(ov.U2_AT_P_C1, abs=1e-7)
    assert e.oracles["potential"].at(Point2(1.0, 0.0)) == pytest.approx(ov.U2_R1_C1, abs=1e-12)


def test_trig_values(trig):
    e2 = build_trig_example(C=2.0)
    hp = Point2(*ov.HALF_PI)
    assert e2.machinery["Y_p"].at(hp) == pytest.approx(ov.YP_HALF_PI_C2, abs=1e-9)
    assert e2.machinery["u_shift"].at(hp) == pytest.approx(ov.U_SHIFT_HALF_PI, abs=1e-9)
    q = Point2(*ov.TRIG_Q)
    assert trig.potential.at(q) == pytest.approx(ov.U_FINAL_AT_Q_C25, abs=1e-12)
    assert trig.machinery["potential"].at(q) == pytest.approx(ov.U_FINAL_AT_Q_C25, abs=1e-9)
    assert trig.machinery["solution"].at(q) == pytest.approx(1 / ov.YP_AT_Q_C25, abs=1e-10)


def test_oracle_deltas_small(radial, trig):
    small = GridSpec(-3, 3, -3, 3, 33, 33)
    for key, (mx, _) in oracle_deltas(radial, small).items():
        assert mx < 1e-8, key
    for key, (mx, _) in oracle_deltas(trig, GridSpec(0.5, 3, 0.5, 3, 33, 33)).items():
        assert mx < 1e-8, key


def test_replay_reproduces_chain(trig):
    from solvable2d.catalog import apply_step
    pair = apply_step(trig.machinery_pair, "moutard", seed="solution")
    again = replay(pair.record)
    xs, ys = np.array([1.0, 1.7, 2.6]), np.array([0.8, 1.9, 2.4])
    assert np.allclose(again.u(xs, ys), pair.u(xs, ys), atol=1e-10, rtol=0)
    assert np.allclose(again.Y(xs, ys), pair.Y(xs, ys), atol=1e-10, rtol=0)


def test_reference_grids(radial):
    assert radial.grid == RADIAL_GRID == GridSpec(-3, 3, -3, 3, 129, 129)
    X, Y = RADIAL_GRID.nodes()
    inside = radial.region(X, Y)
    assert not inside[X**2 + Y**2 < 0.25].any()
