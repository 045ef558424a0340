"""Recompute the frozen reference values from closed forms with sympy."""

import pytest

import oracle_values as ov

sp = pytest.importorskip("sympy")

x, y, C = sp.symbols("x y C", real=True)
r2 = x**2 + y**2
t = r2 ** sp.Rational(3, 2)
r = sp.sqrt(r2)


def _shift_potential(C1, C2):
    s = -sp.log((r2**C1 - C2) / (r2**C1 + C2))
    return -(sp.diff(s, x, 2) + sp.diff(s, y, 2)) + sp.diff(s, x) ** 2 + sp.diff(s, y) ** 2


P = dict(x=sp.Rational(7, 10), y=sp.Rational(13, 10))
TQ = dict(x=sp.Rational(7, 5), y=sp.Integer(2))
HP = dict(x=sp.pi / 2, y=sp.pi / 2)

u_rad = -18 * r / (t + 1) ** 2
y1 = -2 * x * y * (7 * t + 1) / (r2**2 * (t + 1))
y2 = (x**2 - y**2) * (7 * t + 1) / (r2**2 * (t + 1))
yc = x * (5 * t - 1) / (r2 * (t + 1))
u2 = -2 * r * (441 + 9 * C**2 * r**8 + 2 * C * r * (392 * r**6 + 49 * r**3 + 8)) / (
    C * r**4 * (r**3 + 1) + 49 * r**3 + 1) ** 2
Y2 = -4 * x * y * (7 * t + 1) / (C * r2**2 * (t + 1) + 49 * t + 1)
q12 = (49 * t + 1) / (2 * r2**2 * (t + 1)) + C / 2

T = sp.tanh(x)
u_shift = -1 + 2 / sp.sin(y) ** 2 + 2 / sp.sinh(x) ** 2


def yp(c):
    return (c - sp.cos(y) * sp.cos(x) - sp.cos(y) * sp.sin(x) * T) / (sp.sin(y) * T)


CASES = [
    (u_rad, dict(x=1, y=0), ov.U_RADIAL_R1),
    (u_rad, P, ov.U_RADIAL_AT_P),
    (_shift_potential(sp.Rational(3, 2), 1), P, ov.U_RADIAL_AT_P),
    (_shift_potential(2, -1), P, ov.U_RADIAL_2_M1_AT_P),
    (_shift_potential(sp.Rational(1, 2), 1), P, ov.U_RADIAL_HALF_1_AT_P),
    (y1, dict(x=1, y=1), ov.Y1_AT_11),
    (y1, P, ov.Y1_AT_P),
    (y2, P, ov.Y2_AT_P),
    (yc, P, ov.Y_CONST_COEF_AT_P),
    (u2.subs(C, 0), dict(x=1, y=0), ov.U2_R1_C0),
    (u2.subs(C, 1), dict(x=1, y=0), ov.U2_R1_C1),
    (u2.subs(C, 1), P, ov.U2_AT_P_C1),
    (Y2.subs(C, 0), dict(x=1, y=1), ov.Y2_AT_11_C0),
    (q12.subs(C, 0), P, ov.Q12_AT_P_C0),
    (yp(2), HP, ov.YP_HALF_PI_C2),
    (yp(sp.Rational(5, 2)), TQ, ov.YP_AT_Q_C25),
    (u_shift, HP, ov.U_SHIFT_HALF_PI),
    (u_shift, TQ, ov.U_SHIFT_AT_Q),
    # final trig potential as the Moutard image of the shifted one
    (u_shift - 2 * (sp.diff(sp.log(yp(sp.Rational(5, 2))), x, 2)
                    + sp.diff(sp.log(yp(sp.Rational(5, 2))), y, 2)), TQ, ov.U_FINAL_AT_Q_C25),
]


@pytest.mark.parametrize("expr, point, expected", CASES)
def test_frozen_value_matches_sympy(expr, point, expected):
    got = float(sp.N(expr.subs({x: point["x"], y: point["y"]}), 20))
    assert got == pytest.approx(expected, rel=1e-15, abs=1e-15)


def test_potential_solution_pairs_symbolically():
    # Y~ fields solve lap Y = u Y exactly
    for Y in (y1, y2, yc):
        res = sp.diff(Y, x, 2) + sp.diff(Y, y, 2) - u_rad * Y
        assert abs(float(sp.N(res.subs({x: sp.Rational(3, 5), y: sp.Rational(-11, 10)}), 30))) < 1e-20
