"""End-to-end acceptance checks at reference resolution.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import math

import numpy as np

import oracle_values as ov
from solvable2d.catalog import (RADIAL_GRID, TRIG_GRID, annulus, build_trig_example, oracle_delta,
                                q12_closed, q_L1, q_L2, radial_u_closed, radial_Y1_closed, radial_Y2_closed, sin_band,
                                trig_H, trig_u_shift, trig_Yp, twofold_u_closed, twofold_Y_closed)
from solvable2d.cli import main
from solvable2d.darboux import (h0_first_integral, log_abs, radial_B, radial_potential, radial_potential_field,
                                separable_ode_residual, separable_S_tanh, shift_residuals)
from solvable2d.fields import GridSpec, Point2, ScalarField2, read_grid_csv, sample, write_grid_csv
from solvable2d.moutard import moutard_potential, moutard_potential_field, reciprocal, twofold_potential
from solvable2d.recovery import compatibility_residual, recover_q
from solvable2d.verify import convergence_order, nested_grids, schrodinger_residual, singularity_scan

ZERO = ScalarField2.constant(0.0)
ONE = ScalarField2.constant(1.0)
TOL = 1e-6
ORDER = (1.7, 2.3)


def _probes(region, xs, ys, n=25):
    X, Y = np.meshgrid(xs, ys)
    ok = np.asarray(region(X, Y), bool)
    pts = [Point2(float(x), float(y)) for x, y in zip(X[ok], Y[ok])]
    assert len(pts) >= n
    return pts[:n]


def test_criterion_1_catalog_residuals(twofold, trig, criterion):
    region = annulus()
    pairs = [
        ("radial/Y1", radial_u_closed(), radial_Y1_closed(), RADIAL_GRID, region),
        ("radial/Y2", radial_u_closed(), radial_Y2_closed(), RADIAL_GRID, region),
        ("twofold C=0", twofold_u_closed(0.0), twofold_Y_closed(0.0), RADIAL_GRID, region),
        ("twofold C=1", twofold_u_closed(1.0), twofold_Y_closed(1.0), RADIAL_GRID, region),
        ("trig C=2.5", trig.potential, trig.solution, TRIG_GRID, trig.region),
    ]
    details, ok = [], True
    for name, u, Y, spec, reg in pairs:
        assert Y.has_jets(2)
        res = schrodinger_residual(u, Y, spec, reg)
        mx = float(np.max(np.abs(res.values[res.mask])))
        order = convergence_order(u, Y, nested_grids(spec), reg)
        good = mx <= TOL and ORDER[0] <= order <= ORDER[1]
        ok &= good
        details.append(f"{name}: max={mx:.1e} order={order:.2f}")
    assert criterion(1, ok, "; ".join(details))


def test_criterion_2_machinery_vs_oracle(radial, twofold, trig, criterion):
    deltas = {e.name: oracle_delta(e)[0] for e in (radial, twofold, trig)}
    ok = all(d <= 1e-5 for d in deltas.values())
    assert criterion(2, ok, "; ".join(f"{k}: {v:.1e}" for k, v in deltas.items()))


def test_criterion_3_moutard_involution(trig, criterion):
    X = ScalarField2.from_expression(lambda x, y: x + 0.0 * y, name="x")
    cases = [
        ("u=0, Y_h=x", ZERO, X, _probes(lambda x, y: x > 0.2, np.linspace(0.3, 2.7, 5), np.linspace(-2, 2, 5))),
        ("trig", trig.machinery["u_shift"], trig.machinery["Y_p"],
         _probes(sin_band(), np.linspace(0.6, 2.9, 5), np.linspace(0.6, 2.9, 5))),
    ]
    worst = {}
    for name, u, Yh, pts in cases:
        once = moutard_potential_field(u, Yh)
        back = reciprocal(Yh)
        worst[name] = max(abs(moutard_potential(once, back, p) - u.at(p)) for p in pts)
    ok = all(w <= 1e-10 for w in worst.values())
    assert criterion(3, ok, "; ".join(f"{k}: {v:.1e}" for k, v in worst.items()))


def test_criterion_4_first_integral(criterion):
    # polar lattice on the annulus, off the circle where B vanishes
    pts = [Point2(r * math.cos(t), r * math.sin(t))
           for r in (0.6, 1.3, 1.8, 2.3, 2.8) for t in np.linspace(0.1, 2 * math.pi - 0.3, 5)]
    B = radial_B(1.5, 1.0)
    K = np.array([h0_first_integral(B, p) for p in pts])
    Kinv = np.array([h0_first_integral(1.0 / B, p) for p in pts])
    B4 = radial_B(1.5, 1.0, 4.0)
    dual = np.array([h0_first_integral(1.0 / B4, p) for p in pts])
    spread = float(K.max() - K.min())
    ok = (spread <= 1e-8 and np.max(np.abs(K - 1)) <= 1e-8 and np.max(np.abs(Kinv - 1)) <= 1e-8
          and np.max(np.abs(dual - 0.25)) <= 1e-8)
    assert criterion(4, ok, f"spread={spread:.1e} |K-1|={np.max(np.abs(K - 1)):.1e} "
                            f"|K(1/B)-1|={np.max(np.abs(Kinv - 1)):.1e} |dual-1/4|={np.max(np.abs(dual - 0.25)):.1e}")


def test_criterion_5_shift_residuals(criterion):
    s_rad = log_abs(radial_B(1.5, 1.0))
    rad_pts = _probes(lambda x, y: np.abs(np.hypot(x, y) - 1) > 0.2, np.linspace(-2.6, 2.4, 6),
                      np.linspace(-2.3, 2.7, 6))
    H = trig_H()
    s_trig = -2.0 * H + separable_S_tanh(1.0, 0.0)
    trig_pts = _probes(sin_band(), np.linspace(0.6, 2.9, 5), np.linspace(0.6, 2.9, 5))
    r_rad = max(max(map(abs, shift_residuals(ZERO, s_rad, p))) for p in rad_pts)
    r_trig = max(max(map(abs, shift_residuals(H, s_trig, p))) for p in trig_pts)
    S = separable_S_tanh(1.0, 0.0)
    r_ode = max(abs(separable_ode_residual(S, x)) for x in np.linspace(0.3, 3.0, 25))
    ok = r_rad <= 1e-7 and r_trig <= 1e-7 and r_ode <= 1e-9
    assert criterion(5, ok, f"radial={r_rad:.1e} trig={r_trig:.1e} ode={r_ode:.1e}")


def _delta_up_to_constant(Q, closed, spec, region):
    a, b = sample(Q, spec, region=region), sample(closed, spec, region=region)
    m = a.mask & b.mask
    d = a.values[m] - b.values[m]
    return float(np.max(np.abs(d - np.mean(d))))


def test_criterion_6_q_recovery(criterion):
    region = annulus()
    L1 = ScalarField2.from_expression(lambda x, y: x / (x * x + y * y), name="x/r^2")
    L2 = ScalarField2.from_expression(lambda x, y: y / (x * x + y * y), name="y/r^2")
    # the excluded disk blocks both L-paths into the far quadrant, so every corner anchors
    corners = [Point2(3.0, 3.0), Point2(-3.0, 3.0), Point2(-3.0, -3.0), Point2(3.0, -3.0)]
    Q1 = recover_q(L1, ONE, corners[0], region=region, bases=corners)
    Q2 = recover_q(L2, ONE, corners[0], region=region, bases=corners)
    d1 = _delta_up_to_constant(Q1, q_L1(), RADIAL_GRID, region)
    d2 = _delta_up_to_constant(Q2, q_L2(), RADIAL_GRID, region)
    H = trig_H()
    sinx = ScalarField2.from_expression(lambda x, y: np.sin(x) + 0.0 * y)
    Qt = recover_q(sinx, (-H).map(np.exp), Point2(np.pi / 2, np.pi / 2), 2.5, region=sin_band())
    closed = ScalarField2.from_expression(lambda x, y: 2.5 - np.cos(y) * np.cos(x))
    d3 = _delta_up_to_constant(Qt, closed, TRIG_GRID, sin_band())
    matched = max(compatibility_residual(L1, ONE, GridSpec(0.5, 3, 0.5, 3, 65, 65)),
                  compatibility_residual(L2, L1, GridSpec(0.5, 3, 0.5, 3, 65, 65)),
                  compatibility_residual(sinx, (-H).map(np.exp), TRIG_GRID))
    sin_m = ScalarField2.from_expression(lambda x, y: np.sin(x) + 0.0 * y)   # u = -1
    exp_p = ScalarField2.from_expression(lambda x, y: np.exp(x) + 0.0 * y)   # u = +1
    mismatched = compatibility_residual(sin_m, exp_p, GridSpec(0.5, 1.5, 0.5, 1.5, 33, 33))
    ok = max(d1, d2, d3) <= 1e-8 and matched <= 1e-8 and mismatched >= 0.1
    assert criterion(6, ok, f"Q_L1={d1:.1e} Q_L2={d2:.1e} Q_trig={d3:.1e} "
                            f"curl matched={matched:.1e} mismatched={mismatched:.2f}")


def test_criterion_7_singularity_scans(criterion):
    region = annulus()
    clean = {}
    for C1, C2 in ((1.0, 1.0), (1.5, 1.0), (2.0, 3.0), (1.0, 0.2)):
        clean[f"radial({C1:g},{C2:g})"] = len(singularity_scan(radial_potential_field(C1, C2), RADIAL_GRID,
                                                             region=region))
    for C in (0.0, 1.0, 10.0):
        clean[f"twofold C={C:g}"] = len(singularity_scan(twofold_u_closed(C), RADIAL_GRID, region=region))
    e = build_trig_example(1.0, 0.0, 2.5)
    clean["trig C=2.5"] = len(singularity_scan(e.potential, TRIG_GRID, region=e.region))
    poles = {
        "twofold C=-60": len(singularity_scan(twofold_u_closed(-60.0), RADIAL_GRID, region=region)),
        "shifted trig across y=pi": len(singularity_scan(trig_u_shift(1.0, 0.0), GridSpec(0.5, 3.0, 2.0, 4.0, 129, 129))),
    }
    ok = all(v == 0 for v in clean.values()) and all(v >= 1 for v in poles.values())
    assert criterion(7, ok, "clean " + ", ".join(f"{k}={v}" for k, v in clean.items())
                     + "; poles " + ", ".join(f"{k}={v}" for k, v in poles.items()))


def test_criterion_8_spot_values(radial, criterion):
    # reference values recomputed from the closed forms at 20 digits (oracle_values.py)
    hp = Point2(*ov.HALF_PI)
    trig2 = build_trig_example(1.0, 0.0, 2.0)
    r1 = Point2(1.0, 0.0)
    # r = 1 is where the shift has its log, so these go through the pointwise formulas
    got = {
        "radial u at r=1": (radial_potential(1.5, 1.0, r1), ov.U_RADIAL_R1),
        "twofold u at r=1, C=0": (twofold_potential(radial_u_closed(), radial_Y1_closed(), radial_Y2_closed(),
                                                    q12_closed(0.0), r1), ov.U2_R1_C0),
        "radial Y at (1,1)": (radial.machinery["Y~_L1"].at(Point2(1.0, 1.0)), ov.Y1_AT_11),
        "trig Y_p at (pi/2,pi/2), C=2": (trig2.machinery["Y_p"].at(hp), ov.YP_HALF_PI_C2),
        "shifted trig u at (pi/2,pi/2)": (trig2.machinery["u_shift"].at(hp), ov.U_SHIFT_HALF_PI),
        "trig Y_p closed form": (trig_Yp(1.0, 0.0, 2.0).at(hp), ov.YP_HALF_PI_C2),
    }
    errs = {k: abs(a - b) for k, (a, b) in got.items()}
    ok = all(e <= 1e-6 for e in errs.values())
    assert criterion(8, ok, "; ".join(f"{k}: {got[k][0]:.7f} (err {e:.0e})" for k, e in errs.items()))


def test_criterion_9_cli_contract(tmp_path, criterion):
    small = ["--nx", "33", "--ny", "33"]
    codes = {
        "catalog trig": main(["catalog", "trig", "--p", "1", "--x0", "0", "--C", "2.5", "--out", str(tmp_path / "a"), *small]),
        "catalog bogus": main(["catalog", "bogus", "--out", str(tmp_path)]),
        "verify trig": main(["verify", "trig", "--out", str(tmp_path), *small]),
        "verify twofold C=-60": main(["verify", "twofold-radial", "--C", "-60", "--out", str(tmp_path),
                                      "--nx", "65", "--ny", "65"]),
        "verify missing": main(["verify", str(tmp_path / "missing.csv"), str(tmp_path / "other.csv")]),
        "shift blocked": main(["transform", "shift", "--entry", "trig", "--y-max", "7.5",
                               "--out", str(tmp_path), *small]),
    }
    want = {"catalog trig": 0, "catalog bogus": 2, "verify trig": 0, "verify twofold C=-60": 1,
            "verify missing": 3, "shift blocked": 1}
    main(["catalog", "trig", "--p", "1", "--x0", "0", "--C", "2.5", "--out", str(tmp_path / "b"), *small])
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("trig_potential.csv", "trig_solution.csv", "trig_meta.json"))
    g = read_grid_csv(tmp_path / "a" / "trig_solution.csv")
    write_grid_csv(g, tmp_path / "copy.csv")
    back = read_grid_csv(tmp_path / "copy.csv")
    exact = (np.array_equal(back.mask, g.mask) and np.array_equal(back.values[g.mask], g.values[g.mask])
             and (tmp_path / "copy.csv").read_bytes() == (tmp_path / "a" / "trig_solution.csv").read_bytes())
    ok = codes == want and same and exact
    assert criterion(9, ok, f"exit codes {'ok' if codes == want else codes}; "
                            f"reruns identical={same}; csv round trip exact={exact}")
