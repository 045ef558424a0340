"""Worked examples, built through the generic transformation machinery.

Each entry carries closed-form oracle fields next to the fields produced by
the machinery, so the two can be compared node by node.  Entries:

``radial``
    ``h = 0`` and the radial shift ``s = -ln B``; harmonic seeds ``x/r^2``
    and ``y/r^2`` are mapped to solutions of the new radial potential.
``twofold-radial``
    Twofold Moutard step applied to the radial potential with the two mapped
    seeds; nonsingular for ``C >= 0``.
``trig``
    ``h = -ln sin y`` with a ``ln tanh`` shift, followed by a Moutard step
    seeded by the mapped ``sin x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParamError
from .fields import GridSpec, Point2, Region, ScalarField2, residual_norms, sample, GridData
from .moutard import (SchrodingerPair, TransformRecord, drift_potential_field, moutard_potential_field,
                      reciprocal, seed_from_drift, twofold_potential_field, twofold_solution)
from .recovery import normalize_at_infinity, recover_q
from .darboux import (log_abs, new_potential_field, new_solution, radial_potential_field,
                      separable_S_tanh)

RADIAL_GRID = GridSpec(-3.0, 3.0, -3.0, 3.0, 129, 129)
TRIG_GRID = GridSpec(0.5, 3.0, 0.5, 3.0, 129, 129)
RADIAL_R_MIN = 0.5
SIN_MARGIN = 0.05
LOG_FLOOR = 1e-6
#: panels per unit length for the nested Q12 quadrature (its integrand is costly)
Q12_QUADRATURE_N = 16
ENTRY_NAMES = ("radial", "twofold-radial", "trig")


def annulus(r_min: float = RADIAL_R_MIN) -> Region:
    def region(x, y):
        return x * x + y * y >= r_min * r_min
    return region


def sin_band(margin: float = SIN_MARGIN) -> Region:
    def region(x, y):
        return np.abs(np.sin(y)) >= margin
    return region


def _corners(spec: GridSpec) -> list[Point2]:
    return [Point2(spec.x_max, spec.y_max), Point2(spec.x_min, spec.y_max),
            Point2(spec.x_min, spec.y_min), Point2(spec.x_max, spec.y_min)]


@dataclass
class CatalogEntry:
    """A worked example: oracle fields, machinery fields and bookkeeping.

    ``pair`` holds the closed-form (potential, solution); ``machinery_pair``
    the same objects produced by the transformation chain.  ``comparisons``
    lists ``(machinery key, oracle key)`` pairs checked by :func:`oracle_delta`.
    """

    name: str
    params: dict
    nonsingular: bool
    grid: GridSpec
    region: Region
    pair: SchrodingerPair
    machinery_pair: SchrodingerPair
    oracles: dict = field(default_factory=dict)
    machinery: dict = field(default_factory=dict)
    comparisons: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    record: TransformRecord = field(default_factory=TransformRecord)
    singular_window: Optional[GridSpec] = None
    singular_region: Optional[Region] = None

    @property
    def potential(self) -> ScalarField2:
        return self.pair.u

    @property
    def solution(self) -> ScalarField2:
        return self.pair.Y


# ---------------------------------------------------------------------------
# closed forms

def _r2(x, y):
    return x * x + y * y


def _t(x, y):
    return _r2(x, y) ** 1.5


def radial_B_closed(C1: float, C2: float) -> ScalarField2:
    """``(r^{2 C1} - C2) / (r^{2 C1} + C2)``, written to avoid cancellation at large r."""

    def expr(x, y):
        return 1.0 - 2.0 * C2 / (_r2(x, y) ** C1 + C2)

    def domain(x, y):
        r2 = _r2(x, y)
        return (r2 > 0) & (np.abs(r2**C1 + C2) > 1e-12 * max(1.0, abs(C2)))

    return ScalarField2.from_expression(expr, domain, f"B({C1:g},{C2:g})")


def _punctured(x, y):
    return _r2(x, y) > 0


def seed_L1() -> ScalarField2:
    return ScalarField2.from_expression(lambda x, y: x / _r2(x, y), _punctured, "Y_L1")


def seed_L2() -> ScalarField2:
    return ScalarField2.from_expression(lambda x, y: y / _r2(x, y), _punctured, "Y_L2")


def q_L1(c: float = 0.0) -> ScalarField2:
    return ScalarField2.from_expression(lambda x, y: -y / _r2(x, y) + c, _punctured, "Q_L1")


def q_L2(c: float = 0.0) -> ScalarField2:
    return ScalarField2.from_expression(lambda x, y: x / _r2(x, y) + c, _punctured, "Q_L2")


def radial_u_closed() -> ScalarField2:
    """Radial potential at ``C1 = 3/2, C2 = 1``: ``-18 r / (r^3 + 1)^2``."""
    return ScalarField2.from_expression(lambda x, y: -18.0 * np.sqrt(_r2(x, y)) / (_t(x, y) + 1.0) ** 2,
                                        _punctured, "u_radial")


def radial_Y1_closed(c: float = 0.0) -> ScalarField2:
    def expr(x, y):
        r2, t = _r2(x, y), _t(x, y)
        return -2.0 * x * y * (7 * t + 1) / (r2**2 * (t + 1)) + c * x * (5 * t - 1) / (r2 * (t + 1))
    return ScalarField2.from_expression(expr, _punctured, "Y~_L1")


def radial_Y2_closed(c: float = 0.0) -> ScalarField2:
    # the constant term carries a factor x, as for the first seed (its source is R2 * const)
    def expr(x, y):
        r2, t = _r2(x, y), _t(x, y)
        return (x * x - y * y) * (7 * t + 1) / (r2**2 * (t + 1)) + c * x * (5 * t - 1) / (r2 * (t + 1))
    return ScalarField2.from_expression(expr, _punctured, "Y~_L2")


def q12_closed(C: float) -> ScalarField2:
    def expr(x, y):
        r2, t = _r2(x, y), _t(x, y)
        return (49 * t + 1) / (2 * r2**2 * (t + 1)) + C / 2
    return ScalarField2.from_expression(expr, _punctured, "Q12")


def _nonzero_den(den):
    def domain(x, y):
        with np.errstate(all="ignore"):
            d = den(x, y)
        return (_r2(x, y) > 0) & np.isfinite(d) & (np.abs(d) > 1e-12)
    return domain


def twofold_u_closed(C: float) -> ScalarField2:
    def den(x, y):
        r = np.sqrt(_r2(x, y))
        return C * r**4 * (r**3 + 1) + 49 * r**3 + 1

    def expr(x, y):
        r = np.sqrt(_r2(x, y))
        return -2 * r * (441 + 9 * C**2 * r**8 + 2 * C * r * (392 * r**6 + 49 * r**3 + 8)) / den(x, y) ** 2

    return ScalarField2.from_expression(expr, _nonzero_den(den), f"u~~({C:g})")


def twofold_Y_closed(C: float) -> ScalarField2:
    def den(x, y):
        r2, t = _r2(x, y), _t(x, y)
        return C * r2**2 * (t + 1) + 49 * t + 1

    def expr(x, y):
        return -4 * x * y * (7 * _t(x, y) + 1) / den(x, y)

    return ScalarField2.from_expression(expr, _nonzero_den(den), f"Y~~({C:g})")


def _trig_domain(p, x0, margin=SIN_MARGIN):
    def domain(x, y):
        return (np.abs(np.sin(y)) > margin) & (np.abs(np.tanh(p * (x - x0))) > margin)
    return domain


def trig_H() -> ScalarField2:
    return ScalarField2.from_expression(lambda x, y: -np.log(np.sin(y)) + 0.0 * x,
                                        lambda x, y: np.sin(y) > SIN_MARGIN, "H=-ln sin y")


def trig_u_shift(p: float, x0: float) -> ScalarField2:
    def expr(x, y):
        return -1 + 2 / np.sin(y) ** 2 + 2 * p**2 / np.sinh(p * (x - x0)) ** 2
    return ScalarField2.from_expression(expr, _trig_domain(p, x0), f"u_H~({p:g},{x0:g})")


def _yp_numerator(p, x0, C, x, y):
    return p * (C - np.cos(y) * np.cos(x)) - np.cos(y) * np.sin(x) * np.tanh(p * (x - x0))


def trig_Yp(p: float, x0: float, C: float) -> ScalarField2:
    def expr(x, y):
        return _yp_numerator(p, x0, C, x, y) / (np.sin(y) * np.tanh(p * (x - x0)))
    return ScalarField2.from_expression(expr, _trig_domain(p, x0), f"Y_p({p:g},{x0:g},{C:g})")


def _num_nonzero(p, x0, C):
    def domain(x, y):
        return np.abs(_yp_numerator(p, x0, C, x, y)) > 1e-12
    return domain


def trig_u_final(p: float, x0: float, C: float) -> ScalarField2:
    def expr(x, y):
        cx, sx, cy = np.cos(x), np.sin(x), np.cos(y)
        th = np.tanh(p * (x - x0))
        ch = np.cosh(p * (x - x0))
        f1 = -p**2 * (p**2 + 1) * (C - cy * cx) ** 2 + p**2 * C**2 - (p**2 + 1) * cy**2 - sx**2
        f2 = -2 * p**2 * C * cy * cx + 1 + (p**2 - 1) * cx**2 + (p**2 + 1) * cy**2
        f3 = 2 * p * sx * (cx - C * cy)
        return -1 + 2 * (f1 / ch**2 + f2 + f3 * th) / _yp_numerator(p, x0, C, x, y) ** 2
    return ScalarField2.from_expression(expr, _num_nonzero(p, x0, C), f"u_final({p:g},{x0:g},{C:g})")


def trig_inv_Yp(p: float, x0: float, C: float) -> ScalarField2:
    def expr(x, y):
        return np.sin(y) * np.tanh(p * (x - x0)) / _yp_numerator(p, x0, C, x, y)
    return ScalarField2.from_expression(expr, _num_nonzero(p, x0, C), f"1/Y_p({p:g},{x0:g},{C:g})")


# ---------------------------------------------------------------------------
# builders

def _scaled(f: ScalarField2, factor: float, name: str) -> ScalarField2:
    out = f * factor
    out.name = name
    out.domain_error = f.domain_error
    return out


def _radial_chain(C1, C2, C_L1, C_L2, spec=RADIAL_GRID):
    region = annulus()
    zero = ScalarField2.constant(0.0, "0")
    B = radial_B_closed(C1, C2)
    # near B = 0 the shifted solution is a difference of O(1/B) terms
    s = log_abs(B, "s=-ln|B|", floor=LOG_FLOOR)
    u_new = new_potential_field(zero, zero, s)
    one = seed_from_drift(zero)
    Y1, Y2 = seed_L1(), seed_L2()
    corners = _corners(spec)
    top_right = corners[0]
    Q1 = recover_q(Y1, one, Point2(spec.x_max, 0.0), C_L1, region=region, name="Q_L1")
    Q1 = Q1.rebased(top_right, bases=corners)
    Q2 = recover_q(Y2, one, Point2(0.0, spec.y_max), C_L2, region=region, name="Q_L2")
    Q2 = Q2.rebased(top_right, bases=corners)
    Yt1 = _scaled(new_solution(Y1, Q1, zero, s), -2.0, "Y~_L1")
    Yt2 = _scaled(new_solution(Y2, Q2, zero, s), -2.0, "Y~_L2")
    return dict(zero=zero, B=B, s=s, u=u_new, Y_L1=Y1, Y_L2=Y2, Q_L1=Q1, Q_L2=Q2,
                Yt1=Yt1, Yt2=Yt2, region=region)


def build_radial_example(C1: float = 1.5, C2: float = 1.0, C_L1: float = 0.0,
                         C_L2: float = 0.0) -> CatalogEntry:
    """Radial shift of the free operator; ``C1 = 3/2, C2 = 1`` has full oracles."""
    C1, C2 = float(C1), float(C2)
    if C2 == 0:
        raise ParamError("C2 = 0 makes the shift constant")
    ch = _radial_chain(C1, C2, float(C_L1), float(C_L2))
    u_or = radial_potential_field(C1, C2)
    oracles = {"potential": u_or, "B": ch["B"]}
    machinery = {"potential": ch["u"], "Y~_L1": ch["Yt1"], "Y~_L2": ch["Yt2"],
                 "Q_L1": ch["Q_L1"], "Q_L2": ch["Q_L2"]}
    comparisons = [("potential", "potential"), ("Q_L1", "Q_L1"), ("Q_L2", "Q_L2")]
    oracles["Q_L1"], oracles["Q_L2"] = q_L1(C_L1), q_L2(C_L2)
    if (C1, C2) == (1.5, 1.0):
        oracles["Y~_L1"], oracles["Y~_L2"] = radial_Y1_closed(C_L1), radial_Y2_closed(C_L2)
        comparisons += [("Y~_L1", "Y~_L1"), ("Y~_L2", "Y~_L2")]
    params = {"C1": C1, "C2": C2, "C_L1": float(C_L1), "C_L2": float(C_L2)}
    record = TransformRecord(initial={"entry": "radial", "params": params})
    record = record.add("nonlocal_shift", h="0", s="-ln|B|", C1=C1, C2=C2,
                        seeds=["x/r^2", "y/r^2"], constants=[float(C_L1), float(C_L2)],
                        base_points=[[RADIAL_GRID.x_max, 0.0], [0.0, RADIAL_GRID.y_max]])
    record = record.add("scale", factor=-2.0, target="solution")
    if "Y~_L1" in oracles:
        pair = SchrodingerPair(u_or, oracles["Y~_L1"], record)
        mpair = SchrodingerPair(ch["u"], ch["Yt1"], record)
    else:
        # e^{-s} = B always solves the shifted equation
        pair = SchrodingerPair(u_or, ch["B"], record)
        mpair = SchrodingerPair(ch["u"], ch["B"], record)
    return CatalogEntry("radial", params, C1 >= 1 and C2 > 0, RADIAL_GRID, ch["region"], pair, mpair,
                        oracles, machinery, comparisons,
                        {"Y_L1": ch["Y_L1"], "Y_L2": ch["Y_L2"], "s": ch["s"]}, record,
                        GridSpec(-1.5, 1.5, -1.5, 1.5, 65, 65), None)


def build_twofold_radial(C: float = 0.0) -> CatalogEntry:
    """Twofold Moutard step on the radial potential with the two mapped seeds."""
    C = float(C)
    ch = _radial_chain(1.5, 1.0, 0.0, 0.0)
    corners = _corners(RADIAL_GRID)
    top_right = corners[0]
    Y1, Y2 = ch["Yt1"], ch["Yt2"]
    c0 = normalize_at_infinity(Y2, Y1, top_right, C / 2)
    Q12 = recover_q(Y2, Y1, top_right, c0, Q12_QUADRATURE_N, ch["region"], corners, "Q12")
    u2 = twofold_potential_field(ch["u"], Y1, Y2, Q12)
    Y2t = twofold_solution(Y1, Q12)
    u_or, Y_or = twofold_u_closed(C), twofold_Y_closed(C)
    params = {"C": C}
    record = TransformRecord(initial={"entry": "twofold-radial", "params": params})
    record = record.add("nonlocal_shift", h="0", s="-ln|B|", C1=1.5, C2=1.0,
                        seeds=["x/r^2", "y/r^2"], constants=[0.0, 0.0])
    record = record.add("scale", factor=-2.0, target="solution")
    record = record.add("twofold", Y1="Y~_L1", Y2="Y~_L2", C=C, additive_constant=C / 2,
                        normalization="Q12 -> C/2 at infinity")
    return CatalogEntry(
        "twofold-radial", params, C >= 0, RADIAL_GRID, ch["region"],
        SchrodingerPair(u_or, Y_or, record), SchrodingerPair(u2, Y2t, record),
        {"potential": u_or, "solution": Y_or, "Q12": q12_closed(C)},
        {"potential": u2, "solution": Y2t, "Q12": Q12},
        [("potential", "potential"), ("solution", "solution"), ("Q12", "Q12")],
        {"u_radial": radial_u_closed(), "Y1": radial_Y1_closed(), "Y2": radial_Y2_closed()},
        record, RADIAL_GRID, ch["region"])


def build_trig_example(p: float = 1.0, x0: float = 0.0, C: float = 2.5) -> CatalogEntry:
    """``h = -ln sin y`` shifted by ``ln tanh(p (x - x0))``, then one Moutard step."""
    p, x0, C = float(p), float(x0), float(C)
    if p == 0:
        raise ParamError("p = 0 makes the shift constant")
    spec = TRIG_GRID
    region = sin_band()
    H = trig_H()
    uH = drift_potential_field(H)
    Y = ScalarField2.from_expression(lambda x, y: np.sin(x) + 0.0 * y, name="sin x")
    Yh = seed_from_drift(H)
    base = Point2(np.pi / 2, np.pi / 2)
    Q = recover_q(Y, Yh, base, C, region=region, name="Q")
    s = -2.0 * H + separable_S_tanh(p, x0)
    u_shift = new_potential_field(uH, H, s)
    Yp = _scaled(new_solution(Y, Q, H, s), -1.0, "Y_p")
    u_final = moutard_potential_field(u_shift, Yp)
    sol = reciprocal(Yp, "1/Y_p")
    oracles = {"u_shift": trig_u_shift(p, x0), "Y_p": trig_Yp(p, x0, C), "potential": trig_u_final(p, x0, C),
               "solution": trig_inv_Yp(p, x0, C),
               "Q": ScalarField2.from_expression(lambda x, y: C - np.cos(y) * np.cos(x), name="Q")}
    machinery = {"u_shift": u_shift, "Y_p": Yp, "potential": u_final, "solution": sol, "Q": Q}
    params = {"p": p, "x0": x0, "C": C}
    record = TransformRecord(initial={"entry": "trig", "params": params})
    record = record.add("nonlocal_shift", h="-ln sin y", s="-2h + ln tanh(p(x-x0))", p=p, x0=x0,
                        seed="sin x", constant=C, base_point=[base.x, base.y])
    record = record.add("scale", factor=-1.0, target="solution")
    record = record.add("moutard", seed="solution")
    return CatalogEntry(
        "trig", params, p > 0 and C > 1 / p + 1, spec, region,
        SchrodingerPair(oracles["potential"], oracles["solution"], record),
        SchrodingerPair(u_final, sol, record), oracles, machinery,
        [(k, k) for k in ("u_shift", "Y_p", "potential", "solution", "Q")],
        {"H": H, "u_H": uH, "s": s}, record,
        # closed curves of zeros of the denominator sit around (x, pi) for small C
        GridSpec(2.5, 5.0, 2.0, 4.3, 129, 129), region)


BUILDERS: dict[str, Callable[..., CatalogEntry]] = {
    "radial": build_radial_example,
    "twofold-radial": build_twofold_radial,
    "trig": build_trig_example,
}

PARAMETERS = {
    "radial": {"C1": 1.5, "C2": 1.0, "C_L1": 0.0, "C_L2": 0.0},
    "twofold-radial": {"C": 0.0},
    "trig": {"p": 1.0, "x0": 0.0, "C": 2.5},
}


def build(name: str, **params) -> CatalogEntry:
    if name not in BUILDERS:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(ENTRY_NAMES)}")
    unknown = set(params) - set(PARAMETERS[name])
    if unknown:
        raise ParamError(f"{name}: unknown parameters {sorted(unknown)}")
    return BUILDERS[name](**params)


def replay(record: TransformRecord) -> SchrodingerPair:
    """Rebuild a pair from its record: the catalog chain, then any later Moutard steps."""
    entry = build(record.initial["entry"], **record.initial["params"])
    n_own = len(entry.record.steps)
    if record.kinds[:n_own] != entry.record.kinds:
        raise ValueError("record does not start with the catalog chain it names")
    pair = SchrodingerPair(entry.machinery_pair.u, entry.machinery_pair.Y, entry.record)
    for step in record.steps[n_own:]:
        pair = apply_step(pair, step.kind, **step.params)
    return pair


def apply_step(pair: SchrodingerPair, kind: str, **params) -> SchrodingerPair:
    """Steps that act on a bare pair: Moutard seeded by its own solution, or scaling."""
    if kind == "moutard" and params.get("seed") == "solution":
        u = moutard_potential_field(pair.u, pair.Y)
        return SchrodingerPair(u, reciprocal(pair.Y), pair.record.add("moutard", seed="solution"))
    if kind == "scale":
        f = float(params["factor"])
        return SchrodingerPair(pair.u, _scaled(pair.Y, f, pair.Y.name),
                               pair.record.add("scale", factor=f, target="solution"))
    raise ValueError(f"cannot replay step {kind!r} with {params}")


# ---------------------------------------------------------------------------

def oracle_deltas(entry: CatalogEntry, spec: Optional[GridSpec] = None) -> dict:
    """``{key: (max_abs, rms)}`` of machinery minus oracle over the entry's mask."""
    spec = spec or entry.grid
    out = {}
    for mkey, okey in entry.comparisons:
        m = sample(entry.machinery[mkey], spec, region=entry.region)
        o = sample(entry.oracles[okey], spec, region=entry.region)
        mask = m.mask & o.mask
        out[mkey] = residual_norms(GridData(spec, m.values - o.values, mask))
    return out


def oracle_delta(entry: CatalogEntry, spec: Optional[GridSpec] = None) -> tuple[float, float]:
    """Worst ``(max_abs, rms)`` over every machinery/oracle comparison of the entry."""
    d = oracle_deltas(entry, spec)
    return max(v[0] for v in d.values()), max(v[1] for v in d.values())
