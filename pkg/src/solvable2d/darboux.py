"""Nonlocal Darboux transformation driven by a drift shift ``s`` (``h -> h + s``).

For a shift that is not the Moutard one (``s != -2h``) the transformation
acts through the coefficients ``R1 = F1/F`` and ``R2 = F2/F`` and needs the
nonlocal variable Q of the solution being mapped.  ``s`` itself must solve a
pair of third-order nonlinear equations; :func:`shift_residuals` evaluates
them term by term.  Also here: the ``h = 0`` reduction with its first
integral and the two explicit ansatz families (radial, separable).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (BranchError, CompatibilityError, DegenerateError, DomainError, ParamError,
                     ZeroLaplacianError)
from .fields import Jet, Point2, ScalarField2, _and_domains, _as_xy, jet3_at
from .moutard import COMPAT_TOLERANCE
from .recovery import NonlocalPotential

DEGENERATE_REL = 1e-12


def _d(j: Jet, upto: int) -> dict:
    """Partial-derivative jets of ``j`` up to total order ``upto``, all at order ``j.order - upto``."""
    n = j.order - upto
    out = {}
    xrow = j
    for a in range(upto + 1):
        cur = xrow
        for b in range(upto + 1 - a):
            out[a, b] = cur.truncate(n)
            if b < upto - a:
                cur = cur.diff_y()
        if a < upto:
            xrow = xrow.diff_x()
    return out


def _names(sd, hd):
    k = {(1, 0): "x", (0, 1): "y", (2, 0): "xx", (1, 1): "xy", (0, 2): "yy",
         (3, 0): "xxx", (2, 1): "xxy", (1, 2): "xyy", (0, 3): "yyy"}
    ns = {}
    for key, suffix in k.items():
        if key in sd:
            ns["s" + suffix] = sd[key]
            ns["h" + suffix] = hd[key]
    return ns


# ---------------------------------------------------------------------------
# coefficients

@dataclass(frozen=True)
class DarbouxCoefficients:
    F: float
    F1: float
    F2: float
    R1: float
    R2: float


def _F(n):
    sx, sy, hx, hy = n["sx"], n["sy"], n["hx"], n["hy"]
    return 2 * sx * (sx + 2 * hx) + 2 * sy * (sy + 2 * hy)


def _F1(n):
    sx, sy, hx, hy = n["sx"], n["sy"], n["hx"], n["hy"]
    sxx, sxy, syy, hxy, hyy = n["sxx"], n["sxy"], n["syy"], n["hxy"], n["hyy"]
    return ((sx + 2 * hx) * (-2 * (sxy + hxy) + (sy - 2 * hy) * sx)
            + (sy + 2 * hy) * (sxx - syy - 2 * hyy + (sy - 2 * hy) * sy))


def _F2(n):
    sx, sy, hx, hy = n["sx"], n["sy"], n["hx"], n["hy"]
    sxx, sxy, syy, hxy, hyy = n["sxx"], n["sxy"], n["syy"], n["hxy"], n["hyy"]
    return (sx * sxx + 2 * sy * (sxy + hxy) - sx * (syy + 2 * hyy)
            - (sx + 2 * hx) * sx**2 - (sy + 2 * hy) * sx * sy)


def _degenerate_scale(n, floor: float = 1.0):
    return np.maximum.reduce([np.full_like(np.asarray(n["sx"], float), floor), np.abs(n["sx"]),
                              np.abs(n["sy"]), np.abs(n["hx"]), np.abs(n["hy"])]) ** 2


def _values(sj: Jet, hj: Jet, upto: int) -> dict:
    """Plain derivative values (arrays) of s and h up to order ``upto``."""
    n = {}
    for suffix, (a, b) in {"": (0, 0), "x": (1, 0), "y": (0, 1), "xx": (2, 0), "xy": (1, 1),
                           "yy": (0, 2), "xxx": (3, 0), "xxy": (2, 1), "xyy": (1, 2),
                           "yyy": (0, 3)}.items():
        if a + b <= upto:
            n["s" + suffix] = sj.partial(a, b)
            n["h" + suffix] = hj.partial(a, b)
    return n


def coefficients(h: ScalarField2, s: ScalarField2, p: Point2) -> DarbouxCoefficients:
    """F, F1, F2 and R1 = F1/F, R2 = F2/F at ``p``."""
    n = _values(jet3_at(s, p), jet3_at(h, p), 2)
    F = float(_F(n))
    if abs(F) < DEGENERATE_REL * float(_degenerate_scale(n)):
        raise DegenerateError(f"F = {F:.3g} vanishes at ({p.x}, {p.y})")
    F1, F2 = float(_F1(n)), float(_F2(n))
    return DarbouxCoefficients(F, F1, F2, F1 / F, F2 / F)


def _coefficient_jets(sj: Jet, hj: Jet):
    """``(R1, R2)`` as jets two orders below the inputs."""
    n = _names(_d(sj, 2), _d(hj, 2))
    Finv = _F(n).reciprocal()
    return _F1(n) * Finv, _F2(n) * Finv


def _nondegenerate(h: ScalarField2, s: ScalarField2) -> ScalarField2:
    def domain(x, y):
        with np.errstate(all="ignore"):
            n = _values(s.jet(x, y, 1), h.jet(x, y, 1), 1)
            F = _F(n)
            # relative test only: far from the origin every gradient is small
            return np.isfinite(F) & (np.abs(F) > DEGENERATE_REL * _degenerate_scale(n, 0.0))
    return ScalarField2(lambda x, y: 0.0 * x, domain=domain, name="F!=0")


# ---------------------------------------------------------------------------
# the nonlinear system for s

def _shift_eq_a(n):
    sx, sy, hx, hy = n["sx"], n["sy"], n["hx"], n["hy"]
    sxx, sxy, syy = n["sxx"], n["sxy"], n["syy"]
    hxx, hxy, hyy = n["hxx"], n["hxy"], n["hyy"]
    sxxx, sxxy, sxyy, syyy = n["sxxx"], n["sxxy"], n["sxyy"], n["syyy"]
    hxxy, hxyy, hyyy = n["hxxy"], n["hxyy"], n["hyyy"]
    t = (sx**3 + 2 * sx**2 * hx + (2 * sy * hy + sy**2) * sx) * sxxx
    t += ((sy - 2 * hy) * sx**2 + (-4 * hy * hx + 2 * hx * sy) * sx + sy**3 - 4 * hy**2 * sy) * sxxy
    t += (sx**3 + 6 * sx**2 * hx + (8 * hx**2 + 2 * sy * hy + sy**2) * sx
          + 8 * hx * sy * hy + 4 * hx * sy**2) * sxyy
    t += ((2 * hy + sy) * sx**2 + (4 * hy * hx + 2 * hx * sy) * sx + 4 * hy * sy**2 + sy**3
          + 4 * hy**2 * sy) * syyy
    t += (2 * sy * hy + sy**2 - sx**2) * sxx**2 + 2 * ((-2 * sy + hy) * sx + 2 * hy * hx - hx * sy) * sxx * sxy
    t += 2 * (-hx * sx + 2 * hy**2 + sy * hy) * sxx * syy + 4 * (sy * hy - hx * sx - 2 * hx**2) * sxy**2
    t += 2 * (-hxx * sx**2 + 2 * (-hyy * hx - sy * hxy + hxy * hy) * sx) * sxx
    t += -2 * (hyy * sy**2 + 2 * (hyy * hy + hxy * hx) * sy) * sxx
    t += ((-6 * hy - 4 * sy) * sx - 10 * hx * sy - 12 * hy * hx) * sxy * syy
    t += ((-4 * hxx - 4 * hyy) * sy - 4 * hyy * hy - 4 * hxy * hx) * sx * sxy
    t += ((-12 * hyy * hx + 12 * hxy * hy) * sy - 8 * hx * hyy * hy - 8 * hx**2 * hxy) * sxy
    t += (-4 * hy**2 + sx**2 + 2 * hx * sx - 4 * sy * hy - sy**2) * syy**2
    t += ((4 * hyy + 2 * hxx) * sx**2 + (-8 * hxy * hy + 8 * hyy * hx - 4 * sy * hxy) * sx) * syy
    t += (-2 * hyy * sy**2 + (-8 * hxy * hx - 8 * hyy * hy) * sy - 8 * hx * hxy * hy - 8 * hyy * hy**2) * syy
    t += (-sx**6 - 6 * hx * sx**5 - 3 * (4 * hx**2 + 2 * sy * hy + sy**2) * sx**4
          - 4 * (2 * hx**3 + 6 * hx * sy * hy + 3 * hx * sy**2) * sx**3)
    t += -(3 * sy**4 + 12 * hy * sy**3 + 12 * (hy**2 + hx**2) * sy**2
           - 2 * (-12 * hx**2 * hy + hyyy + hxxy) * sy) * sx**2
    t += 4 * (hyyy * hy + hyy * hxx + hyy**2 + hxyy * hx) * sx**2
    t += -6 * (hx * sy**4 + 4 * hx * hy * sy**3 + 4 * hx * hy**2 * sy**2) * sx
    t += -4 * (hyy * hxy - hx * hyyy + hxy * hxx - hxxy * hx) * sy * sx
    t += (8 * hx * hyyy * hy + 8 * hx**2 * hxyy - 8 * hxy * hyy * hy + 8 * hx * hyy**2) * sx - sy**6 - 6 * hy * sy**5
    t += -12 * hy**2 * sy**4 + 2 * (hyyy - 4 * hy**3 + hxxy) * sy**3 + 4 * (hxxy * hy + 2 * hyyy * hy + hxyy * hx) * sy**2
    t += (-8 * hx * hxy * hyy + 8 * hyyy * hy**2 + 8 * hx * hxyy * hy + 8 * hxy**2 * hy) * sy
    return t


def _shift_eq_b(n):
    sx, sy, hx, hy = n["sx"], n["sy"], n["hx"], n["hy"]
    sxx, sxy, syy = n["sxx"], n["sxy"], n["syy"]
    hxx, hxy, hyy = n["hxx"], n["hxy"], n["hyy"]
    sxxx, sxxy, sxyy, syyy = n["sxxx"], n["sxxy"], n["sxyy"], n["syyy"]
    hxxy, hxyy, hyyy = n["hxxy"], n["hxyy"], n["hyyy"]
    t = ((2 * hy + sy) * sx**2 + (4 * hy * hx + 2 * hx * sy) * sx + 4 * hy * sy**2 + sy**3 + 4 * hy**2 * sy) * sxxx
    t += (-sx**3 - 6 * sx**2 * hx + (-2 * sy * hy - 8 * hx**2 - sy**2) * sx - 4 * hx * sy**2 - 8 * hx * sy * hy) * sxxy
    t += ((sy - 2 * hy) * sx**2 + (-4 * hy * hx + 2 * hx * sy) * sx + sy**3 - 4 * hy**2 * sy) * sxyy
    t += (-sx**3 - 2 * sx**2 * hx + (-sy**2 - 2 * sy * hy) * sx) * syyy
    t += ((-2 * sy - 4 * hy) * sx - 4 * hy * hx - 2 * hx * sy) * sxx**2
    t += (10 * hx * sx - 6 * sy * hy + 2 * sx**2 + 8 * hx**2 - 4 * hy**2 - 2 * sy**2) * sxy * sxx
    t += (2 * sx * hy + 2 * hx * sy + 4 * hy * hx) * syy * sxx
    t += (2 * hxy * sx**2 + ((-2 * hxx + 2 * hyy) * sy + 12 * hxy * hx - 4 * hxx * hy + 8 * hyy * hy) * sx) * sxx
    t += (-2 * hxy * sy**2 + (4 * hyy * hx - 4 * hxy * hy) * sy + 8 * hx * hyy * hy + 8 * hx**2 * hxy) * sxx
    t += 4 * (sx * hy + 2 * hy * hx + hx * sy) * sxy**2 + 2 * (hx * sx - sy**2 + sx**2 + 2 * hy**2 + sy * hy) * syy * sxy
    t += 4 * (hxy * hy - hyy * hx) * sx * sxy - 4 * (hxx + hyy) * sy**2 * sxy
    t += 4 * (3 * hxy * hx - 2 * hxx * hy + hyy * hy) * sy * sxy
    t += (8 * hx * hxy * hy + 8 * hyy * hy**2) * sxy + (2 * hy + 2 * sy) * sx * syy**2
    t += (2 * hxy * sx**2 + ((6 * hyy + 2 * hxx) * sy + 4 * hyy * hy + 4 * hxx * hy) * sx - 2 * hxy * sy**2) * syy
    t += (-2 * hyyy - 2 * hxxy) * sx**3 + (-4 * hx * hyyy - 8 * hxxy * hx - 4 * hy * hxyy) * sx**2
    t += ((-2 * hyyy - 2 * hxxy) * sy**2 + (-4 * hxxy * hy - 4 * hyyy * hy + 4 * hyy**2 + 4 * hyy * hxx) * sy) * sx
    t += (-8 * hx * hxy * hyy - 8 * hx * hxyy * hy - 8 * hx**2 * hxxy + 8 * hyy * hy * hxx) * sx
    t += (-4 * hy * hxyy - 4 * hyy * hxy - 4 * hxxy * hx - 4 * hxy * hxx) * sy**2
    t += (-8 * hy**2 * hxyy - 8 * hy * hx * hxxy + 8 * hx * hxy**2 - 8 * hxx * hy * hxy) * sy
    return t


def shift_residuals(h: ScalarField2, s: ScalarField2, p: Point2) -> tuple[float, float]:
    """Left-hand sides of the two nonlinear equations that ``s`` must satisfy."""
    n = _values(jet3_at(s, p), jet3_at(h, p), 3)
    return float(_shift_eq_a(n)), float(_shift_eq_b(n))


def shift_residual_arrays(h: ScalarField2, s: ScalarField2, x, y):
    """Vectorised :func:`shift_residuals` (analytic jets required)."""
    x, y = _as_xy(x, y)
    n = _values(s.jet(x, y, 3), h.jet(x, y, 3), 3)
    return _shift_eq_a(n), _shift_eq_b(n)


@dataclass
class ShiftFunction:
    """A shift ``s`` with its drift ``h`` and a residual certificate."""

    s: ScalarField2
    h: ScalarField2
    certificate: float

    @classmethod
    def certify(cls, h: ScalarField2, s: ScalarField2, probes: Sequence[Point2]) -> "ShiftFunction":
        xs = np.array([p.x for p in probes])
        ys = np.array([p.y for p in probes])
        with np.errstate(all="ignore"):
            moutard_gap = np.abs(s(xs, ys) + 2 * h(xs, ys))
            if np.all(moutard_gap < 1e-12 * np.maximum(1, np.abs(s(xs, ys)))):
                raise ValueError("s = -2h is the Moutard case; use the moutard module")
            r_a, r_b = shift_residual_arrays(h, s, xs, ys)
        cert = float(np.max(np.maximum(np.abs(r_a), np.abs(r_b))))
        return cls(s, h, cert)


# ---------------------------------------------------------------------------
# new potential and solutions

def new_potential(u: ScalarField2, h: ScalarField2, s: ScalarField2, p: Point2) -> float:
    """``u - lap s + 2 h_x s_x + s_x^2 + 2 s_y h_y + s_y^2`` at ``p``."""
    sj, hj = jet3_at(s, p), jet3_at(h, p)
    return float(u.at(p) - sj.laplacian + 2 * hj.dx * sj.dx + sj.dx**2 + 2 * sj.dy * hj.dy + sj.dy**2)


def new_potential_field(u: ScalarField2, h: ScalarField2, s: ScalarField2) -> ScalarField2:
    def build(sj, hj, uj):
        sd, hd = _d(sj, 2), _d(hj, 2)
        return (uj - (sd[2, 0] + sd[0, 2]) + 2 * hd[1, 0] * sd[1, 0] + sd[1, 0] ** 2
                + 2 * sd[0, 1] * hd[0, 1] + sd[0, 1] ** 2)

    def value(x, y):
        return build(s.jet(x, y, 2), h.jet(x, y, 2), u(x, y)).value

    def jet(x, y, k):
        return build(s.jet(x, y, k + 2), h.jet(x, y, k + 2), u.jet(x, y, k))

    order = _min_order(u.jet_order, _minus(s.jet_order, 2), _minus(h.jet_order, 2))
    return ScalarField2(value, jet, order, _and_domains(u, h, s), f"shift({u.name})")


def _minus(o, k):
    return None if o is None else o - k


def _min_order(*orders):
    return None if any(o is None for o in orders) else min(orders)


def _check_q(Y: ScalarField2, Q: ScalarField2, h: ScalarField2, tolerance: float):
    if not isinstance(Q, NonlocalPotential):
        return
    if Q.Y is not Y:
        raise CompatibilityError("Q was not recovered from this solution")
    if not (Q.compat_residual <= tolerance):
        raise CompatibilityError(f"Q curl defect {Q.compat_residual:.3g} exceeds {tolerance:g}")
    b = Q.base_point
    with np.errstate(all="ignore"):
        seed, expect = float(Q.Yh(b.x, b.y)), float(np.exp(-h(b.x, b.y)))
    if not abs(seed - expect) <= 1e-8 * max(1.0, abs(expect)):
        raise CompatibilityError("Q's seed is not e^{-h}")


def new_solution(Y: ScalarField2, Q: ScalarField2, h: ScalarField2, s: ScalarField2,
                 tolerance: float = COMPAT_TOLERANCE) -> ScalarField2:
    """``Y~ = (R1 + h_y) Y - Y_y + e^h R2 Q``."""
    _check_q(Y, Q, h, tolerance)

    def build(sj, hj, yj, qj):
        R1, R2 = _coefficient_jets(sj, hj)
        k = R1.order
        hd = hj.truncate(k + 1)
        return ((R1 + hd.diff_y()) * yj.truncate(k) - yj.diff_y().truncate(k)
                + np.exp(hj.truncate(k)) * R2 * qj)

    def value(x, y):
        x, y = _as_xy(x, y)
        return build(s.jet(x, y, 2), h.jet(x, y, 2), Y.jet(x, y, 1),
                     Jet.constant(Q(x, y), 0)).value

    def jet(x, y, k):
        return build(s.jet(x, y, k + 2), h.jet(x, y, k + 2), Y.jet(x, y, k + 1), Q.jet(x, y, k))

    order = _min_order(_minus(s.jet_order, 2), _minus(h.jet_order, 2), _minus(Y.jet_order, 1),
                       Q.jet_order)
    dom = _and_domains(Y, Q, h, s, _nondegenerate(h, s))
    return ScalarField2(value, jet, order, dom, f"darboux({Y.name})", DegenerateError)


def fokker_planck_new_W(W: ScalarField2, Q: ScalarField2, h: ScalarField2,
                        s: ScalarField2) -> ScalarField2:
    """``W~ = e^{-s} (R1 W - W_y + R2 Q)``."""

    def build(sj, hj, wj, qj):
        R1, R2 = _coefficient_jets(sj, hj)
        k = R1.order
        return np.exp(-sj.truncate(k)) * (R1 * wj.truncate(k) - wj.diff_y().truncate(k) + R2 * qj)

    def value(x, y):
        x, y = _as_xy(x, y)
        return build(s.jet(x, y, 2), h.jet(x, y, 2), W.jet(x, y, 1),
                     Jet.constant(Q(x, y), 0)).value

    def jet(x, y, k):
        return build(s.jet(x, y, k + 2), h.jet(x, y, k + 2), W.jet(x, y, k + 1), Q.jet(x, y, k))

    order = _min_order(_minus(s.jet_order, 2), _minus(h.jet_order, 2), _minus(W.jet_order, 1),
                       Q.jet_order)
    dom = _and_domains(W, Q, h, s, _nondegenerate(h, s))
    return ScalarField2(value, jet, order, dom, f"darbouxW({W.name})", DegenerateError)


# ---------------------------------------------------------------------------
# h = 0 reduction, s = -ln B

def _h0_eqs(b):
    B, Bx, By, Bxx, Bxy, Byy = b["s"], b["sx"], b["sy"], b["sxx"], b["sxy"], b["syy"]
    lap = Bxx + Byy
    g2 = Bx**2 + By**2
    r1 = -(2 * B * By * Bxy + B * Bx * (Bxx - Byy) + Bx * g2) * lap + B * g2 * (b["sxxx"] + b["sxyy"])
    r2 = -(2 * B * Bx * Bxy - B * By * (Bxx - Byy) + By * g2) * lap + B * g2 * (b["sxxy"] + b["syyy"])
    return r1, r2


def h0_residual(B: ScalarField2, p: Point2) -> tuple[float, float]:
    """The two equations for ``B = e^{-s}`` when ``h = 0``."""
    j = jet3_at(B, p)
    r1, r2 = _h0_eqs(_values(j, j, 3))
    return float(r1), float(r2)


def h0_first_integral(B: ScalarField2, p: Point2) -> float:
    """``K = -B^4 lap(1/B) / lap B``."""
    j = jet3_at(B, p)
    lap = float(j.laplacian)
    if abs(lap) < DEGENERATE_REL * max(1.0, abs(float(j.dxx)) + abs(float(j.dyy))):
        raise ZeroLaplacianError(f"lap B vanishes at ({p.x}, {p.y})")
    inv_lap = float(j.truncate(2).reciprocal().laplacian)
    return float(-j.value**4 * inv_lap / lap)


def _is_nonneg_int(c: float) -> bool:
    return float(c).is_integer() and c >= 0


def radial_B(C1: float, C2: float, K: float = 1.0) -> ScalarField2:
    """``B_r = -sqrt(K) (r^{2 C1} - C2) / (r^{2 C1} + C2)``."""
    if not K > 0:
        raise ParamError(f"K must be positive, got {K}")
    rk = np.sqrt(K)

    def expr(x, y):
        t = (x * x + y * y) ** C1
        return -rk * (t - C2) / (t + C2)

    def domain(x, y):
        r2 = x * x + y * y
        ok = np.abs(r2 ** C1 + C2) > 1e-12 * np.maximum(1.0, np.abs(C2))
        if not _is_nonneg_int(C1):
            ok &= r2 > 0
        return ok

    return ScalarField2.from_expression(expr, domain, f"B_r({C1:g},{C2:g},{K:g})")


def radial_potential_expr(C1: float, C2: float):
    def expr(x, y):
        r2 = x * x + y * y
        return -8.0 * C2 * C1**2 * r2 ** (C1 - 1) / (r2**C1 + C2) ** 2
    return expr


def radial_potential(C1: float, C2: float, p: Point2) -> float:
    """``-8 C2 C1^2 r^{2(C1-1)} / (r^{2 C1} + C2)^2`` at ``p``."""
    r2 = p.x**2 + p.y**2
    if r2 == 0 and C1 < 1:
        raise DomainError("the radial potential is singular at the origin for C1 < 1")
    with np.errstate(all="ignore"):
        v = float(radial_potential_expr(C1, C2)(np.float64(p.x), np.float64(p.y)))
    if not np.isfinite(v):
        raise DomainError(f"radial potential undefined at ({p.x}, {p.y})")
    return v


def radial_potential_field(C1: float, C2: float) -> ScalarField2:
    def domain(x, y):
        r2 = x * x + y * y
        ok = np.abs(r2**C1 + C2) > 1e-12 * np.maximum(1.0, np.abs(C2))
        if not (_is_nonneg_int(C1) and _is_nonneg_int(C1 - 1)):
            ok &= r2 > 0
        return ok

    return ScalarField2.from_expression(radial_potential_expr(C1, C2), domain,
                                        f"u_r({C1:g},{C2:g})")


# ---------------------------------------------------------------------------
# separable family h = H(y), s = -2H + S(x)

def separable_S(C1: float, C2: float, C3: float = 0.0) -> ScalarField2:
    """``S(x) = ln((e^{C1 x} - C2) / (e^{C1 x} + C2)) + C3`` (principal branch only)."""

    def expr(x, y):
        e = np.exp(C1 * x)
        return np.log((e - C2) / (e + C2)) + C3 + 0.0 * y

    def domain(x, y):
        e = np.exp(C1 * x)
        return ((e - C2) / (e + C2) > 0) & np.isfinite(e)

    f = ScalarField2.from_expression(expr, domain, f"S({C1:g},{C2:g},{C3:g})",
                                     domain_error=BranchError)
    f.info["degenerate"] = C2 == 0 or C1 == 0
    return f


def separable_S_tanh(p: float, x0: float) -> ScalarField2:
    """``ln tanh(p (x - x0))``, i.e. ``C1 = 2p``, ``C2 = e^{2 p x0}``, ``C3 = 0``."""
    f = separable_S(2 * p, float(np.exp(2 * p * x0)), 0.0)
    f.name = f"ln tanh({p:g}(x-{x0:g}))"
    return f


def separable_ode_residual(S: ScalarField2, x: float, y: float = 0.0) -> float:
    """``S_x S_xxx - S_xx^2 - S_x^4``."""
    j = jet3_at(S, Point2(x, y))
    return float(j.dx * j.dxxx - j.dxx**2 - j.dx**4)


def separable_correction_expr(C1: float, C2: float):
    def expr(x, y):
        e = np.exp(C1 * x)
        return 2.0 * C2 * C1**2 * e / (e - C2) ** 2 + 0.0 * y
    return expr


def separable_potential_field(H: ScalarField2, C1: float, C2: float) -> ScalarField2:
    """``u_H + 2 H'' + 2 C2 C1^2 e^{C1 x} / (e^{C1 x} - C2)^2`` with ``u_H = -H'' + H'^2``."""
    def hpp(hj, n):
        dyy = hj.diff_y().diff_y()
        dy = hj.diff_y().truncate(n - 2)
        return -dyy + dy * dy + 2.0 * dyy

    def value(x, y):
        return hpp(H.jet(x, y, 2), 2).value

    def jet(x, y, k):
        return hpp(H.jet(x, y, k + 2), k + 2)

    base = ScalarField2(value, jet, _minus(H.jet_order, 2), H._domain, f"uH+2H''[{H.name}]")
    wall = ScalarField2.from_expression(
        separable_correction_expr(C1, C2),
        lambda x, y: np.abs(np.exp(C1 * x) - C2) > 1e-12 * max(1.0, abs(C2)),
        "wall", domain_error=BranchError)
    out = base + wall
    out.name = f"separable({H.name},{C1:g},{C2:g})"
    return out


def separable_potential(H: ScalarField2, C1: float, C2: float, p: Point2) -> float:
    f = separable_potential_field(H, C1, C2)
    if not f.valid(p.x, p.y):
        raise DomainError(f"({p.x}, {p.y}) outside the separable potential's domain")
    return float(f(p.x, p.y))


def shift_is_moutard(h: ScalarField2, s: ScalarField2, probes: Sequence[Point2]) -> bool:
    xs = np.array([p.x for p in probes])
    ys = np.array([p.y for p in probes])
    with np.errstate(all="ignore"):
        return bool(np.all(np.abs(s(xs, ys) + 2 * h(xs, ys)) < 1e-12))


def log_abs(B: ScalarField2, name: Optional[str] = None, floor: float = 1e-9) -> ScalarField2:
    """``-ln|B|`` with the near-zero set of ``B`` excluded from the domain."""
    out = B.map(np.abs).map(np.log) * -1.0
    base = B._domain

    def domain(x, y):
        with np.errstate(all="ignore"):
            ok = np.abs(B(x, y)) > floor
        return ok if base is None else ok & base(x, y)

    out._domain = domain
    out.name = name or f"-ln|{B.name}|"
    return out
