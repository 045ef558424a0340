"""Single and twofold Moutard transformations, plus the Fokker-Planck links.

With ``Y = W e^h`` the stationary Fokker-Planck equation for ``W`` turns
into ``(lap - u) Y = 0`` with ``u = -lap h + |grad h|^2``.  Choosing the seed
``Y_h = e^{-h}`` and the potential variable Q gives the Moutard image

    u~ = u - 2 lap ln Y_h,      Y~ = Q / Y_h.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import CompatibilityError, EmptyMaskError, ZeroQError, ZeroSeedError
from .fields import GridData, Point2, ScalarField2, _and_domains, jet3_at
from .recovery import NonlocalPotential

COMPAT_TOLERANCE = 1e-6
ZERO_REL = 1e-12
STEP_KINDS = ("moutard", "twofold", "nonlocal_shift", "scale")


# ---------------------------------------------------------------------------
# bookkeeping

@dataclass
class TransformStep:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")


@dataclass
class TransformRecord:
    """Ordered log of the transformations that produced a pair."""

    steps: list = field(default_factory=list)
    initial: dict = field(default_factory=dict)

    def add(self, kind: str, **params) -> "TransformRecord":
        return TransformRecord(self.steps + [TransformStep(kind, dict(params))], dict(self.initial))

    def to_dict(self) -> dict:
        return {"initial": self.initial,
                "steps": [{"kind": s.kind, "params": s.params} for s in self.steps]}

    @classmethod
    def from_dict(cls, d: dict) -> "TransformRecord":
        return cls([TransformStep(s["kind"], dict(s["params"])) for s in d.get("steps", [])],
                   dict(d.get("initial", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def kinds(self) -> list[str]:
        return [s.kind for s in self.steps]


@dataclass
class SchrodingerPair:
    """A potential and a claimed zero-energy solution of ``(lap - u) Y = 0``."""

    u: ScalarField2
    Y: ScalarField2
    record: TransformRecord = field(default_factory=TransformRecord)
    info: dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Fokker-Planck correspondence

def _scale(*vals) -> float:
    return max([1.0] + [abs(float(v)) for v in vals])


def drift_potential(h: ScalarField2, p: Point2) -> float:
    """``-lap h + h_x^2 + h_y^2`` at ``p``."""
    j = jet3_at(h, p)
    return float(-j.laplacian + j.dx**2 + j.dy**2)


def drift_potential_field(h: ScalarField2) -> ScalarField2:
    return _second_order_map(h, lambda hj, n: -_lap(hj) + _grad2(hj), f"u[{h.name}]")


def _lap(j):
    return j.diff_x().diff_x() + j.diff_y().diff_y()


def _grad2(j):
    gx, gy = j.diff_x().truncate(j.order - 2), j.diff_y().truncate(j.order - 2)
    return gx * gx + gy * gy


def _second_order_map(f: ScalarField2, jet_expr, name, value_order: int = 2) -> ScalarField2:
    """Field whose value needs order-``value_order`` jets of ``f``."""

    def value(x, y):
        return jet_expr(f.jet(x, y, value_order), value_order).value

    def jet(x, y, n):
        return jet_expr(f.jet(x, y, n + value_order), n + value_order)

    order = None if f.jet_order is None else f.jet_order - value_order
    return ScalarField2(value, jet, order, f._domain, name)


def substitution_Y_from_W(W: ScalarField2, h: ScalarField2) -> ScalarField2:
    """``Y = W e^h``."""
    return W * h.map(np.exp)


def W_from_Y(Y: ScalarField2, h: ScalarField2) -> ScalarField2:
    """``W = Y e^{-h}``."""
    return Y * (-h).map(np.exp)


def moutard_pair_map(W: ScalarField2, Q: ScalarField2, h: ScalarField2):
    """``(W~, Y~) = (e^{2h} Q, e^{h} Q)`` for the Moutard shift ``s = -2h``."""
    return (2.0 * h).map(np.exp) * Q, h.map(np.exp) * Q


def seed_from_drift(h: ScalarField2) -> ScalarField2:
    """``Y_h = e^{-h}``, a solution for the potential built from ``h``."""
    return (-h).map(np.exp)


# ---------------------------------------------------------------------------
# single Moutard step

def moutard_potential(u: ScalarField2, Yh: ScalarField2, p: Point2) -> float:
    """``u - 2 lap ln Y_h`` at ``p``, written without logarithms."""
    j = jet3_at(Yh, p)
    if abs(float(j.value)) < ZERO_REL * _scale(j.dx, j.dy):
        raise ZeroSeedError(f"seed {Yh.name} vanishes at ({p.x}, {p.y})")
    y0 = j.value
    return float(u.at(p) - 2.0 * (j.laplacian * y0 - (j.dx**2 + j.dy**2)) / y0**2)


def _nonzero(f: ScalarField2, rel: float = ZERO_REL) -> ScalarField2:
    """Zero field whose domain is where ``f`` does not vanish (for domain ANDs)."""
    def domain(x, y):
        with np.errstate(all="ignore"):
            return np.abs(f(x, y)) > rel
    return ScalarField2(lambda x, y: 0.0 * x, domain=domain, name=f"{f.name}!=0")


def moutard_potential_field(u: ScalarField2, Yh: ScalarField2) -> ScalarField2:
    """Moutard image ``u - 2 lap ln Y_h`` as a field."""

    def corr(j, n):
        inv = j.truncate(n - 2).reciprocal()
        g = _grad2(j)
        return 2.0 * (_lap(j) * inv - g * inv * inv)

    c = _second_order_map(Yh, corr, f"M[{Yh.name}]")
    c = ScalarField2(c._value, c._jet, c.jet_order, _and_domains(Yh, _nonzero(Yh)), c.name, ZeroSeedError)
    out = u - c
    out.name = f"moutard({u.name};{Yh.name})"
    out.domain_error = ZeroSeedError
    return out


def reciprocal(f: ScalarField2, name: Optional[str] = None) -> ScalarField2:
    """``1/f`` with reciprocal jets; the zero set of ``f`` is excluded."""
    out = ScalarField2.constant(1.0) / f
    out._domain = _and_domains(f, _nonzero(f))
    out.name = name or f"1/{f.name}"
    out.domain_error = ZeroSeedError
    return out


def moutard_solution(Y: ScalarField2, Yh: ScalarField2, Q: NonlocalPotential,
                     tolerance: float = COMPAT_TOLERANCE) -> ScalarField2:
    """``Y~ = Q / Y_h``; ``Q`` must come from the pair ``(Y, Y_h)``."""
    if isinstance(Q, NonlocalPotential):
        if Q.Y is not Y or Q.Yh is not Yh:
            raise CompatibilityError("Q was not recovered from this (Y, Y_h) pair")
        if not (Q.compat_residual <= tolerance):
            raise CompatibilityError(f"Q curl defect {Q.compat_residual:.3g} exceeds {tolerance:g}")
    out = Q * reciprocal(Yh)
    out.name = f"Q/{Yh.name}"
    out.domain_error = ZeroSeedError
    return out


# ---------------------------------------------------------------------------
# twofold step

def _twofold_terms(j1, j2, q):
    w = j2.dy * j1.dx - j2.dx * j1.dy
    a = j2.dx * j1.value - j2.value * j1.dx
    b = j2.dy * j1.value - j2.value * j1.dy
    return 4.0 * w / q + 2.0 * (a * a + b * b) / (q * q)


def twofold_potential(u: ScalarField2, Y1: ScalarField2, Y2: ScalarField2,
                      Q12: ScalarField2, p: Point2) -> float:
    """Twofold Moutard image of ``u`` at ``p`` (``Q12`` from ``(Y2, Y1)``)."""
    q = float(Q12.at(p))
    j1, j2 = jet3_at(Y1, p), jet3_at(Y2, p)
    if abs(q) < ZERO_REL * _scale(j1.value, j2.value):
        raise ZeroQError(f"Q12 vanishes at ({p.x}, {p.y})")
    return float(u.at(p) + _twofold_terms(j1, j2, q))


def twofold_potential_field(u: ScalarField2, Y1: ScalarField2, Y2: ScalarField2,
                            Q12: ScalarField2) -> ScalarField2:
    def value(x, y):
        j1, j2 = Y1.jet(x, y, 1), Y2.jet(x, y, 1)
        return u(x, y) + _twofold_terms(j1, j2, Q12(x, y))

    def jet(x, y, n):
        j1, j2 = Y1.jet(x, y, n + 1), Y2.jet(x, y, n + 1)
        q = Q12.jet(x, y, n)
        d1x, d1y, d2x, d2y = j1.diff_x(), j1.diff_y(), j2.diff_x(), j2.diff_y()
        v1, v2 = j1.truncate(n), j2.truncate(n)
        w = d2y * d1x - d2x * d1y
        a = d2x * v1 - v2 * d1x
        b = d2y * v1 - v2 * d1y
        qi = q.reciprocal()
        return u.jet(x, y, n) + 4.0 * w * qi + 2.0 * (a * a + b * b) * qi * qi

    orders = [f.jet_order for f in (u, Q12)] + [None if f.jet_order is None else f.jet_order - 1
                                                for f in (Y1, Y2)]
    order = None if any(o is None for o in orders) else min(orders)
    dom = _and_domains(u, Y1, Y2, Q12, _nonzero(Q12))
    return ScalarField2(value, jet, order, dom, f"twofold({u.name})", ZeroQError)


def twofold_solution(Y1: ScalarField2, Q12: ScalarField2) -> ScalarField2:
    """``Y1 / Q12``."""
    out = Y1 / Q12
    out._domain = _and_domains(Y1, Q12, _nonzero(Q12))
    out.name = f"{Y1.name}/Q12"
    out.domain_error = ZeroQError
    return out


def choose_sign_constant(samples: GridData, spread_limit: float = 1e8) -> Optional[float]:
    """Additive constant making sampled Q strictly positive.

    Returns 0 when the samples already have one sign and ``None`` when both
    signs occur with a spread so large that the samples cannot decide.
    """
    v = samples.values[samples.mask]
    if v.size == 0:
        raise EmptyMaskError("no masked-in samples")
    lo, hi = float(v.min()), float(v.max())
    if lo > 0 or hi < 0:
        return 0.0
    spread = hi - lo
    if not np.isfinite(spread) or spread > spread_limit:
        return None
    margin = 1e-6 * spread if spread > 0 else 1e-6
    return -lo + margin
