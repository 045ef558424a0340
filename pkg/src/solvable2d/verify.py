"""Independent numerical checks of potentials, solutions and transformations.

Nothing here looks at how a field was produced: residuals use only values
(and jets) of the fields under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyMaskError, ZeroSeedError
from .fields import (GridData, GridSpec, Point2, Region, ScalarField2, fd_jet, jet3_at,
                     residual_norms, sample)
from .moutard import (SchrodingerPair, moutard_potential_field, moutard_solution,
                      seed_from_drift)
from .recovery import recover_q
from .darboux import new_potential_field, new_solution, shift_is_moutard

DEFAULT_TOLERANCE = 1e-6
DEFAULT_ORDER_RANGE = (1.7, 2.3)
DEFAULT_GROWTH_FACTOR = 1e4


class _NotApplicable:
    """Marker for a convergence order that cannot be estimated (zero residual)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NotApplicable"

    def __str__(self):
        return "n/a"

    def __bool__(self):
        return False


NotApplicable = _NotApplicable()


# ---------------------------------------------------------------------------
# residuals

def _fd_laplacian(f: ScalarField2, X, Y, hx: float, hy: float):
    """Five-point Laplacian with steps ``hx, hy``; also returns stencil validity."""
    ok = f.valid(X, Y)
    with np.errstate(all="ignore"):
        c = f(X, Y)
        lap = (f(X + hx, Y) - 2 * c + f(X - hx, Y)) / hx**2 + (f(X, Y + hy) - 2 * c + f(X, Y - hy)) / hy**2
    for sx, sy in ((hx, 0), (-hx, 0), (0, hy), (0, -hy)):
        ok &= f.valid(X + sx, Y + sy)
    return c, lap, ok


def schrodinger_residual(u: ScalarField2, Y: ScalarField2, spec: GridSpec,
                         region: Optional[Region] = None, use_jets: bool = True) -> GridData:
    """Per-node ``lap Y - u Y``.

    Uses analytic jets of ``Y`` when present (and ``use_jets``), otherwise the
    five-point Laplacian with the grid spacing.  Nodes where either field is
    outside its domain (or ``region``) are masked.
    """
    us = sample(u, spec, region=region)
    X, Yn = spec.nodes()
    mask = us.mask & Y.valid(X, Yn)
    values = np.full(X.shape, np.nan)
    if mask.any():
        xm, ym = X[mask], Yn[mask]
        with np.errstate(all="ignore"):
            if use_jets and Y.has_jets(2):
                j = Y.jet(xm, ym, 2)
                yv, lap = j.value, j.dxx + j.dyy
                ok = np.ones(xm.shape, bool)
            else:
                yv, lap, ok = _fd_laplacian(Y, xm, ym, spec.dx, spec.dy)
            r = lap - us.values[mask] * yv
        ok &= np.isfinite(r)
        values[mask] = np.where(ok, r, np.nan)
        mask[mask] = ok
    if not mask.any():
        raise EmptyMaskError(f"no node of {spec.label()} where both {u.name} and {Y.name} are defined")
    return GridData(spec, values, mask)


def fokker_planck_residual(W: ScalarField2, h: ScalarField2, spec: GridSpec,
                           region: Optional[Region] = None) -> GridData:
    """Per-node ``W_xx + W_yy + (2 h_x W)_x + (2 h_y W)_y``.

    Fields without analytic jets are differentiated by central differences
    with the grid spacing.
    """
    X, Yn = spec.nodes()
    mask = W.valid(X, Yn) & h.valid(X, Yn)
    if region is not None:
        mask &= np.asarray(region(X, Yn), dtype=bool)
    values = np.full(X.shape, np.nan)
    if mask.any():
        xm, ym = X[mask], Yn[mask]
        step = min(spec.dx, spec.dy)
        with np.errstate(all="ignore"):
            w, okw = _jet2(W, xm, ym, step)
            g, okh = _jet2(h, xm, ym, step)
            r = (w.dxx + w.dyy + 2 * (g.dx * w.dx + g.dy * w.dy) + 2 * (g.dxx + g.dyy) * w.value)
        ok = okw & okh & np.isfinite(r)
        values[mask] = np.where(ok, r, np.nan)
        mask[mask] = ok
    if not mask.any():
        raise EmptyMaskError(f"no node of {spec.label()} inside the domains of {W.name} and {h.name}")
    return GridData(spec, values, mask)


def _jet2(f: ScalarField2, x, y, step):
    if f.has_jets(2):
        return f.jet(x, y, 2), np.ones(np.shape(x), bool)
    return fd_jet(f, x, y, step, 2)


def moutard_relation_residual(Y: ScalarField2, Ytilde: ScalarField2, Yh: ScalarField2,
                              p: Point2) -> tuple[float, float]:
    """Left-hand sides of the two first-order relations tying ``Y`` to its Moutard image.

    ``(Y_h Y~)_x + Y_h^2 (Y/Y_h)_y`` and ``(Y_h Y~)_y - Y_h^2 (Y/Y_h)_x``.
    """
    jh = jet3_at(Yh, p)
    if abs(float(jh.value)) < 1e-12 * max(1.0, abs(float(jh.dx)), abs(float(jh.dy))):
        raise ZeroSeedError(f"{Yh.name} vanishes at ({p.x}, {p.y})")
    jy, jt = jet3_at(Y, p), jet3_at(Ytilde, p)
    prod = jh * jt
    # Y_h^2 (Y/Y_h)' = Y_h Y' - Y Y_h'
    r_x = prod.dx + (jh.value * jy.dy - jy.value * jh.dy)
    r_y = prod.dy - (jh.value * jy.dx - jy.value * jh.dx)
    return float(r_x), float(r_y)


# ---------------------------------------------------------------------------
# convergence

def nested_grids(spec: GridSpec, levels: int = 3) -> list[GridSpec]:
    """Grids over the same window with spacing ratio 2, coarsest first."""
    return [spec.coarsened(2 ** k) for k in range(levels - 1, 0, -1)] + [spec]


def _on_coarse(g: GridData, coarse: GridSpec):
    sx = (g.spec.nx - 1) // (coarse.nx - 1)
    sy = (g.spec.ny - 1) // (coarse.ny - 1)
    return g.values[::sy, ::sx], g.mask[::sy, ::sx]


def _order_from_norms(norms: Sequence[float]):
    if all(n == 0.0 for n in norms):
        return NotApplicable
    orders = []
    for a, b in zip(norms[:-1], norms[1:]):
        if b == 0.0:
            orders.append(math.inf)
        elif a == 0.0:
            orders.append(-math.inf)
        else:
            orders.append(math.log2(a / b))
    return float(np.mean(orders))


def convergence_order(u: ScalarField2, Y: ScalarField2, specs: Sequence[GridSpec],
                      region: Optional[Region] = None):
    """Observed order of the five-point residual over nested grids.

    Analytic jets are not used.  Norms are rms over the nodes of the
    coarsest grid that are masked in on every grid.  Returns
    :data:`NotApplicable` when the residual vanishes identically.
    """
    specs = sorted(specs, key=lambda s: s.nx)
    if len(specs) < 2:
        raise ValueError("need at least two nested grids")
    coarse = specs[0]
    grids = [schrodinger_residual(u, Y, s, region, use_jets=False) for s in specs]
    parts = [_on_coarse(g, coarse) for g in grids]
    common = np.logical_and.reduce([m for _, m in parts])
    if not common.any():
        raise EmptyMaskError("no node is masked in on every grid")
    norms = [float(np.sqrt(np.mean(v[common] ** 2))) for v, _ in parts]
    return _order_from_norms(norms)


def grid_residual(u: GridData, Y: GridData, stride: int = 1) -> GridData:
    """Five-point residual from node data alone, neighbours ``stride`` nodes away."""
    if u.spec != Y.spec:
        raise ValueError("potential and solution grids differ")
    s = u.spec
    k = stride
    hx, hy = k * s.dx, k * s.dy
    v, m = Y.values, Y.mask & u.mask
    out = np.full(v.shape, np.nan)
    ok = np.zeros(v.shape, bool)
    c = (slice(k, -k), slice(k, -k))
    with np.errstate(all="ignore"):
        lap = ((v[k:-k, 2 * k:] - 2 * v[c] + v[k:-k, :-2 * k]) / hx**2
               + (v[2 * k:, k:-k] - 2 * v[c] + v[:-2 * k, k:-k]) / hy**2)
        out[c] = lap - u.values[c] * v[c]
    ok[c] = (m[c] & Y.mask[k:-k, 2 * k:] & Y.mask[k:-k, :-2 * k] & Y.mask[2 * k:, k:-k]
             & Y.mask[:-2 * k, k:-k] & np.isfinite(out[c]))
    return GridData(s, np.where(ok, out, np.nan), ok)


def grid_convergence_order(u: GridData, Y: GridData, levels: int = 3):
    """Convergence order from one sampled pair, by thinning the stencil (strides 4, 2, 1)."""
    strides = [2 ** k for k in range(levels - 1, -1, -1)]
    top = strides[0]
    grids = [grid_residual(u, Y, k) for k in strides]
    common = np.logical_and.reduce([g.mask for g in grids])
    sel = np.zeros_like(common)
    sel[::top, ::top] = True
    common &= sel
    if not common.any():
        raise EmptyMaskError("no node is masked in at every stencil width")
    norms = [float(np.sqrt(np.mean(g.values[common] ** 2))) for g in grids]
    return _order_from_norms(norms)


# ---------------------------------------------------------------------------
# singularities

def singularity_scan(f: ScalarField2, spec: GridSpec, growth_factor: float = DEFAULT_GROWTH_FACTOR,
                     region: Optional[Region] = None) -> list[Point2]:
    """Nodes that look singular: outside ``f``'s domain, non-finite, or larger
    than ``growth_factor`` times the median magnitude.

    Nodes outside ``region`` are not scanned.  An empty list only means no
    evidence at this resolution.
    """
    X, Y = spec.nodes()
    scan = np.ones(X.shape, bool) if region is None else np.asarray(region(X, Y), dtype=bool)
    g = sample(f, spec, magnitude_cap=np.inf)
    return _findings(X, Y, g.values, g.mask, scan, growth_factor)


def grid_singularity_scan(g: GridData, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> list[Point2]:
    """Growth test on stored samples; masked nodes are not scanned."""
    X, Y = g.spec.nodes()
    return _findings(X, Y, g.values, g.mask, g.mask.copy(), growth_factor)


def _findings(X, Y, values, valid, scan, growth_factor):
    bad = scan & ~(valid & np.isfinite(values))
    good = scan & ~bad
    if good.any():
        mags = np.abs(values[good])
        med = float(np.median(mags))
        big = np.zeros_like(bad)
        with np.errstate(invalid="ignore"):
            big[good] = np.abs(values[good]) > growth_factor * med if med > 0 else mags > 0
        bad |= big
    return [Point2(float(x), float(y)) for x, y in zip(X[bad], Y[bad])]


# ---------------------------------------------------------------------------
# intertwining on kernel elements

def _default_bases(spec: GridSpec, ok) -> list[Point2]:
    pts = [Point2(spec.x_max, spec.y_max), Point2(spec.x_min, spec.y_max),
           Point2(spec.x_min, spec.y_min), Point2(spec.x_max, spec.y_min)]
    return [p for p in pts if bool(ok(np.array(p.x), np.array(p.y)))]


def intertwine_check(h: ScalarField2, s: ScalarField2, pair: SchrodingerPair, spec: GridSpec,
                     region: Optional[Region] = None, constant: float = 0.0,
                     base_point: Optional[Point2] = None) -> tuple[float, float]:
    """Map ``pair.Y`` through the shift ``s`` and measure how well the image
    solves the transformed equation.

    The image uses the Moutard formulas when ``s = -2h`` and the general
    ones otherwise.  Q is recovered from ``(pair.Y, e^{-h})``, anchored at
    ``base_point`` (default: the valid corners of the window).
    """
    Yh = seed_from_drift(h)
    Y = pair.Y

    def ok(x, y):
        good = Y.valid(x, y) & Yh.valid(x, y)
        return good if region is None else good & np.asarray(region(x, y), bool)

    bases = _default_bases(spec, ok)
    if base_point is None:
        if not bases:
            raise EmptyMaskError("no corner of the window can anchor Q")
        base_point = bases[0]
    Q = recover_q(Y, Yh, base_point, constant, region=region, bases=bases)
    X, Yn = spec.nodes()
    probes = [Point2(float(x), float(y)) for x, y in zip(X[::16, ::16].ravel(), Yn[::16, ::16].ravel())
              if ok(np.array(x), np.array(y)) and s.valid(x, y) and h.valid(x, y)][:9]
    if probes and shift_is_moutard(h, s, probes):
        u_new = moutard_potential_field(pair.u, Yh)
        image = moutard_solution(Y, Yh, Q)
    else:
        u_new = new_potential_field(pair.u, h, s)
        image = new_solution(Y, Q, h, s)
    return residual_norms(schrodinger_residual(u_new, image, spec, region))


# ---------------------------------------------------------------------------
# reports

@dataclass
class VerificationReport:
    entry: str
    grid: str
    max_abs: float
    rms: float
    order: object
    singularities_found: int
    thresholds: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        t = {"tolerance": DEFAULT_TOLERANCE, "order_min": DEFAULT_ORDER_RANGE[0],
             "order_max": DEFAULT_ORDER_RANGE[1], **self.thresholds}
        ok_res = math.isnan(self.max_abs) or self.max_abs <= t["tolerance"]
        ok_order = self.order is NotApplicable or t["order_min"] <= float(self.order) <= t["order_max"]
        return bool(ok_res and ok_order and self.singularities_found == 0)

    def to_text(self) -> str:
        lines = [f"entry={self.entry}", f"grid={self.grid}", f"max_abs={self.max_abs!r}",
                 f"rms={self.rms!r}", f"order={self.order if self.order is NotApplicable else repr(self.order)}",
                 f"singularities_found={self.singularities_found}", f"passed={str(self.passed).lower()}"]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "VerificationReport":
        kv = dict(ln.split("=", 1) for ln in text.splitlines() if "=" in ln)
        order = NotApplicable if kv["order"] == "n/a" else float(kv["order"])
        return cls(kv["entry"], kv["grid"], float(kv["max_abs"]), float(kv["rms"]), order,
                   int(kv["singularities_found"]))


def verify_pair(name: str, pair: SchrodingerPair, spec: GridSpec, region: Optional[Region] = None,
                tolerance: float = DEFAULT_TOLERANCE, order_range=DEFAULT_ORDER_RANGE,
                growth_factor: float = DEFAULT_GROWTH_FACTOR) -> VerificationReport:
    """Residual with jets, nested-grid convergence order and a singularity scan."""
    res = schrodinger_residual(pair.u, pair.Y, spec, region)
    if pair.Y.has_jets(2):
        max_abs, rms = residual_norms(res)
    else:
        # finite-difference residuals are judged by their order only
        max_abs, rms = float("nan"), residual_norms(res)[1]
    order = convergence_order(pair.u, pair.Y, nested_grids(spec), region)
    found = (len(singularity_scan(pair.u, spec, growth_factor, region))
             + len(singularity_scan(pair.Y, spec, growth_factor, region)))
    return VerificationReport(name, spec.label(), max_abs, rms, order, found,
                              {"tolerance": tolerance, "order_min": order_range[0],
                               "order_max": order_range[1]})


def verify_grids(name: str, u: GridData, Y: GridData, order_range=DEFAULT_ORDER_RANGE,
                 growth_factor: float = DEFAULT_GROWTH_FACTOR) -> VerificationReport:
    """Checks for sampled fields: stencil-thinning order and a growth scan."""
    res = grid_residual(u, Y)
    _, rms = residual_norms(res)
    order = grid_convergence_order(u, Y)
    found = len(grid_singularity_scan(u, growth_factor)) + len(grid_singularity_scan(Y, growth_factor))
    return VerificationReport(name, u.spec.label(), float("nan"), rms, order, found,
                              {"order_min": order_range[0], "order_max": order_range[1]})
