"""Plane scalar fields, differentiation, grids, masking and grid CSV files."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, EmptyMaskError, NonFiniteError, ParamError
from .jets import Jet

#: Jet order supplied by closed-form expression fields.
EXPRESSION_JET_ORDER = 6
DEFAULT_MAGNITUDE_CAP = 1e8

Region = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y


def _as_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.broadcast_arrays(x, y)


class ScalarField2:
    """A real function on (part of) the plane.

    ``value(x, y)`` evaluates on broadcastable arrays.  ``jet(x, y, order)``,
    when present, returns exact derivatives up to ``jet_order``.  ``domain``
    returns False near poles and branch points; evaluation there may give
    non-finite numbers.
    """

    def __init__(self, value, jet=None, jet_order: Optional[int] = None,
                 domain: Optional[Region] = None, name: str = "field",
                 domain_error=DomainError, info: Optional[dict] = None):
        self._value = value
        self._jet = jet
        self.jet_order = jet_order if jet is not None else None
        self._domain = domain
        self.name = name
        self.domain_error = domain_error
        self.info = dict(info or {})

    def __repr__(self):
        return f"ScalarField2({self.name!r}, jet_order={self.jet_order})"

    # -- construction ---------------------------------------------------
    @classmethod
    def from_expression(cls, expr, domain: Optional[Region] = None, name: str = "expr",
                        jet_order: int = EXPRESSION_JET_ORDER, **kwargs) -> "ScalarField2":
        """Wrap ``expr(x, y)`` written with numpy functions; jets come for free."""

        def value(x, y):
            x, y = _as_xy(x, y)
            return np.broadcast_to(np.asarray(expr(x, y), dtype=float), x.shape)

        def jet(x, y, order):
            x, y = _as_xy(x, y)
            out = expr(*Jet.variables(x, y, order))
            if not isinstance(out, Jet):
                out = Jet.constant(np.broadcast_to(np.asarray(out, float), x.shape), order)
            return out

        return cls(value, jet, jet_order, domain, name, **kwargs)

    @classmethod
    def constant(cls, c: float, name: Optional[str] = None) -> "ScalarField2":
        return cls.from_expression(lambda x, y: c + 0.0 * x, name=name or f"const({c:g})")

    # -- evaluation -----------------------------------------------------
    def __call__(self, x, y):
        x, y = _as_xy(x, y)
        return np.asarray(self._value(x, y), dtype=float)

    def at(self, p: Point2) -> float:
        return float(self(p.x, p.y))

    def valid(self, x, y) -> np.ndarray:
        x, y = _as_xy(x, y)
        if self._domain is None:
            return np.ones(x.shape, dtype=bool)
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(self._domain(x, y), dtype=bool), x.shape).copy()

    def has_jets(self, order: int) -> bool:
        return self.jet_order is not None and order <= self.jet_order

    def jet(self, x, y, order: int = 3) -> Jet:
        if not self.has_jets(order):
            raise ValueError(f"{self.name}: no analytic jets of order {order} (have {self.jet_order})")
        x, y = _as_xy(x, y)
        return self._jet(x, y, order)

    # -- composition ----------------------------------------------------
    def _combine(self, other, op, symbol):
        if not isinstance(other, ScalarField2):
            other = ScalarField2.constant(float(other))
        f, g = self, other
        order = None
        if f.jet_order is not None and g.jet_order is not None:
            order = min(f.jet_order, g.jet_order)
        jet = (lambda x, y, n: op(f.jet(x, y, n), g.jet(x, y, n))) if order is not None else None
        return ScalarField2(lambda x, y: op(f(x, y), g(x, y)), jet, order,
                            _and_domains(f, g), f"({f.name}{symbol}{g.name})")

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b, "+")

    def __radd__(self, other):
        return self + other

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b, "-")

    def __rsub__(self, other):
        return ScalarField2.constant(float(other)) - self

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b, "*")

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, other):
        return self._combine(other, lambda a, b: a / b, "/")

    def __rtruediv__(self, other):
        return ScalarField2.constant(float(other)) / self

    def __neg__(self):
        return self * -1.0

    def map(self, ufunc, name: Optional[str] = None) -> "ScalarField2":
        """Apply a jet-aware numpy ufunc (``np.exp``, ``np.log``, ...) pointwise."""
        f = self
        jet = (lambda x, y, n: ufunc(f.jet(x, y, n))) if f.jet_order is not None else None
        return ScalarField2(lambda x, y: ufunc(f(x, y)), jet, f.jet_order, f._domain,
                            name or f"{ufunc.__name__}({f.name})")

    def restricted(self, region: Region, name: Optional[str] = None) -> "ScalarField2":
        """Same field with its domain intersected with ``region``."""
        base = self._domain

        def domain(x, y):
            ok = np.asarray(region(x, y), dtype=bool)
            return ok if base is None else ok & base(x, y)

        return ScalarField2(self._value, self._jet, self.jet_order, domain,
                            name or self.name, self.domain_error, self.info)


def _and_domains(*fields: ScalarField2) -> Optional[Region]:
    domains = [f._domain for f in fields if f._domain is not None]
    if not domains:
        return None

    def domain(x, y):
        ok = np.asarray(domains[0](x, y), dtype=bool)
        for d in domains[1:]:
            ok = ok & d(x, y)
        return ok

    return domain


def and_domains(*fields: ScalarField2) -> Optional[Region]:
    return _and_domains(*fields)


# ---------------------------------------------------------------------------
# finite differences

def default_fd_step(x, y):
    return 1e-4 * np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))


_STENCIL = [(0, 0), (1, 0), (-1, 0), (2, 0), (-2, 0), (0, 1), (0, -1), (0, 2), (0, -2),
            (1, 1), (1, -1), (-1, 1), (-1, -1)]


def fd_jet(f: ScalarField2, x, y, h=None, order: int = 3) -> tuple[Jet, np.ndarray]:
    """Central order-2 finite-difference jet (up to third derivatives).

    Returns the jet and a boolean array telling where every stencil point was
    inside the field's domain.
    """
    if order > 3:
        raise ValueError("finite-difference jets stop at order 3")
    x, y = _as_xy(x, y)
    h = default_fd_step(x, y) if h is None else np.broadcast_to(np.asarray(h, float), x.shape)
    v = {}
    ok = np.ones(x.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for a, b in _STENCIL:
            px, py = x + a * h, y + b * h
            ok &= f.valid(px, py)
            v[a, b] = f(px, py)
    d = {(0, 0): v[0, 0]}
    if order >= 1:
        d[1, 0] = (v[1, 0] - v[-1, 0]) / (2 * h)
        d[0, 1] = (v[0, 1] - v[0, -1]) / (2 * h)
    if order >= 2:
        d[2, 0] = (v[1, 0] - 2 * v[0, 0] + v[-1, 0]) / h**2
        d[0, 2] = (v[0, 1] - 2 * v[0, 0] + v[0, -1]) / h**2
        d[1, 1] = (v[1, 1] - v[1, -1] - v[-1, 1] + v[-1, -1]) / (4 * h**2)
    if order >= 3:
        d[3, 0] = (v[2, 0] - 2 * v[1, 0] + 2 * v[-1, 0] - v[-2, 0]) / (2 * h**3)
        d[0, 3] = (v[0, 2] - 2 * v[0, 1] + 2 * v[0, -1] - v[0, -2]) / (2 * h**3)
        d[2, 1] = ((v[1, 1] - 2 * v[0, 1] + v[-1, 1]) - (v[1, -1] - 2 * v[0, -1] + v[-1, -1])) / (2 * h**3)
        d[1, 2] = ((v[1, 1] - 2 * v[1, 0] + v[1, -1]) - (v[-1, 1] - 2 * v[-1, 0] + v[-1, -1])) / (2 * h**3)
    return Jet.from_partials(d, order), ok


def with_fd_jets(f: ScalarField2, fd_step: Optional[float] = None) -> ScalarField2:
    """``f`` unchanged if it already has order-3 jets, else FD jets attached."""
    if f.has_jets(3):
        return f
    step = None if fd_step is None else float(fd_step)

    def jet(x, y, order):
        return fd_jet(f, x, y, step, order)[0]

    return ScalarField2(f._value, jet, 3, f._domain, f.name, f.domain_error, f.info)


def jet3_at(f: ScalarField2, p: Point2, fd_step: Optional[float] = None) -> Jet:
    """Order-3 jet of ``f`` at ``p``: analytic when available, else central FD."""
    if not f.valid(p.x, p.y):
        raise f.domain_error(f"{f.name}: point ({p.x}, {p.y}) outside the domain")
    if f.has_jets(3):
        with np.errstate(all="ignore"):
            jet = f.jet(p.x, p.y, 3)
    else:
        h = float(default_fd_step(p.x, p.y)) if fd_step is None else float(fd_step)
        jet, ok = fd_jet(f, p.x, p.y, h, 3)
        if not bool(ok):
            raise f.domain_error(f"{f.name}: stencil around ({p.x}, {p.y}) leaves the domain")
    if not jet.is_finite:
        raise NonFiniteError(f"{f.name}: non-finite jet at ({p.x}, {p.y})")
    return jet


def laplacian_at(f: ScalarField2, p: Point2, fd_step: Optional[float] = None) -> float:
    j = jet3_at(f, p, fd_step)
    return float(j.dxx + j.dyy)


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ParamError(f"empty window {self}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 3 or self.ny < 3:
            raise ParamError(f"need integer nx, ny >= 3, got {self.nx}, {self.ny}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as ``(ny, nx)`` arrays; row-major = x runs fastest."""
        return np.meshgrid(self.xs, self.ys, indexing="xy")

    def coarsened(self, factor: int) -> "GridSpec":
        if (self.nx - 1) % factor or (self.ny - 1) % factor:
            raise ParamError(f"{self} cannot be coarsened by {factor}")
        return GridSpec(self.x_min, self.x_max, self.y_min, self.y_max,
                        (self.nx - 1) // factor + 1, (self.ny - 1) // factor + 1)

    def label(self) -> str:
        return f"[{self.x_min:g},{self.x_max:g}]x[{self.y_min:g},{self.y_max:g}]@{self.nx}x{self.ny}"


@dataclass
class GridData:
    """Samples on a :class:`GridSpec`; ``values``/``mask`` are ``(ny, nx)`` arrays."""

    spec: GridSpec
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        shape = (self.spec.ny, self.spec.nx)
        self.values = np.asarray(self.values, dtype=float).reshape(shape)
        self.mask = np.asarray(self.mask, dtype=bool).reshape(shape)

    @property
    def flat_values(self) -> np.ndarray:
        return self.values.ravel()

    def masked_values(self) -> np.ndarray:
        return self.values[self.mask]

    def to_field(self, name: str = "grid") -> ScalarField2:
        return grid_to_field(self, name)


def sample(f: ScalarField2, spec: GridSpec, magnitude_cap: float = DEFAULT_MAGNITUDE_CAP,
           region: Optional[Region] = None) -> GridData:
    """Evaluate ``f`` at every node; invalid or oversized samples are masked out."""
    X, Y = spec.nodes()
    mask = f.valid(X, Y)
    if region is not None:
        mask &= np.asarray(region(X, Y), dtype=bool)
    values = np.full(X.shape, np.nan)
    with np.errstate(all="ignore"):
        if mask.any():
            values[mask] = f(X[mask], Y[mask])
        mask &= np.isfinite(values) & (np.abs(values) <= magnitude_cap)
    return GridData(spec, values, mask)


def residual_norms(g: GridData) -> tuple[float, float]:
    """``(max_abs, rms)`` over masked-in nodes."""
    v = g.values[g.mask]
    if v.size == 0:
        raise EmptyMaskError("no masked-in nodes")
    return float(np.max(np.abs(v))), float(np.sqrt(np.mean(v * v)))


# ---------------------------------------------------------------------------
# CSV files

def write_grid_csv(g: GridData, path) -> None:
    s = g.spec
    X, Y = s.nodes()
    lines = [f"# {s.x_min!r},{s.x_max!r},{s.y_min!r},{s.y_max!r},{s.nx},{s.ny}"]
    for x, y, v, m in zip(X.ravel(), Y.ravel(), g.values.ravel(), g.mask.ravel()):
        lines.append(f"{x:.17g},{y:.17g},{v:.17g},{int(m)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_csv(path) -> GridData:
    text = Path(path).read_text().splitlines()
    header = [ln for ln in text if ln.startswith("#")]
    rows = [ln for ln in text if ln.strip() and not ln.startswith("#")]
    if not header:
        raise ValueError(f"{path}: missing '# x_min,x_max,y_min,y_max,nx,ny' header")
    parts = None
    for ln in header:
        fields = [t.strip() for t in ln[1:].split(",")]
        try:
            parts = [float(t) for t in fields]
            break
        except ValueError:
            continue
    if parts is None or len(parts) != 6:
        raise ValueError(f"{path}: malformed header")
    spec = GridSpec(parts[0], parts[1], parts[2], parts[3], int(parts[4]), int(parts[5]))
    if len(rows) != spec.nx * spec.ny:
        raise ValueError(f"{path}: expected {spec.nx * spec.ny} rows, found {len(rows)}")
    values = np.empty(len(rows))
    mask = np.empty(len(rows), dtype=bool)
    for k, ln in enumerate(rows):
        cols = ln.split(",")
        if len(cols) != 4:
            raise ValueError(f"{path}: bad row {k}: {ln!r}")
        values[k] = float(cols[2])
        mask[k] = cols[3].strip() == "1"
    return GridData(spec, values, mask)


def grid_to_field(g: GridData, name: str = "grid") -> ScalarField2:
    """Spline interpolant of grid samples (quintic where the grid allows).

    The domain excludes points within three cells of a masked-out node, where
    the fill values used for the spline would leak in.
    """
    from scipy.interpolate import RectBivariateSpline
    from scipy.ndimage import binary_dilation

    s = g.spec
    k = 5 if min(s.nx, s.ny) >= 6 else 3
    filled = np.where(g.mask, g.values, 0.0)
    spline = RectBivariateSpline(s.xs, s.ys, filled.T, kx=k, ky=k)
    bad = binary_dilation(~g.mask, iterations=3)

    def domain(x, y):
        inside = (x >= s.x_min) & (x <= s.x_max) & (y >= s.y_min) & (y <= s.y_max)
        i = np.clip(np.rint((x - s.x_min) / s.dx).astype(int), 0, s.nx - 1)
        j = np.clip(np.rint((y - s.y_min) / s.dy).astype(int), 0, s.ny - 1)
        return inside & ~bad[j, i]

    def value(x, y):
        return spline.ev(x, y)

    def jet(x, y, order):
        parts = {(i, j): spline.ev(x, y, dx=i, dy=j) for i in range(order + 1)
                 for j in range(order + 1 - i)}
        return Jet.from_partials(parts, order)

    return ScalarField2(value, jet, k - 2, domain, name)
