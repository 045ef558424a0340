"""Recovery of the nonlocal variable Q from two Schrödinger solutions.

Q is determined up to a constant by its gradient

    Q_x = -(Y_y Y_h - Y Y_h,y),    Q_y = Y_x Y_h - Y Y_h,x,

which is curl free exactly when Y and Y_h solve the same equation.  Values
come from line integrals along axis-aligned L-shaped paths (horizontal then
vertical, falling back to vertical then horizontal); derivatives come
straight from the gradient.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, EmptyMaskError, PathBlockedError
from .fields import (GridSpec, Jet, Point2, Region, ScalarField2, _as_xy,
                     fd_jet, jet3_at, sample)
from .jets import index, monomials, n_coef

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
DEFAULT_QUADRATURE_N = 64
_MEMO_LIMIT = 2_000_000
_PROBE_OFFSETS = np.linspace(-0.2, 0.2, 5)


def _jets(f: ScalarField2, x, y, order: int) -> Jet:
    if f.has_jets(order):
        return f.jet(x, y, order)
    return fd_jet(f, x, y, None, order)[0]


def q_gradient(Y: ScalarField2, Yh: ScalarField2, p: Point2) -> tuple[float, float]:
    """``(Q_x, Q_y)`` at ``p``."""
    jy, jh = jet3_at(Y, p), jet3_at(Yh, p)
    qx = -(jy.dy * jh.value - jy.value * jh.dy)
    qy = jy.dx * jh.value - jy.value * jh.dx
    return float(qx), float(qy)


def _q_grad_arrays(Y, Yh, x, y, region=None):
    """Vectorised gradient; NaN wherever a field or the region says no."""
    x, y = _as_xy(x, y)
    ok = Y.valid(x, y) & Yh.valid(x, y)
    if region is not None:
        ok &= np.asarray(region(x, y), dtype=bool)
    qx = np.full(x.shape, np.nan)
    qy = np.full(x.shape, np.nan)
    if ok.any():
        xs, ys = x[ok], y[ok]
        with np.errstate(all="ignore"):
            jy, jh = _jets(Y, xs, ys, 1), _jets(Yh, xs, ys, 1)
            qx[ok] = -(jy.dy * jh.value - jy.value * jh.dy)
            qy[ok] = jy.dx * jh.value - jy.value * jh.dx
    return qx, qy


def _curl(Y, Yh, x, y):
    """``d(Q_x)/dy - d(Q_y)/dx = -(Y_h lap Y - Y lap Y_h)``."""
    jy, jh = _jets(Y, x, y, 2), _jets(Yh, x, y, 2)
    return -(jh.value * jy.laplacian - jy.value * jh.laplacian)


def compatibility_residual(Y: ScalarField2, Yh: ScalarField2, spec: GridSpec) -> float:
    """Largest curl defect of the Q gradient over valid grid nodes."""
    X, Yg = spec.nodes()
    ok = Y.valid(X, Yg) & Yh.valid(X, Yg)
    if not ok.any():
        raise EmptyMaskError("no valid nodes for the compatibility check")
    with np.errstate(all="ignore"):
        c = np.abs(_curl(Y, Yh, X[ok], Yg[ok]))
    c = c[np.isfinite(c)]
    if c.size == 0:
        raise EmptyMaskError("compatibility check produced no finite values")
    return float(c.max())


def _leg(integrand, valid, fixed, a0, ends, n):
    """``int_{a0}^{end} integrand(t, fixed) dt`` for each ``(fixed, end)``.

    Panels of width ``1/n`` are laid out from ``a0`` in both directions and
    shared by all points on the same line; the last, partial panel is
    integrated separately per point.  A non-finite integrand anywhere on the
    way makes the result NaN, which is how blocked paths show up.  Panel
    edges (including both ends of the leg) are checked with ``valid`` so a
    pole sitting exactly on the path cannot slip between quadrature nodes.
    """
    fixed = np.asarray(fixed, float).ravel()
    ends = np.asarray(ends, float).ravel()
    out = np.zeros(ends.shape)
    if ends.size == 0:
        return out
    unit = (_GL_X + 1.0) / 2.0
    d = ends - a0
    side = np.where(d >= 0, 1.0, -1.0)
    m = np.floor(np.abs(d) * n).astype(np.int64)

    need = np.nonzero(m > 0)[0]
    if need.size:
        keys, inv = np.unique(np.stack([fixed[need], side[need]], axis=1), axis=0,
                              return_inverse=True)
        inv = inv.ravel()
        kmax = np.zeros(len(keys), dtype=np.int64)
        np.maximum.at(kmax, inv, m[need])
        off = np.concatenate(([0], np.cumsum(kmax)))
        gid = np.repeat(np.arange(len(keys)), kmax)
        idx = np.arange(off[-1]) - off[gid]
        fg, sg = keys[gid, 0], keys[gid, 1]
        t0 = a0 + sg * idx / n
        t1 = a0 + sg * (idx + 1) / n
        nodes = t0[:, None] + sg[:, None] * unit[None, :] / n
        vals = integrand(nodes.ravel(), np.repeat(fg, 4)).reshape(-1, 4)
        panel = sg * (vals @ _GL_W) / (2 * n)
        bad = ~(np.isfinite(panel) & valid(t0, fg) & valid(t1, fg))
        # one prefix sum over every line; extended precision keeps the
        # differences cs[hi] - cs[lo] free of cancellation against earlier lines
        cs = np.concatenate(([0.0], np.cumsum(np.where(bad, 0.0, panel).astype(np.longdouble))))
        cb = np.concatenate(([0], np.cumsum(bad)))
        lo = off[inv]
        hi = lo + m[need]
        full = (cs[hi] - cs[lo]).astype(float)
        full[cb[hi] - cb[lo] > 0] = np.nan
        out[need] = full

    # partial panels
    start = a0 + side * m / n
    length = ends - start
    t = start[:, None] + length[:, None] * unit[None, :]
    pv = integrand(t.ravel(), np.repeat(fixed, 4)).reshape(-1, 4)
    partial = length * (pv @ _GL_W) / 2.0
    partial[length == 0.0] = 0.0
    partial[~(valid(start, fixed) & valid(ends, fixed))] = np.nan
    return out + partial


class NonlocalPotential(ScalarField2):
    """Q tied to a pair ``(Y, Y_h)`` with a base point and additive constant.

    ``Q(base_point) == constant``.  Extra base points (``bases``) are tried in
    order of distance when both L-paths from the nearest one are blocked; their
    constants are fixed by integrating from the primary base.
    """

    def __init__(self, Y: ScalarField2, Yh: ScalarField2, base_point: Point2, constant: float = 0.0,
                 quadrature_n: int = DEFAULT_QUADRATURE_N, region: Optional[Region] = None,
                 name: str = "Q", bases: Sequence[Point2] = (), check: bool = True):
        if quadrature_n < 1:
            raise ValueError("quadrature_n must be positive")
        self.Y = Y
        self.Yh = Yh
        self.base_point = base_point
        self.additive_constant = float(constant)
        self.quadrature_n = int(quadrature_n)
        self.region = region
        self.trivial = Y is Yh
        order = None
        if Y.jet_order is not None and Yh.jet_order is not None:
            order = min(Y.jet_order, Yh.jet_order)
        super().__init__(self._evaluate, self._jet_eval, order, self._domain_pred, name)
        if not self._domain_pred(np.array(base_point.x), np.array(base_point.y)):
            raise DomainError(f"{name}: base point {base_point} outside the domain")
        self._anchors = [(base_point, self.additive_constant)]
        for b in bases:
            if (b.x, b.y) != (base_point.x, base_point.y):
                self._anchors.append((b, float(self._evaluate_from(np.array([b.x]), np.array([b.y]),
                                                                   [self._anchors[0]])[0])))
        self.compat_residual = self._probe_compat() if check else float("nan")

    @property
    def bases(self) -> list[Point2]:
        return [b for b, _ in self._anchors]

    def _domain_pred(self, x, y):
        ok = np.asarray(self.Y.valid(x, y) & self.Yh.valid(x, y), dtype=bool)
        if self.region is not None:
            ok = ok & np.asarray(self.region(x, y), dtype=bool)
        return ok

    def _probe_compat(self) -> float:
        if self.trivial:
            return 0.0
        bx, by = self.base_point
        X, Yg = np.meshgrid(bx + _PROBE_OFFSETS, by + _PROBE_OFFSETS)
        ok = self._domain_pred(X, Yg)
        if not ok.any():
            return float("nan")
        with np.errstate(all="ignore"):
            c = np.abs(_curl(self.Y, self.Yh, X[ok], Yg[ok]))
        return float(np.nanmax(c)) if np.isfinite(c).any() else float("nan")

    # -- values ---------------------------------------------------------
    def _integrand(self, which):
        def f(t, fixed):
            x, y = (t, fixed) if which == "x" else (fixed, t)
            qx, qy = _q_grad_arrays(self.Y, self.Yh, x, y, self.region)
            return qx if which == "x" else qy
        return f

    def _paths(self, x, y, base, constant):
        n = self.quadrature_n
        x0, y0 = base
        hx, vy = self._integrand("x"), self._integrand("y")
        hok = lambda t, f: self._domain_pred(t, f)
        vok = lambda t, f: self._domain_pred(f, t)
        hv = _leg(hx, hok, np.full(x.shape, y0), x0, x, n) + _leg(vy, vok, x, y0, y, n)
        out = constant + hv
        bad = ~np.isfinite(out)
        if bad.any():
            xb, yb = x[bad], y[bad]
            vh = _leg(vy, vok, np.full(xb.shape, x0), y0, yb, n) + _leg(hx, hok, yb, x0, xb, n)
            out[bad] = constant + vh
        return out

    def _evaluate_from(self, x, y, anchors):
        out = np.full(x.shape, np.nan)
        if x.size == 0:
            return out
        dist = np.stack([np.hypot(x - b.x, y - b.y) for b, _ in anchors])
        rank = np.argsort(dist, axis=0, kind="stable")
        todo = np.ones(x.shape, dtype=bool)
        for r in range(len(anchors)):
            for a, (b, c) in enumerate(anchors):
                sel = todo & (rank[r] == a)
                if sel.any():
                    out[sel] = self._paths(x[sel], y[sel], b, c)
            todo = ~np.isfinite(out)
            if not todo.any():
                break
        return out

    def _evaluate(self, x, y):
        x, y = _as_xy(x, y)
        shape = x.shape
        if self.trivial:
            return np.full(shape, self.additive_constant)
        xf, yf = x.ravel(), y.ravel()
        out = self._memo_lookup(xf, yf)
        miss = np.isnan(out)
        if miss.any():
            fresh = self._evaluate_fresh(xf[miss], yf[miss])
            out[miss] = fresh
            self._memo_store(xf[miss], yf[miss], fresh)
        return out.reshape(shape)

    # values are memoized by exact coordinates: domain tests and values, and
    # the several fields built on one Q, keep asking for the same nodes
    def _memo_lookup(self, x, y):
        out = np.full(x.shape, np.nan)
        keys = getattr(self, "_memo_keys", None)
        if keys is None or keys.size == 0:
            return out
        q = x + 1j * y
        pos = np.clip(np.searchsorted(keys, q), 0, keys.size - 1)
        hit = keys[pos] == q
        out[hit] = self._memo_vals[pos[hit]]
        return out

    def _memo_store(self, x, y, v):
        ok = np.isfinite(v)
        q, v = x[ok] + 1j * y[ok], v[ok]
        keys = getattr(self, "_memo_keys", None)
        if keys is not None and keys.size + q.size <= _MEMO_LIMIT:
            q, v = np.concatenate([keys, q]), np.concatenate([self._memo_vals, v])
        q, first = np.unique(q, return_index=True)
        self._memo_keys, self._memo_vals = q, v[first]

    def _evaluate_fresh(self, x, y):
        shape = x.shape
        xf, yf = x.ravel(), y.ravel()
        ok = self._domain_pred(xf, yf)
        out = np.full(xf.shape, np.nan)
        with np.errstate(all="ignore"):
            out[ok] = self._evaluate_from(xf[ok], yf[ok], self._anchors)
        blocked = ok & ~np.isfinite(out)
        if blocked.any():
            i = int(np.argmax(blocked))
            raise PathBlockedError(
                f"{self.name}: every L-path to ({xf[i]}, {yf[i]}) crosses an excluded region; "
                f"move the base point")
        return out.reshape(shape)

    # -- jets -----------------------------------------------------------
    def _jet_eval(self, x, y, order):
        x, y = _as_xy(x, y)
        value = self._evaluate(x, y)
        coef = np.zeros((n_coef(order),) + x.shape)
        coef[0] = value
        if order >= 1 and not self.trivial:
            jy, jh = self.Y.jet(x, y, order), self.Yh.jet(x, y, order)
            lo_y, lo_h = jy.truncate(order - 1), jh.truncate(order - 1)
            qx = -(jy.diff_y() * lo_h - lo_y * jh.diff_y())
            qy = jy.diff_x() * lo_h - lo_y * jh.diff_x()
            for (i, j) in monomials(order):
                if i + j == 0:
                    continue
                if i >= 1:
                    coef[index(i, j)] = qx.coef[index(i - 1, j)] / i
                else:
                    coef[index(i, j)] = qy.coef[index(i, j - 1)] / j
        return Jet(coef, order)

    def gradient(self, p: Point2) -> tuple[float, float]:
        return q_gradient(self.Y, self.Yh, p)

    def rebased(self, new_base: Point2, bases: Sequence[Point2] = ()) -> "NonlocalPotential":
        """Same Q, with ``new_base`` as the primary base point."""
        c = float(self(new_base.x, new_base.y))
        return NonlocalPotential(self.Y, self.Yh, new_base, c, self.quadrature_n, self.region,
                                 self.name, bases)

    def with_constant(self, constant: float) -> "NonlocalPotential":
        return NonlocalPotential(self.Y, self.Yh, self.base_point, constant, self.quadrature_n,
                                 self.region, self.name, self.bases[1:])


def recover_q(Y: ScalarField2, Yh: ScalarField2, base_point: Point2, constant: float = 0.0,
              quadrature_n: int = DEFAULT_QUADRATURE_N, region: Optional[Region] = None,
              bases: Sequence[Point2] = (), name: str = "Q") -> NonlocalPotential:
    """Q with ``Q(base_point) = constant``; see :class:`NonlocalPotential`."""
    return NonlocalPotential(Y, Yh, base_point, constant, quadrature_n, region, name, bases)


def normalize_at_infinity(Y: ScalarField2, Yh: ScalarField2, base_point: Point2,
                          value_at_infinity: float = 0.0, reach: float = 400.0,
                          quadrature_n: int = 16) -> float:
    """Constant making Q tend to ``value_at_infinity`` far along the diagonal.

    Only meaningful when Q has a limit at infinity (decaying gradient).
    """
    far = Point2(base_point.x + reach, base_point.y + reach)
    q0 = NonlocalPotential(Y, Yh, base_point, 0.0, quadrature_n, check=False)
    return float(value_at_infinity - q0(far.x, far.y))


def q_samples(Q: NonlocalPotential, spec: GridSpec, region: Optional[Region] = None):
    return sample(Q, spec, region=region)
