"""Truncated bivariate Taylor arithmetic ("jets").

A :class:`Jet` of order ``n`` stores the Taylor coefficients of a function
around one or many points, for every monomial ``dx**i * dy**j`` with
``i + j <= n``.  Coefficients are numpy arrays, so a single jet can describe
a whole grid of expansion points at once.

Jets take part in numpy ufuncs (``np.exp(jet)``, ``np.sin(jet)``, ...), which
lets a closed-form expression written with numpy be evaluated either on plain
arrays (values) or on jets (values plus exact partial derivatives).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial


@lru_cache(maxsize=None)
def monomials(order: int) -> tuple[tuple[int, int], ...]:
    """Exponents ``(i, j)`` ordered by total degree, then by decreasing ``i``."""
    return tuple((d - j, j) for d in range(order + 1) for j in range(d + 1))


def n_coef(order: int) -> int:
    return (order + 1) * (order + 2) // 2


def index(i: int, j: int) -> int:
    d = i + j
    return d * (d + 1) // 2 + j


@lru_cache(maxsize=None)
def _product_table(order: int):
    table = []
    for i, j in monomials(order):
        table.append(tuple((index(a, b), index(i - a, j - b))
                           for a in range(i + 1) for b in range(j + 1)))
    return tuple(table)


def _align(a: np.ndarray, b: np.ndarray):
    # coefficient axis leads, so point shapes must be padded before broadcasting
    nd = max(a.ndim, b.ndim)
    if a.ndim < nd:
        a = a.reshape(a.shape[:1] + (1,) * (nd - a.ndim) + a.shape[1:])
    if b.ndim < nd:
        b = b.reshape(b.shape[:1] + (1,) * (nd - b.ndim) + b.shape[1:])
    return a, b


def _falling(a: float, k: int) -> float:
    out = 1.0
    for m in range(k):
        out *= a - m
    return out


@lru_cache(maxsize=None)
def _tanh_polys(order: int) -> tuple[Polynomial, ...]:
    # d^k tanh / dg^k as a polynomial in t = tanh(g)
    polys = [Polynomial([0.0, 1.0])]
    one_minus_t2 = Polynomial([1.0, 0.0, -1.0])
    for _ in range(order):
        polys.append(polys[-1].deriv() * one_minus_t2)
    return tuple(polys)


class Jet:
    """Order-``n`` truncated Taylor expansion in two variables.

    ``coef[k]`` is the Taylor coefficient of ``monomials(order)[k]``; the
    partial derivative ``d^(i+j) f / dx^i dy^j`` equals ``coef * i! * j!``.
    Mixed partials are stored once.
    """

    __slots__ = ("order", "coef")
    __array_priority__ = 1000

    def __init__(self, coef, order: int):
        coef = np.asarray(coef, dtype=float)
        if coef.shape[0] != n_coef(order):
            raise ValueError(f"order {order} needs {n_coef(order)} coefficients, got {coef.shape[0]}")
        self.order = order
        self.coef = coef

    # -- construction ---------------------------------------------------
    @classmethod
    def variables(cls, x, y, order: int) -> tuple["Jet", "Jet"]:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        cx = np.zeros((n_coef(order),) + x.shape)
        cy = np.zeros_like(cx)
        cx[0] = x
        cy[0] = y
        if order >= 1:
            cx[index(1, 0)] = 1.0
            cy[index(0, 1)] = 1.0
        return cls(cx, order), cls(cy, order)

    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        coef = np.zeros((n_coef(order),) + value.shape)
        coef[0] = value
        return cls(coef, order)

    @classmethod
    def from_partials(cls, partials, order: int) -> "Jet":
        """Build a jet from a mapping ``(i, j) -> d^(i+j)f/dx^i dy^j``."""
        first = np.asarray(partials[(0, 0)], dtype=float)
        coef = np.zeros((n_coef(order),) + first.shape)
        for (i, j) in monomials(order):
            coef[index(i, j)] = np.asarray(partials[(i, j)], float) / (math.factorial(i) * math.factorial(j))
        return cls(coef, order)

    # -- access ---------------------------------------------------------
    @property
    def shape(self):
        return self.coef.shape[1:]

    def partial(self, i: int, j: int):
        if i + j > self.order:
            raise ValueError(f"partial ({i},{j}) exceeds jet order {self.order}")
        return self.coef[index(i, j)] * (math.factorial(i) * math.factorial(j))

    value = property(lambda self: self.coef[0])
    dx = property(lambda self: self.partial(1, 0))
    dy = property(lambda self: self.partial(0, 1))
    dxx = property(lambda self: self.partial(2, 0))
    dxy = property(lambda self: self.partial(1, 1))
    dyy = property(lambda self: self.partial(0, 2))
    dxxx = property(lambda self: self.partial(3, 0))
    dxxy = property(lambda self: self.partial(2, 1))
    dxyy = property(lambda self: self.partial(1, 2))
    dyyy = property(lambda self: self.partial(0, 3))

    @property
    def laplacian(self):
        return self.dxx + self.dyy

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coef)))

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        return Jet(self.coef[:n_coef(order)], order)

    def diff_x(self) -> "Jet":
        """Jet of df/dx, one order lower."""
        return self._diff(1, 0)

    def diff_y(self) -> "Jet":
        return self._diff(0, 1)

    def _diff(self, di, dj):
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        n = self.order - 1
        coef = np.empty((n_coef(n),) + self.shape)
        for k, (i, j) in enumerate(monomials(n)):
            coef[k] = self.coef[index(i + di, j + dj)] * (i + 1 if di else j + 1)
        return Jet(coef, n)

    def __getitem__(self, item) -> "Jet":
        if not isinstance(item, tuple):
            item = (item,)
        return Jet(self.coef[(slice(None),) + item], self.order)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(other, self.order)

    def __add__(self, other):
        a, b = self._coerce(other)
        ca, cb = _align(a.coef, b.coef)
        return Jet(ca + cb, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coef, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        a, b = self._coerce(other)
        ca, cb = _align(a.coef, b.coef)
        return Jet(ca - cb, a.order)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        ca, cb = _align(a.coef, b.coef)
        return Jet(cb - ca, a.order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            ca, cb = _align(self.coef, np.asarray(other, float)[None])
            return Jet(ca * cb, self.order)
        a, b = self._coerce(other)
        ca, cb = _align(a.coef, b.coef)
        shape = np.broadcast_shapes(ca.shape[1:], cb.shape[1:])
        out = np.zeros((n_coef(a.order),) + shape)
        for k, pairs in enumerate(_product_table(a.order)):
            for p, q in pairs:
                out[k] += ca[p] * cb[q]
        return Jet(out, a.order)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        return self._power(-1.0)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            ca, cb = _align(self.coef, np.asarray(other, float)[None])
            return Jet(ca / cb, self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, a):
        if isinstance(a, Jet):
            return np.exp(a * np.log(self))
        a = float(a)
        if a == 2.0:
            return self * self
        return self._power(a)

    # -- univariate composition ------------------------------------------
    def compose(self, derivs) -> "Jet":
        """Return ``f(self)`` given ``derivs[k] = f^(k)(self.value)``."""
        n = self.order
        delta = Jet(self.coef.copy(), n)
        delta.coef[0] = 0.0
        res = Jet.constant(np.asarray(derivs[n], float) / math.factorial(n), n)
        for k in range(n - 1, -1, -1):
            res = res * delta
            res.coef[0] = res.coef[0] + np.asarray(derivs[k], float) / math.factorial(k)
        return res

    def _power(self, a: float) -> "Jet":
        g0 = self.value
        n = self.order
        int_a = float(a).is_integer() and a >= 0
        derivs = []
        for k in range(n + 1):
            if int_a and k > a:
                derivs.append(np.zeros_like(g0))
            else:
                derivs.append(_falling(a, k) * np.power(g0, a - k))
        return self.compose(derivs)

    def _unary(self, name):
        g0 = self.value
        n = self.order
        if name == "exp":
            e = np.exp(g0)
            derivs = [e] * (n + 1)
        elif name == "log":
            derivs = [np.log(g0)] + [(-1.0) ** (k - 1) * math.factorial(k - 1) / g0 ** k
                                     for k in range(1, n + 1)]
        elif name in ("sin", "cos", "sinh", "cosh"):
            if name in ("sin", "cos"):
                s, c = np.sin(g0), np.cos(g0)
                cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
                derivs = [cycle[k % 4] for k in range(n + 1)]
            else:
                s, c = np.sinh(g0), np.cosh(g0)
                cycle = [s, c] if name == "sinh" else [c, s]
                derivs = [cycle[k % 2] for k in range(n + 1)]
        elif name == "tanh":
            t = np.tanh(g0)
            derivs = [p(t) for p in _tanh_polys(n)]
        elif name == "sqrt":
            return self._power(0.5)
        elif name == "abs":
            return self * np.sign(g0)
        else:  # pragma: no cover - guarded by the ufunc table
            raise TypeError(name)
        return self.compose(derivs)

    _UNARY = {
        np.exp: "exp", np.log: "log", np.sin: "sin", np.cos: "cos",
        np.sinh: "sinh", np.cosh: "cosh", np.tanh: "tanh", np.sqrt: "sqrt",
        np.absolute: "abs",
    }

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        if ufunc in self._UNARY:
            return inputs[0]._unary(self._UNARY[ufunc])
        if ufunc is np.negative:
            return -inputs[0]
        if ufunc is np.square:
            return inputs[0] * inputs[0]
        if ufunc is np.reciprocal:
            return inputs[0].reciprocal()
        binary = {
            np.add: lambda a, b: a + b,
            np.subtract: lambda a, b: a - b,
            np.multiply: lambda a, b: a * b,
            np.true_divide: lambda a, b: a / b,
            np.power: lambda a, b: a ** b,
        }
        if ufunc in binary:
            a, b = inputs
            if not isinstance(a, Jet):
                a = Jet.constant(a, b.order)
            return binary[ufunc](a, b)
        return NotImplemented
