"""Forward-mode automatic differentiation on multivariate dual numbers.

``Dual`` carries a value and a gradient, ``Jet2`` additionally a Hessian.
Both implement exact chain rules; no finite differencing anywhere.  Hessians
are assembled from symmetric rank-one blocks, so ``h[i, j] == h[j, i]``
holds bitwise, not merely to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SCALARS = (int, float)


@dataclass
class ADScalar:
    """Value, gradient and (optionally) Hessian of a scalar function at a point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray | None = None


class Dual:
    """First-order dual number with a dense gradient of fixed dimension."""

    __slots__ = ("v", "g")

    def __init__(self, v: float, g: np.ndarray):
        self.v = v
        self.g = g

    @classmethod
    def seed(cls, value: float, index: int, dim: int) -> "Dual":
        g = np.zeros(dim)
        g[index] = 1.0
        return cls(float(value), g)

    @classmethod
    def const(cls, value: float, dim: int) -> "Dual":
        return cls(float(value), np.zeros(dim))

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v + o.v, self.g + o.g)
        return Dual(self.v + o, self.g)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v - o.v, self.g - o.g)
        return Dual(self.v - o, self.g)

    def __rsub__(self, o):
        return Dual(o - self.v, -self.g)

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v * o.v, self.g * o.v + self.v * o.g)
        return Dual(self.v * o, self.g * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            v = self.v / o.v
            return Dual(v, (self.g - v * o.g) / o.v)
        return Dual(self.v / o, self.g / o)

    def __rtruediv__(self, o):
        v = o / self.v
        return Dual(v, (-v / self.v) * self.g)

    def __neg__(self):
        return Dual(-self.v, -self.g)

    def powi(self, n: int) -> "Dual":
        """Integer power; valid for any base (0**negative excluded by caller)."""
        return Dual(self.v**n, (n * self.v ** (n - 1)) * self.g)

    def powf(self, c: float) -> "Dual":
        """Real power; caller guarantees a positive base."""
        return Dual(self.v**c, (c * self.v ** (c - 1.0)) * self.g)

    def _unary(self, value: float, d1: float) -> "Dual":
        return Dual(value, d1 * self.g)

    def sqrt(self):
        s = math.sqrt(self.v)
        return self._unary(s, 0.5 / s)

    def ln(self):
        return self._unary(math.log(self.v), 1.0 / self.v)

    def exp(self):
        e = math.exp(self.v)
        return self._unary(e, e)

    def sin(self):
        return self._unary(math.sin(self.v), math.cos(self.v))

    def cos(self):
        return self._unary(math.cos(self.v), -math.sin(self.v))

    def __repr__(self):
        return f"Dual({self.v!r}, {self.g!r})"


def _sym_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # outer(a, b) + outer(b, a): bitwise symmetric because float * and +
    # commute, so [i, j] and [j, i] are the same two products summed.
    m = np.outer(a, b)
    return m + m.T


class Jet2:
    """Second-order dual number: value, gradient and bitwise-symmetric Hessian."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v: float, g: np.ndarray, h: np.ndarray):
        self.v = v
        self.g = g
        self.h = h

    @classmethod
    def seed(cls, value: float, index: int, dim: int) -> "Jet2":
        g = np.zeros(dim)
        g[index] = 1.0
        return cls(float(value), g, np.zeros((dim, dim)))

    @classmethod
    def const(cls, value: float, dim: int) -> "Jet2":
        return cls(float(value), np.zeros(dim), np.zeros((dim, dim)))

    def __add__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.v + o.v, self.g + o.g, self.h + o.h)
        return Jet2(self.v + o, self.g, self.h)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.v - o.v, self.g - o.g, self.h - o.h)
        return Jet2(self.v - o, self.g, self.h)

    def __rsub__(self, o):
        return Jet2(o - self.v, -self.g, -self.h)

    def __mul__(self, o):
        if isinstance(o, Jet2):
            return Jet2(
                self.v * o.v,
                self.g * o.v + self.v * o.g,
                self.h * o.v + self.v * o.h + _sym_outer(self.g, o.g),
            )
        return Jet2(self.v * o, self.g * o, self.h * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet2):
            v = self.v / o.v
            g = (self.g - v * o.g) / o.v
            h = (self.h - v * o.h - _sym_outer(g, o.g)) / o.v
            return Jet2(v, g, h)
        return Jet2(self.v / o, self.g / o, self.h / o)

    def __rtruediv__(self, o):
        v = o / self.v
        g = (-v / self.v) * self.g
        h = (-v * self.h - _sym_outer(g, self.g)) / self.v
        return Jet2(v, g, h)

    def __neg__(self):
        return Jet2(-self.v, -self.g, -self.h)

    def _unary(self, value: float, d1: float, d2: float) -> "Jet2":
        gg = np.outer(self.g, self.g)  # bitwise symmetric
        return Jet2(value, d1 * self.g, d1 * self.h + d2 * gg)

    def powi(self, n: int) -> "Jet2":
        v = self.v
        return self._unary(v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))

    def powf(self, c: float) -> "Jet2":
        v = self.v
        return self._unary(v**c, c * v ** (c - 1.0), c * (c - 1.0) * v ** (c - 2.0))

    def sqrt(self):
        s = math.sqrt(self.v)
        return self._unary(s, 0.5 / s, -0.25 / (s * self.v))

    def ln(self):
        return self._unary(math.log(self.v), 1.0 / self.v, -1.0 / (self.v * self.v))

    def exp(self):
        e = math.exp(self.v)
        return self._unary(e, e, e)

    def sin(self):
        s, c = math.sin(self.v), math.cos(self.v)
        return self._unary(s, c, -s)

    def cos(self):
        s, c = math.sin(self.v), math.cos(self.v)
        return self._unary(c, -s, -c)

    def __repr__(self):
        return f"Jet2({self.v!r}, {self.g!r}, ...)"


def value_of(x) -> float:
    """Plain float value of a float, Dual or Jet2."""
    if isinstance(x, _SCALARS):
        return float(x)
    return x.v
