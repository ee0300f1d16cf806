"""Truncated multivariate Taylor polynomials ("jets").

A :class:`Jet` stores the Taylor coefficients ``c_alpha = d^alpha f / alpha!``
of a scalar function at a point, for every multi-index of total degree at most
``order``. Coefficients are laid out densely in graded lexicographic order, so
truncating to a lower order is a prefix slice.

Jets may carry leading batch axes: ``coeffs`` has shape ``(*batch, ncoef)``
and every operation acts elementwise over the batch. This is how fields are
evaluated at many points at once.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Sequence

import numpy as np

from .errors import DomainError, JetMismatchError, OrderExhaustedError


def ncoef(dim: int, order: int) -> int:
    """Number of monomials of total degree <= order in ``dim`` variables."""
    if order < 0:
        return 0
    return math.comb(dim + order, order)


@functools.lru_cache(maxsize=None)
def exponents(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices in graded lexicographic order (x_0 first within a degree)."""
    out: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        # combinations_with_replacement yields variable multisets in lex order
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            e = [0] * dim
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _index(dim: int, order: int) -> dict[tuple[int, ...], int]:
    return {e: i for i, e in enumerate(exponents(dim, order))}


@functools.lru_cache(maxsize=None)
def _mul_table(dim: int, order: int):
    exps = exponents(dim, order)
    index = _index(dim, order)
    degs = [sum(e) for e in exps]
    src_i, src_j, dst = [], [], []
    for i, ei in enumerate(exps):
        room = order - degs[i]
        for j in range(ncoef(dim, room)):
            ej = exps[j]
            src_i.append(i)
            src_j.append(j)
            dst.append(index[tuple(a + b for a, b in zip(ei, ej))])
    dst_arr = np.asarray(dst)
    perm = np.argsort(dst_arr, kind="stable")
    dst_sorted = dst_arr[perm]
    starts = np.flatnonzero(np.r_[True, dst_sorted[1:] != dst_sorted[:-1]])
    return (np.asarray(src_i)[perm], np.asarray(src_j)[perm], starts)


@functools.lru_cache(maxsize=None)
def _diff_table(dim: int, order: int, var: int):
    """Source indices and integer factors for d/dx_var taking order -> order-1."""
    index = _index(dim, order)
    src, fac = [], []
    for e in exponents(dim, order - 1):
        up = list(e)
        up[var] += 1
        src.append(index[tuple(up)])
        fac.append(up[var])
    return np.asarray(src, dtype=np.intp), np.asarray(fac, dtype=float)


@functools.lru_cache(maxsize=None)
def _embed_table(dim: int, new_dim: int, offset: int, order: int):
    index = _index(new_dim, order)
    dst = []
    for e in exponents(dim, order):
        full = [0] * new_dim
        full[offset:offset + dim] = e
        dst.append(index[tuple(full)])
    return np.asarray(dst, dtype=np.intp)


class Jet:
    """Truncated Taylor expansion of a scalar function at a point (or batch)."""

    __slots__ = ("coeffs", "dim", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, dim: int, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        if order < 0:
            raise OrderExhaustedError("jet order became negative")
        if coeffs.shape[-1:] != (ncoef(dim, order),):
            raise JetMismatchError(
                f"expected {ncoef(dim, order)} coefficients for dim={dim}, "
                f"order={order}, got trailing shape {coeffs.shape[-1:]}"
            )
        self.coeffs = coeffs
        self.dim = dim
        self.order = order

    # construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, dim: int, order: int) -> Jet:
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (ncoef(dim, order),))
        c[..., 0] = value
        return cls(c, dim, order)

    @classmethod
    def variable(cls, value, var: int, dim: int, order: int) -> Jet:
        """The coordinate function x_var expanded at ``value``."""
        j = cls.constant(value, dim, order)
        if order >= 1:
            j.coeffs[..., 1 + var] = 1.0
        return j

    @classmethod
    def from_point(cls, point, order: int) -> list[Jet]:
        """Coordinate jets for every variable at ``point`` (shape ``(*batch, dim)``)."""
        point = np.asarray(point, dtype=float)
        dim = point.shape[-1]
        return [cls.variable(point[..., i], i, dim, order) for i in range(dim)]

    # inspection ---------------------------------------------------------

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def coefficient(self, alpha: Sequence[int]) -> np.ndarray:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim:
            raise JetMismatchError(f"multi-index {alpha} has wrong length for dim {self.dim}")
        if sum(alpha) > self.order:
            raise OrderExhaustedError(
                f"coefficient of degree {sum(alpha)} requested from order-{self.order} jet"
            )
        return self.coeffs[..., _index(self.dim, self.order)[alpha]]

    def derivative(self, alpha: Sequence[int]) -> np.ndarray:
        """Partial derivative ``d^alpha f`` at the expansion point."""
        scale = math.prod(math.factorial(int(a)) for a in alpha)
        return self.coefficient(alpha) * scale

    def gradient(self) -> np.ndarray:
        if self.order < 1:
            raise OrderExhaustedError("gradient needs an order >= 1 jet")
        return np.moveaxis(self.coeffs[..., 1:1 + self.dim], -1, 0)

    def hessian(self) -> np.ndarray:
        """Second derivatives, shape ``(dim, dim, *batch)``."""
        if self.order < 2:
            raise OrderExhaustedError("hessian needs an order >= 2 jet")
        d = self.dim
        out = np.empty((d, d) + self.batch_shape)
        for i in range(d):
            for k in range(i, d):
                alpha = [0] * d
                alpha[i] += 1
                alpha[k] += 1
                out[i, k] = out[k, i] = self.derivative(alpha)
        return out

    # structural ops -----------------------------------------------------

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise OrderExhaustedError(
                f"cannot raise a jet from order {self.order} to {order}"
            )
        if order == self.order:
            return self
        return Jet(self.coeffs[..., :ncoef(self.dim, order)], self.dim, order)

    def diff(self, var: int) -> Jet:
        """Exact partial derivative; the result is valid to ``order - 1``."""
        if self.order == 0:
            raise OrderExhaustedError("cannot differentiate an order-0 jet")
        src, fac = _diff_table(self.dim, self.order, var)
        return Jet(self.coeffs[..., src] * fac, self.dim, self.order - 1)

    def embed(self, new_dim: int, offset: int = 0) -> Jet:
        """View as a jet in ``new_dim`` variables, this jet's variables starting at ``offset``."""
        dst = _embed_table(self.dim, new_dim, offset, self.order)
        c = np.zeros(self.batch_shape + (ncoef(new_dim, self.order),))
        c[..., dst] = self.coeffs
        return Jet(c, new_dim, self.order)

    def nilpotent(self) -> Jet:
        """The jet minus its constant term."""
        c = self.coeffs.copy()
        c[..., 0] = 0.0
        return Jet(c, self.dim, self.order)

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> tuple[Jet, Jet]:
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise JetMismatchError(f"dimension mismatch: {self.dim} vs {other.dim}")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, Jet.constant(other, self.dim, self.order)

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            shape = np.broadcast_shapes(self.batch_shape, other.shape)
            c = np.array(np.broadcast_to(self.coeffs, shape + self.coeffs.shape[-1:]))
            c[..., 0] += other
            return Jet(c, self.dim, self.order)
        a, b = self._coerce(other)
        return Jet(a.coeffs + b.coeffs, a.dim, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.dim, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.coeffs * np.asarray(other, dtype=float)[..., None], self.dim, self.order)
        a, b = self._coerce(other)
        if a.order == 0:
            return Jet(a.coeffs * b.coeffs, a.dim, 0)
        i, j, starts = _mul_table(a.dim, a.order)
        prod = a.coeffs[..., i] * b.coeffs[..., j]
        return Jet(np.add.reduceat(prod, starts, axis=-1), a.dim, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise DomainError("division by zero")
            return Jet(self.coeffs / other[..., None], self.dim, self.order)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, (float, np.floating)) and float(n).is_integer():
            n = int(n)
        if not isinstance(n, (int, np.integer)):
            raise TypeError("jets support only integer powers; use power() for real exponents")
        n = int(n)
        if n < 0:
            return reciprocal(self) ** (-n)
        result = Jet.constant(np.ones(self.batch_shape), self.dim, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, batch={self.batch_shape})"


# composition with univariate functions ----------------------------------

def compose(series: np.ndarray, x: Jet) -> Jet:
    """Evaluate ``sum_k series[..., k] * (x - x0)**k`` by Horner's rule.

    ``series`` holds the univariate Taylor coefficients of the outer function
    at the constant term ``x0`` of ``x``, shape ``(*batch, >= order + 1)``.
    """
    delta = x.nilpotent()
    K = x.order
    result = Jet.constant(series[..., K], x.dim, x.order)
    for k in range(K - 1, -1, -1):
        result = result * delta
        result.coeffs[..., 0] += series[..., k]
    return result


def _factorials(K: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(K + 1)], dtype=float)


def reciprocal(x: Jet) -> Jet:
    x0 = x.value
    if np.any(x0 == 0) or not np.all(np.isfinite(x0)):
        raise DomainError("division by a jet with zero constant term")
    k = np.arange(x.order + 1)
    series = (-1.0) ** k * x0[..., None] ** (-(k + 1.0))
    return compose(series, x)


def exp(x: Jet) -> Jet:
    K = x.order
    series = np.exp(x.value)[..., None] / _factorials(K)
    return compose(series, x)


def log(x: Jet) -> Jet:
    x0 = x.value
    if np.any(x0 <= 0):
        raise DomainError("log of a nonpositive value")
    K = x.order
    k = np.arange(1, K + 1)
    series = np.empty(x0.shape + (K + 1,))
    series[..., 0] = np.log(x0)
    series[..., 1:] = (-1.0) ** (k + 1) / (k * x0[..., None] ** k)
    return compose(series, x)


def power(x: Jet, a: float) -> Jet:
    """Real power ``x**a`` for positive constant term."""
    x0 = x.value
    if np.any(x0 <= 0):
        raise DomainError("real power of a nonpositive value")
    K = x.order
    binom = np.ones(K + 1)
    for k in range(1, K + 1):
        binom[k] = binom[k - 1] * (a - k + 1) / k
    k = np.arange(K + 1)
    series = binom * x0[..., None] ** (a - k)
    return compose(series, x)


def sqrt(x: Jet) -> Jet:
    x0 = x.value
    if x.order == 0:
        if np.any(x0 < 0):
            raise DomainError("sqrt of a negative value")
        return Jet(np.sqrt(x.coeffs), x.dim, 0)
    if np.any(x0 <= 0):
        raise DomainError("sqrt is not differentiable at a nonpositive value")
    return power(x, 0.5)


def _trig_series(x0: np.ndarray, K: int, hyperbolic: bool, cosine: bool) -> np.ndarray:
    s = np.sinh(x0) if hyperbolic else np.sin(x0)
    c = np.cosh(x0) if hyperbolic else np.cos(x0)
    fact = _factorials(K)
    out = np.empty(x0.shape + (K + 1,))
    for k in range(K + 1):
        # k-th derivative of sin/cos (or sinh/cosh) at x0
        if hyperbolic:
            d = (c if k % 2 == 0 else s) if cosine else (s if k % 2 == 0 else c)
        else:
            phase = (k + (1 if cosine else 0)) % 4
            d = (s, c, -s, -c)[phase]
        out[..., k] = d / fact[k]
    return out


def sin(x: Jet) -> Jet:
    return compose(_trig_series(x.value, x.order, False, False), x)


def cos(x: Jet) -> Jet:
    return compose(_trig_series(x.value, x.order, False, True), x)


def sinh(x: Jet) -> Jet:
    return compose(_trig_series(x.value, x.order, True, False), x)


def cosh(x: Jet) -> Jet:
    return compose(_trig_series(x.value, x.order, True, True), x)


def tan(x: Jet) -> Jet:
    c = cos(x)
    if np.any(np.abs(c.value) < 1e-300):
        raise DomainError("tan at a pole")
    return sin(x) / c


def tanh(x: Jet) -> Jet:
    return sinh(x) / cosh(x)


def atan(x: Jet) -> Jet:
    # atan(x0 + d) = atan(x0) + atan(w),  w = d / (1 + x0 (x0 + d)),  w nilpotent
    x0 = x.value
    d = x.nilpotent()
    w = d / (x * x0 + 1.0)
    K = x.order
    series = np.zeros(K + 1)
    for k in range(1, K + 1, 2):
        series[k] = (-1.0) ** ((k - 1) // 2) / k
    out = compose(np.broadcast_to(series, x0.shape + (K + 1,)), w)
    out.coeffs[..., 0] += np.arctan(x0)
    return out


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "atan": atan,
}
