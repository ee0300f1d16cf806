"""Lazily evaluated scalar and vector fields built on jets.

A :class:`ScalarField` maps a point to a :class:`~subricci.jets.Jet` of a
requested order. Fields compose into a DAG (sums, products, partial
derivatives, pullbacks); asking for a node at order ``k`` asks a derivative
node's operand for order ``k + 1``, so the order budget is spent exactly where
derivatives are taken. Results are memoized per evaluation point.
"""

from __future__ import annotations

import numbers
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .errors import JetMismatchError, OrderExhaustedError
from .jets import Jet

DEFAULT_MAX_ORDER = 8


class Point:
    """An evaluation point (or batch of points) with a precomputed cache key."""

    __slots__ = ("x", "key", "_views")

    def __init__(self, x):
        self.x = np.ascontiguousarray(x, dtype=float)
        self.key = (self.x.shape, self.x.tobytes())
        self._views: dict = {}

    @property
    def dim(self) -> int:
        return self.x.shape[-1]

    def view(self, offset: int, dim: int) -> Point:
        """Sub-point made of coordinates ``offset .. offset + dim``; shared between callers."""
        k = (offset, dim)
        if k not in self._views:
            self._views[k] = Point(self.x[..., offset:offset + dim])
        return self._views[k]


def as_point(x) -> Point:
    return x if isinstance(x, Point) else Point(x)


class ScalarField:
    dim: int
    is_zero = False
    constant_value: float | None = None

    def __init__(self, dim: int):
        self.dim = dim
        self._cache_key = None
        self._cache: dict[int, Jet] = {}

    def jet(self, x, order: int = 0) -> Jet:
        pt = as_point(x)
        if pt.dim != self.dim:
            raise JetMismatchError(f"field of dim {self.dim} evaluated at a {pt.dim}-point")
        if order < 0:
            raise OrderExhaustedError("negative jet order requested")
        if self._cache_key is not pt.key and self._cache_key != pt.key:
            self._cache_key = pt.key
            self._cache = {}
        cached = self._cache.get(order)
        if cached is not None:
            return cached
        for k, j in self._cache.items():
            if k > order:
                out = j.truncate(order)
                self._cache[order] = out
                return out
        out = self._eval(pt, order)
        self._cache[order] = out
        return out

    def _eval(self, pt: Point, order: int) -> Jet:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        return self.jet(x, 0).value

    # algebra -------------------------------------------------------------

    def _wrap(self, other) -> ScalarField:
        if isinstance(other, ScalarField):
            if other.dim != self.dim:
                raise JetMismatchError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        if isinstance(other, numbers.Real):
            return constant(float(other), self.dim)
        return NotImplemented

    def __add__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return add(self, o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return add(self, neg(o))

    def __rsub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return add(o, neg(self))

    def __mul__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return div(self, o)

    def __rtruediv__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return div(o, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n: int):
        return _Map(self, lambda j: j ** n, f"pow{n}")


class ConstantField(ScalarField):
    def __init__(self, value: float, dim: int):
        super().__init__(dim)
        self.constant_value = float(value)
        self.is_zero = self.constant_value == 0.0

    def _eval(self, pt, order):
        return Jet.constant(np.full(pt.x.shape[:-1], self.constant_value), self.dim, order)


class CoordinateField(ScalarField):
    def __init__(self, var: int, dim: int):
        super().__init__(dim)
        self.var = var

    def _eval(self, pt, order):
        return Jet.variable(pt.x[..., self.var], self.var, self.dim, order)


class FunctionField(ScalarField):
    """Leaf field backed by ``fn(point_array, order) -> Jet``.

    ``max_order`` caps the orders this leaf may be asked for; exceeding it is
    an :class:`OrderExhaustedError`, never a silent truncation.
    """

    def __init__(self, fn: Callable[[np.ndarray, int], Jet], dim: int,
                 max_order: int = DEFAULT_MAX_ORDER, name: str = "f"):
        super().__init__(dim)
        self.fn = fn
        self.max_order = max_order
        self.name = name

    def _eval(self, pt, order):
        if order > self.max_order:
            raise OrderExhaustedError(
                f"field {self.name!r} needed at jet order {order}, "
                f"above the configured maximum {self.max_order}"
            )
        return self.fn(pt.x, order)


class _Add(ScalarField):
    def __init__(self, terms: Sequence[ScalarField]):
        super().__init__(terms[0].dim)
        self.terms = tuple(terms)

    def _eval(self, pt, order):
        acc = self.terms[0].jet(pt, order)
        for t in self.terms[1:]:
            acc = acc + t.jet(pt, order)
        return acc


class _Mul(ScalarField):
    def __init__(self, a: ScalarField, b: ScalarField):
        super().__init__(a.dim)
        self.a, self.b = a, b

    def _eval(self, pt, order):
        return self.a.jet(pt, order) * self.b.jet(pt, order)


class _Scale(ScalarField):
    def __init__(self, a: ScalarField, c: float):
        super().__init__(a.dim)
        self.a, self.c = a, c

    def _eval(self, pt, order):
        return self.a.jet(pt, order) * self.c


class _Div(ScalarField):
    def __init__(self, a: ScalarField, b: ScalarField):
        super().__init__(a.dim)
        self.a, self.b = a, b

    def _eval(self, pt, order):
        return self.a.jet(pt, order) / self.b.jet(pt, order)


class _Map(ScalarField):
    def __init__(self, a: ScalarField, fn: Callable[[Jet], Jet], name: str):
        super().__init__(a.dim)
        self.a, self.fn, self.name = a, fn, name

    def _eval(self, pt, order):
        return self.fn(self.a.jet(pt, order))


class _Partial(ScalarField):
    def __init__(self, f: ScalarField, var: int):
        super().__init__(f.dim)
        self.f, self.var = f, var

    def _eval(self, pt, order):
        return self.f.jet(pt, order + 1).diff(self.var)


class _Pullback(ScalarField):
    """A field on ``dim_base`` variables viewed on a larger space through a coordinate block."""

    def __init__(self, f: ScalarField, dim: int, offset: int):
        super().__init__(dim)
        self.f, self.offset = f, offset

    def _eval(self, pt, order):
        sub = pt.view(self.offset, self.f.dim)
        return self.f.jet(sub, order).embed(self.dim, self.offset)


# constructors with light simplification --------------------------------

def constant(value: float, dim: int) -> ConstantField:
    return ConstantField(value, dim)


def coordinate(var: int, dim: int) -> CoordinateField:
    return CoordinateField(var, dim)


def add(*terms: ScalarField) -> ScalarField:
    flat: list[ScalarField] = []
    const = 0.0
    for t in terms:
        if isinstance(t, _Add):
            flat.extend(t.terms)
        elif t.constant_value is not None:
            const += t.constant_value
        else:
            flat.append(t)
    if const != 0.0 or not flat:
        flat.append(constant(const, terms[0].dim))
    if len(flat) == 1:
        return flat[0]
    return _Add(flat)


def neg(a: ScalarField) -> ScalarField:
    return scale(a, -1.0)


def scale(a: ScalarField, c: float) -> ScalarField:
    if a.constant_value is not None:
        return constant(a.constant_value * c, a.dim)
    if c == 1.0:
        return a
    if c == 0.0:
        return constant(0.0, a.dim)
    if isinstance(a, _Scale):
        return scale(a.a, a.c * c)
    return _Scale(a, c)


def mul(a: ScalarField, b: ScalarField) -> ScalarField:
    if a.constant_value is not None and b.constant_value is not None:
        return constant(a.constant_value * b.constant_value, a.dim)
    if a.constant_value is not None:
        return scale(b, a.constant_value)
    if b.constant_value is not None:
        return scale(a, b.constant_value)
    return _Mul(a, b)


def div(a: ScalarField, b: ScalarField) -> ScalarField:
    if b.constant_value is not None and b.constant_value != 0.0:
        return scale(a, 1.0 / b.constant_value)
    if a.is_zero:
        return a
    return _Div(a, b)


def partial(f: ScalarField, var: int) -> ScalarField:
    if f.constant_value is not None:
        return constant(0.0, f.dim)
    if isinstance(f, CoordinateField):
        return constant(1.0 if f.var == var else 0.0, f.dim)
    return _Partial(f, var)


def pullback(f: ScalarField, dim: int, offset: int = 0) -> ScalarField:
    if f.constant_value is not None:
        return constant(f.constant_value, dim)
    return _Pullback(f, dim, offset)


def apply_func(name: str, a: ScalarField) -> ScalarField:
    fn = J.FUNCTIONS[name]
    return _Map(a, fn, name)


def sqrt(a: ScalarField) -> ScalarField:
    return apply_func("sqrt", a)


def total(terms: Sequence[ScalarField], dim: int) -> ScalarField:
    terms = [t for t in terms if not t.is_zero]
    if not terms:
        return constant(0.0, dim)
    return add(*terms)


# vector fields ----------------------------------------------------------

class VectorFieldJ:
    """First-order differential operator ``sum_i X^i d_i`` with field components."""

    def __init__(self, components: Sequence[ScalarField]):
        components = tuple(components)
        if not components:
            raise JetMismatchError("a vector field needs at least one component")
        dim = components[0].dim
        if len(components) != dim or any(c.dim != dim for c in components):
            raise JetMismatchError(
                f"vector field needs {dim} components of dim {dim}, got {len(components)}"
            )
        self.components = components
        self.dim = dim

    def __getitem__(self, i) -> ScalarField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __call__(self, x) -> np.ndarray:
        """Component values, shape ``(dim, *batch)``."""
        pt = as_point(x)
        return np.stack([c.jet(pt, 0).value for c in self.components])

    def apply(self, f: ScalarField) -> ScalarField:
        return apply_vf(self, f)

    def __add__(self, other: VectorFieldJ) -> VectorFieldJ:
        return VectorFieldJ([a + b for a, b in zip(self, other)])

    def __sub__(self, other: VectorFieldJ) -> VectorFieldJ:
        return VectorFieldJ([a - b for a, b in zip(self, other)])

    def __neg__(self) -> VectorFieldJ:
        return VectorFieldJ([-a for a in self])

    def scaled(self, f) -> VectorFieldJ:
        """Pointwise multiple ``f X`` by a scalar field or number."""
        return VectorFieldJ([a * f for a in self])

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)


def coordinate_field(var: int, dim: int) -> VectorFieldJ:
    """The constant vector field d/dx_var."""
    return VectorFieldJ([constant(1.0 if i == var else 0.0, dim) for i in range(dim)])


def apply_vf(X: VectorFieldJ, f: ScalarField) -> ScalarField:
    """``(Xf)(x) = sum_i X^i(x) d_i f(x)`` as a new field."""
    if X.dim != f.dim:
        raise JetMismatchError(f"vector field dim {X.dim} vs function dim {f.dim}")
    terms = [mul(X[i], partial(f, i)) for i in range(X.dim) if not X[i].is_zero]
    return total(terms, f.dim)


def lie_bracket(X: VectorFieldJ, Y: VectorFieldJ) -> VectorFieldJ:
    """``[X, Y]^i = X(Y^i) - Y(X^i)``."""
    if X.dim != Y.dim:
        raise JetMismatchError(f"bracket of fields with dims {X.dim} and {Y.dim}")
    return VectorFieldJ([apply_vf(X, Y[i]) - apply_vf(Y, X[i]) for i in range(X.dim)])


def vf_pullback(X: VectorFieldJ, dim: int, offset: int = 0) -> list[ScalarField]:
    """Components of a base field as functions on a larger space (no new directions)."""
    return [pullback(c, dim, offset) for c in X]
