"""Contact structure of a 3D frame: normalized contact form, Reeb field, structure constants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fields as F
from .errors import ContactError
from .expr import Expr, eval_jet, parse, variables
from .fields import ScalarField, VectorFieldJ

PAIRS = ((0, 1), (0, 2), (1, 2))


def expr_field(e: Expr, dim: int, max_order: int = F.DEFAULT_MAX_ORDER, name: str = "expr") -> ScalarField:
    """Wrap a parsed expression as a lazily evaluated field."""
    if not variables(e):
        value = eval_jet(e, np.zeros(dim), 0).value
        return F.constant(float(value), dim)
    return F.FunctionField(lambda x, k: eval_jet(e, x, k, dim), dim, max_order, name)


@dataclass(frozen=True)
class FrameSpec:
    """A horizontal orthonormal frame ``v1, v2`` given by expression strings."""

    coords: tuple[str, str, str]
    v1: tuple[str, str, str]
    v2: tuple[str, str, str]
    density: str | None = None
    box: tuple[tuple[float, float], ...] = ((-1.0, 1.0),) * 3
    exprs: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        coords = tuple(self.coords)
        if len(coords) != 3 or len(set(coords)) != 3:
            raise ValueError("a frame needs three distinct coordinate names")
        if len(self.v1) != 3 or len(self.v2) != 3:
            raise ValueError("frame vectors need three components each")
        for name, comps in (("v1", self.v1), ("v2", self.v2)):
            self.exprs[name] = tuple(parse(c, coords) for c in comps)
        if self.density is not None:
            self.exprs["density"] = parse(self.density, coords)

    def vector_field(self, name: str, max_order: int = F.DEFAULT_MAX_ORDER) -> VectorFieldJ:
        return VectorFieldJ([expr_field(e, 3, max_order, f"{name}[{k}]")
                             for k, e in enumerate(self.exprs[name])])

    def sample_points(self, n: int, seed: int = 0) -> np.ndarray:
        """``n`` scrambled Halton points in the chart box, shape ``(n, 3)``."""
        from scipy.stats import qmc

        lo = np.array([b[0] for b in self.box], dtype=float)
        hi = np.array([b[1] for b in self.box], dtype=float)
        u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
        return lo + (hi - lo) * u


def cross(u: Sequence[ScalarField], v: Sequence[ScalarField]) -> list[ScalarField]:
    return [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]


def dot(u: Sequence[ScalarField], v: Sequence[ScalarField]) -> ScalarField:
    return F.total([a * b for a, b in zip(u, v)], u[0].dim)


def det3(c0, c1, c2) -> ScalarField:
    return dot(c0, cross(c1, c2))


class ContactStructure:
    """Derived fields of a contact frame, all as lazily evaluated jets on the base.

    Attributes: ``v`` (tuple ``(e, v1, v2)`` with ``e`` the Reeb field), ``sigma``
    (normalized contact form), ``alpha`` (coframe dual to ``v``, ``alpha[0]`` is
    ``sigma``), ``dsigma`` (3x3 antisymmetric array of fields), ``a`` (structure
    constants keyed ``(i, j, k)`` for ``i < j``), ``density`` (of the volume ``eta``).
    """

    def __init__(self, spec: FrameSpec, max_order: int = F.DEFAULT_MAX_ORDER):
        self.spec = spec
        self.max_order = max_order
        v1 = spec.vector_field("v1", max_order)
        v2 = spec.vector_field("v2", max_order)
        self.v1, self.v2 = v1, v2
        self.bracket12 = F.lie_bracket(v1, v2)

        self.sigma_hat = cross(list(v1), list(v2))
        self.normalizer = dot(self.sigma_hat, list(self.bracket12))
        lam = -1.0 / self.normalizer
        self.sigma = [lam * c for c in self.sigma_hat]
        self.dsigma = [[F.partial(self.sigma[j], i) - F.partial(self.sigma[i], j) for j in range(3)]
                       for i in range(3)]

        # sigma(e) = 1, dsigma(e, v1) = dsigma(e, v2) = 0
        rows = [self.sigma,
                [dot(self.dsigma[i], list(v1)) for i in range(3)],
                [dot(self.dsigma[i], list(v2)) for i in range(3)]]
        adj = cross(rows[1], rows[2])
        self.reeb_det = dot(rows[0], adj)
        self.e = VectorFieldJ([c / self.reeb_det for c in adj])
        self.v = (self.e, v1, v2)

        cols = [list(X) for X in self.v]
        self.frame_det = det3(*cols)
        self.alpha = [
            self.sigma,
            [c / self.frame_det for c in cross(cols[2], cols[0])],
            [c / self.frame_det for c in cross(cols[0], cols[1])],
        ]

        self.brackets = {(i, j): F.lie_bracket(self.v[i], self.v[j]) for i, j in PAIRS}
        self.a = {}
        for (i, j), B in self.brackets.items():
            for k in range(3):
                self.a[(i, j, k)] = dot(self.alpha[k], list(B))

        if "density" in spec.exprs:
            self.density = expr_field(spec.exprs["density"], 3, max_order, "density")
        else:
            self.density = 1.0 / F.apply_func("sqrt", self.frame_det * self.frame_det)

    def structure_constant(self, i: int, j: int, k: int) -> ScalarField:
        """``a_ij^k`` for any ordered pair, using antisymmetry in ``(i, j)``."""
        if i == j:
            return F.constant(0.0, 3)
        if i < j:
            return self.a[(i, j, k)]
        return -self.a[(j, i, k)]

    def eval_pairing(self, form: Sequence[ScalarField], X: VectorFieldJ, pts) -> np.ndarray:
        return dot(form, list(X))(pts)


@dataclass(frozen=True)
class ContactReport:
    passed: bool
    min_abs_det: float
    worst_point: tuple[float, ...]
    n_points: int


def verify_contact(spec: FrameSpec, pts, max_order: int = F.DEFAULT_MAX_ORDER,
                   threshold: float = 1e-12, raise_on_fail: bool = True) -> ContactReport:
    """Check ``det(v1, v2, [v1, v2]) != 0`` at every sample point."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    v1 = spec.vector_field("v1", max_order)
    v2 = spec.vector_field("v2", max_order)
    b = F.lie_bracket(v1, v2)
    d = np.abs(det3(list(v1), list(v2), list(b))(pts))
    d = np.where(np.isfinite(d), d, 0.0)
    k = int(np.argmin(d))
    report = ContactReport(bool(d[k] >= threshold), float(d[k]), tuple(map(float, pts[k])), len(pts))
    if raise_on_fail and not report.passed:
        raise ContactError(f"frame is not contact: |det(v1, v2, [v1, v2])| = {d[k]:.3e}", pts[k])
    return report


@dataclass(frozen=True)
class BundleReport:
    bundle_type: bool
    max_a01_1: float
    max_a02_2: float
    max_a01_2_plus_a02_1: float
    n_points: int


def bundle_type_check(cs: ContactStructure, pts, tol: float = 1e-9) -> BundleReport:
    """Whether ``a_01^1 = a_02^2 = 0`` and ``a_01^2 + a_02^1 = 0`` on the samples."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m1 = float(np.max(np.abs(cs.a[(0, 1, 1)](pts))))
    m2 = float(np.max(np.abs(cs.a[(0, 2, 2)](pts))))
    m3 = float(np.max(np.abs((cs.a[(0, 1, 2)] + cs.a[(0, 2, 1)])(pts))))
    return BundleReport(max(m1, m2, m3) <= tol, m1, m2, m3, len(pts))


def structure_constant_values(cs: ContactStructure, pts) -> dict[str, np.ndarray]:
    """All nine ``a_ij^k`` at the points, keyed ``"a{i}{j}_{k}"``."""
    return {f"a{i}{j}_{k}": cs.a[(i, j, k)](pts) for (i, j, k) in cs.a}
