"""Builtin model structures and reproducible sampling on them.

Hopf chart: the unit sphere ``|z1|^2 + |z2|^2 = 1`` in ``C^2`` with
``z1 = x1 + i y1``, ``z2 = x2 + i y2`` is covered on the open hemisphere
``y2 > 0`` by the coordinates ``(x1, y1, x2)``, with
``y2 = sqrt(1 - x1^2 - y1^2 - x2^2)``. The horizontal fields
``(z1, z2) -> (-z2, z1)`` and ``(z1, z2) -> (i z2, i z1)`` then read
``v1 = (-x2, -y2, x1)`` and ``v2 = (-y2, x2, -y1)`` in the chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .contact import ContactStructure, FrameSpec, verify_contact
from .errors import ConfigError
from .fields import Point
from .invariants import LiftedFields


@dataclass(frozen=True)
class ModelDef:
    name: str
    spec: FrameSpec
    claims: dict = field(default_factory=dict)
    geodesic_length: float = 1.0  # sqrt(2H) used when sampling covectors
    h0_max: float = 3.0
    sample_box: tuple | None = None  # base points for geodesic sampling, defaults to spec.box

    def structure(self, max_order: int = 8) -> ContactStructure:
        return ContactStructure(self.spec, max_order)

    def verify(self, n: int = 100, seed: int = 0):
        return verify_contact(self.spec, self.spec.sample_points(n, seed))


def _heisenberg_spec(v1, v2, box=((-1.0, 1.0),) * 3) -> FrameSpec:
    return FrameSpec(("x", "y", "z"), v1, v2, box=box)


def heisenberg() -> ModelDef:
    spec = _heisenberg_spec(("1", "0", "-y/2"), ("0", "1", "x/2"))
    return ModelDef("heisenberg", spec, {
        "kappa": 0.0, "bundle_type": True, "r_zero": True, "mcp": [0, 5], "mcp_r": 0.0,
    })


_Y2 = "sqrt(1 - x1^2 - y1^2 - x2^2)"


def hopf() -> ModelDef:
    spec = FrameSpec(("x1", "y1", "x2"), ("-x2", f"-{_Y2}", "x1"), (f"-{_Y2}", "x2", "-y1"),
                     box=((-0.5, 0.5),) * 3)
    return ModelDef("hopf", spec, {
        "kappa_constant": True, "kappa_claimed": 2.0, "bundle_type": True, "r_zero": True,
        "mcp": [2, 2, 3], "mcp_r": None,
    }, geodesic_length=0.5, sample_box=((-0.25, 0.25),) * 3)


def rotated_heisenberg(theta: float = 0.7) -> ModelDef:
    c, s = repr(math.cos(theta)), repr(math.sin(theta))
    v1 = (c, s, f"(-{c}*y + {s}*x)/2")
    v2 = (f"-{s}", c, f"({s}*y + {c}*x)/2")
    return ModelDef("rotated_heisenberg", _heisenberg_spec(v1, v2), {
        "kappa": 0.0, "bundle_type": True, "r_zero": True, "rotation": theta,
    })


def noninvariant_perturbation(eps: float = 0.25) -> ModelDef:
    k = repr(eps)
    v2 = (0.0, f"1 + {k}*sin(z)", f"(1 + {k}*sin(z))*x/2")
    spec = _heisenberg_spec(("1", "0", "-y/2"), tuple(map(str, v2)))
    return ModelDef("noninvariant_perturbation", spec, {"bundle_type": False})


def warped_bundle() -> ModelDef:
    """``v1 = d/dx``, ``v2 = (d/dy + Phi d/dz) / G`` with ``G = 1 + x^2/2``, ``Phi = x + x^3/6``.

    Invariant under translations in ``z`` (and ``y``); the quotient metric is
    ``dx^2 + G^2 dy^2`` with Gauss curvature ``-G''/G = -1/(1 + x^2/2)``.
    """
    G = "(1 + x^2/2)"
    spec = _heisenberg_spec(("1", "0", "0"), ("0", f"1/{G}", f"(x + x^3/6)/{G}"))
    return ModelDef("warped_bundle", spec, {"bundle_type": True, "r_zero": True})


BUILTIN = {
    "heisenberg": heisenberg,
    "hopf": hopf,
    "rotated_heisenberg": rotated_heisenberg,
    "noninvariant_perturbation": noninvariant_perturbation,
    "warped_bundle": warped_bundle,
}
SYNTHETIC = ("rotated_heisenberg", "noninvariant_perturbation", "warped_bundle")


def synthetic(name: str) -> ModelDef:
    if name not in SYNTHETIC:
        raise ConfigError(f"unknown synthetic model {name!r}; choose from {', '.join(SYNTHETIC)}")
    return BUILTIN[name]()


def builtin(name: str) -> ModelDef:
    if name not in BUILTIN:
        raise ConfigError(f"unknown builtin model {name!r}; choose from {', '.join(BUILTIN)}")
    return BUILTIN[name]()


def covector_from_frame(cs: ContactStructure, q, h) -> np.ndarray:
    """Covector ``p`` at base points ``q`` with ``p(v_i) = h_i`` for ``i = 0, 1, 2``."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    h = np.atleast_2d(np.asarray(h, dtype=float))
    pt = Point(q)
    alpha = [np.stack([c(pt) for c in form], axis=-1) for form in cs.alpha]
    return sum(h[:, i:i + 1] * alpha[i] for i in range(3))


def sample_phase_points(model: ModelDef, n: int, seed: int = 0, cs: ContactStructure | None = None,
                        length: float | None = None, h0_max: float | None = None) -> np.ndarray:
    """Reproducible phase points: Halton base points, random horizontal direction and ``h0``.

    The covector has ``sqrt(2H) = length`` (the geodesic length over unit time)
    and ``h0`` uniform in ``[-h0_max, h0_max]``.
    """
    cs = cs or model.structure()
    spec = model.spec
    box = model.sample_box or spec.box
    q = FrameSpec(spec.coords, spec.v1, spec.v2, box=box).sample_points(n, seed)
    rng = np.random.default_rng(seed)
    L = model.geodesic_length if length is None else length
    hm = model.h0_max if h0_max is None else h0_max
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    h = np.stack([rng.uniform(-hm, hm, n), L * np.cos(theta), L * np.sin(theta)], axis=1)
    p = covector_from_frame(cs, q, h)
    return np.concatenate([q, p], axis=1)


def lifted(model: ModelDef, max_order: int = 8) -> LiftedFields:
    return LiftedFields(model.structure(max_order))
