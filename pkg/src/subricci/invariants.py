"""Hamiltonian lifts and curvature invariants on the cotangent bundle.

Phase space carries canonical coordinates ``(q1, q2, q3, p1, p2, p3)`` with
symplectic form ``omega = sum dp_j ^ dq_j``, so that
``omega(X, Y) = X^p . Y^q - X^q . Y^p``. With this sign the Hamiltonian field of
``F`` is ``(dF/dp, -dF/dq)`` and the vertical lift of a base 1-form ``beta`` is
``-sum beta_j d/dp_j``; both satisfy ``i_X omega = -dF`` resp. ``-beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields
from typing import Sequence

import numpy as np

from . import fields as F
from .contact import PAIRS, ContactStructure, dot
from .errors import DomainError
from .fields import ScalarField, VectorFieldJ, as_point

PHASE_DIM = 6


def omega(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Symplectic pairing of phase-space vectors (leading axis of length 6)."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    return np.sum(X[3:] * Y[:3] - X[:3] * Y[3:], axis=0)


def hamiltonian_field(f: ScalarField) -> VectorFieldJ:
    return VectorFieldJ([F.partial(f, 3 + j) for j in range(3)]
                        + [-F.partial(f, j) for j in range(3)])


def vertical_lift(beta: Sequence[ScalarField]) -> VectorFieldJ:
    zero = F.constant(0.0, PHASE_DIM)
    return VectorFieldJ([zero, zero, zero] + [-b for b in beta])


def lift_base(f: ScalarField) -> ScalarField:
    return F.pullback(f, PHASE_DIM, 0)


class LiftedFields:
    """Phase-space fields attached to a contact structure.

    ``h[i]`` is ``p(v_i)`` with ``v_0`` the Reeb field; ``hh(i, j)`` the lift
    of ``[v_i, v_j]``; ``Hvec`` the Hamiltonian field of ``H``; ``alpha_vec[i]``
    vertical lifts of the coframe.
    """

    def __init__(self, cs: ContactStructure):
        self.cs = cs
        self.p = [F.coordinate(3 + j, PHASE_DIM) for j in range(3)]
        self.h = [dot(self.p, [lift_base(c) for c in X]) for X in cs.v]
        h0, h1, h2 = self.h
        self.H = 0.5 * (h1 * h1 + h2 * h2)
        self.a_lift = {key: lift_base(val) for key, val in cs.a.items()}
        self._hh = {}
        for i, j in PAIRS:
            self._hh[(i, j)] = F.total([self.a_lift[(i, j, k)] * self.h[k] for k in range(3)], PHASE_DIM)

        self.h_vec = [hamiltonian_field(hi) for hi in self.h]
        self.Hvec = hamiltonian_field(self.H)
        alpha = [[lift_base(c) for c in form] for form in cs.alpha]
        self.alpha_lift = alpha
        self.alpha_vec = [vertical_lift(form) for form in alpha]
        self.sigma_vec = self.alpha_vec[0]
        xi1 = [h1 * alpha[2][j] - h2 * alpha[1][j] for j in range(3)]
        xi2 = [h1 * alpha[1][j] + h2 * alpha[2][j] for j in range(3)]
        self.xi1_form, self.xi2_form = xi1, xi2
        self.xi1 = vertical_lift(xi1)
        self.xi2 = vertical_lift(xi2)
        zero = F.constant(0.0, PHASE_DIM)
        self.euler = VectorFieldJ([zero, zero, zero] + self.p)

        self.a = F.apply_vf(self.Hvec, h0)
        self.a_algebraic = h1 * self.hh(1, 0) + h2 * self.hh(2, 0)

        self._build_invariants()

    def hh(self, i: int, j: int) -> ScalarField:
        """Lift ``h_ij`` of the bracket ``[v_i, v_j]``; antisymmetric in ``(i, j)``."""
        if i == j:
            return F.constant(0.0, PHASE_DIM)
        if i < j:
            return self._hh[(i, j)]
        return -self._hh[(j, i)]

    def _build_invariants(self):
        h0, h1, h2 = self.h
        H, a = self.H, self.a
        Hv, X1 = self.Hvec, self.xi1
        ap = F.apply_vf
        h12 = self.hh(1, 2)

        self.xi1_a = ap(X1, a)
        self.H_a = ap(Hv, a)
        self.chi0 = h2 * self.hh(0, 1) - h1 * self.hh(0, 2) + self.xi1_a
        self.chi1 = h0 * a + 2.0 * ap(Hv, self.xi1_a) - ap(X1, self.H_a)
        self.xi1_h12 = ap(X1, h12)
        self.chi2 = h0 * h12 + 2.0 * ap(Hv, self.xi1_h12) - ap(X1, ap(Hv, h12))

        cs = self.cs
        _, v1, v2 = cs.v
        a12_1, a12_2 = cs.a[(1, 2, 1)], cs.a[(1, 2, 2)]
        self.kappa_base = (ap(v1, a12_2) - ap(v2, a12_1) - a12_1 * a12_1 - a12_2 * a12_2
                           - 0.5 * (cs.a[(0, 1, 2)] - cs.a[(0, 2, 1)]))
        self.kappa = lift_base(self.kappa_base)

        self.ric = h0 * h0 + 2.0 * H * self.kappa - 1.5 * self.xi1_a
        self.ric_alt = -self.chi0 - self.chi2
        H_xi1_H_a = ap(Hv, ap(X1, self.H_a))
        H2_xi1_a = ap(Hv, ap(Hv, self.xi1_a))
        xi1_H2_a = ap(X1, ap(Hv, self.H_a))
        self.r = self.ric * self.xi1_a - 3.0 * H_xi1_H_a + 3.0 * H2_xi1_a + xi1_H2_a

    def beta(self, X: np.ndarray, pt) -> np.ndarray:
        """``beta = h1 dh2 - h2 dh1`` applied to phase vectors ``X`` (shape ``(6, ...)``)."""
        pt = as_point(pt)
        j1 = self.h[1].jet(pt, 1)
        j2 = self.h[2].jet(pt, 1)
        dh1 = j1.gradient()
        dh2 = j2.gradient()
        return j1.value * np.sum(dh2 * X, axis=0) - j2.value * np.sum(dh1 * X, axis=0)

    def darboux_fields(self) -> dict[str, VectorFieldJ]:
        """Canonical frame at ``t = 0`` as phase-space vector fields."""
        h0, h1, h2 = self.h
        H = self.H
        s = 1.0 / F.sqrt(2.0 * H)
        hv = self.h_vec
        a, chi0, chi1 = self.a, self.chi0, self.chi1
        h12 = self.hh(1, 2)
        f1 = (hv[2].scaled(h1) - hv[1].scaled(h2) + self.alpha_vec[0].scaled(chi0)
              + self.xi1.scaled(self.xi1_h12) - self.xi2.scaled(h12))
        f2 = (hv[0].scaled(2.0 * H) - self.Hvec.scaled(h0) - self.alpha_vec[0].scaled(chi1)
              + self.xi1.scaled(self.xi1_a) - self.xi2.scaled(a))
        return {
            "e1": self.xi1.scaled(s),
            "e2": self.sigma_vec.scaled(s),
            "e3": self.euler.scaled(s),
            "f1": f1.scaled(s),
            "f2": f2.scaled(s),
            "f3": self.Hvec.scaled(-1.0 * s),
        }


@dataclass(frozen=True)
class InvariantRecord:
    h0: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    H: np.ndarray
    a: np.ndarray
    chi0: np.ndarray
    chi1: np.ndarray
    chi2: np.ndarray
    kappa: np.ndarray
    ric: np.ndarray
    r: np.ndarray
    ric_alt: np.ndarray
    a_algebraic: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}


def phase_points(q, p) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return np.concatenate(np.broadcast_arrays(q, p), axis=-1)


def check_energy(lf: LiftedFields, pt) -> np.ndarray:
    H = lf.H(pt)
    if np.any(~(H > 0)):
        raise DomainError("H must be positive at the phase point (nonzero horizontal covector)")
    return H


def curvatures(lf: LiftedFields, pt) -> InvariantRecord:
    """All scalar invariants at phase points ``pt`` (shape ``(..., 6)``)."""
    pt = as_point(pt)
    check_energy(lf, pt)
    names = [f.name for f in dc_fields(InvariantRecord)]
    sources = {"h0": lf.h[0], "h1": lf.h[1], "h2": lf.h[2]}
    return InvariantRecord(**{n: sources.get(n, getattr(lf, n, None))(pt) for n in names})


def darboux0(lf: LiftedFields, pt) -> dict[str, np.ndarray]:
    """The six frame vectors at ``pt``, each of shape ``(6, *batch)``."""
    pt = as_point(pt)
    check_energy(lf, pt)
    return {k: X(pt) for k, X in lf.darboux_fields().items()}


def darboux_pairings(frame: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Deviations of the 15 independent pairings from the Darboux relations."""
    vecs = [frame[k] for k in ("e1", "e2", "e3", "f1", "f2", "f3")]
    names = ("e1", "e2", "e3", "f1", "f2", "f3")
    out = {}
    for i in range(6):
        for j in range(i + 1, 6):
            target = 0.0
            if i < 3 <= j and j - 3 == i:
                target = -1.0  # omega(e_i, f_i) = -omega(f_i, e_i)
            out[f"{names[i]},{names[j]}"] = omega(vecs[i], vecs[j]) - target
    return out
