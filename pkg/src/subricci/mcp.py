"""Pointwise measure-contraction checks and density change along geodesics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConjugatePointError, DomainError
from .expr import Expr, eval_jet
from .fields import Point
from .flow import FlowOptions, integrate_many
from .invariants import LiftedFields, omega
from .riccati import (FIRST_CONJUGATE, RiccatiCoeffs, comparison_S, distortion,
                      riccati_forward, riccati_solve)

DEFAULT_T_GRID = np.round(np.arange(100) / 100.0, 12)  # 0, 0.01, ..., 0.99


@dataclass
class MCPReport:
    alpha: list[float]
    H: float
    h0: float
    r: float
    status: str  # "pass", "fail" or "skipped"
    hypothesis_margins: dict[str, float]
    max_St_distortion_product: float | None = None
    loewner_min_eig: float | None = None
    loewner_min_eig_scaled: float | None = None
    reason: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        d = {
            "alpha": self.alpha, "H": self.H, "h0": self.h0, "r": self.r, "status": self.status,
            "pass": self.status == "pass",
            "hypothesis_margins": self.hypothesis_margins,
            "max_St_distortion_product": self.max_St_distortion_product,
            "loewner_min_eig": self.loewner_min_eig,
            "loewner_min_eig_scaled": self.loewner_min_eig_scaled,
        }
        if self.reason:
            d["reason"] = self.reason
        return d


def _scaled_min_eig(D: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Min eigenvalue of ``D`` after the congruence that removes the ``t -> 1`` pole orders."""
    s = 1.0 - t
    lam = np.stack([s ** 0.5, s ** 1.5, s ** 0.5], axis=-1)
    scaled = D * lam[..., :, None] * lam[..., None, :]
    return np.linalg.eigvalsh(scaled)[..., 0]


def curvature_samples(lf: LiftedFields, alphas, step: float = 1e-3):
    """Unit-time trajectories and ``R11, R22`` sampled on their step grid."""
    trajs = integrate_many(lf, alphas, 1.0, FlowOptions(step=step, variational=False))
    out = []
    for tr in trajs:
        pt = Point(tr.states)
        out.append((tr, lf.ric(pt), lf.r(pt)))
    return out


def mcp_pointwise_check(lf: LiftedFields, alpha, r: float | None = None, *,
                        t_grid=DEFAULT_T_GRID, step: float = 1e-3, eps: float = 1e-6,
                        hyp_tol: float = 1e-8, product_tol: float = 1e-6,
                        loewner_tol: float = 1e-7, samples=None) -> MCPReport:
    """Compare the Riccati density along the unit-time geodesic from ``alpha`` with the model.

    ``r`` defaults to ``inf R11_t / (2H)`` over the trajectory. The check is
    skipped, not failed, when the curvature hypotheses do not hold along it.
    """
    alpha = np.asarray(alpha, dtype=float)
    tr, R11, R22 = samples if samples is not None else curvature_samples(lf, alpha[None], step)[0]
    H = float(tr.H[0])
    r_inf = float(np.min(R11) / (2.0 * H))
    r_used = r_inf if r is None else float(r)
    scale = max(1.0, float(np.max(np.abs(R11))))
    margins = {
        "R11_minus_2rH": float(np.min(R11 - 2.0 * r_used * H)),
        "R22": float(np.min(R22)),
        "r_inferred": r_inf,
    }
    rep = MCPReport(alpha=[float(x) for x in alpha], H=H, h0=float(tr.h0[0]), r=r_used,
                    status="skipped", hypothesis_margins=margins)
    if margins["R11_minus_2rH"] < -hyp_tol * scale or margins["R22"] < -hyp_tol * scale:
        rep.reason = "curvature hypotheses violated along the geodesic"
        return rep
    tau0 = np.sqrt(2.0 * abs(r_used) * H)
    if r_used > 0 and tau0 >= FIRST_CONJUGATE:
        rep.reason = "comparison model has a conjugate point before t = 1"
        return rep

    coeffs = RiccatiCoeffs.from_samples(tr.t, R11, R22)
    try:
        ric = riccati_solve(coeffs, step=step, eps=eps)
    except ConjugatePointError as exc:
        rep.reason = f"conjugate point along the geodesic: {exc}"
        rep.status = "fail"
        return rep
    t_grid = np.asarray(t_grid, dtype=float)
    idx = ric.at(t_grid)
    S = ric.S[idx]
    St = comparison_S(r_used, H, t_grid)
    dist = distortion(r_used, (1.0 - t_grid) * np.sqrt(2.0 * H), t_grid)
    product = dist * ric.rho[idx]
    D = St - S
    D = 0.5 * (D + np.swapaxes(D, -1, -2))
    min_eig = np.linalg.eigvalsh(D)[:, 0]
    rep.max_St_distortion_product = float(np.max(product))
    rep.loewner_min_eig = float(np.min(min_eig))
    rep.loewner_min_eig_scaled = float(np.min(_scaled_min_eig(D, t_grid)))
    rep.extra = {"t": t_grid, "product": product, "min_eig": min_eig}
    ok = rep.max_St_distortion_product <= 1.0 + product_tol and rep.loewner_min_eig >= -loewner_tol
    rep.status = "pass" if ok else "fail"
    if not ok:
        rep.reason = "distortion bound or Loewner comparison violated"
    return rep


def mcp_check_many(lf: LiftedFields, alphas, r: float | None = None, **kw) -> list[MCPReport]:
    step = kw.get("step", 1e-3)
    samples = curvature_samples(lf, alphas, step)
    return [mcp_pointwise_check(lf, a, r, samples=s, **kw) for a, s in zip(np.atleast_2d(alphas), samples)]


# density change ----------------------------------------------------------

@dataclass(frozen=True)
class DensityReport:
    t: float
    points: np.ndarray
    jacobian_route: np.ndarray
    riccati_route: np.ndarray
    det_B0: np.ndarray

    @property
    def max_rel_diff(self) -> float:
        return float(np.max(np.abs(self.riccati_route - self.jacobian_route) / np.abs(self.jacobian_route)))


def _covector_field(f: Expr, x: np.ndarray):
    """``alpha = -df_x`` and the Hessian of ``f``, for points ``x`` of shape ``(N, 3)``."""
    jet = eval_jet(f, x, 2, 3)
    return -jet.gradient().T, np.moveaxis(jet.hessian(), -1, 0)


def displacement(lf: LiftedFields, f: Expr, x: np.ndarray, t: float, step: float = 1e-3) -> np.ndarray:
    """``phi_t(x) = pi(e^{tH}(-df_x))`` for a batch of base points."""
    p, _ = _covector_field(f, x)
    alphas = np.concatenate([x, p], axis=1)
    trajs = integrate_many(lf, alphas, t, FlowOptions(step=step, variational=False), samples=1)
    return np.stack([tr.states[-1, :3] for tr in trajs])


def density_change(lf: LiftedFields, f: Expr, points, t: float, fd_step: float = 1e-3,
                   step: float = 1e-3) -> DensityReport:
    """Two independent routes to ``rho_t(phi_t(x))`` for the map ``phi_t``.

    (i) ``1 / (det D phi_t * eta(phi_t x) / eta(x))`` with a fourth-order
    finite-difference Jacobian; (ii) ``exp int_0^t (S11 + S33)`` with ``S`` evolved
    forward from ``S_0 = B_0^{-1} A_0``, the decomposition of the graph of
    ``-d^2 f`` in the canonical frame at ``t = 0``.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    N = len(x)
    if t == 0:
        ones = np.ones(N)
        return DensityReport(0.0, x, ones, ones, ones)

    # route (i)
    offsets = []
    for j in range(3):
        for c in (-2.0, -1.0, 1.0, 2.0):
            d = np.zeros(3)
            d[j] = c * fd_step
            offsets.append(d)
    offsets = np.array(offsets)
    stencil = (x[:, None, :] + offsets[None]).reshape(-1, 3)
    allpts = np.concatenate([x, stencil])
    phi = displacement(lf, f, allpts, t, step)
    centre, shifted = phi[:N], phi[N:].reshape(N, 3, 4, 3)
    w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * fd_step)
    jac = np.einsum("k,njki->nij", w, shifted)  # (N, 3 out, 3 in)
    eta = lf.cs.density
    det_j = np.abs(np.linalg.det(jac)) * eta(centre) / eta(x)
    route_i = 1.0 / det_j

    # route (ii)
    p, hess = _covector_field(f, x)
    alphas = np.concatenate([x, p], axis=1)
    pt = Point(alphas)
    if np.any(~(lf.H(pt) > 0)):
        raise DomainError("-df must be a horizontal covector with H > 0 at every sample")
    frame = {k: X(pt) for k, X in lf.darboux_fields().items()}
    E = [frame[k] for k in ("e1", "e2", "e3")]
    Fr = [frame[k] for k in ("f1", "f2", "f3")]
    A0 = np.empty((N, 3, 3))
    B0 = np.empty((N, 3, 3))
    for i in range(3):
        vs = Fr[i][:3]  # projection of f_i(0) to the base
        psi = np.concatenate([vs, -np.einsum("nab,bn->an", hess, vs)], axis=0)
        for j in range(3):
            A0[:, i, j] = omega(Fr[j], psi)
            B0[:, i, j] = omega(psi, E[j])
    S0 = np.linalg.solve(B0, A0)

    trajs = integrate_many(lf, alphas, t, FlowOptions(step=step, variational=False))
    route_ii = np.empty(N)
    for n, tr in enumerate(trajs):
        ptn = Point(tr.states)
        coeffs = RiccatiCoeffs.from_samples(tr.t, lf.ric(ptn), lf.r(ptn))
        Sn = 0.5 * (S0[n] + S0[n].T)
        ric = riccati_forward(coeffs, Sn, t, step=step)
        route_ii[n] = ric.rho[-1]
    return DensityReport(float(t), x, route_i, route_ii, np.linalg.det(B0))
