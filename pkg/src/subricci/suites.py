"""The verification battery behind ``subricci verify``.

Each suite returns a :class:`SuiteResult` with named residuals, the tolerance
each is compared against, and an overall pass flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fields as F
from .contact import FrameSpec, bundle_type_check, verify_contact
from .expr import parse
from .fields import Point
from .flow import (FlowOptions, euler_pullback_residual, integrate_many, structural_residuals,
                   transport_frame)
from .invariants import curvatures, darboux0, darboux_pairings, hamiltonian_field
from .mcp import density_change, mcp_check_many
from .models import ModelDef, sample_phase_points
from .riccati import (RiccatiCoeffs, comparison_S, distortion, expm, fundamental_solution,
                      generator, riccati_solve)


@dataclass
class SuiteResult:
    name: str
    checks: dict[str, tuple[float, float]] = field(default_factory=dict)  # value, tolerance
    info: dict = field(default_factory=dict)

    def check(self, key: str, value, tol: float):
        self.checks[key] = (float(value), float(tol))

    @property
    def passed(self) -> bool:
        return all(np.isfinite(v) and v <= tol for v, tol in self.checks.values())

    def as_dict(self) -> dict:
        return {
            "pass": self.passed,
            "residuals": {k: {"value": v, "tol": tol, "pass": bool(np.isfinite(v) and v <= tol)}
                          for k, (v, tol) in self.checks.items()},
            **({"info": self.info} if self.info else {}),
        }


def _max(x) -> float:
    return float(np.max(np.abs(x)))


def _rel(x, y) -> float:
    return float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y))))


@dataclass
class Context:
    model: ModelDef
    lf: object
    seed: int = 0
    samples: int = 100
    step: float = 1e-3

    @property
    def cs(self):
        return self.lf.cs


def suite_contact(ctx: Context) -> SuiteResult:
    res = SuiteResult("contact")
    pts = ctx.model.spec.sample_points(ctx.samples, ctx.seed)
    rep = verify_contact(ctx.model.spec, pts, raise_on_fail=False)
    res.info["min_abs_det"] = rep.min_abs_det
    res.check("contact_det_deficit", 0.0 if rep.passed else 1.0, 0.0)
    cs = ctx.cs
    pt = Point(pts)
    res.check("sigma(v1), sigma(v2)", max(_max(cs.eval_pairing(cs.sigma, cs.v1, pt)),
                                          _max(cs.eval_pairing(cs.sigma, cs.v2, pt))), 1e-10)
    res.check("dsigma(v1,v2) - 1", _max(-cs.eval_pairing(cs.sigma, cs.bracket12, pt) - 1.0), 1e-10)
    res.check("sigma(e) - 1", _max(cs.eval_pairing(cs.sigma, cs.e, pt) - 1.0), 1e-10)
    de = max(_max(sum(cs.dsigma[i][j](pt) * cs.e[i](pt) * X[j](pt) for i in range(3) for j in range(3)))
             for X in (cs.v1, cs.v2))
    res.check("dsigma(e, v_i)", de, 1e-10)
    dual = max(_max(cs.eval_pairing(cs.alpha[i], cs.v[j], pt) - (i == j)) for i in range(3) for j in range(3))
    res.check("alpha_i(v_j) - delta_ij", dual, 1e-10)
    a = cs.a
    res.check("a01^0, a02^0", max(_max(a[(0, 1, 0)](pt)), _max(a[(0, 2, 0)](pt))), 1e-9)
    res.check("a12^0 + 1", _max(a[(1, 2, 0)](pt) + 1.0), 1e-9)
    res.check("a01^1 + a02^2", _max((a[(0, 1, 1)] + a[(0, 2, 2)])(pt)), 1e-9)
    bt = bundle_type_check(cs, pts)
    res.info["bundle_type"] = bt.bundle_type
    claim = ctx.model.claims.get("bundle_type")
    if claim is not None:
        res.check("bundle_type matches claim", 0.0 if bt.bundle_type == claim else 1.0, 0.0)
    return res


def suite_lift(ctx: Context) -> SuiteResult:
    res = SuiteResult("lift")
    lf = ctx.lf
    alpha = sample_phase_points(ctx.model, ctx.samples, ctx.seed, cs=ctx.cs)
    pt = Point(alpha)
    br = F.lie_bracket(lf.h_vec[1], lf.h_vec[2])
    target = hamiltonian_field(lf.hh(1, 2))
    res.check("[h1,h2] - h12 (vector fields)", _max(br(pt) - target(pt)), 1e-9)
    H = lf.H(pt)
    dH = lf.H.jet(pt, 1).gradient()
    xi1, xi2 = lf.xi1(pt), lf.xi2(pt)
    res.check("beta(xi2), dH(xi1)", max(_max(lf.beta(xi2, pt)), _max(np.sum(dH * xi1, axis=0))), 1e-10)
    res.check("beta(xi1) + 2H, dH(xi2) + 2H",
              max(_rel(lf.beta(xi1, pt), -2 * H), _rel(np.sum(dH * xi2, axis=0), -2 * H)), 1e-10)
    worst_a, worst_h, worst_aa = 0.0, 0.0, 0.0
    for i in range(3):
        dhi = lf.h[i].jet(pt, 1).gradient()
        for j in range(3):
            hj = lf.h_vec[j](pt)
            aj = lf.alpha_vec[j](pt)
            ai = np.stack([c(pt) for c in lf.alpha_lift[i]])
            worst_a = max(worst_a, _max(np.sum(ai * hj[:3], axis=0) - (i == j)))
            worst_h = max(worst_h, _max(-np.sum(dhi * aj, axis=0) - (i == j)))
            worst_aa = max(worst_aa, _max(np.sum(ai * aj[:3], axis=0)))
            dhij = np.sum(dhi * hj, axis=0) + lf.hh(i, j)(pt)
            worst_h = max(worst_h, _max(dhij))
    res.check("alpha_i(h_j) - delta_ij", worst_a, 1e-10)
    res.check("-dh_i(alpha_j) - delta_ij, dh_i(h_j) + h_ij", worst_h, 1e-9)
    res.check("alpha_i(alpha_j)", worst_aa, 1e-12)
    return res


def suite_invariants(ctx: Context) -> SuiteResult:
    res = SuiteResult("invariants")
    lf = ctx.lf
    alpha = sample_phase_points(ctx.model, ctx.samples, ctx.seed, cs=ctx.cs)
    rec = curvatures(lf, alpha)
    res.check("a operator vs algebraic", _max(rec.a - rec.a_algebraic), 1e-10)
    res.check("ric direct vs -chi0-chi2 (relative)", _rel(rec.ric, rec.ric_alt), 1e-8)
    res.info["kappa_mean"] = float(np.mean(rec.kappa))
    res.info["kappa_std"] = float(np.std(rec.kappa))
    claims = ctx.model.claims
    if "kappa" in claims:
        res.check("kappa - claimed", _max(rec.kappa - claims["kappa"]), 1e-10)
    if claims.get("kappa_constant"):
        res.check("kappa std", np.std(rec.kappa), 1e-8)
    if "kappa_claimed" in claims:
        res.info["kappa_claimed"] = claims["kappa_claimed"]
        res.info["kappa_discrepancy"] = float(np.mean(rec.kappa) - claims["kappa_claimed"])
    if claims.get("bundle_type"):
        cs = ctx.cs
        pt = Point(alpha)
        res.check("a (bundle type)", _max(rec.a), 1e-8)
        res.check("r (bundle type)", _max(rec.r), 1e-8)
        chi0 = 2.0 * rec.H * F.pullback(cs.a[(0, 1, 2)], 6)(pt)
        res.check("chi0 - 2H a01^2", _max(rec.chi0 - chi0), 1e-8)
        f2 = lf.darboux_fields()["f2"](pt)
        red = (lf.h_vec[0](pt) * 2.0 * rec.H - lf.Hvec(pt) * rec.h0) / np.sqrt(2.0 * rec.H)
        res.check("f2(0) bundle reduction", _max(f2 - red), 1e-8)
    frame = darboux0(lf, alpha)
    res.check("Darboux pairings at t=0", max(_max(v) for v in darboux_pairings(frame).values()), 1e-9)
    res.check("d pi(e_i(0))", max(_max(frame[k][:3]) for k in ("e1", "e2", "e3")), 1e-12)
    dh0 = lf.h[0].jet(Point(alpha), 1).gradient()
    res.check("dh0(e1(0))", _max(np.sum(dh0 * frame["e1"], axis=0)), 1e-10)
    return res


def suite_flow(ctx: Context, n_traj: int = 3) -> SuiteResult:
    res = SuiteResult("flow")
    lf = ctx.lf
    alphas = sample_phase_points(ctx.model, n_traj, ctx.seed + 1, cs=ctx.cs)
    trajs = integrate_many(lf, alphas, 1.0, FlowOptions(step=ctx.step))
    pair = euler = rdiff = strs = drift = h0drift = 0.0
    for tr in trajs:
        drift = max(drift, tr.energy_drift / max(1.0, abs(tr.H[0])))
        h0drift = max(h0drift, _max(tr.h0 - tr.h0[0]) / max(1.0, abs(tr.H[0])))
        tf = transport_frame(lf, tr)
        pair = max(pair, float(np.max(tf.pairing_residuals())))
        euler = max(euler, float(np.max(euler_pullback_residual(lf, tr))))
        sr = structural_residuals(lf, tf, tr)
        strs = max(strs, sr.max_residual)
        rdiff = max(rdiff, sr.R11_rel_diff)
    res.check("energy drift", drift, 1e-8)
    if ctx.model.claims.get("bundle_type"):
        res.check("h0 drift (bundle type)", h0drift, 1e-8)
    res.check("Darboux pairings along flow", pair, 1e-7)
    res.check("Euler pullback", euler, 1e-7)
    res.check("structural equations", strs, 1e-5)
    res.check("R11 route (i) vs (ii) (relative)", rdiff, 1e-5)
    return res


def suite_riccati(ctx: Context) -> SuiteResult:
    res = SuiteResult("riccati")
    grid = np.round(np.arange(91) / 100.0, 12)
    H = 0.5
    worst_S = worst_q = worst_I = 0.0
    for r in (-2.0, -1.0, 0.0, 1.0, 2.0):
        sol = riccati_solve(RiccatiCoeffs.comparison(r, H), step=ctx.step)
        idx = sol.at(grid)
        worst_S = max(worst_S, _max(sol.S[idx] - comparison_S(r, H, grid)))
        A = generator(r, H)
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            worst_q = max(worst_q, _max(fundamental_solution(r, H, t) - expm((t - 1.0) * A)))
        worst_I = max(worst_I, _max(sol.I[idx] + np.log(distortion(r, (1.0 - grid) * np.sqrt(2 * H), grid))))
        if r == 0.0:
            res.check("I_t + 5 log(1 - t), r = 0", _max(sol.I[idx] + 5.0 * np.log1p(-grid)), 1e-6)
    res.check("Riccati vs closed form on [0, 0.9]", worst_S, 1e-6)
    res.check("closed-form fundamental solution vs expm", worst_q, 1e-9)
    res.check("equality case: log(distortion * rho)", worst_I, 1e-6)
    return res


def suite_mcp(ctx: Context, n: int = 5) -> SuiteResult:
    res = SuiteResult("mcp")
    alphas = sample_phase_points(ctx.model, n, ctx.seed + 2, cs=ctx.cs)
    r = ctx.model.claims.get("mcp_r")
    reps = mcp_check_many(ctx.lf, alphas, r, step=ctx.step)
    done = [rp for rp in reps if rp.status != "skipped"]
    res.info["skipped"] = len(reps) - len(done)
    res.info["statuses"] = [rp.status for rp in reps]
    if done:
        res.check("max distortion * rho - 1", max(rp.max_St_distortion_product for rp in done) - 1.0, 1e-6)
        res.check("-min eig(S~ - S)", -min(rp.loewner_min_eig for rp in done), 1e-7)
        res.check("failed geodesics", sum(rp.status == "fail" for rp in done), 0)
    return res


def suite_density(ctx: Context, n: int = 5) -> SuiteResult:
    res = SuiteResult("density")
    spec = ctx.model.spec
    box = ctx.model.sample_box or spec.box
    mid = [0.5 * (lo + hi) for lo, hi in box]
    text = " + ".join(f"({c} - {m!r})^2" for c, m in zip(spec.coords, mid))
    f = parse(f"0.5*({text})", spec.coords)
    pts = FrameSpec(spec.coords, spec.v1, spec.v2, box=box).sample_points(n, ctx.seed + 3)
    worst = 0.0
    for t in (0.1, 0.3):
        rep = density_change(ctx.lf, f, pts, t, step=ctx.step)
        worst = max(worst, rep.max_rel_diff)
        res.check("det B0 - 1", _max(rep.det_B0 - 1.0), 1e-9)
    res.check("Jacobian vs Riccati density (relative)", worst, 1e-4)
    return res


SUITES = {
    "contact": suite_contact,
    "lift": suite_lift,
    "invariants": suite_invariants,
    "flow": suite_flow,
    "riccati": suite_riccati,
    "mcp": suite_mcp,
    "density": suite_density,
}


def run_all(ctx: Context, names=None) -> dict[str, SuiteResult]:
    return {name: SUITES[name](ctx) for name in (names or SUITES)}
