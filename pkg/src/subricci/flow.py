"""Hamiltonian geodesic flow, variational equations and frame transport."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntegrationError
from .fields import Point
from .invariants import LiftedFields, omega

DEFAULT_STEP = 1e-3


@dataclass(frozen=True)
class FlowOptions:
    method: str = "rk4"  # "rk4" (fixed step) or "dop853" (adaptive)
    step: float = DEFAULT_STEP
    rtol: float = 1e-9
    atol: float = 1e-12
    energy_tol: float = 1e-8
    variational: bool = True


@dataclass(frozen=True)
class Trajectory:
    """Samples of ``e^{tH}(alpha)``; ``phi`` holds the linearized flow when requested."""

    t: np.ndarray  # (N,)
    states: np.ndarray  # (N, 6)
    phi: np.ndarray | None  # (N, 6, 6)
    H: np.ndarray  # (N,)
    h0: np.ndarray  # (N,)
    method: str
    step: float
    energy_drift: float
    energy_ok: bool
    meta: dict = field(default_factory=dict)

    @property
    def alpha(self) -> np.ndarray:
        return self.states[0]

    def __len__(self) -> int:
        return len(self.t)


def _rhs(lf: LiftedFields, y: np.ndarray, variational: bool) -> np.ndarray:
    """Vector field of the augmented system at states ``y`` of shape ``(B, 6 [+ 36])``."""
    x = y[:, :6]
    jet = lf.H.jet(Point(x), 2 if variational else 1)
    g = jet.gradient()  # (6, B)
    dx = np.concatenate([g[3:], -g[:3]], axis=0).T
    if not variational:
        return dx
    hs = np.moveaxis(jet.hessian(), -1, 0)  # (B, 6, 6)
    M = np.empty_like(hs)
    M[:, :3, :3] = hs[:, 3:, :3]
    M[:, :3, 3:] = hs[:, 3:, 3:]
    M[:, 3:, :3] = -hs[:, :3, :3]
    M[:, 3:, 3:] = -hs[:, :3, 3:]
    phi = y[:, 6:].reshape(-1, 6, 6)
    dphi = M @ phi
    return np.concatenate([dx, dphi.reshape(len(y), 36)], axis=1)


def _grid(T: float, step: float, samples: int | None) -> tuple[np.ndarray, int]:
    """Sample times and RK4 substeps per sample interval."""
    if T == 0:
        return np.zeros(1), 0
    if samples is None:
        n = max(1, int(np.ceil(abs(T) / step - 1e-9)))
        return np.linspace(0.0, T, n + 1), 1
    sub = max(1, int(np.ceil(abs(T) / samples / step - 1e-9)))
    return np.linspace(0.0, T, samples + 1), sub


def integrate_many(lf: LiftedFields, alphas, T: float, options: FlowOptions = FlowOptions(),
                   samples: int | None = None) -> list[Trajectory]:
    """Integrate several initial covectors at once; see :func:`integrate_flow`."""
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    if not np.isfinite(T):
        raise DomainError("integration time must be finite")
    H0 = lf.H(Point(alphas))
    if np.any(~(H0 > 0)):
        raise DomainError("H must be positive at the initial covector")
    B = len(alphas)
    var = options.variational
    y0 = alphas if not var else np.concatenate([alphas, np.tile(np.eye(6).ravel(), (B, 1))], axis=1)
    t, sub = _grid(T, options.step, samples)

    if options.method == "rk4" or len(t) == 1:
        ys = _rk4(lf, y0, t, sub, var)
        step = float(t[1] - t[0]) / sub if len(t) > 1 else 0.0
    elif options.method == "dop853":
        ys = _adaptive(lf, y0, t, options, var)
        step = float("nan")
    else:
        raise ValueError(f"unknown integration method {options.method!r}")

    out = []
    for b in range(B):
        states = ys[:, b, :6]
        pt = Point(states)
        H = lf.H(pt)
        h0 = lf.h[0](pt)
        drift = float(np.max(np.abs(H - H[0])))
        out.append(Trajectory(
            t=t, states=states, phi=ys[:, b, 6:].reshape(-1, 6, 6) if var else None,
            H=H, h0=h0, method=options.method if len(t) > 1 else "none", step=step,
            energy_drift=drift, energy_ok=drift <= options.energy_tol * max(1.0, abs(H[0])),
        ))
    return out


def integrate_flow(lf: LiftedFields, alpha, T: float, options: FlowOptions = FlowOptions(),
                   samples: int | None = None) -> Trajectory:
    """Solve ``q' = dH/dp, p' = -dH/dq`` from ``alpha`` over ``[0, T]``.

    Without ``samples`` every integrator step is returned; otherwise the
    ``samples + 1`` equally spaced times, with the step shrunk so each lands
    on the grid.
    """
    return integrate_many(lf, np.asarray(alpha, dtype=float)[None], T, options, samples)[0]


def _rk4(lf, y0, t, sub, var):
    ys = np.empty((len(t),) + y0.shape)
    ys[0] = y0
    y = y0
    for k in range(1, len(t)):
        h = (t[k] - t[k - 1]) / sub
        for _ in range(sub):
            k1 = _rhs(lf, y, var)
            k2 = _rhs(lf, y + 0.5 * h * k1, var)
            k3 = _rhs(lf, y + 0.5 * h * k2, var)
            k4 = _rhs(lf, y + h * k3, var)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at t = {t[k]:.6g}")
        ys[k] = y
    return ys


def _adaptive(lf, y0, t, options, var):
    from scipy.integrate import solve_ivp

    shape = y0.shape

    def f(_, yflat):
        return _rhs(lf, yflat.reshape(shape), var).ravel()

    sol = solve_ivp(f, (t[0], t[-1]), y0.ravel(), method="DOP853", t_eval=t,
                    rtol=options.rtol, atol=options.atol)
    if not sol.success:
        raise IntegrationError(f"adaptive integration failed: {sol.message}")
    return sol.y.T.reshape((len(t),) + shape)


# transport -------------------------------------------------------------

FRAME_NAMES = ("e1", "e2", "e3", "f1", "f2", "f3")


@dataclass(frozen=True)
class TransportedFrame:
    t: np.ndarray
    vectors: dict[str, np.ndarray]  # name -> (N, 6), all living at alpha

    def pairing_residuals(self) -> np.ndarray:
        """Max deviation from the Darboux relations at each sample, shape ``(N,)``."""
        v = [self.vectors[n].T for n in FRAME_NAMES]
        worst = np.zeros(len(self.t))
        for i in range(6):
            for j in range(i + 1, 6):
                target = -1.0 if j == i + 3 else 0.0
                worst = np.maximum(worst, np.abs(omega(v[i], v[j]) - target))
        return worst


def pullback(traj: Trajectory, X: np.ndarray) -> np.ndarray:
    """``d e^{-tH}`` applied to vectors ``X`` (shape ``(N, 6)``) sitting at ``alpha_t``."""
    if traj.phi is None:
        raise IntegrationError("trajectory was integrated without variational equations")
    return np.linalg.solve(traj.phi, X[..., None])[..., 0]


def transport_frame(lf: LiftedFields, traj: Trajectory) -> TransportedFrame:
    """Pull the canonical frame at ``alpha_t`` back to ``alpha`` for every sample."""
    pt = Point(traj.states)
    fields = lf.darboux_fields()
    vecs = {name: pullback(traj, fields[name](pt).T) for name in FRAME_NAMES}
    return TransportedFrame(traj.t, vecs)


def euler_pullback_residual(lf: LiftedFields, traj: Trajectory) -> np.ndarray:
    """``|pullback of E at alpha_t - (E - t H)(alpha)|`` at each sample."""
    pt = Point(traj.states)
    E_t = lf.euler(pt).T
    pulled = pullback(traj, E_t)
    a = Point(traj.states[:1])
    E0 = lf.euler(a)[:, 0]
    H0 = lf.Hvec(a)[:, 0]
    expected = E0[None] - traj.t[:, None] * H0[None]
    return np.max(np.abs(pulled - expected), axis=1)


# finite differences --------------------------------------------------------

_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FORWARD = np.array([
    [-25.0, 48.0, -36.0, 16.0, -3.0],
    [-3.0, -10.0, 18.0, -6.0, 1.0],
]) / 12.0


def time_derivative(y: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order finite-difference derivative along axis 0 of a uniform sample."""
    n = len(y)
    if n < 5:
        raise IntegrationError("need at least 5 samples for fourth-order differences")
    d = np.empty_like(y)
    d[2:-2] = sum(c * y[k:n - 4 + k] for k, c in enumerate(_CENTRAL))
    for i, w in enumerate(_FORWARD):
        d[i] = np.tensordot(w, y[:5], axes=1)
        d[n - 1 - i] = -np.tensordot(w, y[::-1][:5], axes=1)
    return d / dt


@dataclass(frozen=True)
class StructuralReport:
    residuals: dict[str, float]
    R11_route_i: np.ndarray
    R11_route_ii: np.ndarray
    R22_route_i: np.ndarray
    R22_route_ii: np.ndarray
    R11_rel_diff: float
    R22_abs_diff: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def structural_residuals(lf: LiftedFields, tf: TransportedFrame, traj: Trajectory,
                         trim: int = 0) -> StructuralReport:
    """Residuals of the structural equations of the transported frame.

    ``R11_t``, ``R22_t`` come (i) from the invariant formulas at ``alpha_t`` and
    (ii) from the frame itself as ``-omega(f_i, f_i')``. ``trim`` drops that many
    samples at each end from the reported maxima.
    """
    t = tf.t
    dt = float(t[1] - t[0])
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise IntegrationError("structural residuals need a uniform time grid")
    v = tf.vectors
    d = {n: time_derivative(v[n], dt) for n in FRAME_NAMES}
    pt = Point(traj.states)
    R11 = lf.ric(pt)
    R22 = lf.r(pt)
    R11_ii = -omega(v["f1"].T, d["f1"].T)
    R22_ii = -omega(v["f2"].T, d["f2"].T)
    sl = slice(trim, len(t) - trim if trim else None)

    def norm(x):
        return float(np.max(np.abs(x[sl])))

    res = {
        "e1_dot - f1": norm(d["e1"] - v["f1"]),
        "e2_dot - e1": norm(d["e2"] - v["e1"]),
        "e3_dot - f3": norm(d["e3"] - v["f3"]),
        "f1_dot + R11 e1 + f2": norm(d["f1"] + R11[:, None] * v["e1"] + v["f2"]),
        "f2_dot + R22 e2": norm(d["f2"] + R22[:, None] * v["e2"]),
        "f3_dot": norm(d["f3"]),
    }
    scale = np.maximum(1.0, np.abs(R11))
    return StructuralReport(
        residuals=res, R11_route_i=R11, R11_route_ii=R11_ii, R22_route_i=R22, R22_route_ii=R22_ii,
        R11_rel_diff=float(np.max((np.abs(R11 - R11_ii) / scale)[sl])),
        R22_abs_diff=float(np.max(np.abs(R22 - R22_ii)[sl])),
    )
