"""Matrix Riccati comparison: closed forms, numerical solves and density evolution.

Times are normalized to a unit-time geodesic. With ``s = 1 - t`` the comparison
model of curvature ``r`` and energy ``H`` depends on ``w = 2 r H s^2`` only
through the Stumpff functions ``c_k(w) = sum_j (-w)^j / (2j + k)!``, which are
entire in ``w``. That single expression covers ``r > 0``, ``r < 0`` and
``r = 0`` without case splits or cancellation near ``r = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from .errors import ConjugatePointError, DomainError, IntegrationError

C1 = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
C2 = np.diag([1.0, 0.0, 1.0])
FIRST_CONJUGATE = 2.0 * np.pi  # first positive zero of 2 - 2 cos x - x sin x

_SERIES_TERMS = 24
_SERIES_RADIUS = 4.0


def stumpff(k: int, w):
    """``c_k(w)`` for ``k = 0..4``, elementwise."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) <= _SERIES_RADIUS
    out = np.empty_like(w)
    ws = w[small]
    acc = np.zeros_like(ws)
    for j in reversed(range(_SERIES_TERMS)):
        acc = acc * (-ws) + 1.0 / factorial(2 * j + k)
    out[small] = acc
    wl = w[~small]
    if wl.size:
        out[~small] = _stumpff_closed(k, wl)
    return out


def _stumpff_closed(k: int, w: np.ndarray) -> np.ndarray:
    pos = w > 0
    x = np.sqrt(np.abs(w))
    c0 = np.where(pos, np.cos(x), np.cosh(x))
    c1 = np.where(pos, np.sin(x), np.sinh(x)) / x
    if k == 0:
        return c0
    if k == 1:
        return c1
    c2 = (1.0 - c0) / w
    if k == 2:
        return c2
    c3 = (1.0 - c1) / w
    if k == 3:
        return c3
    if k == 4:
        return (0.5 - c2) / w
    raise ValueError("stumpff functions implemented for k <= 4")


def _regular(g: np.ndarray, w: np.ndarray, t):
    if np.any(g <= 0):
        raise ConjugatePointError("comparison model reaches a conjugate time in [0, 1)",
                                  time=float(np.min(np.asarray(t)[g <= 0])) if np.ndim(t) else float(t))


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t >= 1.0) or np.any(t < 0.0):
        raise DomainError("comparison matrix defined for t in [0, 1)")
    return t


def comparison_S(r: float, H: float, t) -> np.ndarray:
    """Closed-form comparison solution ``S~_t``; shape ``t.shape + (3, 3)``."""
    t = _check_t(t)
    s = 1.0 - t
    w = 2.0 * r * H * s * s
    g = stumpff(3, w) - 2.0 * stumpff(4, w)
    _regular(g, w, t)
    c1, c2, c3 = stumpff(1, w), stumpff(2, w), stumpff(3, w)
    S = np.zeros(t.shape + (3, 3))
    S[..., 0, 0] = (c2 - c3) / (s * g)
    S[..., 0, 1] = S[..., 1, 0] = c2 / (s * s * g)
    S[..., 1, 1] = c1 / (s ** 3 * g)
    S[..., 2, 2] = 1.0 / s
    return S


def comparison_S_inv(r: float, H: float, t) -> np.ndarray:
    """``(S~_t)^{-1}``, regular up to and including ``t = 1``."""
    t = np.asarray(t, dtype=float)
    s = 1.0 - t
    w = 2.0 * r * H * s * s
    c0, c1, c2, c3 = (stumpff(k, w) for k in range(4))
    if np.any(c0 == 0):
        raise ConjugatePointError("inverse comparison matrix has a pole")
    U = np.zeros(t.shape + (3, 3))
    U[..., 0, 0] = s * c1 / c0
    U[..., 0, 1] = U[..., 1, 0] = -s * s * c2 / c0
    U[..., 1, 1] = s ** 3 * (c1 * c2 / c0 - c3)
    U[..., 2, 2] = s
    return U


def generator(r: float, H: float) -> np.ndarray:
    """The 6x6 matrix ``[[C1, -C2], [R~, -C1^T]]`` of the linearized comparison system."""
    A = np.zeros((6, 6))
    A[:3, :3] = C1
    A[:3, 3:] = -C2
    A[3, 0] = 2.0 * r * H
    A[3:, 3:] = -C1.T
    return A


def fundamental_solution(r: float, H: float, t: float) -> np.ndarray:
    """Closed form of ``exp((t - 1) A)`` for :func:`generator`."""
    s = 1.0 - float(t)
    z = 2.0 * r * H
    w = np.array(z * s * s)
    c0, c1, c2, c3 = (float(stumpff(k, w)) for k in range(4))
    q = np.eye(6)
    q[0, 0] = c0
    q[0, 3] = s * c1
    q[0, 4] = s * s * c2
    q[1, 0] = -s * c1
    q[1, 3] = -s * s * c2
    q[1, 4] = -s ** 3 * c3
    q[2, 5] = s
    q[3, 0] = -z * s * c1
    q[3, 3] = c0
    q[3, 4] = s * c1
    return q


def expm(A: np.ndarray, tol: float = 1e-17) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor sum."""
    A = np.asarray(A, dtype=float)
    norm = np.max(np.sum(np.abs(A), axis=1)) if A.size else 0.0
    k = max(0, int(np.ceil(np.log2(norm / 0.25))) if norm > 0.25 else 0)
    B = A / 2.0 ** k
    term = np.eye(len(A))
    out = term.copy()
    for n in range(1, 40):
        term = term @ B / n
        out = out + term
        if np.max(np.abs(term)) <= tol * np.max(np.abs(out)):
            break
    for _ in range(k):
        out = out @ out
    return out


# distortion ------------------------------------------------------------

def _g(w):
    return stumpff(3, w) - 2.0 * stumpff(4, w)


def distortion(r: float, d0, t) -> np.ndarray:
    """Distortion coefficient for curvature bound ``r`` and distance ``d0`` at time ``t``.

    With ``T0 = sqrt|r| d0`` and ``Tt = T0 / (1 - t)`` this is
    ``(1 - t) D(T0) / D(Tt)`` where ``D(x) = 2 - 2 cos x - x sin x`` for ``r > 0``,
    ``2 - 2 cosh x + x sinh x`` for ``r < 0``, and ``(1 - t)^5`` for ``r = 0``.
    """
    t, d0 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(d0, dtype=float))
    if np.any(t < 0) or np.any(t >= 1) or np.any(d0 < 0):
        raise DomainError("distortion needs t in [0, 1) and d0 >= 0")
    s = 1.0 - t
    W0 = r * d0 * d0
    Wt = W0 / (s * s)
    if r > 0 and np.any(np.sqrt(Wt) >= FIRST_CONJUGATE):
        raise DomainError("distortion argument beyond the first conjugate time")
    return s ** 5 * _g(W0) / _g(Wt)


# numerical Riccati -----------------------------------------------------

@dataclass(frozen=True)
class RiccatiCoeffs:
    """Diagonal curvature matrix ``R_t = diag(R11(t), R22(t), 0)`` as callables."""

    R11: Callable[[float], float]
    R22: Callable[[float], float]

    def R(self, t: float) -> np.ndarray:
        return np.diag([float(self.R11(t)), float(self.R22(t)), 0.0])

    @classmethod
    def constant(cls, r11: float, r22: float = 0.0) -> RiccatiCoeffs:
        return cls(lambda t: r11, lambda t: r22)

    @classmethod
    def comparison(cls, r: float, H: float) -> RiccatiCoeffs:
        return cls.constant(2.0 * r * H, 0.0)

    @classmethod
    def from_samples(cls, t: np.ndarray, R11: np.ndarray, R22: np.ndarray) -> RiccatiCoeffs:
        """Cubic-spline interpolation of sampled curvatures."""
        from scipy.interpolate import CubicSpline

        s11 = CubicSpline(t, R11)
        s22 = CubicSpline(t, R22)
        return cls(lambda x: float(s11(x)), lambda x: float(s22(x)))


def _u_rhs(U, R):
    return -U @ R @ U + C1 @ U + U @ C1.T - C2


def _s_rhs(S, R):
    return R - S @ C1 - C1.T @ S + S @ C2 @ S


def _rk4_step(f, y, t, h, coeffs):
    with np.errstate(over="ignore", invalid="ignore"):  # blow-up is reported by _check_finite
        return _rk4_raw(f, y, t, h, coeffs)


def _rk4_raw(f, y, t, h, coeffs):
    k1 = f(y, coeffs.R(t))
    Rm = coeffs.R(t + 0.5 * h)
    k2 = f(y + 0.5 * h * k1, Rm)
    k3 = f(y + 0.5 * h * k2, Rm)
    k4 = f(y + h * k3, coeffs.R(t + h))
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def seed_U(coeffs: RiccatiCoeffs, eps: float) -> np.ndarray:
    """Three-term Taylor value of ``U = S^{-1}`` at ``t = 1 - eps`` from ``U(1) = 0``."""
    R1 = coeffs.R(1.0)
    return (eps * C2 - 0.5 * eps ** 2 * (C1 @ C2 + C2 @ C1.T)
            + eps ** 3 / 3.0 * (C2 @ R1 @ C2 + C1 @ C1.T))


@dataclass(frozen=True)
class RiccatiTrajectory:
    t: np.ndarray  # ascending, (N,)
    S: np.ndarray  # (N, 3, 3)
    I: np.ndarray  # integral of S11 + S33 from 0
    eps: float
    step: float

    @property
    def rho(self) -> np.ndarray:
        return np.exp(self.I)

    def at(self, times) -> np.ndarray:
        """Indices of grid samples matching ``times``."""
        idx = np.rint(np.asarray(times) / self.step).astype(int)
        if np.any(np.abs(self.t[idx] - times) > 1e-12):
            raise ValueError("requested times are not on the Riccati grid")
        return idx


def _check_finite(M, t):
    if not np.all(np.isfinite(M)):
        raise ConjugatePointError(f"Riccati solution blew up near t = {t:.6g}", time=t)


def riccati_solve(coeffs: RiccatiCoeffs, step: float = 1e-3, eps: float = 1e-6,
                  t_switch: float = 0.8, cond_max: float = 1e12) -> RiccatiTrajectory:
    """Backward solve of the Riccati equation with ``S^{-1}(1) = 0``.

    ``U = S^{-1}`` is integrated from the Taylor seed at ``1 - eps`` down to
    ``t_switch``; below that ``S`` itself is integrated, which stays regular up
    to the first conjugate time where ``U`` would turn singular.
    """
    n = int(round(1.0 / step))
    if abs(n * step - 1.0) > 1e-12 or not 0 < eps < step:
        raise ValueError("step must divide 1 and exceed eps")
    t = np.arange(n) * step
    k_switch = int(round(t_switch / step))
    S = np.empty((n, 3, 3))
    U = seed_U(coeffs, eps)
    tc = 1.0 - eps
    for k in range(n - 1, k_switch - 1, -1):
        U = _rk4_step(_u_rhs, U, tc, t[k] - tc, coeffs)
        tc = t[k]
        _check_finite(U, tc)
        if np.linalg.cond(U) > cond_max:
            raise ConjugatePointError(f"S^-1 is singular near t = {tc:.6g}", time=tc)
        S[k] = np.linalg.inv(U)
    Sk = 0.5 * (S[k_switch] + S[k_switch].T)
    for k in range(k_switch - 1, -1, -1):
        Sk = _rk4_step(_s_rhs, Sk, t[k + 1], -step, coeffs)
        _check_finite(Sk, t[k])
        S[k] = Sk
    return RiccatiTrajectory(t, S, density_integral(t, S), eps, step)


def riccati_forward(coeffs: RiccatiCoeffs, S0: np.ndarray, T: float,
                    step: float = 1e-3) -> RiccatiTrajectory:
    """Forward solve of the ``S`` equation from ``S(0) = S0``."""
    n = max(1, int(round(T / step)))
    h = T / n
    t = np.arange(n + 1) * h
    S = np.empty((n + 1, 3, 3))
    S[0] = S0
    for k in range(n):
        S[k + 1] = _rk4_step(_s_rhs, S[k], t[k], h, coeffs)
        _check_finite(S[k + 1], t[k + 1])
    I = _simpson(S[:, 0, 0] + S[:, 2, 2], h)
    return RiccatiTrajectory(t, S, I, 0.0, h)


def _simpson(y: np.ndarray, h: float) -> np.ndarray:
    from scipy.integrate import cumulative_simpson

    if len(y) < 3:
        return np.concatenate([[0.0], np.cumsum(0.5 * h * (y[1:] + y[:-1]))])
    return cumulative_simpson(y, dx=h, initial=0.0)


def density_integral(t: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``int_0^t (S11 + S33) ds`` with the ``5 / (1 - s)`` pole subtracted analytically."""
    h = float(t[1] - t[0])
    g = S[:, 0, 0] + S[:, 2, 2] - 5.0 / (1.0 - t)
    return -5.0 * np.log1p(-t) + _simpson(g, h)


def liouville_density(coeffs: RiccatiCoeffs, times, step: float = 1e-3) -> np.ndarray:
    """``exp(int_0^t (S11 + S33))`` from the linear system ``[X; Y]`` with ``X(1) = 0``.

    Independent of the Riccati solve: ``d log det X / dt = -(S11 + S33)`` where
    ``S = Y X^{-1}``, so the density is ``det X(0) / det X(t)``.
    """
    n = int(round(1.0 / step))
    grid = np.arange(n + 1) * step
    Z = np.zeros((6, 3))
    Z[3:] = np.eye(3)

    def A(tt):
        M = np.zeros((6, 6))
        M[:3, :3] = C1
        M[:3, 3:] = -C2
        M[3:, :3] = coeffs.R(tt)
        M[3:, 3:] = -C1.T
        return M

    dets = np.empty(n + 1)
    dets[n] = 0.0
    for k in range(n, 0, -1):
        h = -step
        tk = grid[k]
        k1 = A(tk) @ Z
        Am = A(tk + 0.5 * h)
        k2 = Am @ (Z + 0.5 * h * k1)
        k3 = Am @ (Z + 0.5 * h * k2)
        k4 = A(tk + h) @ (Z + h * k3)
        Z = Z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        dets[k - 1] = np.linalg.det(Z[:3])
    idx = np.rint(np.asarray(times) / step).astype(int)
    if np.any(dets[idx] == 0):
        raise IntegrationError("density undefined at t = 1")
    return dets[0] / dets[idx]
