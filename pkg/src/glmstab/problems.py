"""Test problems: rotating-cosine planar family, scalar cosine equation, tanh-forced
scalar ODE, and exact/reference solutions for them.

The rotating-cosine family is x' = A(t) x with

    A(t) = Q(t) B(t) Q(t)^T + omega_dot * J,
    B(t) = [[a1 cos t + b1, beta], [0, a2 cos t + b2]],
    Q(t) = rotation by angle omega(t) = omega_rate * t,  J = [[0,-1],[1,0]].

In the rotated frame y = Q^T x the system is upper triangular (y' = B y), which gives
closed-form solutions: the second component integrates directly and the first follows
by variation of constants with a composite Gauss-Legendre quadrature. The resonant
mode ties the rotation rate to a step size (omega_dot = 2*pi/h) so the rotation is
invisible on the grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, QuadratureUnderResolved

J = np.array([[0.0, -1.0], [1.0, 0.0]])

# Fixed-order Gauss-Legendre rule used inside each quadrature panel.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


@dataclass
class RotatingCosineParams:
    a1: float
    a2: float
    b1: float
    b2: float
    beta: float
    omega_rate: float = 1.0
    resonant_h: Optional[float] = None

    def __post_init__(self):
        if not (self.a1 > 0.0 and self.a2 > 0.0):
            warnings.warn(f"cosine amplitudes should be positive, got a1={self.a1}, a2={self.a2}")
        if not (self.b2 < self.b1 < 0.0):
            warnings.warn(f"offsets should satisfy b2 < b1 < 0, got b1={self.b1}, b2={self.b2}")

    @property
    def omega_dot(self) -> float:
        """Effective rotation rate; the resonant mode overrides omega_rate with 2*pi/h."""
        if self.resonant_h is not None:
            return 2.0 * math.pi / self.resonant_h
        return self.omega_rate


@dataclass
class ScalarCosineParams:
    D: float
    L: float
    omega: float = 1.0


@dataclass
class TanhForcedParams:
    a: float


@dataclass
class LinearProblem:
    """A linear nonautonomous system x' = A(t) x.

    coefficient maps a scalar time to a (d,d) array; coefficient_batch (optional fast
    path) maps a time vector (n,) to (n,d,d).
    """

    d: int
    coefficient: Callable[[float], np.ndarray]
    coefficient_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "linear"
    params: object = None

    def batch(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.coefficient_batch is not None:
            return self.coefficient_batch(ts)
        return np.stack([self.coefficient(t) for t in ts])


def rotation(angle):
    """Planar rotation matrix; vectorized over an angle array to (n,2,2)."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty(angle.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rotating_cosine_B(p: RotatingCosineParams, t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = p.a1 * np.cos(t) + p.b1
    out[..., 0, 1] = p.beta
    out[..., 1, 1] = p.a2 * np.cos(t) + p.b2
    return out


def rotating_cosine_A(p: RotatingCosineParams, t):
    """Coefficient matrix A(t); accepts scalar t or an array (vectorized)."""
    t = np.asarray(t, dtype=float)
    q = rotation(p.omega_dot * t)
    b = rotating_cosine_B(p, t)
    a = np.einsum("...ij,...jk,...lk->...il", q, b, q) + p.omega_dot * J
    return a


def rotating_cosine_problem(p: RotatingCosineParams) -> LinearProblem:
    return LinearProblem(
        d=2,
        coefficient=lambda t: rotating_cosine_A(p, float(t)),
        coefficient_batch=lambda ts: rotating_cosine_A(p, ts),
        name="rotating-cosine",
        params=p,
    )


def _panel_quadrature(f, lo, hi, panels):
    """Composite fixed-order Gauss-Legendre integral of a vectorized integrand.

    lo/hi may be arrays (broadcast against each other); f is evaluated on the full
    (targets, panels*nodes) grid at once. Returns an array shaped like lo/hi.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    edges = np.linspace(0.0, 1.0, panels + 1)
    width = (hi - lo)[..., np.newaxis] * (edges[1:] - edges[:-1])  # (..., panels)
    mid_lo = lo[..., np.newaxis] + (hi - lo)[..., np.newaxis] * edges[:-1]
    # nodes mapped into each panel: (..., panels, q)
    s = mid_lo[..., np.newaxis] + 0.5 * width[..., np.newaxis] * (_GL_NODES + 1.0)
    vals = f(s)
    return np.sum(vals * (0.5 * width[..., np.newaxis] * _GL_WEIGHTS), axis=(-2, -1))


def propagate_exact(p: RotatingCosineParams, t_from, x_from, dt, quad_points=8):
    """Exact flow of the rotating-cosine system from (t_from, x_from) over dt.

    Vectorized over leading axes of t_from/x_from (x_from[..., 2]). quad_points is
    the number of quadrature panels for the variation-of-constants integral; it only
    matters when the second rotated component is nonzero.
    """
    t_from = np.asarray(t_from, dtype=float)
    x_from = np.asarray(x_from, dtype=float)
    t_to = t_from + dt
    w = p.omega_dot
    y_from = np.einsum("...ji,...j->...i", rotation(w * t_from), x_from)  # Q^T x
    y1, y2 = y_from[..., 0], y_from[..., 1]

    sin_from, sin_to = np.sin(t_from), np.sin(t_to)
    m1 = p.a1 * (sin_to - sin_from) + p.b1 * (t_to - t_from)
    m2 = p.a2 * (sin_to - sin_from) + p.b2 * (t_to - t_from)
    y2_to = y2 * np.exp(m2)

    if np.any(y2 != 0.0) and p.beta != 0.0:
        def integrand(s):
            # exp(-m1(s)) * y2(s) up to the constant y2(t_from), broadcast over panels
            rel = (p.a2 - p.a1) * (np.sin(s) - sin_from[..., np.newaxis, np.newaxis]) + (
                p.b2 - p.b1
            ) * (s - t_from[..., np.newaxis, np.newaxis])
            return np.exp(rel)

        integral = _panel_quadrature(integrand, t_from, t_to, quad_points)
        y1_to = np.exp(m1) * (y1 + p.beta * y2 * integral)
    else:
        y1_to = np.exp(m1) * y1

    y_to = np.stack([y1_to, y2_to], axis=-1)
    return np.einsum("...ij,...j->...i", rotation(w * t_to), y_to)


def reference_solution(p: RotatingCosineParams, t, x0=(1.0, 0.0), t0=0.0, quad_points=64):
    """Reference solution x(t) of the rotating-cosine system.

    Uses the triangular closed form in the rotated frame; the variation-of-constants
    integral is checked by panel doubling and raises QuadratureUnderResolved if the
    doubled-panel result moves by more than 1e-10 relative.
    """
    x0 = np.asarray(x0, dtype=float)
    coarse = propagate_exact(p, t0, x0, t - t0, quad_points=quad_points)
    y2_0 = float(np.einsum("ji,j->i", rotation(p.omega_dot * t0), x0)[1])
    if y2_0 != 0.0 and p.beta != 0.0:
        fine = propagate_exact(p, t0, x0, t - t0, quad_points=2 * quad_points)
        scale = max(float(np.linalg.norm(fine)), 1.0)
        if float(np.linalg.norm(fine - coarse)) > 1e-10 * scale:
            raise QuadratureUnderResolved(
                f"panel doubling moved the result by "
                f"{float(np.linalg.norm(fine - coarse)) / scale:.3e} (rel) at t={t}"
            )
        return fine
    return coarse


def reference_batch(p: RotatingCosineParams, ts, x0=(1.0, 0.0), t0=0.0, quad_points=64):
    """Reference solution sampled at a vector of times; (n,2) output."""
    ts = np.asarray(ts, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    y2_0 = float(np.einsum("ji,j->i", rotation(p.omega_dot * t0), x0)[1])
    if y2_0 == 0.0 or p.beta == 0.0:
        return propagate_exact(p, np.full(ts.shape, t0), np.broadcast_to(x0, ts.shape + (2,)), ts - t0)
    return np.stack([reference_solution(p, t, x0=x0, t0=t0, quad_points=quad_points) for t in ts])


def scalar_cosine_lambda(p: ScalarCosineParams, t):
    t = np.asarray(t, dtype=float)
    return p.D * np.cos(p.omega * t) + p.L


def scalar_cosine_problem(p: ScalarCosineParams) -> LinearProblem:
    return LinearProblem(
        d=1,
        coefficient=lambda t: np.array([[float(scalar_cosine_lambda(p, t))]]),
        coefficient_batch=lambda ts: scalar_cosine_lambda(p, ts)[:, np.newaxis, np.newaxis],
        name="scalar-cosine",
        params=p,
    )


def scalar_cosine_reference(p: ScalarCosineParams, t, x0=1.0, t0=0.0):
    """Exact solution of x' = (D cos(omega t) + L) x."""
    if p.omega == 0.0:
        return x0 * np.exp((p.D + p.L) * (np.asarray(t) - t0))
    grow = (p.D / p.omega) * (np.sin(p.omega * np.asarray(t)) - math.sin(p.omega * t0))
    return x0 * np.exp(grow + p.L * (np.asarray(t) - t0))


def mean_xi(p: ScalarCosineParams, n, h):
    """Step-average of the scalar cosine coefficient over [n h, (n+1) h]."""
    if p.omega == 0.0:
        return p.L + p.D
    n = np.asarray(n, dtype=float)
    return p.L + p.D * (np.sin(p.omega * (n + 1.0) * h) - np.sin(p.omega * n * h)) / (p.omega * h)


def constant_problem(a) -> LinearProblem:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return LinearProblem(
        d=a.shape[0],
        coefficient=lambda t: a,
        coefficient_batch=lambda ts: np.broadcast_to(a, (len(ts),) + a.shape),
        name="constant",
        params=a,
    )


def tanh_rhs(p: TanhForcedParams, x, t):
    """Right-hand side of the tanh-forced scalar ODE x' = a x + tanh(t^2)."""
    return p.a * x + np.tanh(t * t)


def tanh_jac(p: TanhForcedParams, x, t):
    return np.array([[p.a]])


def tanh_reference(p: TanhForcedParams, t, x0=0.0, t0=0.0, quad_points=64):
    """Variation-of-constants solution of the tanh-forced equation."""
    def integrand(s):
        return np.exp(p.a * (t - s)) * np.tanh(s * s)

    forced = _panel_quadrature(integrand, np.asarray(t0, dtype=float), np.asarray(t, dtype=float), quad_points)
    return math.exp(p.a * (t - t0)) * x0 + float(forced)


ROTATING_KEYS = ("a1", "a2", "b1", "b2", "beta", "omega_rate", "resonant_h")


def rotating_config(cfg: dict):
    """Parse a problem config dict into (params, t0, x0).

    Recognized keys: a1, a2, b1, b2, beta (required), omega_rate, resonant_h, t0, x0.
    """
    missing = [k for k in ("a1", "a2", "b1", "b2", "beta") if k not in cfg]
    if missing:
        raise ConfigError(f"problem config missing keys: {missing}")
    unknown = [k for k in cfg if k not in ROTATING_KEYS + ("t0", "x0")]
    if unknown:
        raise ConfigError(f"problem config has unknown keys: {unknown}")
    kwargs = {}
    for k in ROTATING_KEYS:
        if k in cfg:
            v = cfg[k]
            kwargs[k] = None if (k == "resonant_h" and v is None) else float(v)
    try:
        params = RotatingCosineParams(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad problem parameter: {exc}") from exc
    t0 = float(cfg.get("t0", 0.0))
    x0 = np.asarray(cfg.get("x0", (1.0, 0.0)), dtype=float)
    if x0.shape != (2,):
        raise ConfigError(f"x0 must have two components, got shape {x0.shape}")
    return params, t0, x0
