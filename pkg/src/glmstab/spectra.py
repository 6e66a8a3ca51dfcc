"""Discrete QR trails and Lyapunov / Sacker-Sell spectral diagnostics.

A matrix trail propagates an orthonormal frame Q_n through transition matrices,
Phi Q_n = Q_{n+1} R_n with positive R diagonals, accumulating ln(R_n)_ii per mode.
A vector trail is the one-mode specialization driven by the w-sequence norms. All
exponent estimators consume the accumulated log-increments; windows are expressed
in step counts (N0 burn-in, N window length).

QrTrail is single-owner mutable state: advance functions mutate in place and return
the trail for chaining.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import linalg
from .errors import OrthogonalityLost, WindowOutOfRange, ZeroVector
from .problems import LinearProblem


@dataclass
class QrTrail:
    h: float
    t0: float
    mode: str                      # "matrix" or "vector"
    frame: Optional[np.ndarray]    # (d, m) orthonormal, matrix mode only
    _logs: List[np.ndarray] = field(default_factory=list)
    _prev_norm: float = 1.0        # vector mode bookkeeping

    @property
    def n_steps(self) -> int:
        # entries are single rows (ndim 1) or bulk chunks (ndim 2)
        return sum(a.shape[0] if a.ndim == 2 else 1 for a in self._logs)

    @property
    def n_modes(self) -> int:
        if self.mode == "matrix":
            return self.frame.shape[1]
        return 1

    def logs(self) -> np.ndarray:
        """Accumulated per-step log increments, shape (n_steps, n_modes)."""
        if not self._logs:
            return np.empty((0, self.n_modes))
        return np.vstack(self._logs)

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps + 1)


def new_matrix_trail(dim: int, h: float, t0: float = 0.0,
                     frame: Optional[np.ndarray] = None) -> QrTrail:
    if frame is None:
        frame = np.eye(dim)
    frame = np.asarray(frame, dtype=float)
    return QrTrail(h=h, t0=t0, mode="matrix", frame=frame.copy())


def new_vector_trail(w0, h: float, t0: float = 0.0) -> QrTrail:
    norm = float(np.linalg.norm(np.asarray(w0, dtype=float)))
    if norm == 0.0:
        raise ZeroVector("vector trail started from the zero vector")
    return QrTrail(h=h, t0=t0, mode="vector", frame=None, _prev_norm=norm)


def qr_advance(trail: QrTrail, phi: np.ndarray) -> QrTrail:
    """One matrix-trail step: re-orthonormalize phi @ frame, log the R diagonal."""
    fac = linalg.qr_positive(phi @ trail.frame)
    trail.frame = fac.q
    trail._logs.append(np.log(np.diag(fac.r)))
    return trail


def qr_advance_series(trail: QrTrail, phis: np.ndarray) -> QrTrail:
    for phi in phis:
        qr_advance(trail, phi)
    return trail


def qr_advance_vector(trail: QrTrail, w_next) -> QrTrail:
    """One vector-trail step: log the norm ratio of consecutive w values."""
    norm = float(np.linalg.norm(np.asarray(w_next, dtype=float)))
    if norm == 0.0:
        raise ZeroVector(f"w vanished at trail step {trail.n_steps}")
    trail._logs.append(np.array([math.log(norm) - math.log(trail._prev_norm)]))
    trail._prev_norm = norm
    return trail


def vector_trail_from_values(values: np.ndarray, h: float, t0: float = 0.0) -> QrTrail:
    """Vector trail over a whole w-sequence at once (values shaped (n_states, d))."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    norms = np.linalg.norm(values, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector(f"w vanished at index {int(np.argmin(norms > 0.0))}")
    trail = new_vector_trail(values[0], h, t0)
    logn = np.log(norms)
    # one chunk keeps logs() cheap on long trails
    trail._logs = [np.diff(logn)[:, np.newaxis]] if len(logn) > 1 else []
    trail._prev_norm = float(norms[-1])
    return trail


def _cumlogs(trail_or_logs) -> np.ndarray:
    logs = trail_or_logs.logs() if isinstance(trail_or_logs, QrTrail) else np.atleast_2d(
        np.asarray(trail_or_logs, dtype=float))
    cs = np.zeros((logs.shape[0] + 1, logs.shape[1]))
    np.cumsum(logs, axis=0, out=cs[1:])
    return cs


@dataclass
class LyapunovEstimate:
    mu: np.ndarray           # per mode
    argmax_t: np.ndarray     # time where the running max is attained, per mode
    n0: int
    n: int
    denominator: str
    sum_start: str
    h: float
    t0: float


def mu_appr(trail: QrTrail, n0: int, n: int, denominator: str = "t0",
            sum_start: str = "origin") -> LyapunovEstimate:
    """Windowed upper Lyapunov-exponent estimate.

    Scans positions m = n0+1 .. n0+n and maximizes S(m) / (t_m - t_ref) per mode,
    where S(m) sums the log increments from the origin (sum_start="origin", default)
    or from the window start n0 (sum_start="window"), and t_ref is t0
    (denominator="t0", default) or t_{n0} (denominator="N0").
    """
    if n0 < 0 or n < 1:
        raise WindowOutOfRange(f"need n0 >= 0 and n >= 1, got n0={n0}, n={n}")
    if trail.n_steps < n0 + n:
        raise WindowOutOfRange(
            f"window needs {n0 + n} steps, trail has {trail.n_steps}")
    if denominator not in ("t0", "N0"):
        raise WindowOutOfRange(f"unknown denominator mode {denominator!r}")
    if sum_start not in ("origin", "window"):
        raise WindowOutOfRange(f"unknown sum_start mode {sum_start!r}")
    cs = _cumlogs(trail)
    js = 0 if sum_start == "origin" else n0
    t_ref = trail.t0 if denominator == "t0" else trail.t0 + n0 * trail.h
    positions = np.arange(n0 + 1, n0 + n + 1)
    ts = trail.t0 + positions * trail.h
    sums = cs[positions] - cs[js]
    ratios = sums / (ts - t_ref)[:, np.newaxis]
    best = np.argmax(ratios, axis=0)
    mu = ratios[best, np.arange(ratios.shape[1])]
    return LyapunovEstimate(
        mu=mu, argmax_t=ts[best], n0=n0, n=n, denominator=denominator,
        sum_start=sum_start, h=trail.h, t0=trail.t0,
    )


@dataclass
class LyapunovEndpoints:
    eta: np.ndarray
    mu: np.ndarray
    burn_in: int


def lyapunov_endpoints(trail: QrTrail, burn_in: Optional[int] = None) -> LyapunovEndpoints:
    """Min/max of origin-anchored running averages over the tail after burn-in."""
    n = trail.n_steps
    if burn_in is None:
        burn_in = n // 2
    if burn_in >= n:
        raise WindowOutOfRange(f"burn_in {burn_in} leaves no tail in {n} steps")
    cs = _cumlogs(trail)
    positions = np.arange(burn_in + 1, n + 1)
    ratios = cs[positions] / (positions * trail.h)[:, np.newaxis]
    return LyapunovEndpoints(eta=np.min(ratios, axis=0), mu=np.max(ratios, axis=0),
                             burn_in=burn_in)


@dataclass
class SackerSellEstimate:
    alpha: np.ndarray
    beta: np.ndarray
    H: float
    m_steps: int


def sacker_sell_window(trail: QrTrail, H: float) -> SackerSellEstimate:
    """Windowed spectral-interval endpoints: extreme H-window averages per mode.

    Needs H >= 2h and a trail at least 3 windows long.
    """
    m = int(round(H / trail.h))
    if m < 2:
        raise WindowOutOfRange(f"window H={H} shorter than 2 steps at h={trail.h}")
    n = trail.n_steps
    if n < 3 * m:
        raise WindowOutOfRange(f"trail of {n} steps shorter than 3 windows ({3 * m})")
    cs = _cumlogs(trail)
    span = m * trail.h
    avgs = (cs[m:] - cs[:-m]) / span
    return SackerSellEstimate(alpha=np.min(avgs, axis=0), beta=np.max(avgs, axis=0),
                              H=H, m_steps=m)


@dataclass
class IntegralSeparationReport:
    pair: tuple
    kind: str                # "separated" | "bounded-average" | "inconclusive"
    a: float = math.nan      # fitted separation rate (separated)
    b: float = math.nan      # fitted offset (separated)
    eps: float = math.nan    # fitted drift bound (bounded-average)
    M: float = math.nan      # fitted oscillation bound (bounded-average)
    min_window_avg: float = math.nan
    max_abs_window_avg: float = math.nan
    a0: float = math.nan
    T0: float = math.nan


def integral_separation_check(trail_or_logs, i: int, j: int, a0: float = 0.05,
                              T0: float = 1.0) -> IntegralSeparationReport:
    """Classify the mode pair (i, j) by the behavior of its log-increment gap.

    Separated: every window of length >= T0 has average gap >= a0; reports the
    fitted pair (a, b) with a the worst long-window average and b the largest defect
    of the integral bound over all windows. Bounded-average: long-window averages
    stay within a0 of zero in modulus; reports (eps, M). Otherwise inconclusive.
    O(n^2) in the trail length.
    """
    if isinstance(trail_or_logs, QrTrail):
        h = trail_or_logs.h
        logs = trail_or_logs.logs()
    else:
        raise TypeError("pass a QrTrail; for raw arrays use integral_separation_logs")
    return integral_separation_logs(logs, h, i, j, a0=a0, T0=T0)


def integral_separation_logs(logs: np.ndarray, h: float, i: int, j: int,
                             a0: float = 0.05, T0: float = 1.0) -> IntegralSeparationReport:
    logs = np.atleast_2d(np.asarray(logs, dtype=float))
    n = logs.shape[0]
    m0 = max(int(math.ceil(T0 / h)), 1)
    if m0 > n:
        raise WindowOutOfRange(f"T0={T0} needs {m0} steps, trail has {n}")
    gap = logs[:, i] - logs[:, j]
    cs = np.concatenate([[0.0], np.cumsum(gap)])

    min_avg = math.inf
    max_abs_avg = 0.0
    for width in range(m0, n + 1):
        sums = cs[width:] - cs[:-width]
        span = width * h
        min_avg = min(min_avg, float(np.min(sums)) / span)
        max_abs_avg = max(max_abs_avg, float(np.max(np.abs(sums))) / span)

    if min_avg >= a0:
        # offset: largest defect of sum >= a * span over ALL window widths
        b = 0.0
        for width in range(1, n + 1):
            sums = cs[width:] - cs[:-width]
            b = max(b, float(np.max(width * h * min_avg - sums)))
        return IntegralSeparationReport(
            pair=(i, j), kind="separated", a=min_avg, b=b,
            min_window_avg=min_avg, max_abs_window_avg=max_abs_avg, a0=a0, T0=T0)
    if max_abs_avg <= a0:
        eps = max_abs_avg
        m_bound = 0.0
        for width in range(1, n + 1):
            sums = cs[width:] - cs[:-width]
            m_bound = max(m_bound, float(np.max(np.abs(sums))) - eps * width * h)
        return IntegralSeparationReport(
            pair=(i, j), kind="bounded-average", eps=eps, M=max(m_bound, 0.0),
            min_window_avg=min_avg, max_abs_window_avg=max_abs_avg, a0=a0, T0=T0)
    return IntegralSeparationReport(
        pair=(i, j), kind="inconclusive",
        min_window_avg=min_avg, max_abs_window_avg=max_abs_avg, a0=a0, T0=T0)


@dataclass
class OracleTrail:
    ts: np.ndarray           # (n+1,)
    b_diag: np.ndarray       # (n+1, d) instantaneous diagonal rates
    q_final: np.ndarray
    h_fine: float


def _skew_projection(w: np.ndarray) -> np.ndarray:
    low = np.tril(w, k=-1)
    return low - low.T


def continuous_qr_oracle(prob: LinearProblem, t_final: float, h_fine: float,
                         t0: float = 0.0, q0: Optional[np.ndarray] = None,
                         drift_tol: float = 1e-6) -> OracleTrail:
    """Continuous QR reduction oracle: integrate Q' = Q S(Q, A) by RK4 on a fine grid.

    S is the skew projection of Q^T A Q (strictly lower part reflected), so the upper
    triangular factor's diagonal rates are B_ii = (Q^T A Q)_ii; those are recorded at
    every node. The frame is re-orthonormalized each step; drift beyond drift_tol
    before re-orthonormalization raises OrthogonalityLost.
    """
    d = prob.d
    q = np.eye(d) if q0 is None else np.asarray(q0, dtype=float).copy()
    n = int(round((t_final - t0) / h_fine))
    ts = t0 + h_fine * np.arange(n + 1)
    b_diag = np.empty((n + 1, d))

    def rate(qm: np.ndarray, t: float) -> np.ndarray:
        w = qm.T @ prob.coefficient(t) @ qm
        return qm @ _skew_projection(w)

    b_diag[0] = np.diag(q.T @ prob.coefficient(ts[0]) @ q)
    for idx in range(n):
        t = ts[idx]
        k1 = rate(q, t)
        k2 = rate(q + 0.5 * h_fine * k1, t + 0.5 * h_fine)
        k3 = rate(q + 0.5 * h_fine * k2, t + 0.5 * h_fine)
        k4 = rate(q + h_fine * k3, t + h_fine)
        q = q + (h_fine / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        drift = float(np.max(np.abs(q.T @ q - np.eye(d))))
        if drift > drift_tol:
            raise OrthogonalityLost(
                f"frame drift {drift:.3e} exceeds {drift_tol:.1e} at t={ts[idx + 1]:.6g}")
        q = linalg.qr_positive(q).q
        b_diag[idx + 1] = np.diag(q.T @ prob.coefficient(ts[idx + 1]) @ q)
    return OracleTrail(ts=ts, b_diag=b_diag, q_final=q, h_fine=h_fine)


def integrate_diag(oracle: OracleTrail, t_a: float, t_b: float) -> np.ndarray:
    """Integral of the oracle's diagonal rates over [t_a, t_b] (composite Simpson).

    Endpoints must (nearly) coincide with oracle grid nodes; the node count in
    between is made even by splitting the last interval with a trapezoid if needed.
    """
    ia = int(round((t_a - oracle.ts[0]) / oracle.h_fine))
    ib = int(round((t_b - oracle.ts[0]) / oracle.h_fine))
    if not (0 <= ia < ib <= len(oracle.ts) - 1):
        raise WindowOutOfRange(f"[{t_a}, {t_b}] outside oracle span")
    seg = oracle.b_diag[ia: ib + 1]
    n_int = ib - ia
    h = oracle.h_fine
    if n_int % 2 == 0:
        w = np.ones(n_int + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return (h / 3.0) * (w[:, np.newaxis] * seg).sum(axis=0)
    if n_int == 1:
        return 0.5 * h * (seg[0] + seg[1])
    head = integrate_diag(oracle, t_a, t_b - h)
    return head + 0.5 * h * (seg[-2] + seg[-1])
