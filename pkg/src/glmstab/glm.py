"""General linear methods on nonautonomous problems.

A method is the quadruple (U, V, C, D) with stage abscissae xi: per step from the
supervector X_n = (x_n, ..., x_{n+k-1}),

    G_n     = (U (x) I_d) X_n + h (C (x) I_d) F_n,        stages
    X_{n+1} = (V (x) I_d) X_n + h (D (x) I_d) F_n,        update

where F_n stacks f(g_{n,i}, t_n + xi_i h). For linear problems x' = A(t) x the step
is an explicit matrix recursion X_{n+1} = Phi(n;h) X_n with

    Phi(n;h) = (V (x) I) + h (D (x) I) M_n [I - h (C (x) I) M_n]^{-1} (U (x) I),

M_n = blockdiag(A(t_n + xi_i h)). Strict stability (unit eigenvalue of V simple, the
rest strictly inside the unit circle) is what makes the underlying one-step behavior
extractable; validation lives here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import (
    ConfigError,
    NewtonDiverged,
    NotStrictlyStable,
    StageSingular,
)
from .problems import LinearProblem

UNIT_EIG_TOL = 1e-8     # |eig - 1| below this counts as the unit eigenvalue
STABLE_MARGIN = 1e-6    # all other eigenvalues need modulus <= 1 - STABLE_MARGIN


@dataclass
class GlmTableau:
    name: str
    k: int                  # number of supervector blocks
    r: int                  # number of stages
    order: int              # classical order p
    U: np.ndarray           # (r, k)
    V: np.ndarray           # (k, k)
    C: np.ndarray           # (r, r)
    D: np.ndarray           # (k, r)
    xi: np.ndarray          # (r,) stage abscissae, in units of h

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float).reshape(self.r, self.k)
        self.V = np.asarray(self.V, dtype=float).reshape(self.k, self.k)
        self.C = np.asarray(self.C, dtype=float).reshape(self.r, self.r)
        self.D = np.asarray(self.D, dtype=float).reshape(self.k, self.r)
        self.xi = np.asarray(self.xi, dtype=float).reshape(self.r)


def check_strictly_stable(v: np.ndarray, unit_tol: float = UNIT_EIG_TOL,
                          margin: float = STABLE_MARGIN) -> np.ndarray:
    """Validate strict stability of an update matrix V; returns its eigenvalues.

    Exactly one eigenvalue within unit_tol of 1, all others with modulus at most
    1 - margin; anything else raises NotStrictlyStable.
    """
    eigs = linalg.real_schur(np.asarray(v, dtype=float)).eigs
    unit = np.abs(eigs - 1.0) < unit_tol
    if int(np.sum(unit)) != 1:
        raise NotStrictlyStable(
            f"need exactly one unit eigenvalue, found {int(np.sum(unit))} in {eigs}"
        )
    rest = np.abs(eigs[~unit])
    if rest.size and float(np.max(rest)) > 1.0 - margin:
        raise NotStrictlyStable(
            f"non-unit eigenvalue modulus {float(np.max(rest)):.12f} exceeds "
            f"{1.0 - margin:.6f} in {eigs}"
        )
    return eigs


def validate_tableau(tab: GlmTableau) -> GlmTableau:
    """Shape and strict-stability check; returns the tableau for chaining."""
    for mat, shape, label in (
        (tab.U, (tab.r, tab.k), "U"),
        (tab.V, (tab.k, tab.k), "V"),
        (tab.C, (tab.r, tab.r), "C"),
        (tab.D, (tab.k, tab.r), "D"),
    ):
        if mat.shape != shape:
            raise ConfigError(f"{label} has shape {mat.shape}, expected {shape}")
    check_strictly_stable(tab.V)
    return tab


def bdf2_tableau() -> GlmTableau:
    """Two-step BDF as a GLM: one implicit stage g = x_{n+2}."""
    return GlmTableau(
        name="bdf2", k=2, r=1, order=2,
        U=[[-1.0 / 3.0, 4.0 / 3.0]],
        V=[[0.0, 1.0], [-1.0 / 3.0, 4.0 / 3.0]],
        C=[[2.0 / 3.0]],
        D=[[0.0], [2.0 / 3.0]],
        xi=[2.0],
    )


def ab2_tableau() -> GlmTableau:
    """Two-step Adams-Bashforth as a GLM: two explicit stages at the history points."""
    return GlmTableau(
        name="ab2", k=2, r=2, order=2,
        U=np.eye(2),
        V=[[0.0, 1.0], [0.0, 1.0]],
        C=np.zeros((2, 2)),
        D=[[0.0, 0.0], [-0.5, 1.5]],
        xi=[0.0, 1.0],
    )


def backward_euler_tableau() -> GlmTableau:
    return GlmTableau(
        name="be", k=1, r=1, order=1,
        U=[[1.0]], V=[[1.0]], C=[[1.0]], D=[[1.0]],
        xi=[1.0],
    )


def leapfrog_tableau() -> GlmTableau:
    """Explicit midpoint (leapfrog) two-step method; NOT strictly stable (eigs +-1).

    Kept as the canonical rejection example for the validator.
    """
    return GlmTableau(
        name="leapfrog", k=2, r=1, order=2,
        U=[[0.0, 1.0]],
        V=[[0.0, 1.0], [1.0, 0.0]],
        C=[[0.0]],
        D=[[0.0], [2.0]],
        xi=[1.0],
    )


_TABLEAUS = {
    "bdf2": bdf2_tableau,
    "ab2": ab2_tableau,
    "be": backward_euler_tableau,
}


def get_tableau(name: str) -> GlmTableau:
    try:
        factory = _TABLEAUS[name]
    except KeyError:
        raise ConfigError(f"unknown method {name!r}; choose from {sorted(_TABLEAUS)}")
    return validate_tableau(factory())


@dataclass
class Trajectory:
    """A sampled discrete trajectory of supervectors X_n, blocks (x_n,...,x_{n+k-1})."""

    h: float
    t0: float
    d: int
    k: int
    states: np.ndarray              # (n_states, k*d)
    start_proc: str = "given"
    problem_name: str = ""
    diverged: bool = False
    diverged_at: Optional[int] = None

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.states.shape[0])

    def blocks(self) -> np.ndarray:
        """States reshaped to (n_states, k, d)."""
        return self.states.reshape(self.states.shape[0], self.k, self.d)

    def first_blocks(self) -> np.ndarray:
        return self.states[:, : self.d]

    def last_blocks(self) -> np.ndarray:
        return self.states[:, -self.d:]


def stage_times(tab: GlmTableau, n, h: float, t0: float = 0.0) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return t0 + (n[..., np.newaxis] + tab.xi) * h


def transition_batch(tab: GlmTableau, prob: LinearProblem, n0: int, count: int,
                     h: float, t0: float = 0.0) -> np.ndarray:
    """Transition matrices Phi(n;h) for n = n0 .. n0+count-1, shape (count, kd, kd)."""
    d, k, r = prob.d, tab.k, tab.r
    ts = stage_times(tab, np.arange(n0, n0 + count), h, t0)      # (count, r)
    a_all = prob.batch(ts.ravel()).reshape(count, r, d, d)
    # S = I - h (C (x) I) M as (count, r, d, r, d)
    s = np.zeros((count, r, d, r, d))
    idx = np.arange(d)
    for i in range(r):
        s[:, i, idx, i, idx] = 1.0
        for j in range(r):
            if tab.C[i, j] != 0.0:
                s[:, i, :, j, :] -= h * tab.C[i, j] * a_all[:, j]
    s = s.reshape(count, r * d, r * d)
    u_big = linalg.kron(tab.U, np.eye(d))                        # (rd, kd)
    try:
        t_sol = np.linalg.solve(s, np.broadcast_to(u_big, (count,) + u_big.shape))
    except np.linalg.LinAlgError as exc:
        raise StageSingular(f"stage system singular near step {n0}: {exc}") from exc
    mt = np.einsum("nide,niem->nidm", a_all, t_sol.reshape(count, r, d, k * d))
    d_big = linalg.kron(tab.D, np.eye(d))                        # (kd, rd)
    phi = linalg.kron(tab.V, np.eye(d)) + h * np.einsum(
        "pe,nem->npm", d_big, mt.reshape(count, r * d, k * d)
    )
    return phi


def linear_transition(tab: GlmTableau, prob: LinearProblem, n: int, h: float,
                      t0: float = 0.0) -> np.ndarray:
    """Exact one-step transition X_{n+1} = Phi(n;h) X_n for a linear problem."""
    return transition_batch(tab, prob, n, 1, h, t0)[0]


def run_linear(tab: GlmTableau, prob: LinearProblem, x0_super: np.ndarray,
               n_steps: int, h: float, t0: float = 0.0,
               divergence_factor: float = 1e12, chunk: int = 4096,
               keep_transitions: bool = False, start_proc: str = "given"):
    """Propagate the supervector recursion for n_steps.

    The trajectory is frozen (diverged flag + truncation) as soon as the norm exceeds
    divergence_factor * max(1, ||X_0||) or becomes non-finite; everything computed up
    to that point stays available. Returns the Trajectory, or (Trajectory, Phi-array)
    when keep_transitions is set.
    """
    kd = tab.k * prob.d
    x0_super = np.asarray(x0_super, dtype=float).reshape(kd)
    states = np.empty((n_steps + 1, kd))
    states[0] = x0_super
    guard = divergence_factor * max(1.0, float(np.linalg.norm(x0_super)))
    phis = np.empty((n_steps, kd, kd)) if keep_transitions else None

    diverged = False
    diverged_at = None
    n_done = 0
    for base in range(0, n_steps, chunk):
        cnt = min(chunk, n_steps - base)
        block = transition_batch(tab, prob, base, cnt, h, t0)
        if keep_transitions:
            phis[base: base + cnt] = block
        stop = False
        for i in range(cnt):
            nxt = block[i] @ states[base + i]
            norm = float(np.linalg.norm(nxt))
            if not math.isfinite(norm) or norm > guard:
                diverged = True
                diverged_at = base + i + 1
                stop = True
                break
            states[base + i + 1] = nxt
            n_done = base + i + 1
        if stop:
            break

    states = states[: n_done + 1]
    traj = Trajectory(
        h=h, t0=t0, d=prob.d, k=tab.k, states=states, start_proc=start_proc,
        problem_name=prob.name, diverged=diverged, diverged_at=diverged_at,
    )
    if keep_transitions:
        return traj, phis[: n_done]
    return traj


def step_linear(traj: Trajectory, tab: GlmTableau, prob: LinearProblem) -> Trajectory:
    """Append one exact linear step to a trajectory (in place); returns it."""
    n = traj.states.shape[0] - 1
    phi = linear_transition(tab, prob, n, traj.h, traj.t0)
    nxt = phi @ traj.states[-1]
    traj.states = np.vstack([traj.states, nxt])
    return traj


def _rhs_of(prob_or_f) -> Callable:
    if isinstance(prob_or_f, LinearProblem):
        return lambda x, t: prob_or_f.coefficient(t) @ x
    return prob_or_f


def start_rk4(prob_or_f, x0, t0: float, h: float, k: int) -> np.ndarray:
    """Classical RK4 starting procedure: supervector (x_0, x_1, ..., x_{k-1})."""
    f = _rhs_of(prob_or_f)
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    blocks = [x]
    t = t0
    for _ in range(k - 1):
        k1 = f(x, t)
        k2 = f(x + 0.5 * h * k1, t + 0.5 * h)
        k3 = f(x + 0.5 * h * k2, t + 0.5 * h)
        k4 = f(x + h * k3, t + h)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        blocks.append(x)
    return np.concatenate(blocks)


def start_from_reference(reference: Callable, t0: float, h: float, k: int) -> np.ndarray:
    """Supervector built from a reference solution sampled at t0, t0+h, ..."""
    return np.concatenate([np.atleast_1d(np.asarray(reference(t0 + i * h), dtype=float))
                           for i in range(k)])


def lte_probe(tab: GlmTableau, prob: LinearProblem, reference: Callable, n: int,
              h: float, t0: float = 0.0) -> float:
    """One-step defect from exact history.

    Builds X_n from the reference at t_n..t_{n+k-1}, takes one linear step, and
    returns the 2-norm defect of the newest block against the reference at t_{n+k}.
    The value scales like h^{p+1}; divide by h for the per-step-rate convention.
    """
    tn = t0 + n * h
    x_exact = start_from_reference(reference, tn, h, tab.k)
    phi = linear_transition(tab, prob, n, h, t0)
    nxt = phi @ x_exact
    target = np.atleast_1d(np.asarray(reference(tn + tab.k * h), dtype=float))
    return float(np.linalg.norm(nxt[-prob.d:] - target))


def lte_series(tab: GlmTableau, phis: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Vectorized restart defects for n = 0..len(phis)-1.

    refs holds reference values on the grid, shape (m, d) with m >= len(phis)+k, so
    probe n uses rows n..n+k-1 as history and row n+k as target.
    """
    n = phis.shape[0]
    k = tab.k
    d = refs.shape[1]
    if refs.shape[0] < n + k:
        raise ValueError(f"need {n + k} reference rows, got {refs.shape[0]}")
    hist = np.stack([refs[i: i + n] for i in range(k)], axis=1).reshape(n, k * d)
    stepped = np.einsum("npq,nq->np", phis, hist)
    defect = stepped[:, -d:] - refs[k: k + n]
    return np.linalg.norm(defect, axis=1)


def tau_series(lte_values: np.ndarray):
    """Consecutive LTE ratios tau_n = LTE_{n+1}/LTE_n.

    Exact-zero denominators are skipped (NaN in the series, ignored for the max);
    returns (ratios, tau_max).
    """
    lte_values = np.asarray(lte_values, dtype=float)
    if lte_values.size < 2:
        return np.empty(0), math.nan
    denom = lte_values[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        taus = np.where(denom == 0.0, np.nan, lte_values[1:] / denom)
    finite = taus[np.isfinite(taus)]
    tau_max = float(np.max(finite)) if finite.size else math.nan
    return taus, tau_max


@dataclass
class NewtonConfig:
    tol: float = 1e-12
    max_iters: int = 25
    predictor: str = "explicit-euler"   # or "history"


def step_nonlinear(traj: Trajectory, tab: GlmTableau, f: Callable, jac: Callable,
                   cfg: NewtonConfig = NewtonConfig()) -> Trajectory:
    """Append one step of the GLM on x' = f(x,t) via a stage Newton iteration."""
    d, k, r = traj.d, tab.k, tab.r
    n = traj.states.shape[0] - 1
    x_cur = traj.states[-1]
    ts = (stage_times(tab, np.array(n), traj.h, traj.t0)).reshape(r)
    u_big = linalg.kron(tab.U, np.eye(d))
    base = u_big @ x_cur

    # stage predictor
    x_last = x_cur[-d:]
    t_last = traj.t0 + (n + k - 1) * traj.h
    if cfg.predictor == "explicit-euler":
        f_last = np.atleast_1d(f(x_last, t_last))
        g = np.concatenate([x_last + (ts[i] - (k - 1)) * traj.h * f_last for i in range(r)])
    elif cfg.predictor == "history":
        g = np.tile(x_last, r)
    else:
        raise ConfigError(f"unknown predictor {cfg.predictor!r}")

    h = traj.h
    c_big = linalg.kron(tab.C, np.eye(d))
    scale = max(1.0, float(np.linalg.norm(base)))
    for _ in range(cfg.max_iters):
        fg = np.concatenate([np.atleast_1d(f(g[i * d:(i + 1) * d], ts[i])) for i in range(r)])
        resid = g - base - h * (c_big @ fg)
        if float(np.linalg.norm(resid)) <= cfg.tol * scale:
            break
        jblk = np.zeros((r * d, r * d))
        for i in range(r):
            jblk[i * d:(i + 1) * d, i * d:(i + 1) * d] = np.atleast_2d(
                jac(g[i * d:(i + 1) * d], ts[i]))
        g = g - linalg.solve(np.eye(r * d) - h * (c_big @ jblk), resid)
    else:
        raise NewtonDiverged(
            f"stage Newton exceeded {cfg.max_iters} iterations at step {n} "
            f"(residual {float(np.linalg.norm(resid)):.3e})"
        )

    fg = np.concatenate([np.atleast_1d(f(g[i * d:(i + 1) * d], ts[i])) for i in range(r)])
    nxt = linalg.kron(tab.V, np.eye(d)) @ x_cur + h * (linalg.kron(tab.D, np.eye(d)) @ fg)
    traj.states = np.vstack([traj.states, nxt])
    return traj


def run_nonlinear(tab: GlmTableau, f: Callable, jac: Callable, x0_super, n_steps: int,
                  h: float, t0: float = 0.0, cfg: NewtonConfig = NewtonConfig(),
                  d: Optional[int] = None) -> Trajectory:
    x0_super = np.asarray(x0_super, dtype=float)
    if d is None:
        d = x0_super.size // tab.k
    traj = Trajectory(h=h, t0=t0, d=d, k=tab.k, states=x0_super.reshape(1, tab.k * d).copy())
    for _ in range(n_steps):
        step_nonlinear(traj, tab, f, jac, cfg)
    return traj


def scalar_transition(tab: GlmTableau, z: float) -> np.ndarray:
    """k x k transition of the method on the frozen scalar test equation, hx' = z x."""
    s = np.eye(tab.r) - z * tab.C
    t_sol = np.linalg.solve(s, tab.U)
    return tab.V + z * (tab.D @ t_sol)


def stability_gap(tab: GlmTableau, z_cap: float = 100.0, scan_step: float = 0.01) -> float:
    """Length of the instability gap (0, delta) of the frozen scalar recursion.

    Scans the spectral radius of the scalar-test transition for z > 0 and returns the
    first z where it re-enters the closed unit disk (to ~1e-10 by bisection), or
    infinity (capped search) if the recursion never restabilizes below z_cap.
    """
    def rho(z: float) -> float:
        try:
            return float(np.max(np.abs(np.linalg.eigvals(scalar_transition(tab, z)))))
        except np.linalg.LinAlgError:
            return math.inf

    prev = 1e-9
    z = scan_step
    while z <= z_cap + 1e-12:
        if rho(z) <= 1.0 + 1e-12:
            lo, hi = prev, z
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if rho(mid) <= 1.0 + 1e-12:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        prev = z
        z += scan_step
    return math.inf


def require_inside_gap(tab: GlmTableau, D: float, L: float, h: float) -> float:
    """Validate resonant counterexample parameters against the method's gap.

    Needs 0 < D+L < delta/2 and 0 < h (D+L) < delta; returns delta or raises
    ParameterOutsideGap.
    """
    from .errors import ParameterOutsideGap

    delta = stability_gap(tab)
    s = D + L
    if not (0.0 < s and (math.isinf(delta) or s < 0.5 * delta)):
        raise ParameterOutsideGap(
            f"D+L = {s:.6g} outside (0, delta/2) with delta = {delta:.6g}")
    if not (0.0 < h * s and (math.isinf(delta) or h * s < delta)):
        raise ParameterOutsideGap(
            f"h*(D+L) = {h * s:.6g} outside (0, delta) with delta = {delta:.6g}")
    return delta
