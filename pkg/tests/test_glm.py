"""Method tableaus, exact linear transitions, steppers, defect probes, gap scan."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glmstab import glm, problems
from glmstab.errors import (
    ConfigError,
    NewtonDiverged,
    NotStrictlyStable,
    ParameterOutsideGap,
)


def _rotating(beta=10.0, **kw):
    base = dict(a1=1.2, a2=1.2, b1=-0.14, b2=-0.15, beta=beta)
    base.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = problems.RotatingCosineParams(**base)
    return p, problems.rotating_cosine_problem(p)


# -- tableaus ---------------------------------------------------------------


def test_tableau_registry():
    for name, k, r, order in (("bdf2", 2, 1, 2), ("ab2", 2, 2, 2), ("be", 1, 1, 1)):
        tab = glm.get_tableau(name)
        assert (tab.k, tab.r, tab.order) == (k, r, order)
    with pytest.raises(ConfigError):
        glm.get_tableau("rk4")


def test_update_matrix_spectra():
    eigs = np.sort_complex(glm.check_strictly_stable(glm.get_tableau("bdf2").V))
    assert np.allclose(eigs, [1.0 / 3.0, 1.0], atol=1e-14)
    eigs = np.sort_complex(glm.check_strictly_stable(glm.get_tableau("ab2").V))
    assert np.allclose(eigs, [0.0, 1.0], atol=1e-14)
    assert np.allclose(glm.check_strictly_stable(glm.get_tableau("be").V), [1.0])


def test_leapfrog_rejected():
    # eigenvalues +-1: the parasitic root sits on the unit circle
    with pytest.raises(NotStrictlyStable):
        glm.validate_tableau(glm.leapfrog_tableau())


def test_strict_stability_boundaries():
    with pytest.raises(NotStrictlyStable):
        glm.check_strictly_stable(np.eye(2))            # double unit eigenvalue
    with pytest.raises(NotStrictlyStable):
        glm.check_strictly_stable(np.diag([1.0, 1.0 - 1e-7]))   # inside margin
    glm.check_strictly_stable(np.diag([1.0, 1.0 - 1e-5]))       # outside margin


def test_validate_tableau_shape_guard():
    tab = glm.bdf2_tableau()
    tab.U = np.ones((2, 2))
    with pytest.raises(ConfigError):
        glm.validate_tableau(tab)


# -- frozen scalar-test transitions ------------------------------------------


def test_scalar_transition_bdf2_oracle():
    # z = -1: stage factor 1/(1 - 2z/3) = 3/5, bottom row [-1/3, 4/3] * 3/5
    tab = glm.get_tableau("bdf2")
    phi = glm.scalar_transition(tab, -1.0)
    want = np.array([[0.0, 1.0], [-0.2, 0.8]])
    assert np.allclose(phi, want, atol=1e-15)
    # z -> 0 recovers V
    assert np.allclose(glm.scalar_transition(tab, 0.0), tab.V, atol=1e-15)


def test_linear_transition_constant_oracle():
    # frozen coefficient lambda = -2, h = 0.1: bottom row is [-1/3, 4/3] / S with
    # S = 1 - (2/3) h lambda = 17/15
    tab = glm.get_tableau("bdf2")
    prob = problems.constant_problem(-2.0)
    phi = glm.linear_transition(tab, prob, 0, 0.1)
    assert np.allclose(phi[0], [0.0, 1.0], atol=1e-16)
    assert phi[1, 1] == pytest.approx(20.0 / 17.0, abs=1e-15)
    assert phi[1, 0] == pytest.approx(-5.0 / 17.0, abs=1e-15)
    assert phi[1, 1] == pytest.approx(1.17647058823529413, abs=1e-14)


def test_transition_batch_matches_single():
    _, prob = _rotating()
    tab = glm.get_tableau("bdf2")
    batch = glm.transition_batch(tab, prob, 3, 5, 0.1)
    for i in range(5):
        assert np.allclose(batch[i], glm.linear_transition(tab, prob, 3 + i, 0.1),
                           atol=1e-14)


def test_ab2_matches_textbook_recursion():
    _, prob = _rotating(beta=2.0)
    tab = glm.get_tableau("ab2")
    h = 0.05
    x0, x1 = np.array([1.0, 0.0]), np.array([0.9, 0.1])
    traj = glm.run_linear(tab, prob, np.concatenate([x0, x1]), 1, h)
    f0 = prob.coefficient(0.0) @ x0
    f1 = prob.coefficient(h) @ x1
    want = x1 + h * (1.5 * f1 - 0.5 * f0)
    assert np.allclose(traj.states[1][2:], want, atol=1e-14)
    assert np.allclose(traj.states[1][:2], x1, atol=1e-16)


def test_be_matches_implicit_recursion():
    _, prob = _rotating(beta=2.0)
    tab = glm.get_tableau("be")
    h = 0.1
    x0 = np.array([1.0, -0.5])
    traj = glm.run_linear(tab, prob, x0, 1, h)
    want = np.linalg.solve(np.eye(2) - h * prob.coefficient(h), x0)
    assert np.allclose(traj.states[1], want, atol=1e-13)


# -- propagation -------------------------------------------------------------


def test_run_linear_telescopes_transitions():
    _, prob = _rotating()
    tab = glm.get_tableau("bdf2")
    x0s = glm.start_rk4(prob, (1.0, 0.0), 0.0, 0.05, tab.k)
    traj, phis = glm.run_linear(tab, prob, x0s, 40, 0.05, keep_transitions=True)
    x = x0s.copy()
    for n in range(40):
        x = phis[n] @ x
        assert np.allclose(traj.states[n + 1], x, atol=1e-12)
    assert traj.n_steps == 40
    assert not traj.diverged


def test_run_linear_divergence_guard():
    prob = problems.constant_problem(3.0)
    tab = glm.get_tableau("ab2")
    x0s = np.array([1.0, math.exp(3.0)])
    traj, phis = glm.run_linear(tab, prob, x0s, 500, 1.0,
                                divergence_factor=1e6, keep_transitions=True)
    assert traj.diverged
    assert traj.diverged_at is not None
    assert traj.n_steps < 500
    assert phis.shape[0] == traj.n_steps
    assert np.all(np.isfinite(traj.states))


def test_step_linear_appends():
    _, prob = _rotating()
    tab = glm.get_tableau("bdf2")
    traj = glm.run_linear(tab, prob, glm.start_rk4(prob, (1.0, 0.0), 0.0, 0.1, 2), 3, 0.1)
    glm.step_linear(traj, tab, prob)
    assert traj.n_steps == 4
    assert np.allclose(traj.states[4],
                       glm.linear_transition(tab, prob, 3, 0.1) @ traj.states[3],
                       atol=1e-14)


def test_start_rk4_local_error():
    # one RK4 step on x' = x: error ~ h^5/120
    h = 0.1
    sup = glm.start_rk4(lambda x, t: x, (1.0,), 0.0, h, 2)
    err = abs(float(sup[1]) - math.exp(h))
    assert err == pytest.approx(h**5 / 120.0, rel=0.05)


def test_start_from_reference_exact_samples():
    sup = glm.start_from_reference(lambda t: np.array([t, t * t]), 1.0, 0.5, 2)
    assert np.array_equal(sup, [1.0, 1.0, 1.5, 2.25])


# -- local error probes -------------------------------------------------------


def test_lte_probe_third_order_constant():
    # BDF2 restart defect on x' = x: (2/9) h^3 x'''(t_{n+2}) to leading order
    prob = problems.constant_problem(1.0)
    tab = glm.get_tableau("bdf2")
    ref = lambda t: np.array([math.exp(t)])
    h = 5e-3
    got = glm.lte_probe(tab, prob, ref, 0, h)
    assert got == pytest.approx((2.0 / 9.0) * h**3 * math.exp(2 * h), rel=0.02)
    # halving h divides the defect by ~8
    ratio = got / glm.lte_probe(tab, prob, ref, 0, h / 2.0)
    assert ratio == pytest.approx(8.0, rel=0.05)


def test_lte_series_matches_probe_loop():
    p, prob = _rotating(beta=2.0)
    tab = glm.get_tableau("bdf2")
    h, n = 0.05, 12
    times = h * np.arange(n + tab.k)
    refs = problems.reference_batch(p, times)
    phis = glm.transition_batch(tab, prob, 0, n, h)
    series = glm.lte_series(tab, phis, refs)
    ref = lambda t: problems.reference_batch(p, np.atleast_1d(t))[0]
    for j in (0, 5, 11):
        assert series[j] == pytest.approx(glm.lte_probe(tab, prob, ref, j, h), abs=1e-13)
    with pytest.raises(ValueError):
        glm.lte_series(tab, phis, refs[: n + 1])


def test_tau_series_oracle():
    taus, tau_max = glm.tau_series(np.array([1.0, 2.0, 6.0]))
    assert np.allclose(taus, [2.0, 3.0])
    assert tau_max == 3.0
    taus, tau_max = glm.tau_series(np.array([1.0, 0.0, 5.0]))
    assert taus[0] == 0.0 and math.isnan(taus[1])
    assert tau_max == 0.0
    _, tau_max = glm.tau_series(np.array([1.0]))
    assert math.isnan(tau_max)


# -- nonlinear stepping --------------------------------------------------------


def test_nonlinear_matches_linear_on_linear_problem():
    _, prob = _rotating(beta=2.0)
    tab = glm.get_tableau("bdf2")
    h = 0.05
    x0s = glm.start_rk4(prob, (1.0, 0.0), 0.0, h, tab.k)
    lin = glm.run_linear(tab, prob, x0s, 10, h)
    f = lambda x, t: prob.coefficient(t) @ x
    jac = lambda x, t: prob.coefficient(t)
    non = glm.run_nonlinear(tab, f, jac, x0s, 10, h)
    assert np.allclose(lin.states, non.states, atol=1e-11)


def test_nonlinear_second_order_on_tanh():
    p = problems.TanhForcedParams(a=-0.7)
    tab = glm.get_tableau("bdf2")
    f = lambda x, t: problems.tanh_rhs(p, x, t)
    jac = lambda x, t: problems.tanh_jac(p, x, t)
    errs = []
    for h in (0.02, 0.01):
        n = int(round(1.0 / h))
        x0s = glm.start_from_reference(lambda t: np.array([problems.tanh_reference(p, t)]),
                                       0.0, h, tab.k)
        traj = glm.run_nonlinear(tab, f, jac, x0s, n, h)
        t_last = (n + tab.k - 1) * h     # newest block of the final supervector
        errs.append(abs(float(traj.states[-1][-1]) - problems.tanh_reference(p, t_last)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


def test_newton_budget_exhausted():
    tab = glm.get_tableau("be")
    f = lambda x, t: x * x
    jac = lambda x, t: np.atleast_2d(2.0 * x)
    with pytest.raises(NewtonDiverged):
        glm.run_nonlinear(tab, f, jac, np.array([10.0]), 1, 1.0,
                          cfg=glm.NewtonConfig(max_iters=2))


def test_unknown_predictor_rejected():
    tab = glm.get_tableau("be")
    with pytest.raises(ConfigError):
        glm.run_nonlinear(tab, lambda x, t: x, lambda x, t: np.eye(1),
                          np.array([1.0]), 1, 0.1,
                          cfg=glm.NewtonConfig(predictor="magic"))


# -- frozen-coefficient stability gap -----------------------------------------


def test_stability_gap_frozen_values():
    assert glm.stability_gap(glm.get_tableau("bdf2")) == pytest.approx(4.0, abs=1e-6)
    assert glm.stability_gap(glm.get_tableau("be")) == pytest.approx(2.0, abs=1e-6)
    assert math.isinf(glm.stability_gap(glm.get_tableau("ab2")))


def test_require_inside_gap():
    tab = glm.get_tableau("bdf2")
    assert glm.require_inside_gap(tab, 0.3, -0.1, 0.5) == pytest.approx(4.0, abs=1e-6)
    with pytest.raises(ParameterOutsideGap):
        glm.require_inside_gap(tab, 3.0, -0.1, 0.5)       # D+L past delta/2
    with pytest.raises(ParameterOutsideGap):
        glm.require_inside_gap(tab, 2.0, -0.1, 2.5)       # h*(D+L) past delta
    with pytest.raises(ParameterOutsideGap):
        glm.require_inside_gap(tab, 0.1, -0.3, 0.5)       # decaying mean


@settings(max_examples=25, deadline=None)
@given(z=st.floats(-5.0, -0.01))
def test_bdf2_stable_left_halfline(z):
    # A(0)-stability of the frozen recursion on the negative real axis
    rho = float(np.max(np.abs(np.linalg.eigvals(
        glm.scalar_transition(glm.get_tableau("bdf2"), z)))))
    assert rho <= 1.0 + 1e-12
