import math

import numpy as np
import pytest

from aerodelta.envelope import make_envelope, rho_at
from aerodelta.preset import PresetTrajectory, alpha_at, choose_c


def two_exp_alpha(e0, e0_dot, c, l_e, t):
    """Independent closed form: alpha = (e0 + b/c) e^{-l t} - (b/c) e^{-(l+c) t}.

    Expanding (b g + e0) e^{-l t} with g = (1 - e^{-c t})/c gives exactly
    this two-exponential combination, so it serves as an oracle computed
    through a different expression tree.
    """
    b = l_e * e0 + e0_dot
    return (e0 + b / c) * np.exp(-l_e * t) - (b / c) * np.exp(-(l_e + c) * t)


def random_traj(rng):
    e0 = rng.uniform(-2.0, 2.0, size=3)
    e0_dot = rng.uniform(-3.0, 3.0, size=3)
    c = rng.uniform(0.2, 8.0, size=3)
    l_e = rng.uniform(0.2, 3.0)
    return PresetTrajectory(e0=e0, e0_dot=e0_dot, c=c, l_e=l_e)


def test_initial_conditions_exact():
    rng = np.random.default_rng(31)
    for _ in range(50):
        traj = random_traj(rng)
        a, a_dot, a_ddot = alpha_at(traj, 0.0)
        np.testing.assert_allclose(a, traj.e0, atol=1e-15)
        np.testing.assert_allclose(a_dot, traj.e0_dot, atol=1e-14)
        # alpha_ddot(0) = -b (2 l + c) + l^2 e0
        expect = -traj.b * (2.0 * traj.l_e + traj.c) + traj.l_e**2 * traj.e0
        np.testing.assert_allclose(a_ddot, expect, atol=1e-12)


def test_known_point():
    traj = PresetTrajectory(
        e0=np.array([1.0, 0.0, 0.0]),
        e0_dot=np.zeros(3),
        c=np.full(3, 0.25),
        l_e=0.5,
    )
    a, _, _ = alpha_at(traj, 2.0)
    # b = 0.5; alpha(2) = 3 e^{-1} - 2 e^{-1.5}
    assert a[0] == pytest.approx(3 * math.exp(-1.0) - 2 * math.exp(-1.5), abs=1e-14)
    assert a[0] == pytest.approx(0.6573780033, abs=1e-9)
    a0, _, a_ddot0 = alpha_at(traj, 0.0)
    # b = 0.5, so alpha_ddot(0) = -0.5 (2*0.5 + 0.25) + 0.25 = -0.375
    assert a_ddot0[0] == pytest.approx(-0.375, abs=1e-15)


def test_matches_two_exponential_form():
    rng = np.random.default_rng(37)
    for _ in range(60):
        traj = random_traj(rng)
        t = rng.uniform(0.0, 15.0, size=8)
        a, _, _ = alpha_at(traj, t)
        oracle = two_exp_alpha(traj.e0, traj.e0_dot, traj.c, traj.l_e, t[..., None])
        np.testing.assert_allclose(a, oracle, rtol=1e-12, atol=1e-14)


def test_satisfies_its_own_ode():
    """alpha solves x'' + (2l + c) x' + l (l + c) x = 0 per axis, which pins
    down all three returned arrays against each other."""
    rng = np.random.default_rng(41)
    for _ in range(60):
        traj = random_traj(rng)
        t = rng.uniform(0.0, 12.0, size=5)
        a, a_dot, a_ddot = alpha_at(traj, t)
        c, l_e = traj.c, traj.l_e
        resid = a_ddot + (2.0 * l_e + c) * a_dot + l_e * (l_e + c) * a
        np.testing.assert_allclose(resid, 0.0, atol=1e-10)


def test_small_c_is_well_conditioned():
    traj = PresetTrajectory(
        e0=np.array([0.5, -0.2, 0.1]),
        e0_dot=np.array([0.3, 0.0, -0.4]),
        c=np.full(3, 1e-12),
        l_e=1.0,
    )
    t = np.linspace(0.0, 5.0, 50)
    a, _, _ = alpha_at(traj, t)
    # limit c -> 0: alpha = (b t + e0) e^{-l t}
    limit = (traj.b * t[:, None] + traj.e0) * np.exp(-t[:, None])
    np.testing.assert_allclose(a, limit, rtol=1e-6)


def test_alpha_at_rejects_negative_time():
    traj = PresetTrajectory(e0=np.zeros(3), e0_dot=np.zeros(3), c=np.ones(3), l_e=1.0)
    with pytest.raises(ValueError):
        alpha_at(traj, -1e-9)


def test_scalar_c_broadcasts():
    traj = PresetTrajectory(e0=np.ones(3), e0_dot=np.zeros(3), c=2.0, l_e=1.0)
    np.testing.assert_allclose(traj.c, [2.0, 2.0, 2.0])


def test_choose_c_formula():
    env = make_envelope([2.0, 2.0, 1.2], [0.02, 0.02, 0.02], 5.0, e0=np.zeros(3))
    e0 = np.array([-1.0, 1.0, -0.6])
    e0_dot = np.zeros(3)
    margin = 1.0 / 60.0
    c = choose_c(env, e0, e0_dot, margin, safety=1.1)
    # per axis: c = safety |b| / (rho0 - margin - |e0|)
    b = env.l_e * e0
    expect = 1.1 * np.abs(b) / (env.rho0 - margin - np.abs(e0))
    np.testing.assert_allclose(c, expect, rtol=1e-14)


def test_choose_c_zero_b_branch():
    env = make_envelope([1.0, 1.0, 1.0], [0.02, 0.02, 0.02], 5.0, e0=np.zeros(3))
    # e0 = 0 and e0_dot = 0 makes b = 0 on every axis
    c = choose_c(env, np.zeros(3), np.zeros(3), margin=0.01, safety=2.0)
    np.testing.assert_allclose(c, 2.0 * env.l_e)


def test_choose_c_validation():
    env = make_envelope([1.0, 1.0, 1.0], [0.02, 0.02, 0.02], 5.0, e0=np.zeros(3))
    with pytest.raises(ValueError):
        choose_c(env, np.zeros(3), np.zeros(3), margin=0.02)  # not < min rho_inf
    with pytest.raises(ValueError):
        choose_c(env, np.zeros(3), np.zeros(3), margin=0.0)
    with pytest.raises(ValueError):
        choose_c(env, np.array([0.995, 0.0, 0.0]), np.zeros(3), margin=0.01)  # no gap
    with pytest.raises(ValueError):
        choose_c(env, np.zeros(3), np.zeros(3), margin=0.01, safety=0.9)


def test_trajectory_margin_check():
    rho0 = np.array([1.0, 1.0, 1.0])
    e0 = np.array([0.5, 0.0, 0.0])
    e0_dot = np.array([2.0, 0.0, 0.0])
    # too-slow bend: c gap < |b|
    with pytest.raises(ValueError):
        PresetTrajectory(e0=e0, e0_dot=e0_dot, c=0.1, l_e=1.0, margin=0.01, rho0=rho0)
    # fast enough passes
    PresetTrajectory(e0=e0, e0_dot=e0_dot, c=20.0, l_e=1.0, margin=0.01, rho0=rho0)
    with pytest.raises(ValueError):
        PresetTrajectory(e0=e0, e0_dot=e0_dot, c=20.0, l_e=1.0, margin=0.01)  # rho0 missing


def test_containment_property():
    """With c from choose_c the trajectory keeps the demanded clearance
    below the envelope at all times (compact version of the acceptance
    sweep)."""
    rng = np.random.default_rng(43)
    margin = 0.015
    for _ in range(20):
        rho_inf = rng.uniform(0.018, 0.08, size=3)
        rho0 = rho_inf + rng.uniform(0.3, 2.5, size=3)
        t_p = rng.uniform(2.0, 8.0)
        e0 = rng.uniform(-0.8, 0.8, size=3) * (rho0 - margin)
        e0_dot = rng.uniform(-2.0, 2.0, size=3)
        env = make_envelope(rho0, rho_inf, t_p, e0)
        c = choose_c(env, e0, e0_dot, margin)
        traj = PresetTrajectory(e0=e0, e0_dot=e0_dot, c=c, l_e=env.l_e,
                                margin=margin, rho0=env.rho0)
        t = np.linspace(0.0, 10.0 * t_p, 2000)
        a, _, _ = alpha_at(traj, t)
        rho = rho_at(env, t)
        assert np.all(np.abs(a) < rho - margin)
