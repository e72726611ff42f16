import math

import numpy as np
import pytest

from aerodelta.envelope import EnvelopeParams, make_envelope, rho_at


def test_rate_solves_defining_equation():
    """l_e is defined by (||rho0|| - ||rho_inf||) exp(-l_e t_p) = eps_p."""
    rng = np.random.default_rng(23)
    for _ in range(50):
        rho_inf = rng.uniform(0.01, 0.1, size=3)
        rho0 = rho_inf + rng.uniform(0.3, 3.0, size=3)
        t_p = rng.uniform(1.0, 20.0)
        env = make_envelope(rho0, rho_inf, t_p, e0=np.zeros(3))
        n0 = np.linalg.norm(rho0)
        n_inf = np.linalg.norm(rho_inf)
        assert env.eps_p == pytest.approx(0.1 * n_inf)
        lhs = (n0 - n_inf) * math.exp(-env.l_e * t_p)
        assert lhs == pytest.approx(env.eps_p, rel=1e-12)


def test_rate_known_values():
    # hand-computed from the defining equation
    env = make_envelope([2.0, 2.0, 1.2], [0.02, 0.02, 0.02], 5.0, e0=[-1.0, 1.0, -0.6])
    assert env.l_e == pytest.approx(1.3552882, abs=2e-7)
    env = make_envelope([0.1, 5.0, 3.0], [0.02, 0.02, 0.02], 10.0, e0=[0.01, 0.99, -0.4])
    assert env.l_e == pytest.approx(0.7422671530, abs=2e-10)


def test_rho_at_known_value():
    env = EnvelopeParams(
        rho0=np.array([2.0, 1.0, 1.0]),
        rho_inf=np.array([0.02, 0.02, 0.02]),
        l_e=1.0,
        t_p=5.0,
    )
    # (2 - 0.02) e^{-1} + 0.02
    assert rho_at(env, 1.0)[0] == pytest.approx(0.7484012935, abs=1e-9)


def test_rho_at_endpoints_and_monotonicity():
    env = make_envelope([1.5, 2.0, 0.8], [0.05, 0.02, 0.03], 4.0, e0=np.zeros(3))
    np.testing.assert_allclose(rho_at(env, 0.0), env.rho0, rtol=1e-15)
    np.testing.assert_allclose(rho_at(env, 1e6), env.rho_inf, rtol=1e-12)
    t = np.linspace(0.0, 40.0, 500)
    vals = rho_at(env, t)
    assert vals.shape == (500, 3)
    # nonincreasing everywhere; strictly decreasing until the exponential
    # underflows into rho_inf far past the settling time
    assert np.all(np.diff(vals, axis=0) <= 0.0)
    early = rho_at(env, np.linspace(0.0, 8.0, 200))
    assert np.all(np.diff(early, axis=0) < 0.0)
    assert np.all(vals > env.rho_inf - 1e-15)


def test_rho_at_rejects_negative_time():
    env = make_envelope([1.0, 1.0, 1.0], [0.02, 0.02, 0.02], 5.0, e0=np.zeros(3))
    with pytest.raises(ValueError):
        rho_at(env, -0.1)
    with pytest.raises(ValueError):
        rho_at(env, np.array([0.0, -1e-9]))


def test_make_envelope_validation():
    with pytest.raises(ValueError):
        make_envelope([1.0, 1.0, 1.0], [0.02, 0.02, 0.02], 5.0, e0=[1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        make_envelope([1.0, 1.0, 1.0], [0.02, 0.02, 0.02], 5.0, e0=[1.5, 0.0, 0.0])
    with pytest.raises(ValueError):
        make_envelope([0.01, 1.0, 1.0], [0.02, 0.02, 0.02], 5.0, e0=np.zeros(3))
    with pytest.raises(ValueError):
        make_envelope([1.0, 1.0, 1.0], [0.02, 0.02, 0.02], -1.0, e0=np.zeros(3))
    # eps window: eps_p must stay below ||rho0|| - ||rho_inf||
    with pytest.raises(ValueError):
        make_envelope([0.021, 0.021, 0.021], [0.02, 0.02, 0.02], 5.0,
                      e0=np.zeros(3), eps_scale=0.999)
    with pytest.raises(ValueError):
        make_envelope([1.0, 1.0, 1.0], [0.02, 0.02, 0.02], 5.0,
                      e0=np.zeros(3), eps_scale=0.0)


def test_envelope_params_validation():
    with pytest.raises(ValueError):
        EnvelopeParams(
            rho0=np.array([1.0, 1.0, 1.0]),
            rho_inf=np.array([1.0, 0.02, 0.02]),
            l_e=1.0,
            t_p=5.0,
        )
    with pytest.raises(ValueError):
        EnvelopeParams(
            rho0=np.array([1.0, 1.0, 1.0]),
            rho_inf=np.array([0.02, 0.02, 0.02]),
            l_e=0.0,
            t_p=5.0,
        )
