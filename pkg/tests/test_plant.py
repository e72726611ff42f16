import math

import numpy as np
import pytest

from aerodelta.delta_arm import DeltaGeometry, delta_fk
from aerodelta.geometry import axis_angle_rotation, yaw_rotation
from aerodelta.plant import (
    Measurement,
    NoiseParams,
    NoiseStream,
    PlantParams,
    derive_seed,
    hover_state,
    measure,
    pack_state,
    plant_advance,
    settle_time,
    unpack_state,
)


GEOM = DeltaGeometry()
QUIET = PlantParams(noise=NoiseParams.zero())


def test_pack_unpack_roundtrip():
    vec = pack_state([1.0, -2.0, 3.0], 0.4, [0.5, 0.6, 0.7])
    p, yaw, q = unpack_state(vec)
    np.testing.assert_array_equal(p, [1.0, -2.0, 3.0])
    assert yaw == 0.4
    np.testing.assert_array_equal(q, [0.5, 0.6, 0.7])
    with pytest.raises(ValueError):
        unpack_state(np.zeros(6))


def test_reference_is_fixed_point():
    refs = pack_state([0.2, -0.1, -2.0], 0.3, [0.6, 0.6, 0.6])
    state, p_plat, yaw_rate = plant_advance(QUIET, GEOM, refs.copy(), refs, 50)
    np.testing.assert_allclose(state, refs, atol=1e-14)
    assert yaw_rate == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(p_plat, delta_fk(GEOM, refs[4:]), atol=1e-12)


def test_exponential_decay_exact():
    """Each substep applies the exact discrete lag solution, so after n
    substeps the remaining offset is exp(-n dt / tau) of the original."""
    state0 = pack_state([0.0, 0.0, -2.0], 0.0, [0.6, 0.6, 0.6])
    refs = pack_state([1.0, 0.0, -2.0], 0.0, [0.7, 0.6, 0.6])
    for n in (1, 7, 40):
        state, _, _ = plant_advance(QUIET, GEOM, state0, refs, n)
        decay_b = math.exp(-n * QUIET.dt / QUIET.tau_base)
        decay_a = math.exp(-n * QUIET.dt / QUIET.tau_arm)
        assert state[0] == pytest.approx(1.0 - decay_b, abs=1e-13)
        assert state[4] == pytest.approx(0.7 - 0.1 * decay_a, abs=1e-13)
        # untouched channels stay put exactly
        assert state[1] == 0.0 and state[2] == -2.0
        assert state[5] == 0.6 and state[6] == 0.6


def test_ramp_lag_steady_state():
    """Track a reference ramp: with the per-step update
    x' = r + (x - r) exp(-dt/tau) the lag L = r - x settles at the fixed
    point of L' = (L + v dt) exp(-dt/tau), which is v dt / expm1(dt/tau)
    and approaches the continuous value v * tau as dt -> 0."""
    v = 0.3
    tau = QUIET.tau_base
    dt = QUIET.dt
    state = pack_state([0.0, 0.0, -2.0], 0.0, [0.6, 0.6, 0.6])
    ref_x = 0.0
    for _ in range(int(30 * tau / dt)):
        ref_x += v * dt
        refs = pack_state([ref_x, 0.0, -2.0], 0.0, [0.6, 0.6, 0.6])
        state, _, _ = plant_advance(QUIET, GEOM, state, refs, 1)
    lag = ref_x - state[0]
    lag_exact = v * dt / math.expm1(dt / tau)
    assert lag == pytest.approx(lag_exact, rel=1e-9)
    assert lag == pytest.approx(v * tau, rel=3e-3)


def test_yaw_slew_limit():
    p = PlantParams(tau_base=0.02, tau_arm=0.02, yaw_rate_limit=2.0,
                    dt=0.004, noise=NoiseParams.zero())
    state = pack_state([0.0, 0.0, -2.0], 0.0, [0.6, 0.6, 0.6])
    refs = pack_state([0.0, 0.0, -2.0], 1.5, [0.6, 0.6, 0.6])
    prev = state.copy()
    for _ in range(400):
        state, _, rate = plant_advance(p, GEOM, prev, refs, 1)
        assert abs(state[3] - prev[3]) <= p.yaw_rate_limit * p.dt + 1e-12
        assert abs(rate) <= p.yaw_rate_limit + 1e-12
        prev = state
    assert state[3] == pytest.approx(1.5, abs=1e-9)


def test_yaw_wraps_short_way():
    # from +3.1 toward -3.1 the short path crosses pi, not zero
    p = PlantParams(tau_base=0.02, tau_arm=0.02, yaw_rate_limit=5.0,
                    dt=0.004, noise=NoiseParams.zero())
    state = pack_state([0.0, 0.0, -2.0], 3.1, [0.6, 0.6, 0.6])
    refs = pack_state([0.0, 0.0, -2.0], -3.1, [0.6, 0.6, 0.6])
    state, _, rate = plant_advance(p, GEOM, state, refs, 1)
    assert rate > 0.0  # increasing yaw, i.e. heading through +pi
    assert state[3] > 3.1


def test_yaw_rate_is_average_over_advance():
    p = PlantParams(tau_base=0.05, tau_arm=0.02, yaw_rate_limit=10.0,
                    dt=0.004, noise=NoiseParams.zero())
    state0 = pack_state([0.0, 0.0, -2.0], 0.0, [0.6, 0.6, 0.6])
    refs = pack_state([0.0, 0.0, -2.0], 0.8, [0.6, 0.6, 0.6])
    n = 5
    state, _, rate = plant_advance(p, GEOM, state0, refs, n)
    assert rate == pytest.approx((state[3] - state0[3]) / (n * p.dt), rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        PlantParams(tau_base=0.0)
    with pytest.raises(ValueError):
        PlantParams(dt=0.02, tau_arm=0.05)  # dt > tau_arm/5
    with pytest.raises(ValueError):
        PlantParams(yaw_rate_limit=0.0)
    with pytest.raises(ValueError):
        PlantParams(delta_cap=0.0)
    with pytest.raises(ValueError):
        NoiseParams(sigma_pos=-1.0)


def test_advance_validation():
    refs = pack_state([0.0, 0.0, -2.0], 0.0, [0.6, 0.6, 0.6])
    with pytest.raises(ValueError):
        plant_advance(QUIET, GEOM, refs[:6], refs, 1)
    with pytest.raises(ValueError):
        plant_advance(QUIET, GEOM, refs, refs, 0)
    bad = refs.copy()
    bad[4] = math.nan
    with pytest.raises(ValueError):
        plant_advance(QUIET, GEOM, refs, bad, 1)


def test_measure_zero_noise_passthrough():
    m = measure(NoiseParams.zero(), [1.0, 2.0, -2.0], 0.3, [0.0, 0.0, 0.29],
                0.25, dt=0.005, seed=9, step=4)
    np.testing.assert_array_equal(m.p_base, [1.0, 2.0, -2.0])
    np.testing.assert_array_equal(m.p_plat, [0.0, 0.0, 0.29])
    np.testing.assert_allclose(m.r_base, yaw_rotation(0.3))
    np.testing.assert_array_equal(m.omega, [0.0, 0.0, 0.25])


def test_measure_deterministic_in_seed_and_step():
    noise = NoiseParams(seed=0)
    args = ([0.0, 0.0, -2.0], 0.1, [0.0, 0.0, 0.29], 0.0)
    a = measure(noise, *args, dt=0.005, seed=42, step=17)
    b = measure(noise, *args, dt=0.005, seed=42, step=17)
    np.testing.assert_array_equal(a.p_base, b.p_base)
    np.testing.assert_array_equal(a.p_plat, b.p_plat)
    np.testing.assert_array_equal(a.r_base, b.r_base)
    np.testing.assert_array_equal(a.omega, b.omega)
    c = measure(noise, *args, dt=0.005, seed=42, step=18)
    assert not np.array_equal(a.p_base, c.p_base)
    d = measure(noise, *args, dt=0.005, seed=43, step=17)
    assert not np.array_equal(a.p_base, d.p_base)


def test_measure_matches_keying_contract():
    """Reconstruct the measurement from scratch with a fresh Philox
    stream: nine normals per (seed, step), consumed base / platform /
    gyro, rate error sigma*dt*n and tilt sigma*dt^2*n from the same
    draw."""
    noise = NoiseParams(sigma_pos=0.01, sigma_gyro=0.02, seed=0)
    p_base = np.array([0.3, -0.7, -2.1])
    yaw = 0.6
    p_plat = np.array([0.01, -0.02, 0.3])
    yaw_rate = 0.4
    dt = 0.005
    for seed, step in [(1, 0), (7, 123), (2**40, 5), (42, 2**33)]:
        m = measure(noise, p_base, yaw, p_plat, yaw_rate, dt, seed=seed, step=step)
        rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, step]))
        n = rng.standard_normal(9)
        r_true = yaw_rotation(yaw)
        np.testing.assert_array_equal(m.p_base, p_base + 0.01 * n[0:3])
        np.testing.assert_array_equal(m.p_plat, p_plat + 0.01 * n[3:6])
        np.testing.assert_array_equal(m.omega, [0.0, 0.0, yaw_rate] + 0.02 * dt * n[6:9])
        r_expect = axis_angle_rotation(0.02 * dt * dt * n[6:9]) @ r_true
        np.testing.assert_array_equal(m.r_base, r_expect)


def test_noise_stream_matches_fresh_construction():
    stream = NoiseStream(991)
    for step in (0, 1, 5, 5, 0, 2**40, 3):
        fresh = np.random.Generator(np.random.Philox(key=991, counter=[0, 0, 0, step]))
        np.testing.assert_array_equal(stream.draws(step), fresh.standard_normal(9))
    with pytest.raises(ValueError):
        stream.draws(-1)


def test_measured_rotation_stays_orthonormal():
    noise = NoiseParams(sigma_pos=0.01, sigma_gyro=0.5, seed=3)
    for step in range(20):
        m = measure(noise, [0.0, 0.0, -2.0], 0.3, [0.0, 0.0, 0.29],
                    0.1, dt=0.005, seed=3, step=step)
        np.testing.assert_allclose(m.r_base @ m.r_base.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(m.r_base) == pytest.approx(1.0, abs=1e-12)


def test_noise_scale_statistics():
    noise = NoiseParams(sigma_pos=0.02, sigma_gyro=0.0, seed=11)
    p_true = np.array([0.0, 0.0, -2.0])
    s_true = np.array([0.0, 0.0, 0.29])
    errs = []
    for step in range(1500):
        m = measure(noise, p_true, 0.0, s_true, 0.0, dt=0.005, seed=11, step=step)
        errs.extend(m.p_base - p_true)
        errs.extend(m.p_plat - s_true)
    errs = np.array(errs)
    assert abs(errs.mean()) < 0.001
    assert abs(errs.std() - 0.02) < 0.002  # 9000 samples, well within 10%


def test_measure_validation():
    noise = NoiseParams(sigma_pos=0.01, seed=0)
    with pytest.raises(ValueError):
        measure(noise, [0.0, 0.0, -2.0], 0.0, [0.0, 0.0, 0.29], 0.0,
                dt=0.005, seed=1, step=-1)
    with pytest.raises(ValueError):
        measure(noise, [0.0, 0.0, -2.0], 0.0, [0.0, 0.0, 0.29], 0.0,
                dt=0.0, seed=1, step=0)


def test_derive_seed_spreads_runs():
    seeds = {derive_seed(1234, i) for i in range(200)}
    assert len(seeds) == 200
    for s in seeds:
        assert 0 <= s < 2**63
    assert derive_seed(1234, 7) == (1234 * 1_000_003 + 7) % 2**63


def test_hover_state_consistency():
    state = hover_state(GEOM, [0.5, -0.5, -2.0], yaw=0.2)
    p, yaw, q = unpack_state(state)
    np.testing.assert_array_equal(p, [0.5, -0.5, -2.0])
    assert yaw == 0.2
    np.testing.assert_allclose(delta_fk(GEOM, q), [0.0, 0.0, 0.29], atol=1e-10)


def test_settle_time():
    p = PlantParams(tau_base=0.25, tau_arm=0.05, noise=NoiseParams.zero())
    assert settle_time(p) == pytest.approx(-math.log(0.01) * 0.25, rel=1e-12)
    with pytest.raises(ValueError):
        settle_time(p, fraction=1.5)
