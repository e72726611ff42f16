"""Desk-scale plant surrogate and sensor model.

The closed-loop studies here are kinematic: the autopilot and the arm
servo controllers are assumed to track position references with
first-order lag, so the plant state is just the reference-following
poses themselves.  State and reference are packed as 7-vectors

    [p_base (world, 3), yaw, q_joints (3)]

and every substep applies the exact discrete solution of
dx/dt = (ref - x) / tau, i.e. x' = ref + (x - ref) * exp(-dt/tau).
Yaw additionally respects a slew-rate limit, which is what makes the
base-rotation drift term in the differential kinematics worth
compensating.  Substeps are capped at tau_arm / 5 so the rate limit and
the forward-kinematics sampling see a smooth trajectory.

The gap between commanded and realized end-effector velocity that
emerges from these lags is the disturbance the tracking law is sized
against; ``delta_cap`` is the diagnostic threshold the harness checks
the realized gap against after every run.

The sensor model draws from a counter-based generator (Philox) keyed by
the run seed with the control step index in the counter, so every
measurement is a pure function of (seed, step): runs replay identically
regardless of process history, and batch workers need no shared RNG
state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .delta_arm import DeltaGeometry, UnreachableError
from .geometry import as_vec3, axis_angle_rotation, yaw_rotation


@dataclass(frozen=True)
class NoiseParams:
    """Measurement noise magnitudes.

    ``sigma_pos`` (m) is per-axis white noise on both the base position
    fix and the platform position.  ``sigma_gyro`` (rad/s^2) is rate
    random walk: over a sample interval dt it produces a rate error of
    ``sigma_gyro * dt`` and, integrated once more, an attitude tilt of
    ``sigma_gyro * dt^2``; the same draw feeds both so rate and attitude
    errors are correlated the way a strapdown filter's are.
    ``sigma_accel`` (m/s^2) describes the accelerometer channel of the
    same sensor suite; the kinematic loop never consumes accelerations,
    so it is carried for config fidelity and ignored here.  ``seed``
    keys the noise stream; batch runs combine it with the run index via
    ``derive_seed``.
    """

    sigma_pos: float = 1e-4
    sigma_gyro: float = 0.02
    sigma_accel: float = 0.04
    seed: int = 0

    def __post_init__(self):
        if self.sigma_pos < 0.0 or self.sigma_gyro < 0.0 or self.sigma_accel < 0.0:
            raise ValueError("noise magnitudes must be nonnegative")

    @classmethod
    def zero(cls, seed: int = 0) -> "NoiseParams":
        return cls(sigma_pos=0.0, sigma_gyro=0.0, sigma_accel=0.0, seed=seed)


@dataclass(frozen=True)
class PlantParams:
    """First-order lag constants, simulation step and noise model.

    ``tau_base`` applies to base translation and yaw, ``tau_arm`` to the
    arm joints; ``yaw_rate_limit`` is the yaw slew cap in rad/s.  ``dt``
    is the plant substep, capped at tau_arm / 5 so the fastest lag is
    resolved.  ``delta_cap`` (m/s) is the command-following gap the
    harness flags when exceeded.
    """

    tau_base: float = 0.25
    tau_arm: float = 0.05
    yaw_rate_limit: float = 2.0
    dt: float = 0.001
    delta_cap: float = 0.01
    noise: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        if self.tau_base <= 0.0 or self.tau_arm <= 0.0:
            raise ValueError("time constants must be positive")
        if self.yaw_rate_limit <= 0.0:
            raise ValueError("yaw_rate_limit must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.dt > self.tau_arm / 5.0 * (1.0 + 1e-9):
            raise ValueError(
                f"plant dt {self.dt:.4g} exceeds tau_arm/5 = {self.tau_arm / 5.0:.4g}"
            )
        if self.delta_cap <= 0.0:
            raise ValueError("delta_cap must be positive")


def pack_state(p_base, yaw: float, q) -> np.ndarray:
    """Pack base position, yaw and joint angles into the 7-vector layout."""
    vec = np.empty(7)
    vec[:3] = as_vec3(p_base, "p_base")
    vec[3] = float(yaw)
    vec[4:] = as_vec3(q, "q")
    return vec


def unpack_state(vec) -> tuple[np.ndarray, float, np.ndarray]:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (7,):
        raise ValueError(f"plant state must have shape (7,), got {vec.shape}")
    return vec[:3].copy(), float(vec[3]), vec[4:].copy()


def plant_advance(
    params: PlantParams,
    geom: DeltaGeometry,
    state: np.ndarray,
    refs: np.ndarray,
    n_sub: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Advance the plant ``n_sub`` substeps of ``params.dt`` toward ``refs``.

    Returns ``(new_state, p_plat, yaw_rate)`` where ``p_plat`` is the
    platform position from forward kinematics at the final state and
    ``yaw_rate`` the average yaw rate over the advance (the gyro truth).
    """
    state = np.asarray(state, dtype=float)
    refs = np.asarray(refs, dtype=float)
    if state.shape != (7,) or refs.shape != (7,):
        raise ValueError("state and refs must have shape (7,)")
    if not np.all(np.isfinite(refs)):
        raise ValueError("refs must be finite")
    n_sub = int(n_sub)
    if n_sub < 1:
        raise ValueError("n_sub must be at least 1")
    status, new_state, p_plat, yaw_rate = _kernels.plant_advance(
        state,
        refs,
        params.tau_base,
        params.tau_arm,
        params.yaw_rate_limit,
        geom.r_eff,
        geom.upper_arm,
        geom.forearm,
        params.dt,
        n_sub,
    )
    if status != 0:
        raise UnreachableError(f"joint state {new_state[4:]} has no platform solution")
    return new_state, p_plat, float(yaw_rate)


@dataclass(frozen=True)
class Measurement:
    """One tick's sensor output: what the controller gets to see."""

    p_base: np.ndarray
    r_base: np.ndarray
    p_plat: np.ndarray
    omega: np.ndarray


class NoiseStream:
    """Per-step noise draws without rebuilding the generator each tick.

    The draw for step ``k`` is defined as the first nine standard
    normals of ``Philox(key=seed, counter=[0, 0, 0, k])``.  Constructing
    the bit generator fresh every tick costs more than the draw itself,
    so this holds one generator and resets its counter state in place;
    the output is bit-identical to fresh construction.
    """

    def __init__(self, seed: int):
        self._bg = np.random.Philox(key=seed)
        self._gen = np.random.Generator(self._bg)
        self._template = self._bg.state

    def draws(self, step: int) -> np.ndarray:
        if step < 0:
            raise ValueError("step must be nonnegative")
        st = self._template
        st["state"]["counter"][3] = step
        self._bg.state = st
        return self._gen.standard_normal(9)


def _apply_noise(
    noise: NoiseParams,
    p_base: np.ndarray,
    r_true: np.ndarray,
    p_plat: np.ndarray,
    yaw_rate: float,
    dt: float,
    draws: np.ndarray,
) -> Measurement:
    gyro = draws[6:9]
    omega_true = np.array([0.0, 0.0, yaw_rate])
    if noise.sigma_gyro > 0.0:
        r_meas = axis_angle_rotation(noise.sigma_gyro * dt * dt * gyro) @ r_true
        omega = omega_true + noise.sigma_gyro * dt * gyro
    else:
        r_meas = r_true
        omega = omega_true
    return Measurement(
        p_base=p_base + noise.sigma_pos * draws[0:3],
        r_base=r_meas,
        p_plat=p_plat + noise.sigma_pos * draws[3:6],
        omega=omega,
    )


def measure(
    noise: NoiseParams,
    p_base: np.ndarray,
    yaw: float,
    p_plat: np.ndarray,
    yaw_rate: float,
    dt: float,
    seed: int,
    step: int,
) -> Measurement:
    """Corrupt the true rig pose with one tick's sensor noise.

    ``dt`` is the interval between measurements (the control period over
    which rate noise integrates).  ``seed`` keys the noise stream and
    ``step`` indexes the control tick; together they fully determine the
    draw.  Nine standard normals are consumed per call: three for the
    base fix, three for the platform position, three shared between the
    rate measurement and the attitude tilt.
    """
    r_true = yaw_rotation(yaw)
    if noise.sigma_pos == 0.0 and noise.sigma_gyro == 0.0:
        return Measurement(
            p_base=np.asarray(p_base, dtype=float).copy(),
            r_base=r_true,
            p_plat=np.asarray(p_plat, dtype=float).copy(),
            omega=np.array([0.0, 0.0, yaw_rate]),
        )
    if step < 0:
        raise ValueError("step must be nonnegative")
    dt = float(dt)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, step]))
    return _apply_noise(
        noise,
        np.asarray(p_base, dtype=float),
        r_true,
        np.asarray(p_plat, dtype=float),
        yaw_rate,
        dt,
        rng.standard_normal(9),
    )


def derive_seed(base_seed: int, run_index: int) -> int:
    """Stable per-run noise key for batch studies.

    Spreads run indices far apart in key space so streams from
    different runs of the same scenario never collide.
    """
    return (int(base_seed) * 1_000_003 + int(run_index)) % (1 << 63)


def hover_state(geom: DeltaGeometry, p_base, yaw: float = 0.0, p_plat=None) -> np.ndarray:
    """Plant state with the platform at a given arm-frame position.

    Defaults to the centre of the usable workspace shelf below the
    plate, which keeps all three joints well inside their limits.
    """
    from .delta_arm import delta_ik

    if p_plat is None:
        p_plat = np.array([0.0, 0.0, 0.29])
    q = delta_ik(geom, p_plat)
    return pack_state(p_base, yaw, q)


def settle_time(params: PlantParams, fraction: float = 0.01) -> float:
    """Time for the slowest lag to decay to ``fraction`` of an offset."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    return -math.log(fraction) * max(params.tau_base, params.tau_arm)
