"""Velocity-level tracking law that steers the error onto the preset path.

With z = e_E - alpha and s = z + Lambda * integral(z), the commanded
end-effector velocity is

    cmd = p_O_dot + alpha_dot - Lambda z - K s

Against a bounded velocity-level disturbance ||delta|| <= delta_e the
closed loop keeps ||s|| <= delta_e / min(K) and the integral bounded,
which yields the steady tracking-error bound returned by delta_z_bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import as_diag_gain, as_vec3


@dataclass(frozen=True)
class TrackingGains:
    """Diagonal gains Lambda and K plus the assumed disturbance bound."""

    lam: np.ndarray
    k: np.ndarray
    delta_e: float

    def __post_init__(self):
        object.__setattr__(self, "lam", as_diag_gain(self.lam, "lam"))
        object.__setattr__(self, "k", as_diag_gain(self.k, "k"))
        if self.delta_e <= 0.0:
            raise ValueError("delta_e must be positive")


@dataclass(frozen=True)
class TrackingState:
    """Integrator state of the law; fresh_state() gives the t = 0 value.

    Instances are produced by control_step itself every tick, so the
    fields are stored as handed in; build by hand only with float
    (3,) arrays.
    """

    z_int: np.ndarray
    z_prev: np.ndarray
    t: float


def fresh_state() -> TrackingState:
    return TrackingState(np.zeros(3), np.zeros(3), 0.0)


def delta_z_bound(gains: TrackingGains) -> float:
    """Guaranteed bound on ||e_E - alpha|| under the assumed disturbance."""
    lam_min = float(gains.lam.min())
    lam_max = float(gains.lam.max())
    k_min = float(gains.k.min())
    return (lam_min + lam_max) * gains.delta_e / (lam_min * k_min)


def control_step(
    gains: TrackingGains,
    state: TrackingState,
    e_e,
    p_o_dot,
    alpha,
    alpha_dot,
    dt: float,
):
    """One control tick; returns (cmd, s, new_state).

    The integral of z uses the trapezoid rule one sample behind: the
    increment for [t - dt, t] is applied when the sample at t arrives, so
    s at time t uses the integral accumulated through the previous sample.
    """
    e_e = as_vec3(e_e, "e_e")
    p_o_dot = as_vec3(p_o_dot, "p_o_dot")
    alpha = as_vec3(alpha, "alpha")
    alpha_dot = as_vec3(alpha_dot, "alpha_dot")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return _step(gains.lam, gains.k, state, e_e, p_o_dot, alpha, alpha_dot, dt)


def _step(lam, k, state, e_e, p_o_dot, alpha, alpha_dot, dt):
    z = e_e - alpha
    s = z + lam * state.z_int
    cmd = p_o_dot + alpha_dot - lam * z - k * s
    z_int = state.z_int + 0.5 * dt * (state.z_prev + z)
    return cmd, s, TrackingState(z_int, z, state.t + dt)


def clik_velocity(k_clik, e_e, p_o_dot) -> np.ndarray:
    """Plain closed-loop inverse-kinematics baseline: cmd = p_O_dot - K e."""
    k_clik = as_diag_gain(k_clik, "k_clik")
    return as_vec3(p_o_dot, "p_o_dot") - k_clik * as_vec3(e_e, "e_e")
