"""Preset error trajectory: the smooth path the tracking error is steered along.

Per axis the trajectory is

    alpha(t) = (b / c) * (1 - exp(-c t)) * exp(-l_e t) + e0 * exp(-l_e t)

with b = l_e * e0 + e0_dot, so alpha(0) = e0, alpha_dot(0) = e0_dot, and
alpha -> 0 at rate l_e. The free rate c shapes how fast the initial error
velocity is bent onto the decaying path. choose_c picks c so that alpha
stays inside the envelope with a clearance margin (sufficient condition:
c > |b| / (rho0 - margin - |e0|), applied per axis).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envelope import EnvelopeParams
from .geometry import as_vec3


@dataclass(frozen=True)
class PresetTrajectory:
    """Per-axis preset trajectory coefficients at a shared rate l_e."""

    e0: np.ndarray
    e0_dot: np.ndarray
    c: np.ndarray
    l_e: float
    b: np.ndarray = field(init=False)
    # Clearance margin alpha was constructed to respect, None if c was
    # supplied externally and no containment guarantee is claimed.
    margin: float | None = None
    rho0: np.ndarray | None = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "e0", as_vec3(self.e0, "e0"))
        object.__setattr__(self, "e0_dot", as_vec3(self.e0_dot, "e0_dot"))
        object.__setattr__(self, "c", as_vec3(np.broadcast_to(self.c, (3,)), "c"))
        if self.l_e <= 0.0:
            raise ValueError("l_e must be positive")
        if np.any(self.c <= 0.0):
            raise ValueError("c must be positive per axis")
        object.__setattr__(self, "b", self.l_e * self.e0 + self.e0_dot)
        if self.margin is not None:
            if self.rho0 is None:
                raise ValueError("margin given without rho0")
            rho0 = as_vec3(self.rho0, "rho0")
            object.__setattr__(self, "rho0", rho0)
            gap = rho0 - self.margin - np.abs(self.e0)
            if self.margin <= 0.0 or np.any(gap <= 0.0):
                raise ValueError("margin must satisfy 0 < margin < rho0 - |e0|")
            ok = self.c * gap > np.abs(self.b)
            ok |= np.abs(self.b) == 0.0
            if not np.all(ok):
                raise ValueError(
                    f"c {self.c} too small for containment margin {self.margin}"
                )


def choose_c(
    env: EnvelopeParams,
    e0,
    e0_dot,
    margin: float,
    safety: float = 1.1,
) -> np.ndarray:
    """Smallest-by-construction c meeting the containment condition.

    margin is the clearance kept between |alpha| and the envelope,
    normally the guaranteed tracking-error bound of the closed loop.
    safety > 1 makes the sufficient condition strict.
    """
    e0 = as_vec3(e0, "e0")
    e0_dot = as_vec3(e0_dot, "e0_dot")
    if safety < 1.0:
        raise ValueError("safety must be >= 1")
    if margin <= 0.0 or np.any(margin >= env.rho_inf):
        raise ValueError(
            f"margin {margin:.4g} must lie in (0, min rho_inf {env.rho_inf.min():.4g})"
        )
    gap = env.rho0 - margin - np.abs(e0)
    if np.any(gap <= 0.0):
        raise ValueError(
            f"margin {margin:.4g} leaves no clearance: rho0 {env.rho0}, |e0| {np.abs(e0)}"
        )
    b = env.l_e * e0 + e0_dot
    c = np.where(b != 0.0, safety * np.abs(b) / gap, safety * env.l_e)
    return c


def alpha_at(traj: PresetTrajectory, t):
    """Trajectory value and first two time derivatives at t >= 0.

    t may be a scalar or an array; returns (alpha, alpha_dot, alpha_ddot)
    with shape (..., 3). Uses expm1 so small c stays well conditioned.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be nonnegative")
    tt = t[..., None]
    b, c, e0, l_e = traj.b, traj.c, traj.e0, traj.l_e
    decay = np.exp(-l_e * tt)
    ect = np.exp(-c * tt)
    # g = (1 - exp(-c t)) / c, finite as c -> 0
    g = -np.expm1(-c * tt) / c
    alpha = (b * g + e0) * decay
    alpha_dot = (b * (ect - l_e * g) - l_e * e0) * decay
    alpha_ddot = (b * (l_e * l_e * g - (2.0 * l_e + c) * ect) + l_e * l_e * e0) * decay
    return alpha, alpha_dot, alpha_ddot
