"""Per-axis exponential performance envelope.

Each axis of the tracking error is required to stay inside a tube
|e_nu(t)| < rho_nu(t) that contracts exponentially from rho_nu(0) to a
steady-state radius. The shared contraction rate is derived from the
requested settling time t_p: at t_p the envelope norm has shrunk to within
a small tolerance eps_p of its steady-state norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np

from .geometry import as_vec3


@dataclass(frozen=True)
class EnvelopeParams:
    """Validated envelope: radii rho0 -> rho_inf, rate l_e, settling time t_p."""

    rho0: np.ndarray
    rho_inf: np.ndarray
    l_e: float
    t_p: float
    eps_p: float = field(repr=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "rho0", as_vec3(self.rho0, "rho0"))
        object.__setattr__(self, "rho_inf", as_vec3(self.rho_inf, "rho_inf"))
        if np.any(self.rho_inf <= 0.0) or np.any(self.rho0 <= self.rho_inf):
            raise ValueError("need rho0 > rho_inf > 0 per axis")
        if self.l_e <= 0.0 or self.t_p <= 0.0:
            raise ValueError("l_e and t_p must be positive")


def make_envelope(rho0, rho_inf, t_p: float, e0, eps_scale: float = 0.1) -> EnvelopeParams:
    """Build an envelope whose norm settles to eps_p of steady state at t_p.

    eps_p = eps_scale * ||rho_inf||, and the contraction rate solves
    (||rho0|| - ||rho_inf||) * exp(-l_e * t_p) = eps_p exactly.
    e0 is the initial tracking error; each axis must start strictly inside
    the envelope.
    """
    rho0 = as_vec3(rho0, "rho0")
    rho_inf = as_vec3(rho_inf, "rho_inf")
    e0 = as_vec3(e0, "e0")
    if t_p <= 0.0:
        raise ValueError("t_p must be positive")
    if np.any(rho_inf <= 0.0) or np.any(rho0 <= rho_inf):
        raise ValueError("need rho0 > rho_inf > 0 per axis")
    if np.any(np.abs(e0) >= rho0):
        raise ValueError(
            f"initial error {e0} must lie strictly inside rho0 {rho0}"
        )
    n0 = float(np.linalg.norm(rho0))
    n_inf = float(np.linalg.norm(rho_inf))
    eps_p = eps_scale * n_inf
    if not 0.0 < eps_p < n0 - n_inf:
        raise ValueError(
            f"eps_p {eps_p:.4g} must lie in (0, ||rho0|| - ||rho_inf||)"
        )
    l_e = math.log((n0 - n_inf) / eps_p) / t_p
    return EnvelopeParams(rho0, rho_inf, l_e, t_p, eps_p)


def rho_at(params: EnvelopeParams, t) -> np.ndarray:
    """Envelope radii at time(s) t >= 0; shape (..., 3)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be nonnegative")
    decay = np.exp(-params.l_e * t)[..., None]
    return (params.rho0 - params.rho_inf) * decay + params.rho_inf
