"""Reference allocation: distribute a commanded end-effector velocity
between the vehicle base and the arm platform.

Each control tick we pick joint-space rates x = [v_base, v_plat] that
minimise

    || J x - v_cmd ||^2  +  x' W x

subject to box limits on x.  The quadratic expands to
x' Q x + q' x with Q = J'J + diag(W) and q = -2 J' v_cmd (the constant
term is dropped; it never affects the minimiser).  W is a small damping
weight that breaks the null-space tie between base and platform motion,
biased so the arm absorbs fast corrections while the base does the bulk
travel.

The box is the intersection of three limits:

* hard velocity limits,
* a position barrier v <= k_b (s_hi - s_now) (and mirrored below) that
  scales admissible velocity with remaining travel so references never
  leave the workspace box,
* an acceleration trust region |v - v_prev| <= a_max * dt.

Velocity and position boxes must overlap; if the acceleration box
misses that intersection (after a large disturbance, say) it is doubled
until they meet, which only relaxes the smoothness shaping and never
the hard limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class AllocationInfeasibleError(RuntimeError):
    """Velocity and position-barrier boxes do not intersect."""


def _as_vec6(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (6,):
        raise ValueError(f"{name} must have shape (6,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr.copy()


def default_weights() -> np.ndarray:
    """Damping weights: base motion costs 20x platform motion."""
    return np.array([1.0, 1.0, 1.0, 0.05, 0.05, 0.05]) * 1e-2


@dataclass(frozen=True)
class BoundsModel:
    """Box limits on the stacked reference vector [p_base, p_plat].

    Positions: ``pos_lo``/``pos_hi`` bound the base in the world frame
    (first three entries) and the platform in the arm frame (last
    three).  ``vel_max`` and ``acc_max`` are symmetric magnitude limits
    on reference rates and their tick-to-tick change.  ``barrier_gain``
    converts remaining travel into an admissible approach speed.
    """

    pos_lo: np.ndarray
    pos_hi: np.ndarray
    vel_max: np.ndarray
    acc_max: np.ndarray
    barrier_gain: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "pos_lo", _as_vec6(self.pos_lo, "pos_lo"))
        object.__setattr__(self, "pos_hi", _as_vec6(self.pos_hi, "pos_hi"))
        object.__setattr__(self, "vel_max", _as_vec6(self.vel_max, "vel_max"))
        object.__setattr__(self, "acc_max", _as_vec6(self.acc_max, "acc_max"))
        if np.any(self.pos_lo >= self.pos_hi):
            raise ValueError("pos_lo must be strictly below pos_hi")
        if np.any(self.vel_max <= 0.0) or np.any(self.acc_max <= 0.0):
            raise ValueError("vel_max and acc_max must be positive")
        if self.barrier_gain <= 0.0:
            raise ValueError("barrier_gain must be positive")


@dataclass(frozen=True)
class AllocationProblem:
    """One tick's quadratic program: minimise x'Qx + q'x over lo <= x <= hi."""

    q_mat: np.ndarray
    q_lin: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_inflations: int = 0


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray
    iterations: int
    kkt_residual: float
    converged: bool


def objective(prob: AllocationProblem, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ prob.q_mat @ x + prob.q_lin @ x)


def assemble(
    bounds: BoundsModel,
    j: np.ndarray,
    drift: np.ndarray,
    v_cmd: np.ndarray,
    s_now: np.ndarray,
    v_prev: np.ndarray,
    dt: float,
    weights: np.ndarray | None = None,
) -> AllocationProblem:
    """Build the tick QP.

    ``v_cmd`` is the desired end-effector velocity in the world frame;
    the base-rotation drift is subtracted here so the solved rates only
    need to produce the remainder.  ``s_now`` is the current stacked
    reference position and ``v_prev`` the rates chosen last tick.
    """
    if weights is None:
        weights = default_weights()
    weights = _as_vec6(weights, "weights")
    if np.any(weights < 0.0):
        raise ValueError("weights must be nonnegative")
    j = np.asarray(j, dtype=float)
    if j.shape != (3, 6):
        raise ValueError(f"j must have shape (3, 6), got {j.shape}")
    s_now = _as_vec6(s_now, "s_now")
    v_prev = _as_vec6(v_prev, "v_prev")
    dt = float(dt)
    if dt <= 0.0:
        raise ValueError("dt must be positive")

    return _assemble(bounds, j, drift, np.asarray(v_cmd, dtype=float), s_now, v_prev, dt, weights)


def _assemble(bounds, j, drift, v_cmd, s_now, v_prev, dt, weights):
    v_star = v_cmd - drift
    q_mat = j.T @ j
    q_mat.flat[:: q_mat.shape[0] + 1] += weights
    q_lin = -2.0 * (v_star @ j)

    lo = np.maximum(-bounds.vel_max, bounds.barrier_gain * (bounds.pos_lo - s_now))
    hi = np.minimum(bounds.vel_max, bounds.barrier_gain * (bounds.pos_hi - s_now))
    if np.any(lo > hi):
        bad = np.nonzero(lo > hi)[0]
        raise AllocationInfeasibleError(
            f"velocity and position boxes disjoint on axes {bad.tolist()}; "
            "reference has left the workspace box"
        )

    half = bounds.acc_max * dt
    n_inflations = 0
    while True:
        lo_a = np.maximum(lo, v_prev - half)
        hi_a = np.minimum(hi, v_prev + half)
        if np.all(lo_a <= hi_a):
            break
        half = half * 2.0
        n_inflations += 1
        if n_inflations > 60:
            # 2^60 times the base width covers any float range that
            # matters; falling through keeps the hard boxes intact.
            lo_a, hi_a = lo, hi
            break
    return AllocationProblem(q_mat=q_mat, q_lin=q_lin, lo=lo_a, hi=hi_a, n_inflations=n_inflations)


def solve(prob: AllocationProblem, x0=None, tol: float = 1e-8, max_iter: int = 100) -> QPSolution:
    """Solve the tick QP, warm-starting from ``x0`` (clipped into the box)."""
    if x0 is None:
        x0 = np.zeros(prob.q_lin.shape[0])
    x, iters, resid = _kernels.solve_box_qp(
        prob.q_mat, prob.q_lin, prob.lo, prob.hi, x0, tol=tol, max_iter=max_iter
    )
    return QPSolution(x=x, iterations=iters, kkt_residual=float(resid), converged=resid <= tol)


def integrate_references(s_now: np.ndarray, rates: np.ndarray, dt: float) -> np.ndarray:
    """Advance the stacked reference positions one tick at the solved rates."""
    return np.asarray(s_now, dtype=float) + np.asarray(rates, dtype=float) * float(dt)
