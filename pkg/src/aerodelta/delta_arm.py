"""Delta arm kinematics and the combined base-plus-arm chain.

The arm is a three-limb parallel delta: each upper arm of length ``l_a``
is driven by a revolute joint on the base plate, and connects through a
parallelogram forearm of length ``l_f`` to the moving platform.  Joint
azimuths sit at 0, 120 and 240 degrees.  Because the forearm
parallelograms keep the platform parallel to the base plate, the
platform centre is the intersection of three spheres of radius ``l_f``
centred at the elbow points, shifted radially inward by the platform
radius.  Positive joint angles swing the elbows toward +z (downward,
since the z axis of every frame here points along gravity), so the
reachable workspace hangs below the base plate at positive z in the
arm frame.

Module-level ``delta_fk``/``delta_ik`` wrap the numeric kernels with
geometry handling and error reporting; the kernels themselves live in
``aerodelta._kernels`` and carry no notion of joint limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import as_vec3, check_rotation, skew


class UnreachableError(ValueError):
    """Requested platform position is outside the arm workspace."""


class JointLimitError(ValueError):
    """Kinematics are solvable but violate the configured joint limits."""


@dataclass(frozen=True)
class DeltaGeometry:
    """Dimensions of the delta arm, all in metres / radians."""

    base_radius: float = 0.10
    platform_radius: float = 0.035
    upper_arm: float = 0.14
    forearm: float = 0.28
    joint_min: float = -1.2
    joint_max: float = 1.9

    def __post_init__(self):
        for name in ("base_radius", "platform_radius", "upper_arm", "forearm"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.platform_radius >= self.base_radius:
            raise ValueError("platform_radius must be smaller than base_radius")
        if self.joint_min >= self.joint_max:
            raise ValueError("joint_min must be below joint_max")

    @property
    def r_eff(self) -> float:
        """Effective radius: base joint circle minus platform attachment circle."""
        return self.base_radius - self.platform_radius


@dataclass(frozen=True)
class MountingConfig:
    """Pose of the arm base plate in the vehicle body frame.

    ``r_arm`` rotates arm-frame vectors into the body frame and
    ``offset`` is the plate centre expressed in the body frame.  The
    default hangs the plate 12 cm below the body origin with axes
    aligned.
    """

    r_arm: np.ndarray = field(default_factory=lambda: np.eye(3))
    offset: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.12]))

    def __post_init__(self):
        object.__setattr__(self, "r_arm", check_rotation(self.r_arm, "r_arm"))
        object.__setattr__(self, "offset", as_vec3(self.offset, "offset"))


def delta_fk(geom: DeltaGeometry, q, check_limits: bool = True) -> np.ndarray:
    """Platform centre in the arm frame for joint angles ``q`` (3,)."""
    q = as_vec3(q, "q")
    if check_limits and (np.any(q < geom.joint_min) or np.any(q > geom.joint_max)):
        raise JointLimitError(f"joint angles {q} outside [{geom.joint_min}, {geom.joint_max}]")
    status, p = _kernels.delta_fk(geom.r_eff, geom.upper_arm, geom.forearm, q)
    if status != 0:
        raise UnreachableError(f"forearm spheres do not intersect for q={q}")
    return p


def delta_ik(geom: DeltaGeometry, p, check_limits: bool = True) -> np.ndarray:
    """Joint angles reaching platform position ``p`` in the arm frame.

    Uses the elbow-out branch throughout; raises UnreachableError when a
    limb cannot span the target and JointLimitError when the solution
    exists but leaves the joint range.
    """
    p = as_vec3(p, "p")
    status, q = _kernels.delta_ik(geom.r_eff, geom.upper_arm, geom.forearm, p)
    if status != 0:
        raise UnreachableError(f"platform position {p} outside workspace")
    if check_limits and (np.any(q < geom.joint_min) or np.any(q > geom.joint_max)):
        raise JointLimitError(f"solution {q} outside [{geom.joint_min}, {geom.joint_max}]")
    return q


@dataclass
class RigState:
    """Pose of the full rig: base position/yaw plus arm platform position.

    ``p_base`` is the vehicle position in the world frame, ``yaw`` its
    heading (the vehicle is treated as yaw-only: pitch and roll average
    out at the slow lateral accelerations this controller commands), and
    ``p_plat`` the platform centre in the arm frame.
    """

    p_base: np.ndarray
    yaw: float
    p_plat: np.ndarray

    def __post_init__(self):
        self.p_base = as_vec3(self.p_base, "p_base")
        self.yaw = float(self.yaw)
        self.p_plat = as_vec3(self.p_plat, "p_plat")


def composite_fk(state: RigState, mount: MountingConfig, r_base: np.ndarray) -> np.ndarray:
    """End-effector position in the world frame.

    ``r_base`` rotates body-frame vectors into the world frame.  The
    end effector is taken at the platform centre; a tool offset can be
    folded into ``state.p_plat`` by the caller.
    """
    p_e_body = mount.r_arm @ state.p_plat + mount.offset
    return state.p_base + r_base @ p_e_body


def jacobian(mount: MountingConfig, r_base: np.ndarray, p_plat, omega_body=None):
    """Velocity map of the composite chain.

    Returns ``(J, drift)`` where the end-effector velocity is
    ``J @ [v_base, v_plat] + drift``: J is 3x6, its left block the
    identity (base translation passes straight through) and its right
    block ``r_base @ r_arm`` (platform rates expressed in the arm frame).
    ``drift`` is the velocity contributed by base rotation at angular
    rate ``omega_body`` (world frame, rad/s); zero when omitted.
    """
    p_plat = as_vec3(p_plat, "p_plat")
    j = np.empty((3, 6))
    j[:, :3] = np.eye(3)
    j[:, 3:] = r_base @ mount.r_arm
    if omega_body is None:
        drift = np.zeros(3)
    else:
        omega_body = as_vec3(omega_body, "omega_body")
        p_e_body = mount.r_arm @ p_plat + mount.offset
        drift = -skew(r_base @ p_e_body) @ omega_body
    return j, drift
