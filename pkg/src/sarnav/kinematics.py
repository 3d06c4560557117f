"""Attitude algebra and linear navigation-error propagation.

Conventions
-----------
* Navigation frame: x along the velocity, z down (direction of gravity),
  y completes the right-handed triad (along-track, cross-track, down).
* Quaternions are numpy arrays ordered ``(w, x, y, z)`` and multiplied
  with the Hamilton product.  They are *left-handed*: the quaternion that
  describes a rotation by angle ``a`` about unit axis ``n`` is
  ``[cos(a/2), -sin(a/2) n]``.  :func:`quat_to_dcm` returns the matrix
  ``T(q)`` with ``T(q) v = vec(q ⊗ [0, v] ⊗ q*)``, which is multiplicative
  (``T(a ⊗ b) = T(a) T(b)``).  Under these conventions the attitude error
  defined by ``q ⊗ q̂* = [1, -δθ/2]`` agrees with the DCM form
  ``T T̂ᵀ = I - [δθ×]``.
* The error state is ``δx = (δp, δv, δθ)`` with ``δp = p - p̂`` and
  ``δv = v - v̂``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LargeAngleError

#: Largest attitude error (rad) accepted by the linearised model, inclusive.
MAX_ATTITUDE_ERROR = 0.5

DEFAULT_G = 9.81


def _vec3(v, name: str) -> np.ndarray:
    arr = np.array(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


def skew(v) -> np.ndarray:
    """Cross-product matrix ``[v×]`` so that ``skew(a) @ b == a × b``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


# ---------------------------------------------------------------------------
# Quaternions
# ---------------------------------------------------------------------------

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def quat_conj(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_product(a, b) -> np.ndarray:
    """Hamilton product ``a ⊗ b`` of two ``(w, x, y, z)`` quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Left-handed quaternion for a rotation of ``angle`` rad about ``axis``."""
    n = np.asarray(axis, dtype=np.float64)
    n = n / np.linalg.norm(n)
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], -np.sin(half) * n))


def quat_to_dcm(q) -> np.ndarray:
    """Direction cosine matrix of a unit quaternion.

    The matrix reproduces the sandwich product: ``quat_to_dcm(q) @ v`` equals
    the vector part of ``q ⊗ [0, v] ⊗ q*``.
    """
    w, x, y, z = q
    return np.array([
        [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
    ])


def quat_rotate(q, v) -> np.ndarray:
    """Vector part of ``q ⊗ [0, v] ⊗ q*``."""
    p = np.concatenate(([0.0], np.asarray(v, dtype=np.float64)))
    return quat_product(quat_product(q, p), quat_conj(q))[1:]


def attitude_error(q_true, q_est) -> np.ndarray:
    """Attitude error ``δθ`` from true and estimated attitude quaternions.

    Solves ``q_true ⊗ q_est* = [1, -δθ/2]`` after forcing a non-negative
    scalar part (``q`` and ``-q`` describe the same attitude).

    Raises
    ------
    LargeAngleError
        If the relative rotation exceeds :data:`MAX_ATTITUDE_ERROR`.
    """
    dq = quat_product(q_true, quat_conj(q_est))
    dq = dq / np.linalg.norm(dq)
    if dq[0] < 0:
        dq = -dq
    angle = 2.0 * np.arctan2(np.linalg.norm(dq[1:]), dq[0])
    if angle > MAX_ATTITUDE_ERROR:
        raise LargeAngleError(
            f"relative rotation {angle:.6g} rad exceeds {MAX_ATTITUDE_ERROR} rad"
        )
    return -2.0 * dq[1:]


def attitude_error_from_dcm(t_true, t_est) -> np.ndarray:
    """Attitude error from DCMs via ``I - T T̂ᵀ ≈ [δθ×]`` (skew part)."""
    m = np.eye(3) - np.asarray(t_true) @ np.asarray(t_est).T
    s = 0.5 * (m - m.T)
    return np.array([s[2, 1], s[0, 2], s[1, 0]])


# ---------------------------------------------------------------------------
# Error state and its propagation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorState:
    """Initial navigation errors: position (m), velocity (m/s), attitude (rad)."""

    dp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dv: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dtheta: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "dp", _vec3(self.dp, "dp"))
        object.__setattr__(self, "dv", _vec3(self.dv, "dv"))
        object.__setattr__(self, "dtheta", _vec3(self.dtheta, "dtheta"))
        mag = float(np.linalg.norm(self.dtheta))
        if mag > MAX_ATTITUDE_ERROR:
            raise LargeAngleError(
                f"|dtheta| = {mag:.6g} rad exceeds {MAX_ATTITUDE_ERROR} rad"
            )

    @classmethod
    def zero(cls) -> "ErrorState":
        return cls()

    @classmethod
    def from_vector(cls, x) -> "ErrorState":
        x = np.asarray(x, dtype=np.float64).reshape(9)
        return cls(x[0:3], x[3:6], x[6:9])

    def as_vector(self) -> np.ndarray:
        return np.concatenate((self.dp, self.dv, self.dtheta))

    def scaled(self, factor: float) -> "ErrorState":
        return ErrorState.from_vector(factor * self.as_vector())

    def is_zero(self) -> bool:
        return not np.any(self.as_vector())


@dataclass(frozen=True)
class FlightParams:
    """Straight-and-level flight: true initial velocity and gravity magnitude."""

    v0: np.ndarray = field(default_factory=lambda: np.array([100.0, 0.0, 0.0]))
    g: float = DEFAULT_G

    def __post_init__(self):
        object.__setattr__(self, "v0", _vec3(self.v0, "v0"))
        object.__setattr__(self, "g", float(self.g))
        if not np.linalg.norm(self.v0) > 0:
            raise ValueError("v0 must be non-zero")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")

    @property
    def nu_n(self) -> np.ndarray:
        """Specific force in the navigation frame, ``(0, 0, -g)``."""
        return np.array([0.0, 0.0, -self.g])

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v0))


def dynamics_matrix(params: FlightParams) -> np.ndarray:
    """Constant 9x9 error dynamics matrix ``F`` for straight-and-level flight."""
    f = np.zeros((9, 9))
    f[0:3, 3:6] = np.eye(3)
    f[3:6, 6:9] = skew(params.nu_n)
    return f


def build_stm(dt: float, params: FlightParams) -> np.ndarray:
    """State transition matrix ``Φ(t + dt, t) = exp(F dt)``.

    ``F`` is nilpotent of order three, so the series terminates::

        [[I, I dt, [ν×] dt²/2],
         [0, I,    [ν×] dt   ],
         [0, 0,    I         ]]
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    nu = skew(params.nu_n)
    phi = np.eye(9)
    phi[0:3, 3:6] = dt * np.eye(3)
    phi[0:3, 6:9] = nu * (0.5 * dt * dt)
    phi[3:6, 6:9] = nu * dt
    return phi


def propagate_error_state(e0: ErrorState, dt: float, params: FlightParams) -> ErrorState:
    """Homogeneous propagation ``δx(dt) = Φ(dt) δx₀`` (IMU noise ignored).

    Φ is applied block by block, so the position part is bitwise identical to
    :func:`position_error_closed_form`.
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    acc = accel_error_from_attitude(e0.dtheta, params.g)
    dp = position_error_closed_form(e0, dt, params)
    dv = e0.dv + acc * dt
    return ErrorState(dp, dv, e0.dtheta)


def accel_error_from_attitude(dtheta0, g: float = DEFAULT_G) -> np.ndarray:
    """Acceleration error ``ν × δθ₀ = (g δθ_y, -g δθ_x, 0)``.

    Yaw never enters: the third component is exactly zero.
    """
    if not g > 0:
        raise ValueError(f"g must be positive, got {g}")
    dtx, dty, _ = np.asarray(dtheta0, dtype=np.float64)
    return np.array([dty * g, -dtx * g, 0.0])


def position_error_closed_form(e0: ErrorState, dt, params: FlightParams) -> np.ndarray:
    """Closed-form position error ``δp₀ + δv₀ dt + (ν×δθ₀) dt²/2``.

    ``dt`` may be a scalar or an array of times, in which case the result has
    shape ``(len(dt), 3)``.
    """
    dt = np.asarray(dt, dtype=np.float64)
    if np.any(dt < 0):
        raise ValueError("dt must be non-negative")
    acc = accel_error_from_attitude(e0.dtheta, params.g)
    t = dt[..., None]
    return e0.dp + e0.dv * t + acc * (t * t / 2)
