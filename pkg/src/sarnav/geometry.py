"""Targets, slow-time sampling, platform trajectories and slant range."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EdgeMinimumError
from .kinematics import ErrorState, FlightParams, position_error_closed_form


@dataclass(frozen=True)
class Target:
    """Point scatterer in the navigation frame (z down, so ground targets have z > 0)."""

    position: np.ndarray
    amplitude: float = 1.0

    def __post_init__(self):
        p = np.array(self.position, dtype=np.float64).reshape(-1)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError(f"target position must be 3 finite values, got {self.position}")
        p.setflags(write=False)
        object.__setattr__(self, "position", p)
        a = float(self.amplitude)
        if not (np.isfinite(a) and a >= 0):
            raise ValueError(f"target amplitude must be finite and >= 0, got {a}")
        object.__setattr__(self, "amplitude", a)


@dataclass(frozen=True)
class SlowTimeGrid:
    """Uniform pulse times ``eta_k = k / prf`` for ``k = 0 .. n_pulses-1``."""

    prf: float
    n_pulses: int

    def __post_init__(self):
        if not self.prf > 0:
            raise ValueError(f"prf must be positive, got {self.prf}")
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 2:
            raise ValueError(f"n_pulses must be an integer >= 2, got {self.n_pulses}")
        object.__setattr__(self, "prf", float(self.prf))
        object.__setattr__(self, "n_pulses", int(self.n_pulses))

    @property
    def eta(self) -> np.ndarray:
        return np.arange(self.n_pulses) / self.prf

    @property
    def duration(self) -> float:
        return (self.n_pulses - 1) / self.prf


@dataclass(frozen=True)
class Trajectory:
    """Per-pulse platform positions, either truth or error-corrupted."""

    kind: str
    eta: np.ndarray
    positions: np.ndarray
    v0: np.ndarray
    error: ErrorState = field(default_factory=ErrorState.zero)

    def __post_init__(self):
        if self.kind not in ("truth", "corrupted"):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.positions.shape != (self.eta.size, 3):
            raise ValueError("positions must have shape (n_pulses, 3)")
        for a in (self.eta, self.positions):
            a.setflags(write=False)

    @property
    def n_pulses(self) -> int:
        return self.eta.size


def truth_trajectory(params: FlightParams, grid: SlowTimeGrid) -> Trajectory:
    """Constant-velocity track ``p(eta) = v0 * eta`` starting at the origin."""
    eta = grid.eta
    positions = eta[:, None] * params.v0
    return Trajectory("truth", eta, positions, params.v0)


def corrupted_trajectory(params: FlightParams, grid: SlowTimeGrid, e0: ErrorState) -> Trajectory:
    """Navigation estimate ``p̂(eta) = p(eta) - δp(eta)`` for initial errors ``e0``."""
    eta = grid.eta
    positions = eta[:, None] * params.v0 - position_error_closed_form(e0, eta, params)
    return Trajectory("corrupted", eta, positions, params.v0, e0)


def slant_range(p_t, p_platform) -> np.ndarray | float:
    """Euclidean distance ``|p_t - p_platform|``; broadcasts over leading axes."""
    d = np.asarray(p_t, dtype=np.float64) - np.asarray(p_platform, dtype=np.float64)
    r = np.sqrt(np.sum(d * d, axis=-1))
    return float(r) if np.ndim(r) == 0 else r


def refine_argmin(values: np.ndarray, eta: np.ndarray) -> tuple[float, float]:
    """Minimum of a sampled curve, refined by a three-point parabola.

    Returns ``(value_min, eta_min)``.  Raises :class:`EdgeMinimumError` when
    the smallest sample is the first or last one (no bracketing samples).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 3:
        raise ValueError("need at least 3 samples to refine a minimum")
    k = int(np.argmin(values))
    if k == 0 or k == values.size - 1:
        raise EdgeMinimumError(
            f"minimum at pulse {k} of {values.size}: closest approach outside the aperture"
        )
    a, b, c = values[k - 1], values[k], values[k + 1]
    den = a - 2.0 * b + c
    offset = 0.5 * (a - c) / den if den > 0 else 0.0
    step = eta[k + 1] - eta[k]
    return float(b - 0.25 * (a - c) * offset), float(eta[k] + offset * step)


def closest_approach(p_t, traj: Trajectory) -> tuple[float, float]:
    """Range and slow time of closest approach ``(R0, eta0)`` along ``traj``."""
    return refine_argmin(slant_range(p_t, traj.positions), traj.eta)
