"""Time-domain back-projection over a horizontal pixel grid.

Every pixel is the coherent sum over pulses ``k`` (ascending) of the
range-compressed sample at two-way delay ``2 R_k / c``, linearly
interpolated on the complex values, times ``exp(+j 4 pi R_k / lambda)``.
Pulses whose delay falls outside the sampled window contribute nothing and
are counted in ``skipped_fraction``.

The compiled kernel evaluates whole pixel rows; rows are split into blocks
that a thread pool processes concurrently.  Each pixel's sum is still
accumulated sequentially in ``k``, so results do not depend on the number
of threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ShapeMismatchError
from .geometry import Trajectory
from .waveform import C, ChirpParams, DataMatrix

INTERP_LINEAR = "linear"
INTERP_NEAREST = "nearest"
_INTERP = {INTERP_LINEAR: 0, INTERP_NEAREST: 1}


@dataclass(frozen=True)
class ImageGrid:
    """Rectangular pixel grid in a horizontal plane.

    Pixel ``(i, j)`` sits at
    ``origin + i*spacing_along*axis_along + j*spacing_cross*axis_cross``;
    ``i`` indexes the first (along) image axis.
    """

    origin: np.ndarray
    axis_along: np.ndarray
    axis_cross: np.ndarray
    spacing_along: float
    spacing_cross: float
    n_along: int
    n_cross: int

    def __post_init__(self):
        for name in ("origin", "axis_along", "axis_cross"):
            v = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be 3 finite values")
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        a, b = self.axis_along, self.axis_cross
        if abs(a @ a - 1) > 1e-12 or abs(b @ b - 1) > 1e-12 or abs(a @ b) > 1e-12:
            raise ValueError("grid axes must be orthonormal")
        if a[2] != 0.0 or b[2] != 0.0:
            raise ValueError("grid axes must be horizontal (zero z component)")
        for name in ("spacing_along", "spacing_cross"):
            s = float(getattr(self, name))
            if not (math.isfinite(s) and s > 0):
                raise ValueError(f"{name} must be positive, got {s}")
            object.__setattr__(self, name, s)
        for name in ("n_along", "n_cross"):
            n = getattr(self, name)
            if int(n) != n or n < 1:
                raise ValueError(f"{name} must be a positive integer, got {n}")
            object.__setattr__(self, name, int(n))

    @classmethod
    def centered_on(
        cls,
        center,
        spacing_along: float,
        spacing_cross: float,
        n_along: int,
        n_cross: int,
        axis_along=(1.0, 0.0, 0.0),
        axis_cross=(0.0, 1.0, 0.0),
    ) -> "ImageGrid":
        """Grid whose pixel ``(n_along // 2, n_cross // 2)`` lies exactly on ``center``."""
        center = np.asarray(center, dtype=np.float64)
        a = np.asarray(axis_along, dtype=np.float64)
        b = np.asarray(axis_cross, dtype=np.float64)
        origin = center - (n_along // 2) * spacing_along * a - (n_cross // 2) * spacing_cross * b
        return cls(origin, a, b, spacing_along, spacing_cross, n_along, n_cross)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_along, self.n_cross

    @property
    def z(self) -> float:
        return float(self.origin[2])

    def pixel(self, i: float, j: float) -> np.ndarray:
        return self.origin + i * self.spacing_along * self.axis_along + j * self.spacing_cross * self.axis_cross

    def positions(self) -> np.ndarray:
        """All pixel positions, shape ``(n_along, n_cross, 3)``."""
        i = np.arange(self.n_along, dtype=np.float64)[:, None, None]
        j = np.arange(self.n_cross, dtype=np.float64)[None, :, None]
        return (
            self.origin
            + i * self.spacing_along * self.axis_along
            + j * self.spacing_cross * self.axis_cross
        )

    def locate(self, p) -> tuple[float, float]:
        """Fractional pixel coordinates ``(i, j)`` of the projection of ``p``."""
        d = np.asarray(p, dtype=np.float64) - self.origin
        return float(d @ self.axis_along / self.spacing_along), float(d @ self.axis_cross / self.spacing_cross)


@dataclass(frozen=True)
class ComplexImage:
    grid: ImageGrid
    values: np.ndarray
    skipped_fraction: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        s = np.asarray(self.skipped_fraction, dtype=np.float64)
        if v.shape != self.grid.shape or s.shape != self.grid.shape:
            raise ShapeMismatchError(
                f"image arrays {v.shape}/{s.shape} do not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "skipped_fraction", s)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def _check_inputs(rc: DataMatrix, traj: Trajectory) -> None:
    if rc.kind != "range_compressed":
        raise ValueError(f"back-projection needs range-compressed data, got {rc.kind!r}")
    if rc.n_pulses != traj.n_pulses:
        raise ShapeMismatchError(
            f"data has {rc.n_pulses} pulses but trajectory has {traj.n_pulses}"
        )


def pixel_response(p_pix, rc: DataMatrix, traj: Trajectory, params: ChirpParams, interp: str = INTERP_LINEAR):
    """Back-projected value of one pixel and its fraction of skipped pulses.

    Plain numpy implementation of the kernel used by :func:`backproject`;
    handy as a reference and for single points.
    """
    _check_inputs(rc, traj)
    d = np.asarray(p_pix, dtype=np.float64) - traj.positions
    r = np.sqrt(np.sum(d * d, axis=1))
    x = (2.0 * r / C - rc.t_start) * rc.fs
    n = rc.n_fast
    rows = np.arange(rc.n_pulses)
    if interp == INTERP_LINEAR:
        i0 = np.floor(x)
        ok = (i0 >= 0) & (i0 + 1 <= n - 1)
        i0 = np.where(ok, i0, 0).astype(np.int64)
        f = x - i0
        samples = rc.values[rows, i0] * (1.0 - f) + rc.values[rows, np.minimum(i0 + 1, n - 1)] * f
    elif interp == INTERP_NEAREST:
        i0 = np.floor(x + 0.5)
        ok = (i0 >= 0) & (i0 <= n - 1)
        i0 = np.where(ok, i0, 0).astype(np.int64)
        samples = rc.values[rows, i0]
    else:
        raise ValueError(f"unknown interpolation {interp!r}")
    phase = (4.0 * np.pi / params.wavelength) * r
    terms = np.where(ok, samples * (np.cos(phase) + 1j * np.sin(phase)), 0.0)
    value = complex(np.add.accumulate(terms)[-1]) if terms.size else 0j
    skipped = int(np.count_nonzero(~ok))
    return value, skipped / rc.n_pulses


@njit(cache=True, nogil=True)
def _bp_rows(values, t_start, fs, positions, pix, wavelength, mode, out, skipped, row0, row1):
    n_pulses, n_fast = values.shape
    n_cross = pix.shape[1]
    k4 = 4.0 * np.pi / wavelength
    for i in range(row0, row1):
        for j in range(n_cross):
            px = pix[i, j, 0]
            py = pix[i, j, 1]
            pz = pix[i, j, 2]
            acc = 0.0 + 0.0j
            nskip = 0
            for k in range(n_pulses):
                dx = px - positions[k, 0]
                dy = py - positions[k, 1]
                dz = pz - positions[k, 2]
                r = math.sqrt(dx * dx + dy * dy + dz * dz)
                x = (2.0 * r / C - t_start) * fs
                if mode == 0:
                    i0f = math.floor(x)
                    if i0f < 0 or i0f + 1 > n_fast - 1:
                        nskip += 1
                        continue
                    i0 = int(i0f)
                    f = x - i0f
                    s = values[k, i0] * (1.0 - f) + values[k, i0 + 1] * f
                else:
                    i0f = math.floor(x + 0.5)
                    if i0f < 0 or i0f > n_fast - 1:
                        nskip += 1
                        continue
                    s = values[k, int(i0f)]
                ph = k4 * r
                acc += s * (math.cos(ph) + 1j * math.sin(ph))
            out[i, j] = acc
            skipped[i, j] = nskip / n_pulses


def backproject(
    rc: DataMatrix,
    traj: Trajectory,
    grid: ImageGrid,
    params: ChirpParams,
    interp: str = INTERP_LINEAR,
    threads: int = 1,
    block_rows: int = 8,
) -> ComplexImage:
    """Form a complex image from range-compressed data along ``traj``.

    Parameters
    ----------
    rc : DataMatrix
        Range-compressed pulses, one row per trajectory position.
    traj : Trajectory
        Platform positions used to compute pixel ranges (truth or corrupted).
    grid : ImageGrid
    params : ChirpParams
        Only the carrier wavelength is used here.
    interp : {"linear", "nearest"}
    threads : int
        Worker threads over blocks of ``block_rows`` pixel rows.  Output is
        bitwise identical for any value.
    """
    _check_inputs(rc, traj)
    if interp not in _INTERP:
        raise ValueError(f"unknown interpolation {interp!r}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    values = np.ascontiguousarray(rc.values)
    positions = np.ascontiguousarray(traj.positions, dtype=np.float64)
    pix = np.ascontiguousarray(grid.positions())
    out = np.zeros(grid.shape, dtype=np.complex128)
    skipped = np.zeros(grid.shape, dtype=np.float64)
    mode = _INTERP[interp]

    def work(bounds):
        _bp_rows(values, rc.t_start, rc.fs, positions, pix, params.wavelength, mode, out, skipped, *bounds)

    blocks = [(r, min(r + block_rows, grid.n_along)) for r in range(0, grid.n_along, block_rows)]
    if threads == 1:
        for b in blocks:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, blocks))
    return ComplexImage(grid, out, skipped)
