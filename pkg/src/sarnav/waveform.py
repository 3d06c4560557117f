"""Linear FM chirp, stop-and-hop echo simulation and range compression.

Two fast-time axes are in play:

* raw data (``kind="raw"``): sample ``n`` is received at two-way time
  ``t_start + n/fs``;
* range-compressed data (``kind="range_compressed"``): sample ``n`` is the
  matched-filter output whose peak belongs to a target at two-way delay
  ``t_start + n/fs``.  The filter delay ``T`` is absorbed into ``t_start``
  (and recorded as ``mf_delay``), so back-projection indexes directly by
  ``2R/c``.

The simulation is baseband: the carrier appears only as the explicit
per-target factor ``exp(-j 4 pi R / lambda)`` with ``lambda = c / fc``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import signal

from .errors import GateMissWarning, ShapeMismatchError
from .geometry import Target, Trajectory

C = 299792458.0

#: Minimum ratio of fast-time sampling rate to chirp bandwidth.
OVERSAMPLING_GUARD = 1.2


@dataclass(frozen=True)
class ChirpParams:
    """Linear FM pulse and receiver sampling.

    Attributes
    ----------
    f0 : float
        Baseband start frequency (Hz).  ``-K*T/2`` centres the sweep on DC.
    K : float
        FM rate (Hz/s); bandwidth is ``|K| T``.
    T : float
        Pulse duration (s).
    fs : float
        Complex fast-time sampling rate (Hz).
    fc : float
        RF carrier (Hz), sets the wavelength used for phase.
    """

    f0: float
    K: float
    T: float
    fs: float
    fc: float

    def __post_init__(self):
        for name in ("f0", "K", "T", "fs", "fc"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"chirp {name} must be finite")
            object.__setattr__(self, name, v)
        if not self.T > 0:
            raise ValueError(f"pulse duration T must be positive, got {self.T}")
        if self.fs < OVERSAMPLING_GUARD * self.bandwidth:
            raise ValueError(
                f"oversampling guard violated: fs={self.fs:g} Hz < "
                f"{OVERSAMPLING_GUARD}*|K|*T = {OVERSAMPLING_GUARD * self.bandwidth:g} Hz"
            )
        if not self.fc > self.bandwidth:
            raise ValueError(f"carrier fc={self.fc:g} Hz must exceed bandwidth |K|*T={self.bandwidth:g} Hz")

    @classmethod
    def centered(cls, bandwidth: float, T: float, fs: float, fc: float) -> "ChirpParams":
        """Up-chirp of the given bandwidth sweeping ``-B/2 .. +B/2``."""
        return cls(f0=-bandwidth / 2, K=bandwidth / T, T=T, fs=fs, fc=fc)

    @property
    def bandwidth(self) -> float:
        return abs(self.K) * self.T

    @property
    def wavelength(self) -> float:
        return C / self.fc

    @property
    def replica_length(self) -> int:
        """Number of samples of the pulse on the closed interval ``[0, T]``."""
        return int(math.floor(self.T * self.fs + 1e-9)) + 1

    @property
    def range_resolution(self) -> float:
        """-3 dB slant-range width of the compressed pulse, ``0.886 c / (2B)``."""
        return 0.886 * C / (2.0 * self.bandwidth)


@dataclass(frozen=True)
class DataMatrix:
    """Pulses x fast-time complex samples with axis metadata."""

    values: np.ndarray
    t_start: float
    fs: float
    kind: str
    mf_delay: float = 0.0

    def __post_init__(self):
        if self.kind not in ("raw", "range_compressed"):
            raise ValueError(f"unknown data kind {self.kind!r}")
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ShapeMismatchError(f"data matrix must be 2-D, got shape {v.shape}")
        object.__setattr__(self, "values", v.astype(np.complex128, copy=False))
        if not self.t_start >= 0:
            raise ValueError(f"t_start must be >= 0, got {self.t_start}")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")

    @property
    def n_pulses(self) -> int:
        return self.values.shape[0]

    @property
    def n_fast(self) -> int:
        return self.values.shape[1]

    @property
    def time_axis(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_fast) / self.fs


def gen_chirp(params: ChirpParams, t) -> np.ndarray | complex:
    """Transmitted pulse ``exp(j(2 pi f0 t + pi K t^2))`` on ``0 <= t <= T``, else 0."""
    t = np.asarray(t, dtype=np.float64)
    inside = (t >= 0.0) & (t <= params.T)
    phase = 2.0 * np.pi * params.f0 * t + np.pi * params.K * t * t
    out = np.where(inside, np.exp(1j * phase), 0.0 + 0.0j)
    return complex(out) if out.ndim == 0 else out


def carrier_phase(params: ChirpParams, r) -> np.ndarray:
    """Two-way carrier phase term ``exp(-j 4 pi R / lambda)``."""
    return np.exp(-4j * np.pi * np.asarray(r) / params.wavelength)


def simulate_raw_pulse(
    targets: Sequence[Target],
    p_platform,
    params: ChirpParams,
    n_fast: int,
    t_start: float,
) -> np.ndarray:
    """Stop-and-hop echo of one pulse received at a frozen platform position.

    Sample ``n`` is ``sum_i A_i s_tx(t_n - 2R_i/c) exp(-j 4 pi R_i / lambda)``
    with ``t_n = t_start + n/fs``.  A :class:`GateMissWarning` is issued for
    every target whose echo misses the receive window entirely.
    """
    t = t_start + np.arange(n_fast) / params.fs
    t_end = t_start + n_fast / params.fs
    out = np.zeros(n_fast, dtype=np.complex128)
    p_platform = np.asarray(p_platform, dtype=np.float64)
    for tgt in targets:
        d = tgt.position - p_platform
        r = math.sqrt(d @ d)
        tau = 2.0 * r / C
        if tau + params.T < t_start or tau > t_end:
            warnings.warn(
                f"echo of target at {tgt.position.tolist()} (delay {tau:.9g} s) "
                f"outside window [{t_start:.9g}, {t_end:.9g}] s",
                GateMissWarning,
                stacklevel=2,
            )
            continue
        out += tgt.amplitude * gen_chirp(params, t - tau) * carrier_phase(params, r)
    return out


def simulate_raw(
    targets: Sequence[Target],
    traj: Trajectory,
    params: ChirpParams,
    n_fast: int,
    t_start: float,
) -> DataMatrix:
    """Raw data matrix, one :func:`simulate_raw_pulse` per trajectory position."""
    values = np.empty((traj.n_pulses, n_fast), dtype=np.complex128)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", GateMissWarning)
        for k, pos in enumerate(traj.positions):
            values[k] = simulate_raw_pulse(targets, pos, params, n_fast, t_start)
    if caught:
        warnings.warn(f"{len(caught)} echo(es) missed the receive window", GateMissWarning, stacklevel=2)
    return DataMatrix(values, t_start, params.fs, "raw")


def matched_filter(params: ChirpParams) -> np.ndarray:
    """Impulse response ``h[j] = conj(s_tx(T - j/fs))``, ``j = 0 .. M-1``."""
    j = np.arange(params.replica_length)
    return np.conj(gen_chirp(params, params.T - j / params.fs))


def range_compress(raw: DataMatrix, params: ChirpParams, method: str = "fft") -> DataMatrix:
    """Matched-filter every pulse against the transmitted chirp.

    The discrete convolution is scaled by ``1/fs`` so it approximates the
    continuous convolution integral; only fully overlapped ("valid") output
    samples are kept.  ``method`` selects ``"fft"`` or ``"direct"``
    convolution; both are deterministic.
    """
    if raw.kind != "raw":
        raise ValueError(f"range_compress expects raw data, got {raw.kind!r}")
    h = matched_filter(params)
    m = h.size
    if m > raw.n_fast:
        raise ShapeMismatchError(
            f"replica ({m} samples) longer than pulse window ({raw.n_fast} samples)"
        )
    if method == "fft":
        out = signal.fftconvolve(raw.values, h[None, :], mode="valid", axes=1)
    elif method == "direct":
        out = np.stack([np.convolve(row, h, mode="valid") for row in raw.values])
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    out = out / params.fs
    # first valid output sits at convolution time t_start + (M-1)/fs; the peak
    # of a target at delay tau appears at tau + T
    t0 = raw.t_start + (m - 1) / params.fs - params.T
    return DataMatrix(out, max(t0, 0.0), params.fs, "range_compressed", mf_delay=params.T)


def analytic_range_compressed_pulse(params: ChirpParams, r: float, t, amplitude: float = 1.0):
    """Closed-form matched-filter output for a point target at range ``r``.

    ``t`` is matched-filter output time; with ``t' = t - 2r/c``,
    ``rho = T - t'`` and ``xi = T - |t' - T|`` the output is
    ``A exp(-j4 pi r/lambda) exp(-j rho (2 pi f0 + pi K T)) xi sinc(K rho xi)``
    on ``0 <= t' <= 2T`` and zero elsewhere.  The magnitude peaks at
    ``t' = T`` with value ``A T``.
    """
    t = np.asarray(t, dtype=np.float64)
    tl = t - 2.0 * r / C
    rho = params.T - tl
    xi = params.T - np.abs(tl - params.T)
    inside = (tl >= 0.0) & (tl <= 2.0 * params.T)
    env = np.exp(-1j * rho * (2.0 * np.pi * params.f0 + np.pi * params.K * params.T)) * xi * np.sinc(
        params.K * rho * xi
    )
    out = np.where(inside, amplitude * carrier_phase(params, r) * env, 0.0 + 0.0j)
    return complex(out) if out.ndim == 0 else out


def synthesize_rc(
    targets: Sequence[Target],
    traj: Trajectory,
    params: ChirpParams,
    n_fast: int,
    t_start: float,
) -> DataMatrix:
    """Range-compressed data evaluated directly from the closed form.

    Produces the same axis convention as :func:`range_compress`; it is the
    fast path for building test scenes.
    """
    t_conv = t_start + np.arange(n_fast) / params.fs + params.T
    values = np.zeros((traj.n_pulses, n_fast), dtype=np.complex128)
    for tgt in targets:
        ranges = np.sqrt(np.sum((tgt.position - traj.positions) ** 2, axis=1))
        for k, r in enumerate(ranges):
            values[k] += analytic_range_compressed_pulse(params, r, t_conv, tgt.amplitude)
    return DataMatrix(values, t_start, params.fs, "range_compressed", mf_delay=params.T)


def range_gate(ranges: Iterable[float], params: ChirpParams, margin: float) -> tuple[float, int]:
    """Receive window covering ``[min(ranges) - margin, max(ranges) + margin]``.

    Returns ``(t_start, n_fast)`` with ``t_start`` on the ``1/fs`` sample grid.
    """
    r = np.asarray(list(ranges) if not isinstance(ranges, np.ndarray) else ranges, dtype=np.float64)
    r_lo = max(float(r.min()) - margin, 0.0)
    r_hi = float(r.max()) + margin
    n0 = math.floor(2.0 * r_lo / C * params.fs)
    n1 = math.ceil(2.0 * r_hi / C * params.fs)
    return n0 / params.fs, n1 - n0 + 1
