"""Range histories under navigation errors, shift prediction and image metrics.

The estimated range of a target seen from the error-corrupted track is

    R̂(η) = | p_t - v0 η + δp0 + δv0 η + (ν×δθ0) η²/2 |

Where the image of the target lands is predicted from where the true and the
estimated range histories reach their minimum (``R0, η0`` and ``R̂0, η̂0``).
The processor assumes the platform flew the estimated track, so the target
is placed where a point would have to be for the *true* track to reproduce
the *estimated* history.  To first order this mirrors the displacement:
the focused peak moves by ``-(R̂0 - R0)`` in slant range and by
``-|v0| (η̂0 - η0)`` along track.  :class:`ShiftPrediction` carries both the
raw deltas and this image-plane displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backprojection import ComplexImage, ImageGrid
from .errors import DegenerateImageError, EdgeMinimumError, UnboundedWidthError
from .geometry import SlowTimeGrid, closest_approach, refine_argmin, truth_trajectory
from .kinematics import ErrorState, FlightParams, accel_error_from_attitude


def _error_terms(params: FlightParams, e0: ErrorState):
    return e0.dp, e0.dv, accel_error_from_attitude(e0.dtheta, params.g)


def _range_vector(p_t, params: FlightParams, e0: ErrorState, eta):
    eta = np.asarray(eta, dtype=np.float64)
    t = eta[..., None]
    dp, dv, acc = _error_terms(params, e0)
    # truth part first, so zero errors reproduce the truth range bitwise
    d = np.asarray(p_t, dtype=np.float64) - t * params.v0
    return d + dp + dv * t + acc * (t * t / 2)


def estimated_range(p_t, params: FlightParams, e0: ErrorState, eta):
    """Range from the target to the error-corrupted track at slow time ``eta``."""
    d = _range_vector(p_t, params, e0, eta)
    r = np.sqrt(np.sum(d * d, axis=-1))
    return float(r) if np.ndim(r) == 0 else r


# ---------------------------------------------------------------------------
# Taylor expansion about the estimated closest approach
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TaylorExpansion:
    """``R̂(η) ≈ r0_hat + quad_coeff (η - eta0_ref)²``."""

    r0_hat: float
    quad_coeff: float
    eta0_ref: float

    def __post_init__(self):
        if not self.r0_hat > 0:
            raise ValueError(f"r0_hat must be positive, got {self.r0_hat}")

    def __call__(self, eta):
        x = np.asarray(eta, dtype=np.float64) - self.eta0_ref
        out = self.r0_hat + self.quad_coeff * x * x
        return float(out) if np.ndim(out) == 0 else out


def q_term(p_t, params: FlightParams, e0: ErrorState, eta0: float) -> float:
    """Half the second derivative of ``R̂²`` at ``eta0``.

    ``Q = wᵀw - 3 aᵀw η0 + 1.5 aᵀa η0² + (p_t + δp0)ᵀa`` with ``w = v0 - δv0``
    and ``a = ν×δθ0``.  Without acceleration error this is just ``wᵀw``.
    """
    p_t = np.asarray(p_t, dtype=np.float64)
    dp, dv, a = _error_terms(params, e0)
    w = params.v0 - dv
    return float(w @ w - 3.0 * (a @ w) * eta0 + 1.5 * (a @ a) * eta0 ** 2 + (p_t + dp) @ a)


def _stationary_eta(p_t, params: FlightParams, e0: ErrorState, eta_start: float) -> float:
    # Newton on f(η) = d·d', where d is the estimated line-of-sight vector
    _, dv, a = _error_terms(params, e0)
    w = params.v0 - dv
    eta = float(eta_start)
    for _ in range(50):
        d = _range_vector(p_t, params, e0, eta)
        dd = -w + a * eta
        f = d @ dd
        fp = dd @ dd + d @ a
        step = f / fp
        eta -= step
        if abs(step) <= 1e-15 * max(1.0, abs(eta)):
            break
    return eta


def taylor_coefficients(
    p_t, params: FlightParams, e0: ErrorState, grid: SlowTimeGrid | None = None
) -> TaylorExpansion:
    """Second-order expansion of the estimated range about its minimum.

    The expansion point ``η̂0`` is the exact stationary point of ``R̂``;
    when ``grid`` is given it also brackets the search and an
    :class:`EdgeMinimumError` is raised for minima at the aperture edge.
    The quadratic coefficient is ``Q / (2 R̂0)`` (see :func:`q_term`).
    """
    if grid is not None:
        _, start = refine_argmin(estimated_range(p_t, params, e0, grid.eta), grid.eta)
    else:
        start = float(np.asarray(p_t, dtype=np.float64) @ params.v0) / (params.speed ** 2)
    eta0 = _stationary_eta(p_t, params, e0, start)
    if grid is not None and not (grid.eta[0] < eta0 < grid.eta[-1]):
        raise EdgeMinimumError(f"estimated closest approach {eta0:.6g} s outside the aperture")
    r0_hat = estimated_range(p_t, params, e0, eta0)
    return TaylorExpansion(r0_hat, q_term(p_t, params, e0, eta0) / (2.0 * r0_hat), eta0)


# ---------------------------------------------------------------------------
# Shift prediction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftPrediction:
    """Closest approach on the true and estimated tracks, and what it implies.

    ``d_range``, ``d_eta`` and ``d_along`` are the raw differences
    (estimated minus true).  ``image_along`` and ``image_cross`` give the
    expected displacement of the focused target on a horizontal image plane
    through the target, along the flight direction and horizontally away
    from the track respectively.
    """

    r0: float
    eta0: float
    r0_hat: float
    eta0_hat: float
    d_range: float
    d_eta: float
    d_along: float
    image_along: float
    image_cross: float
    along_dir: np.ndarray
    cross_dir: np.ndarray

    @property
    def image_slant(self) -> float:
        """Expected slant-range displacement of the focused target."""
        return -self.d_range

    def image_shift(self) -> np.ndarray:
        """Horizontal displacement vector of the focused target (nav frame)."""
        return self.image_along * self.along_dir + self.image_cross * self.cross_dir

    def grid_shift(self, grid: ImageGrid) -> tuple[float, float]:
        """Expected displacement in metres along the image grid axes."""
        s = self.image_shift()
        return float(s @ grid.axis_along), float(s @ grid.axis_cross)


def predict_shift(p_t, params: FlightParams, grid: SlowTimeGrid, e0: ErrorState) -> ShiftPrediction:
    """Predict the image displacement of a target under initial errors ``e0``.

    Both minima are found on the slow-time samples with the same three-point
    refinement; both must be interior to the aperture.
    """
    p_t = np.asarray(p_t, dtype=np.float64)
    r0, eta0 = closest_approach(p_t, truth_trajectory(params, grid))
    r0_hat, eta0_hat = refine_argmin(estimated_range(p_t, params, e0, grid.eta), grid.eta)
    d_range = r0_hat - r0
    d_eta = eta0_hat - eta0
    d_along = params.speed * d_eta

    along_dir = np.array([params.v0[0], params.v0[1], 0.0])
    along_dir /= np.linalg.norm(along_dir)
    # horizontal unit vector from the track towards the target
    los = p_t - eta0 * params.v0
    cross_dir = los - (los @ along_dir) * along_dir
    cross_dir[2] = 0.0
    cross_dir /= np.linalg.norm(cross_dir)
    h = los[2]
    ground0 = math.sqrt(max(r0 * r0 - h * h, 0.0))
    ground_hat = math.sqrt(max(r0_hat * r0_hat - h * h, 0.0))
    return ShiftPrediction(
        r0=r0,
        eta0=eta0,
        r0_hat=r0_hat,
        eta0_hat=eta0_hat,
        d_range=d_range,
        d_eta=d_eta,
        d_along=d_along,
        image_along=-d_along,
        image_cross=-(ground_hat - ground0),
        along_dir=along_dir,
        cross_dir=cross_dir,
    )


# ---------------------------------------------------------------------------
# Distortion taxonomy
# ---------------------------------------------------------------------------

COMPONENTS = (
    "dp_along", "dp_cross", "dp_down",
    "dv_along", "dv_cross", "dv_down",
    "roll", "pitch", "yaw",
)


@dataclass(frozen=True)
class Effect:
    """Expected image effect: shift signs in image-plane directions and azimuth blur.

    ``shift_range`` is ``+1`` when the target appears farther from the track,
    ``shift_azimuth`` is ``+1`` for a shift along the flight direction.
    """

    shift_range: int = 0
    shift_azimuth: int = 0
    blur_azimuth: bool = False

    @property
    def is_null(self) -> bool:
        return self.shift_range == 0 and self.shift_azimuth == 0 and not self.blur_azimuth


@dataclass(frozen=True)
class DistortionReport:
    components: dict
    total: Effect

    @property
    def is_null(self) -> bool:
        return self.total.is_null and all(e.is_null for e in self.components.values())


def _sign(x: float, tol: float) -> int:
    return 0 if abs(x) <= tol else (1 if x > 0 else -1)


def _first_order_effect(p_t, params: FlightParams, e0: ErrorState, tol: float) -> Effect:
    # linearise the closest-approach conditions about the true geometry
    v0 = params.v0
    vv = v0 @ v0
    eta0 = float(p_t @ v0) / vv
    d = p_t - v0 * eta0
    u = d / np.linalg.norm(d)
    dp, dv, a = _error_terms(params, e0)
    dp_eta0 = dp + dv * eta0 + a * (eta0 * eta0 / 2)
    ddp_eta0 = dv + a * eta0
    d_range = float(u @ dp_eta0)
    d_eta = float(v0 @ dp_eta0 - d @ ddp_eta0) / vv
    # along-track velocity error and any acceleration error bend the
    # range history beyond a rigid shift
    blur = abs(float(dv @ v0)) / math.sqrt(vv) > tol or bool(np.any(np.abs(a) > tol))
    return Effect(_sign(-d_range, tol), _sign(-d_eta * math.sqrt(vv), tol), blur)


def classify_distortion(e0: ErrorState, p_t, params: FlightParams, tol: float = 1e-9) -> DistortionReport:
    """Expected shifts and blur, per error component and in total.

    Signs come from a first-order linearisation of the closest-approach
    geometry about the true track, so they describe where the focused
    target appears.  Yaw never enters the range history.
    """
    p_t = np.asarray(p_t, dtype=np.float64)
    x = e0.as_vector()
    comps = {}
    for k, name in enumerate(COMPONENTS):
        single = np.zeros(9)
        single[k] = x[k]
        comps[name] = _first_order_effect(p_t, params, ErrorState.from_vector(single), tol)
    return DistortionReport(comps, _first_order_effect(p_t, params, e0, tol))


# ---------------------------------------------------------------------------
# Image metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImageMetrics:
    peak_idx: tuple
    peak_subpixel: tuple
    peak_mag: float
    width3db_along: float = float("nan")
    width3db_cross: float = float("nan")
    entropy: float = float("nan")


def _parabola_offset(a: float, b: float, c: float) -> float:
    den = a - 2.0 * b + c
    return 0.5 * (a - c) / den if den < 0 else 0.0


def _magnitude(img) -> np.ndarray:
    v = img.values if isinstance(img, ComplexImage) else img
    return np.abs(np.asarray(v))


def find_peak(img) -> ImageMetrics:
    """Global magnitude maximum with per-axis three-point parabolic refinement.

    At the image border the refinement along that axis is skipped.
    """
    m = _magnitude(img)
    if not np.any(m) or np.all(m == m.flat[0]):
        raise DegenerateImageError("image is all zero or has constant magnitude")
    i, j = (int(x) for x in np.unravel_index(np.argmax(m), m.shape))
    di = _parabola_offset(m[i - 1, j], m[i, j], m[i + 1, j]) if 0 < i < m.shape[0] - 1 else 0.0
    dj = _parabola_offset(m[i, j - 1], m[i, j], m[i, j + 1]) if 0 < j < m.shape[1] - 1 else 0.0
    return ImageMetrics((i, j), (i + di, j + dj), float(m[i, j]))


def _crossing(profile: np.ndarray, k: int, step: int, thr: float) -> float:
    n = profile.size
    idx = k
    while 0 <= idx + step < n:
        nxt = idx + step
        if profile[nxt] < thr:
            frac = (profile[idx] - thr) / (profile[idx] - profile[nxt])
            return idx + step * frac
        idx = nxt
    raise UnboundedWidthError("profile does not fall 3 dB below its peak inside the grid")


def width_3db(img: ComplexImage, axis: str, spacing: float | None = None) -> float:
    """-3 dB width (m) of the magnitude profile through the peak.

    Crossings of ``peak/sqrt(2)`` nearest to the peak on each side are
    linearly interpolated.  The result is never smaller than one pixel.
    """
    m = _magnitude(img)
    if axis not in ("along", "cross"):
        raise ValueError(f"axis must be 'along' or 'cross', got {axis!r}")
    if spacing is None:
        spacing = img.grid.spacing_along if axis == "along" else img.grid.spacing_cross
    i, j = find_peak(m).peak_idx
    profile, k = (m[:, j], i) if axis == "along" else (m[i, :], j)
    thr = profile[k] / math.sqrt(2.0)
    lo = _crossing(profile, k, -1, thr)
    hi = _crossing(profile, k, +1, thr)
    return float(max(hi - lo, 1.0) * spacing)


def image_entropy(img) -> float:
    """Shannon entropy (nats) of the normalised power ``|v|² / sum |v|²``."""
    p = _magnitude(img) ** 2
    total = p.sum()
    if not total > 0:
        raise DegenerateImageError("image is all zero")
    p = p[p > 0] / total
    return abs(float(-np.sum(p * np.log(p))))


def image_metrics(img: ComplexImage) -> ImageMetrics:
    """Peak, -3 dB widths along both axes and entropy of an image."""
    pk = find_peak(img)
    return ImageMetrics(
        pk.peak_idx,
        pk.peak_subpixel,
        pk.peak_mag,
        width_3db(img, "along"),
        width_3db(img, "cross"),
        image_entropy(img),
    )


def measure_shift(ref_metrics: ImageMetrics, test_metrics: ImageMetrics, grid: ImageGrid) -> tuple[float, float]:
    """Sub-pixel peak displacement test minus reference, in metres along grid axes."""
    di = test_metrics.peak_subpixel[0] - ref_metrics.peak_subpixel[0]
    dj = test_metrics.peak_subpixel[1] - ref_metrics.peak_subpixel[1]
    return float(di * grid.spacing_along), float(dj * grid.spacing_cross)
