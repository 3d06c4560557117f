"""Image rendering: PGM magnitude renders and matplotlib report figures."""

from __future__ import annotations

import io as _io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .backprojection import ComplexImage  # noqa: E402
from .errors import DegenerateImageError  # noqa: E402
from .io import atomic_write_bytes, load_image  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "axes.titlesize": 9,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
    "image.origin": "lower",
})

# keeps PNG bytes stable between runs
_PNG_META = {"Software": None}


def db_image(values: np.ndarray, db_floor: float) -> np.ndarray:
    """``20 log10(|v| / max|v|)`` clipped to ``[db_floor, 0]``."""
    mag = np.abs(values)
    peak = mag.max()
    if not peak > 0:
        raise DegenerateImageError("cannot render an all-zero image")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return np.clip(db, db_floor, 0.0)


def to_gray(values: np.ndarray, db_floor: float = -40.0) -> np.ndarray:
    """8-bit gray levels: peak maps to 255, ``db_floor`` and below to 0."""
    if not db_floor < 0:
        raise ValueError(f"db_floor must be negative, got {db_floor}")
    db = db_image(values, db_floor)
    return np.round(255.0 * (db - db_floor) / -db_floor).astype(np.uint8)


def pgm_bytes(gray: np.ndarray) -> bytes:
    h, w = gray.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(gray, dtype=np.uint8).tobytes()


def render_image(img_path, out_path, db_floor: float = -40.0) -> None:
    """Write a binary PGM of an image file's magnitude in dB.

    Columns run along track and rows cross track (row 0 = first cross pixel).
    """
    img = load_image(img_path)
    atomic_write_bytes(out_path, pgm_bytes(to_gray(img.values, db_floor).T))


def _save(fig, path) -> None:
    buf = _io.BytesIO()
    fig.savefig(buf, format="png", metadata=_PNG_META)
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def _chip_bounds(center: float, half: int, n: int) -> tuple[int, int]:
    lo = max(int(round(center)) - half, 0)
    hi = min(int(round(center)) + half + 1, n)
    return lo, hi


def plot_chips(ref: ComplexImage, test: ComplexImage, truth_px, pred_px, path, title: str = "",
               half=(60, 16), db_floor: float = -40.0) -> None:
    """Reference and test chips with X at the true target and O at the prediction.

    ``truth_px`` and ``pred_px`` are fractional ``(i, j)`` pixel coordinates.
    Both chips share the reference image's peak as 0 dB.
    """
    grid = ref.grid
    i0, i1 = _chip_bounds(truth_px[0], half[0], grid.n_along)
    j0, j1 = _chip_bounds(truth_px[1], half[1], grid.n_cross)
    peak = np.abs(ref.values).max()
    extent = (
        (i0 - 0.5) * grid.spacing_along, (i1 - 0.5) * grid.spacing_along,
        (j0 - 0.5) * grid.spacing_cross, (j1 - 0.5) * grid.spacing_cross,
    )
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2), sharey=True)
    for ax, img, name in zip(axes, (ref, test), ("reference", "with error")):
        chip = np.abs(img.values[i0:i1, j0:j1]) / peak
        with np.errstate(divide="ignore"):
            db = np.clip(20 * np.log10(chip), db_floor, 0)
        ax.imshow(db.T, extent=extent, aspect="auto", cmap="gray", vmin=db_floor, vmax=0)
        ax.plot(truth_px[0] * grid.spacing_along, truth_px[1] * grid.spacing_cross, "x",
                color="tab:red", ms=9, mew=2, label="X true")
        ax.plot(pred_px[0] * grid.spacing_along, pred_px[1] * grid.spacing_cross, "o",
                mfc="none", color="tab:cyan", ms=10, mew=1.5, label="O predicted")
        ax.set_title(name)
        ax.set_xlabel("along track (m)")
    axes[0].set_ylabel("cross track (m)")
    axes[1].legend(loc="upper right", fontsize=7)
    if title:
        fig.suptitle(title)
    _save(fig, path)


def plot_cuts(ref: ComplexImage, test: ComplexImage, path, title: str = "") -> None:
    """Along- and cross-track magnitude cuts through each image's own peak."""
    grid = ref.grid
    fig, axes = plt.subplots(1, 2, figsize=(8, 3))
    peak = np.abs(ref.values).max()
    for img, name, style in ((ref, "reference", "-"), (test, "with error", "--")):
        mag = np.abs(img.values) / peak
        i, j = np.unravel_index(np.argmax(mag), mag.shape)
        axes[0].plot(np.arange(grid.n_along) * grid.spacing_along, mag[:, j], style, label=name)
        axes[1].plot(np.arange(grid.n_cross) * grid.spacing_cross, mag[i, :], style, label=name)
    for ax, lab in zip(axes, ("along track (m)", "cross track (m)")):
        ax.axhline(1 / np.sqrt(2), color="0.6", lw=0.8)
        ax.set_xlabel(lab)
        ax.set_ylabel("|A| / peak")
    axes[0].legend(fontsize=7)
    if title:
        fig.suptitle(title)
    _save(fig, path)
