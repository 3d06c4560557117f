"""End-to-end experiment: data, two images, predicted vs. measured shift."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .analysis import ImageMetrics, image_metrics, measure_shift, predict_shift
from .backprojection import ComplexImage, backproject
from .errors import SarnavError
from .geometry import corrupted_trajectory, truth_trajectory
from .io import atomic_write_bytes, atomic_write_text, save_data, save_image
from .plotting import pgm_bytes, plot_chips, plot_cuts, to_gray
from .scenario import Scenario
from .waveform import DataMatrix, range_compress, range_gate, simulate_raw, synthesize_rc


def receive_gate(s: Scenario) -> tuple[float, int]:
    """Range-compressed window (t_start, n_fast) covering targets and image grid."""
    pos = truth_trajectory(s.flight, s.slow_time).positions
    g = s.grid
    corners = np.array([g.pixel(i, j) for i in (0, g.n_along - 1) for j in (0, g.n_cross - 1)])
    pts = np.vstack([corners, [t.position for t in s.targets]])
    r = np.sqrt(np.sum((pts[:, None, :] - pos[None, :, :]) ** 2, axis=-1))
    return range_gate(r.ravel(), s.chirp, s.gate_margin)


def make_rc(s: Scenario) -> DataMatrix:
    """Range-compressed data of the scene along the true track."""
    truth = truth_trajectory(s.flight, s.slow_time)
    t_start, n_fast = receive_gate(s)
    m = s.chirp.replica_length
    # place the rc axis where range_compress would put it
    t_rc = t_start + (m - 1) / s.chirp.fs - s.chirp.T
    if s.data_path == "simulate":
        raw = simulate_raw(s.targets, truth, s.chirp, n_fast + m - 1, t_start)
        return range_compress(raw, s.chirp)
    return synthesize_rc(s.targets, truth, s.chirp, n_fast, t_rc)


@dataclass(frozen=True)
class CompareReport:
    """Predicted and measured displacement of the primary target plus image metrics."""

    error: str
    pred_d_range: float
    pred_d_eta: float
    pred_d_along: float
    pred_image_along: float
    pred_image_cross: float
    meas_d_along: float
    meas_d_cross: float
    ref_width_along: float
    ref_width_cross: float
    test_width_along: float
    test_width_cross: float
    ref_entropy: float
    test_entropy: float
    ref_peak: float
    test_peak: float
    test_skipped_mean: float
    tol_along: float
    tol_cross: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"report field {k} is not finite")

    @property
    def along_ok(self) -> bool:
        return abs(self.meas_d_along - self.pred_image_along) <= self.tol_along

    @property
    def cross_ok(self) -> bool:
        return abs(self.meas_d_cross - self.pred_image_cross) <= self.tol_cross

    @property
    def passed(self) -> bool:
        return self.along_ok and self.cross_ok

    def items(self):
        for k, v in asdict(self).items():
            yield k, v
        yield "along_ok", self.along_ok
        yield "cross_ok", self.cross_ok
        yield "passed", self.passed

    def to_tsv(self) -> str:
        lines = ["key\tvalue"]
        for k, v in self.items():
            if isinstance(v, bool):
                v = "pass" if v else "fail"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k}\t{v}")
        return "\n".join(lines) + "\n"


def shift_tolerances(s: Scenario, r0: float, h: float) -> tuple[float, float]:
    """Half a resolution cell: one along-track pixel, and the slant range cell on the ground."""
    ground = math.sqrt(max(r0 * r0 - h * h, 1e-12))
    return 0.5 * s.grid.spacing_along, 0.5 * s.chirp.range_resolution * r0 / ground


def compare_images(s: Scenario, ref: ComplexImage, test: ComplexImage) -> tuple[CompareReport, ImageMetrics, ImageMetrics]:
    p_t = s.targets[0].position
    pred = predict_shift(p_t, s.flight, s.slow_time, s.error)
    pa, pc = pred.grid_shift(s.grid)
    m_ref = image_metrics(ref)
    m_test = image_metrics(test)
    da, dc = measure_shift(m_ref, m_test, s.grid)
    tol_a, tol_c = shift_tolerances(s, pred.r0, p_t[2] - pred.eta0 * s.flight.v0[2])
    report = CompareReport(
        error=s.error_label,
        pred_d_range=pred.d_range,
        pred_d_eta=pred.d_eta,
        pred_d_along=pred.d_along,
        pred_image_along=pa,
        pred_image_cross=pc,
        meas_d_along=da,
        meas_d_cross=dc,
        ref_width_along=m_ref.width3db_along,
        ref_width_cross=m_ref.width3db_cross,
        test_width_along=m_test.width3db_along,
        test_width_cross=m_test.width3db_cross,
        ref_entropy=m_ref.entropy,
        test_entropy=m_test.entropy,
        ref_peak=m_ref.peak_mag,
        test_peak=m_test.peak_mag,
        test_skipped_mean=float(test.skipped_fraction.mean()),
        tol_along=tol_a,
        tol_cross=tol_c,
    )
    return report, m_ref, m_test


def form_images(s: Scenario, rc: DataMatrix, threads: int = 1) -> tuple[ComplexImage, ComplexImage]:
    truth = truth_trajectory(s.flight, s.slow_time)
    est = corrupted_trajectory(s.flight, s.slow_time, s.error)
    ref = backproject(rc, truth, s.grid, s.chirp, s.interp, threads)
    test = backproject(rc, est, s.grid, s.chirp, s.interp, threads)
    return ref, test


def write_figures(s: Scenario, ref: ComplexImage, test: ComplexImage, report: CompareReport, out: Path) -> None:
    truth_px = s.grid.locate(s.targets[0].position)
    pred_px = (
        truth_px[0] + report.pred_image_along / s.grid.spacing_along,
        truth_px[1] + report.pred_image_cross / s.grid.spacing_cross,
    )
    plot_chips(ref, test, truth_px, pred_px, out / "chips.png", title=s.error_label)
    plot_cuts(ref, test, out / "cuts.png", title=s.error_label)
    atomic_write_bytes(out / "ref.pgm", pgm_bytes(to_gray(ref.values).T))
    atomic_write_bytes(out / "test.pgm", pgm_bytes(to_gray(test.values).T))


def run_pipeline(s: Scenario, out_dir=None, threads: int = 1, figures: bool = True) -> CompareReport:
    """Run one error-injection experiment and write its artifacts.

    Writes ``rc.sarc``, ``ref.sari``, ``test.sari``, ``report.tsv`` and,
    unless ``figures`` is false, ``chips.png``, ``cuts.png`` and PGM renders
    into ``out_dir`` (default: the scenario's output directory).
    """
    out = Path(out_dir) if out_dir is not None else s.out_dir
    try:
        rc = make_rc(s)
        save_data(out / "rc.sarc", rc, prf=s.slow_time.prf)
        ref, test = form_images(s, rc, threads)
        save_image(out / "ref.sari", ref)
        save_image(out / "test.sari", test)
        report, _, _ = compare_images(s, ref, test)
        atomic_write_text(out / "report.tsv", report.to_tsv())
        if figures:
            write_figures(s, ref, test, report, out)
    except SarnavError as exc:
        raise type(exc)(f"[{s.error_label}] {exc}") from exc
    return report
