"""Command line interface: ``sarnav <command> [options]``.

Exit codes: 0 success, 2 invalid input (scenario, error spec, small-angle
guard), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .analysis import predict_shift
from .errors import LargeAngleError, ScenarioError
from .geometry import corrupted_trajectory, truth_trajectory
from .io import atomic_write_text, load_data, load_image, save_data, save_image
from .pipeline import compare_images, make_rc, receive_gate, run_pipeline, write_figures
from .plotting import render_image
from .scenario import default_scenario, load_scenario, parse_error_spec
from .waveform import range_compress, simulate_raw

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _scenario(args):
    s = load_scenario(args.config) if args.config else default_scenario()
    if getattr(args, "error", None):
        e0, name = parse_error_spec(args.error)
        s = s.with_error(e0, name)
    return s


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise ScenarioError(f"--{n.replace('_', '-')} is required for '{args.command}'")


def cmd_simulate(args) -> int:
    _need(args, "out")
    s = _scenario(args)
    t_start, n_fast = receive_gate(s)
    raw = simulate_raw(s.targets, truth_trajectory(s.flight, s.slow_time), s.chirp,
                       n_fast + s.chirp.replica_length - 1, t_start)
    save_data(args.out, raw, prf=s.slow_time.prf)
    return EXIT_OK


def cmd_synth_rc(args) -> int:
    _need(args, "out")
    s = _scenario(args)
    save_data(args.out, make_rc(s), prf=s.slow_time.prf)
    return EXIT_OK


def cmd_rangecompress(args) -> int:
    _need(args, "in_path", "out")
    s = _scenario(args)
    save_data(args.out, range_compress(load_data(args.in_path), s.chirp), prf=s.slow_time.prf)
    return EXIT_OK


def cmd_backproject(args) -> int:
    _need(args, "in_path", "out")
    s = _scenario(args)
    from .backprojection import backproject

    traj = corrupted_trajectory(s.flight, s.slow_time, s.error)
    img = backproject(load_data(args.in_path), traj, s.grid, s.chirp, s.interp, args.threads)
    save_image(args.out, img)
    return EXIT_OK


def cmd_predict(args) -> int:
    s = _scenario(args)
    lines = ["target\tr0\teta0\tr0_hat\teta0_hat\td_range\td_eta\td_along\timage_along\timage_cross"]
    for k, t in enumerate(s.targets):
        p = predict_shift(t.position, s.flight, s.slow_time, s.error)
        a, c = p.grid_shift(s.grid)
        vals = (p.r0, p.eta0, p.r0_hat, p.eta0_hat, p.d_range, p.d_eta, p.d_along, a, c)
        lines.append("\t".join([str(k)] + [repr(float(v)) for v in vals]))
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    _need(args, "ref", "test")
    s = _scenario(args)
    ref, test = load_image(args.ref), load_image(args.test)
    report, _, _ = compare_images(s, ref, test)
    if args.out:
        out = Path(args.out)
        atomic_write_text(out / "report.tsv", report.to_tsv())
        write_figures(s, ref, test, report, out)
    sys.stdout.write(report.to_tsv())
    return EXIT_OK


def cmd_run(args) -> int:
    s = _scenario(args)
    report = run_pipeline(s, args.out, threads=args.threads)
    sys.stdout.write(report.to_tsv())
    return EXIT_OK


def cmd_render(args) -> int:
    _need(args, "in_path", "out")
    render_image(args.in_path, args.out, args.db_floor)
    return EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "simulate raw echoes along the true track"),
    "synth-rc": (cmd_synth_rc, "synthesize range-compressed data from the closed form"),
    "rangecompress": (cmd_rangecompress, "matched-filter a raw data file"),
    "backproject": (cmd_backproject, "form an image along the (error-corrupted) track"),
    "predict": (cmd_predict, "predict image shifts for the scenario's targets"),
    "compare": (cmd_compare, "measure shift and blur between two images"),
    "run": (cmd_run, "full pipeline: data, reference and test images, report, figures"),
    "render": (cmd_render, "render an image file to 8-bit PGM"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario YAML file (defaults if omitted)")
    common.add_argument("--out", metavar="PATH", help="output file or directory")
    common.add_argument("--error", metavar="SPEC",
                        help='"preset:<name>" or "dp=x,y,z dv=x,y,z dth=x,y,z"')
    common.add_argument("--threads", type=int, default=1, metavar="N", help="back-projection threads")
    common.add_argument("--seed", type=int, default=None, metavar="N",
                        help="reserved; the pipeline is deterministic")
    common.add_argument("--in", dest="in_path", metavar="PATH", help="input data or image file")
    common.add_argument("--ref", metavar="PATH", help="reference image (compare)")
    common.add_argument("--test", metavar="PATH", help="test image (compare)")
    common.add_argument("--db-floor", type=float, default=-40.0, metavar="DB", help="render floor (dB)")

    parser = argparse.ArgumentParser(prog="sarnav", description="SAR back-projection under navigation errors")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except (ScenarioError, LargeAngleError) as exc:
        print(f"sarnav: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        print(f"sarnav: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
