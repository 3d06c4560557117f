"""Scenario configuration (YAML) and named error presets.

Every section and key is optional; missing values take the defaults in
:data:`DEFAULTS`.  Unknown keys are rejected with their line number.  See
the README for the full schema.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .backprojection import INTERP_LINEAR, INTERP_NEAREST, ImageGrid
from .errors import ParseError, ValidationError
from .geometry import SlowTimeGrid, Target
from .kinematics import ErrorState, FlightParams
from .waveform import ChirpParams

DEFAULTS = {
    "flight": {"v0": [100.0, 0.0, 0.0], "g": 9.81},
    "chirp": {"bandwidth": 150e6, "K": None, "T": 10e-6, "fs": 600e6, "fc": 10e9, "f0": None},
    "slow_time": {"prf": 1000.0, "n_pulses": 1200},
    "targets": [{"position": [60.0, 1000.0, 500.0], "amplitude": 1.0}],
    "image": {
        "center": None,
        "spacing_along": 0.025,
        "spacing_cross": 0.25,
        "n_along": 320,
        "n_cross": 64,
        "axis_along": [1.0, 0.0, 0.0],
        "axis_cross": [0.0, 1.0, 0.0],
    },
    "processing": {"data_path": "synth", "interp": INTERP_LINEAR, "gate_margin": 20.0},
    "error": {"preset": None, "dp": None, "dv": None, "dtheta": None},
    "output": {"dir": "out"},
}

_TARGET_KEYS = {"position", "amplitude"}

PRESETS = {
    "none": ErrorState(),
    # simulated-scene magnitudes
    "sim-xpos": ErrorState(dp=(3.0, 0.0, 0.0)),
    "sim-ypos": ErrorState(dp=(0.0, 3.0, 0.0)),
    "sim-zpos": ErrorState(dp=(0.0, 0.0, 3.0)),
    "sim-xvel": ErrorState(dv=(0.1, 0.0, 0.0)),
    "sim-yvel": ErrorState(dv=(0.0, 0.05, 0.0)),
    "sim-zvel": ErrorState(dv=(0.0, 0.0, 0.05)),
    "sim-roll": ErrorState(dtheta=(0.001, 0.0, 0.0)),
    "sim-pitch": ErrorState(dtheta=(0.0, 0.02, 0.0)),
    "sim-yaw": ErrorState(dtheta=(0.0, 0.0, 0.1)),
    # real-data magnitudes
    "real-xpos": ErrorState(dp=(3.0, 0.0, 0.0)),
    "real-ypos": ErrorState(dp=(0.0, 3.0, 0.0)),
    "real-zpos": ErrorState(dp=(0.0, 0.0, 3.0)),
    "real-xvel": ErrorState(dv=(1.0, 0.0, 0.0)),
    "real-yvel": ErrorState(dv=(0.0, 0.2, 0.0)),
    "real-zvel": ErrorState(dv=(0.0, 0.0, 0.2)),
    "real-roll": ErrorState(dtheta=(0.01, 0.0, 0.0)),
    "real-pitch": ErrorState(dtheta=(0.0, 0.5, 0.0)),
    "real-yaw": ErrorState(dtheta=(0.0, 0.0, 0.1)),
}


def preset(name: str) -> ErrorState:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown error preset {name!r}; known: {', '.join(PRESETS)}") from None


@dataclass(frozen=True)
class Scenario:
    flight: FlightParams
    chirp: ChirpParams
    slow_time: SlowTimeGrid
    targets: tuple
    grid: ImageGrid
    error: ErrorState
    preset: str | None = None
    data_path: str = "synth"
    interp: str = INTERP_LINEAR
    gate_margin: float = 20.0
    out_dir: Path = field(default_factory=lambda: Path("out"))

    @property
    def error_label(self) -> str:
        return f"preset:{self.preset}" if self.preset is not None else format_error(self.error)

    def with_error(self, e0: ErrorState, preset_name: str | None = None) -> "Scenario":
        return replace(self, error=e0, preset=preset_name)


def format_error(e0: ErrorState) -> str:
    f = lambda v: ",".join(repr(float(x)) for x in v)  # noqa: E731
    return f"dp={f(e0.dp)} dv={f(e0.dv)} dth={f(e0.dtheta)}"


_SPEC_RE = re.compile(r"^(dp|dv|dth)=([^\s]+)$")


def parse_error_spec(text: str) -> tuple[ErrorState, str | None]:
    """Parse ``preset:<name>`` or ``"dp=x,y,z dv=x,y,z dth=x,y,z"``.

    Omitted groups are zero.  Returns the error state and the preset name
    (``None`` for explicit errors).
    """
    text = text.strip()
    if text.startswith("preset:"):
        name = text[len("preset:"):].strip()
        return preset(name), name
    parts = {}
    for tok in text.split():
        m = _SPEC_RE.match(tok)
        if not m or m.group(1) in parts:
            raise ValidationError(f"bad error spec token {tok!r}; expected dp=, dv= or dth= with 3 values")
        try:
            vals = [float(x) for x in m.group(2).split(",")]
        except ValueError:
            raise ValidationError(f"non-numeric value in {tok!r}") from None
        if len(vals) != 3:
            raise ValidationError(f"{m.group(1)} needs 3 comma-separated values, got {len(vals)}")
        parts[m.group(1)] = vals
    if not parts:
        raise ValidationError("empty error spec")
    try:
        e0 = ErrorState(parts.get("dp", (0, 0, 0)), parts.get("dv", (0, 0, 0)), parts.get("dth", (0, 0, 0)))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return e0, None


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def _line(node) -> int:
    return node.start_mark.line + 1


def _check_keys(node, allowed, where: str, path) -> None:
    if not isinstance(node, yaml.MappingNode):
        raise ParseError(f"{path}:{_line(node)}: {where or 'top level'} must be a mapping")
    for k, _ in node.value:
        if k.value not in allowed:
            raise ParseError(f"{path}:{_line(k)}: unknown key {(where + '.' if where else '') + k.value!r}")


def _validate_structure(root, path) -> None:
    if root is None:
        return
    _check_keys(root, DEFAULTS.keys(), "", path)
    for k, v in root.value:
        if k.value == "targets":
            if not isinstance(v, yaml.SequenceNode):
                raise ParseError(f"{path}:{_line(v)}: targets must be a list")
            for item in v.value:
                _check_keys(item, _TARGET_KEYS, "targets[]", path)
        else:
            _check_keys(v, DEFAULTS[k.value].keys(), k.value, path)


def _num(x, key: str) -> float:
    # YAML 1.1 reads "150e6" as a string
    try:
        return float(x)
    except (TypeError, ValueError):
        raise ValidationError(f"{key} must be a number, got {x!r}") from None


def _vec(x, key: str) -> list:
    if not isinstance(x, (list, tuple)) or len(x) != 3:
        raise ValidationError(f"{key} must be a list of 3 numbers, got {x!r}")
    return [_num(v, key) for v in x]


def _int(x, key: str) -> int:
    v = _num(x, key)
    if v != int(v):
        raise ValidationError(f"{key} must be an integer, got {x!r}")
    return int(v)


def scenario_from_dict(cfg: dict | None, base_dir: Path | None = None) -> Scenario:
    """Build a validated :class:`Scenario` from a (partial) config mapping."""
    merged = copy.deepcopy(DEFAULTS)
    for sec, val in (cfg or {}).items():
        if sec not in merged:
            raise ParseError(f"unknown key {sec!r}")
        if sec == "targets":
            merged[sec] = val
        elif val is not None:
            if not isinstance(val, dict):
                raise ParseError(f"section {sec!r} must be a mapping")
            for k in val:
                if k not in merged[sec]:
                    raise ParseError(f"unknown key '{sec}.{k}'")
            merged[sec].update(val)
    try:
        return _build(merged, base_dir)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _build(c: dict, base_dir: Path | None) -> Scenario:
    fl = c["flight"]
    flight = FlightParams(_vec(fl["v0"], "flight.v0"), _num(fl["g"], "flight.g"))

    ch = c["chirp"]
    T = _num(ch["T"], "chirp.T")
    if ch["K"] is not None:
        K = _num(ch["K"], "chirp.K")
    else:
        if not T > 0:
            raise ValidationError(f"chirp.T must be positive, got {T}")
        K = _num(ch["bandwidth"], "chirp.bandwidth") / T
    f0 = -K * T / 2 if ch["f0"] is None else _num(ch["f0"], "chirp.f0")
    chirp = ChirpParams(f0=f0, K=K, T=T, fs=_num(ch["fs"], "chirp.fs"), fc=_num(ch["fc"], "chirp.fc"))

    st = c["slow_time"]
    slow = SlowTimeGrid(_num(st["prf"], "slow_time.prf"), _int(st["n_pulses"], "slow_time.n_pulses"))

    if not isinstance(c["targets"], list) or not c["targets"]:
        raise ValidationError("targets must be a non-empty list")
    targets = []
    for t in c["targets"]:
        if not isinstance(t, dict) or "position" not in t:
            raise ValidationError("each target needs a position")
        targets.append(Target(_vec(t["position"], "targets[].position"), _num(t.get("amplitude", 1.0), "targets[].amplitude")))

    im = c["image"]
    center = targets[0].position if im["center"] is None else _vec(im["center"], "image.center")
    grid = ImageGrid.centered_on(
        center,
        _num(im["spacing_along"], "image.spacing_along"),
        _num(im["spacing_cross"], "image.spacing_cross"),
        _int(im["n_along"], "image.n_along"),
        _int(im["n_cross"], "image.n_cross"),
        _vec(im["axis_along"], "image.axis_along"),
        _vec(im["axis_cross"], "image.axis_cross"),
    )

    pr = c["processing"]
    if pr["data_path"] not in ("synth", "simulate"):
        raise ValidationError(f"processing.data_path must be 'synth' or 'simulate', got {pr['data_path']!r}")
    if pr["interp"] not in (INTERP_LINEAR, INTERP_NEAREST):
        raise ValidationError(f"processing.interp must be 'linear' or 'nearest', got {pr['interp']!r}")
    margin = _num(pr["gate_margin"], "processing.gate_margin")
    if not margin >= 0:
        raise ValidationError("processing.gate_margin must be >= 0")

    er = c["error"]
    explicit = any(er[k] is not None for k in ("dp", "dv", "dtheta"))
    if er["preset"] is not None and explicit:
        raise ValidationError("error: give either a preset or explicit dp/dv/dtheta, not both")
    if explicit:
        z = [0.0, 0.0, 0.0]
        e0 = ErrorState(
            _vec(er["dp"], "error.dp") if er["dp"] is not None else z,
            _vec(er["dv"], "error.dv") if er["dv"] is not None else z,
            _vec(er["dtheta"], "error.dtheta") if er["dtheta"] is not None else z,
        )
        name = None
    else:
        name = er["preset"] if er["preset"] is not None else "none"
        e0 = preset(str(name))

    out = Path(str(c["output"]["dir"]))
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    return Scenario(
        flight=flight,
        chirp=chirp,
        slow_time=slow,
        targets=tuple(targets),
        grid=grid,
        error=e0,
        preset=name,
        data_path=pr["data_path"],
        interp=pr["interp"],
        gate_margin=margin,
        out_dir=out,
    )


def load_scenario(path) -> Scenario:
    """Read, parse and validate a scenario file.

    Raises
    ------
    ParseError
        Malformed YAML or unknown keys (message carries the line number).
    ValidationError
        Values that violate a model invariant (message names it).
    """
    path = Path(path)
    text = path.read_text()
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        _validate_structure(root, path)
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ParseError(f"{where}: {getattr(exc, 'problem', None) or exc}") from None
    return scenario_from_dict(cfg, base_dir=None)


def default_scenario() -> Scenario:
    return scenario_from_dict({})
