"""
Scenario files: room, luminaire layout, receiver optics, scheme and run budget.

A scenario is a JSON document validated against ``scenario.schema.json``
(shipped with the package). Only ``scheme`` is required; every other field
defaults to the reference setup: a 4 x 4 x 3 m room, five LEDs on the
ceiling in a cross of spacing ``d`` around the room center, receivers at
0.75 m and 30 degree optics.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .apq import ApqConfig, SicConditionError
from .channel import Luminaire, Photodetector, Vec3
from .gssk import GsskConfig
from .montecarlo import ApqScheme, GsskScheme, Scene

__all__ = [
    "ConfigError",
    "SchemeSpec",
    "Optics",
    "ScenarioConfig",
    "cross_layout",
    "REFERENCE_RECEIVERS",
    "load_scenario",
    "scenario_from_dict",
    "SCHEMA",
]

SCHEMA: dict = json.loads(resources.files("apqvlc").joinpath("scenario.schema.json").read_text())

REFERENCE_RECEIVERS = {"Rx1": (1.0, 1.0), "Rx2": (2.1, 2.2), "Rx3": (2.0, 2.0)}
HEATMAP_SNR_BY_BITS = {3: 130.0, 4: 140.0, 5: 150.0}
DEFAULT_SNR_DB = tuple(float(s) for s in range(110, 155, 5))


class ConfigError(ValueError):
    """Invalid scenario; the message names the offending field."""


def cross_layout(spacing: float, height: float = 3.0, center: tuple[float, float] = (2.0, 2.0)) -> list[Vec3]:
    """Tx1..Tx5: two diagonals of half-width ``spacing`` plus the center."""
    cx, cy = center
    d = spacing
    return [
        Vec3(cx - d, cy - d, height),
        Vec3(cx + d, cy + d, height),
        Vec3(cx, cy, height),
        Vec3(cx - d, cy + d, height),
        Vec3(cx + d, cy - d, height),
    ]


@dataclass(frozen=True)
class SchemeSpec:
    kind: str  # "apq" or "gssk"
    m: int
    alpha: float = 0.3
    mean_normalized: bool = True
    leds: tuple[int, ...] | None = None

    @property
    def bits(self) -> int:
        return int(math.log2(self.m))

    @property
    def name(self) -> str:
        return f"{self.kind}{self.m if self.kind == 'apq' else self.bits}"


@dataclass(frozen=True)
class Optics:
    semi_angle_deg: float = 30.0
    fov_deg: float = 30.0
    area_m2: float = 1.0e-4
    lens_index: float = 1.5
    filter_gain: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario; build one with :func:`load_scenario`."""

    scheme: SchemeSpec
    room: tuple[float, float, float] = (4.0, 4.0, 3.0)
    spacing: float = 1.0
    led_height: float = 3.0
    luminaires: tuple[tuple[float, float, float], ...] = ()
    receiver_height: float = 0.75
    receivers: tuple[tuple[float, float, float], ...] = ()
    optics: Optics = field(default_factory=Optics)
    led_power_w: float = 0.25
    data_rate_bps: float = 10.0e6
    snr_db: tuple[float, ...] = DEFAULT_SNR_DB
    heatmap_snr_db: float = 140.0
    grid_spacing: float = 0.1
    trials: int = 1_000_000
    heatmap_trials: int = 100_000
    seed: int = 0
    allow_floor: bool = False

    def to_dict(self) -> dict[str, Any]:
        """Explicit JSON form; loading it back gives the same config."""
        scheme: dict[str, Any] = {"kind": self.scheme.kind}
        if self.scheme.kind == "apq":
            scheme.update(m=self.scheme.m, alpha=self.scheme.alpha, mean_normalized=self.scheme.mean_normalized)
        else:
            scheme.update(n_tx=self.scheme.bits, leds=list(self.scheme.leds))
        return {
            "scheme": scheme,
            "room": dict(zip("xyz", self.room)),
            "layout": {"spacing": self.spacing, "height": self.led_height},
            "luminaires": [list(p) for p in self.luminaires],
            "receiver_height": self.receiver_height,
            "receivers": [list(p) for p in self.receivers],
            "optics": asdict(self.optics),
            "led_power_w": self.led_power_w,
            "data_rate_bps": self.data_rate_bps,
            "snr_db": list(self.snr_db),
            "heatmap": {"snr_db": self.heatmap_snr_db, "grid_spacing": self.grid_spacing},
            "trials": self.trials,
            "heatmap_trials": self.heatmap_trials,
            "seed": self.seed,
            "allow_floor": self.allow_floor,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def with_overrides(self, **changes) -> "ScenarioConfig":
        """Apply command-line overrides; ``None`` values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        return scenario_from_dict({**self.to_dict(), **_flat_to_json(changes)}) if changes else self

    def luminaire_objects(self) -> tuple[Luminaire, ...]:
        semi = math.radians(self.optics.semi_angle_deg)
        return tuple(Luminaire(Vec3(*p), semi_angle=semi) for p in self.luminaires)

    def photodetector(self, position) -> Photodetector:
        o = self.optics
        return Photodetector(Vec3(*position), area=o.area_m2, fov=math.radians(o.fov_deg),
                             lens_index=o.lens_index, filter_gain=o.filter_gain)

    def scene(self, position) -> Scene:
        return Scene(self.luminaire_objects(), self.photodetector(position))

    def build_scheme(self) -> ApqScheme | GsskScheme:
        s = self.scheme
        if s.kind == "apq":
            return ApqScheme(ApqConfig(s.m, s.alpha, strict=not self.allow_floor), s.mean_normalized)
        return GsskScheme(GsskConfig(s.bits, s.leds))


def _flat_to_json(changes: dict) -> dict:
    out = {}
    for key, value in changes.items():
        if key in ("trials", "heatmap_trials", "seed", "allow_floor"):
            out[key] = value
        else:
            raise KeyError(f"unsupported override {key!r}")
    return out


def _scheme(raw) -> SchemeSpec:
    if isinstance(raw, str):
        kind = raw.rstrip("0123456789")
        number = int(raw[len(kind):])
        raw = {"kind": kind, "m": number} if kind == "apq" else {"kind": kind, "n_tx": number}
    if raw["kind"] == "apq":
        return SchemeSpec("apq", int(raw["m"]), float(raw.get("alpha", 0.3)), bool(raw.get("mean_normalized", True)))
    n_tx = int(raw["n_tx"])
    leds = raw.get("leds")
    return SchemeSpec("gssk", 2**n_tx, leds=tuple(leds) if leds is not None else GsskConfig(n_tx).led_indices)


def _path(error: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    """Validate a parsed scenario document and fill in defaults."""
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(raw), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        lines = [f"{_path(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid scenario:\n  " + "\n  ".join(lines))

    scheme = _scheme(raw["scheme"])
    room_raw = raw.get("room", {})
    room = (float(room_raw.get("x", 4.0)), float(room_raw.get("y", 4.0)), float(room_raw.get("z", 3.0)))
    layout = raw.get("layout", {})
    spacing = float(layout.get("spacing", 1.0))
    led_height = float(layout.get("height", room[2]))
    if raw.get("luminaires"):
        luminaires = tuple(tuple(float(c) for c in p) for p in raw["luminaires"])
    else:
        luminaires = tuple(tuple(v) for v in cross_layout(spacing, led_height, (room[0] / 2, room[1] / 2)))

    rx_height = float(raw.get("receiver_height", 0.75))
    receivers = []
    for k, item in enumerate(raw.get("receivers", list(REFERENCE_RECEIVERS))):
        if isinstance(item, str):
            item = REFERENCE_RECEIVERS[item]
        x, y, *z = (float(c) for c in item)
        position = (x, y, z[0] if z else rx_height)
        if not (0 <= x <= room[0] and 0 <= y <= room[1]):
            raise ConfigError(f"receivers.{k}: position {position} lies outside the {room[0]} x {room[1]} m floor")
        receivers.append(position)

    heatmap = raw.get("heatmap", {})
    cfg = ScenarioConfig(
        scheme=scheme,
        room=room,
        spacing=spacing,
        led_height=led_height,
        luminaires=luminaires,
        receiver_height=rx_height,
        receivers=tuple(receivers),
        optics=Optics(**{k: float(v) for k, v in raw.get("optics", {}).items()}),
        led_power_w=float(raw.get("led_power_w", 0.25)),
        data_rate_bps=float(raw.get("data_rate_bps", 10.0e6)),
        snr_db=tuple(float(s) for s in raw.get("snr_db", DEFAULT_SNR_DB)),
        heatmap_snr_db=float(heatmap.get("snr_db", HEATMAP_SNR_BY_BITS[scheme.bits])),
        grid_spacing=float(heatmap.get("grid_spacing", 0.1)),
        trials=int(raw.get("trials", 1_000_000)),
        heatmap_trials=int(raw.get("heatmap_trials", 100_000)),
        seed=int(raw.get("seed", 0)),
        allow_floor=bool(raw.get("allow_floor", False)),
    )
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg: ScenarioConfig) -> None:
    if any(b <= a for a, b in zip(cfg.snr_db, cfg.snr_db[1:])):
        raise ConfigError("snr_db: values must be strictly increasing")
    for extent, axis in zip(cfg.room[:2], "xy"):
        steps = round(extent / cfg.grid_spacing)
        if abs(steps * cfg.grid_spacing - extent) > 1e-9 * extent:
            raise ConfigError(f"heatmap.grid_spacing: {cfg.grid_spacing} does not divide room.{axis}={extent}")
    if cfg.scheme.kind == "gssk" and max(cfg.scheme.leds) >= len(cfg.luminaires):
        raise ConfigError(f"scheme.leds: {cfg.scheme.leds} refers past the {len(cfg.luminaires)} luminaires")
    try:
        cfg.build_scheme()
    except SicConditionError as exc:
        raise ConfigError(f"scheme.alpha: {exc} (pass --allow-floor to run anyway)") from None


def load_scenario(path, allow_floor: bool | None = None) -> ScenarioConfig:
    """Read, validate and default-fill a scenario JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        required = ", ".join(SCHEMA["required"])
        raise ConfigError(f"{path}: scenario file is empty; required fields: {required}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if allow_floor is not None and isinstance(raw, dict):
        raw = {**raw, "allow_floor": allow_floor}
    return scenario_from_dict(raw)
