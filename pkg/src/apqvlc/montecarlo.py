"""
Seeded Monte Carlo SER estimation for APQ and GSSK links.

Trials are cut into fixed blocks of ``BLOCK`` samples. Every block draws
from its own Philox stream keyed by ``(seed, point, block)``, so a result is
a pure function of the inputs whatever the number of worker processes, and
error counts are reduced by integer addition.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .apq import ApqConfig, detect_symbols, modulate_symbols, serving_gain, sic_detect, _component_table
from .channel import Luminaire, Photodetector, channel_gain, detection_scale
from .gssk import GsskConfig, detect_ml

__all__ = [
    "BLOCK",
    "SerEstimate",
    "ApqScheme",
    "GsskScheme",
    "Scene",
    "SweepResult",
    "ThroughputMap",
    "block_rng",
    "scheme_scales",
    "run_ser_point",
    "run_ser_at_scales",
    "apq_stage_counts",
    "run_snr_sweep",
    "throughput_map",
]

BLOCK = 1 << 16


@dataclass(frozen=True)
class SerEstimate:
    errors: int
    trials: int

    def __post_init__(self) -> None:
        if self.trials < 1 or not 0 <= self.errors <= self.trials:
            raise ValueError(f"invalid counts: {self.errors} errors in {self.trials} trials")

    @property
    def ser(self) -> float:
        return self.errors / self.trials

    @property
    def stderr(self) -> float:
        p = self.ser
        return math.sqrt(p * (1 - p) / self.trials)


@dataclass(frozen=True)
class ApqScheme:
    """
    APQ served by the strongest LED.

    With ``mean_normalized`` the intensity is divided by its constellation
    mean so that the average transmitted optical power is one, matching the
    GSSK normalization. Without it the raw superposition is sent.
    """

    cfg: ApqConfig
    mean_normalized: bool = True

    @property
    def name(self) -> str:
        return f"apq{self.cfg.m_total}"

    @property
    def m_total(self) -> int:
        return self.cfg.m_total

    @property
    def power_gain(self) -> float:
        return 1.0 / self.cfg.mean_intensity if self.mean_normalized else 1.0


@dataclass(frozen=True)
class GsskScheme:
    cfg: GsskConfig

    @property
    def name(self) -> str:
        return f"gssk{self.cfg.n_tx}"

    @property
    def m_total(self) -> int:
        return self.cfg.m_total


Scheme = Union[ApqScheme, GsskScheme]


@dataclass(frozen=True)
class Scene:
    """Luminaires in the room and the receiver under test."""

    luminaires: tuple[Luminaire, ...]
    receiver: Photodetector

    def at(self, position) -> "Scene":
        return Scene(self.luminaires, self.receiver.moved_to(position))


@dataclass(frozen=True)
class SweepResult:
    snr_db: tuple[float, ...]
    estimates: tuple[SerEstimate, ...]
    scheme: str
    geometry: str = ""

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("SNR values must be strictly increasing")

    @property
    def ser(self) -> np.ndarray:
        return np.array([e.ser for e in self.estimates])

    @property
    def stderr(self) -> np.ndarray:
        return np.array([e.stderr for e in self.estimates])


@dataclass(frozen=True)
class ThroughputMap:
    """
    Normalized throughput over a floor grid.

    ``values[i, j]`` belongs to the point ``(xs[j], ys[i])``; ``ser`` holds the
    underlying estimates.
    """

    origin: tuple[float, float]
    spacing: float
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    ser: np.ndarray = field(repr=False)
    snr_db: float = 0.0
    scheme: str = ""
    m_total: int = 0


def block_rng(seed: int, point: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(point, block))))


def _apq_block(cfg: ApqConfig, scale: float, n: int, rng: np.random.Generator) -> int:
    symbols = rng.integers(0, cfg.m_total, size=n)
    noise = rng.standard_normal(n)
    received = scale * modulate_symbols(symbols, cfg) + noise
    return int(np.count_nonzero(detect_symbols(received, scale, cfg) != symbols))


def _gssk_block(cfg: GsskConfig, scales: np.ndarray, n: int, rng: np.random.Generator) -> int:
    symbols = rng.integers(0, cfg.m_total, size=n)
    noise = rng.standard_normal(n)
    received = cfg.amplitude_per_led * (cfg.patterns[symbols] @ scales) + noise
    return int(np.count_nonzero(detect_ml(received, scales, cfg) != symbols))


def _block_errors(task) -> int:
    cfg, scales, n, seed, point, block = task
    rng = block_rng(seed, point, block)
    if isinstance(cfg, ApqConfig):
        return _apq_block(cfg, float(scales), n, rng)
    return _gssk_block(cfg, np.asarray(scales, dtype=float), n, rng)


def _tasks(cfg, scales, trials: int, seed: int, point: int):
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    for block, start in enumerate(range(0, trials, BLOCK)):
        yield (cfg, scales, min(BLOCK, trials - start), seed, point, block)


def _reduce(tasks: list, workers: int) -> list[int]:
    if workers <= 1 or len(tasks) <= 1:
        return [_block_errors(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_block_errors, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def scheme_scales(scheme: Scheme, scene: Scene, snr_db: float):
    """Detection scale(s) the scheme's receiver sees at ``scene.receiver``."""
    if isinstance(scheme, ApqScheme):
        _, gain = serving_gain(scene.luminaires, scene.receiver)
        return detection_scale(gain, snr_db).value * scheme.power_gain
    leds = scheme.cfg.led_indices
    if max(leds) >= len(scene.luminaires):
        raise ValueError(f"GSSK uses LEDs {leds} but the scene has {len(scene.luminaires)}")
    gains = [channel_gain(scene.luminaires[i], scene.receiver) for i in leds]
    return np.array([detection_scale(g, snr_db).value for g in gains])


def run_ser_at_scales(cfg, scales, trials: int, seed: int, point: int = 0, workers: int = 1) -> SerEstimate:
    """
    Estimate the SER straight from detection scales.

    ``cfg`` is an :class:`ApqConfig` (``scales`` a float) or a
    :class:`GsskConfig` (``scales`` one value per LED).
    """
    errors = _reduce(list(_tasks(cfg, scales, trials, seed, point)), workers)
    return SerEstimate(sum(errors), trials)


def run_ser_point(scheme: Scheme, scene: Scene, snr_db: float, trials: int, seed: int,
                  point: int = 0, workers: int = 1) -> SerEstimate:
    """Monte Carlo SER of ``scheme`` at one receiver position and transmit SNR."""
    return run_ser_at_scales(scheme.cfg, scheme_scales(scheme, scene, snr_db), trials, seed, point, workers)


def apq_stage_counts(cfg: ApqConfig, scale: float, trials: int, seed: int, point: int = 0) -> dict[str, SerEstimate]:
    """
    Per-stage APQ error counts on a common set of noisy samples.

    Keys are ``amplitude``, ``phase``, ``quadrant`` and ``symbol``. A stage
    counts as wrong when its own component is wrong, whatever happened in
    earlier stages.
    """
    table = _component_table(cfg)
    counts = np.zeros(4, dtype=np.int64)
    for _, _, n, seed_, point_, block in _tasks(cfg, scale, trials, seed, point):
        rng = block_rng(seed_, point_, block)
        symbols = rng.integers(0, cfg.m_total, size=n)
        noise = rng.standard_normal(n)
        received = scale * modulate_symbols(symbols, cfg) + noise
        wrong = sic_detect(received, scale, cfg) != table[symbols]
        counts[:3] += wrong.sum(axis=0)
        counts[3] += wrong.any(axis=1).sum()
    names = ("amplitude", "phase", "quadrant", "symbol")
    return {name: SerEstimate(int(c), trials) for name, c in zip(names, counts)}


def run_snr_sweep(scheme: Scheme, scene: Scene, snr_list: Sequence[float], trials: int, seed: int,
                  workers: int = 1, geometry: str = "") -> SweepResult:
    """One :func:`run_ser_point` per SNR; point ``k`` uses stream key ``k``."""
    snr_list = [float(s) for s in snr_list]
    if not snr_list:
        raise ValueError("snr_list must not be empty")
    estimates = tuple(
        run_ser_point(scheme, scene, snr, trials, seed, point=k, workers=workers)
        for k, snr in enumerate(snr_list)
    )
    return SweepResult(tuple(snr_list), estimates, scheme.name, geometry)


def _grid(extent: float, spacing: float) -> np.ndarray:
    if spacing <= 0:
        raise ValueError(f"grid spacing must be positive, got {spacing}")
    steps = round(extent / spacing)
    if steps < 1 or abs(steps * spacing - extent) > 1e-9 * max(1.0, extent):
        raise ValueError(f"grid spacing {spacing} does not divide the {extent} m floor")
    return np.round(np.arange(steps + 1) * spacing, 12)


def throughput_map(scheme: Scheme, scene: Scene, snr_db: float, grid_spacing: float = 0.1,
                   trials: int = 100_000, seed: int = 0, room: tuple[float, float] = (4.0, 4.0),
                   workers: int = 1) -> ThroughputMap:
    """
    Normalized throughput ``1 - SER`` on a floor grid, scaled to its maximum.

    The receiver keeps the height and optics of ``scene.receiver`` and is
    moved to every grid point; grid point ``(i, j)`` uses stream key
    ``i * len(xs) + j``.
    """
    xs = _grid(room[0], grid_spacing)
    ys = _grid(room[1], grid_spacing)
    z = scene.receiver.position.z
    tasks = []
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            scales = scheme_scales(scheme, scene.at((x, y, z)), snr_db)
            tasks.extend(_tasks(scheme.cfg, scales, trials, seed, i * len(xs) + j))
    errors = np.array(_reduce(tasks, workers), dtype=np.int64)
    per_cell = errors.reshape(len(ys) * len(xs), -1).sum(axis=1)
    ser = (per_cell / trials).reshape(len(ys), len(xs))
    good = 1.0 - ser
    peak = good.max()
    values = good / peak if peak > 0 else good
    return ThroughputMap((0.0, 0.0), float(grid_spacing), xs, ys, values, ser, float(snr_db),
                         scheme.name, scheme.m_total)
