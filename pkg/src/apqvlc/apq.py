"""
Amplitude/phase/quadrant (APQ) modulation.

An M-ary ring constellation symbol is split into an amplitude index, an
in-quadrant phase index and a quadrant index. Each index drives a unipolar
PAM component; the components are weighted by a geometric power allocation
and summed into one non-negative optical intensity. The receiver undoes the
superposition by successive interference cancellation (SIC): slice the
strongest component, subtract it, move on to the next one.
"""

from __future__ import annotations

import math
import warnings
from functools import cached_property
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .channel import DetectionScale, Luminaire, Photodetector, channel_gain

__all__ = [
    "SicConditionError",
    "ErrorFloorWarning",
    "ComponentIndices",
    "ApqConfig",
    "power_allocation",
    "split_for",
    "gray_encode",
    "gray_decode",
    "index_to_components",
    "components_to_index",
    "components_to_complex",
    "pam_level",
    "apq_modulate",
    "modulate_symbols",
    "sic_demodulate",
    "sic_detect",
    "detect_symbols",
    "serving_gain",
]

SUPPORTED_ORDERS = (8, 16, 32)
QUADRANTS = 4


class SicConditionError(ValueError):
    """The strongest component does not dominate the sum of the weaker ones."""


class ErrorFloorWarning(UserWarning):
    """SIC cannot be error-free even without noise for this power split."""


class ComponentIndices(NamedTuple):
    a: int  # amplitude ring
    p: int  # phase inside the quadrant
    q: int  # quadrant


def power_allocation(alpha: float, n_components: int, strict: bool = True) -> tuple[float, ...]:
    """
    Fixed geometric power allocation ``P_i = alpha * P_{i-1}`` summing to one.

    With ``strict`` a violated dominance condition ``P_1 > P_2 + ... + P_n``
    raises :class:`SicConditionError`; otherwise it only warns.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    if n_components not in (2, 3):
        raise ValueError(f"n_components must be 2 or 3, got {n_components}")
    weights = [alpha**i for i in range(n_components)]
    total = math.fsum(weights)
    powers = tuple(w / total for w in weights)
    if powers[0] <= math.fsum(powers[1:]):
        msg = (
            f"alpha={alpha}: P1={powers[0]:.6g} does not exceed the remaining "
            f"power {math.fsum(powers[1:]):.6g}; SIC cannot separate the first component"
        )
        if strict:
            raise SicConditionError(msg)
        warnings.warn(msg, ErrorFloorWarning, stacklevel=2)
    return powers


def split_for(m_total: int) -> tuple[int, int, int]:
    """PAM orders (amplitude, phase, quadrant) used for an M-ary constellation."""
    splits = {8: (2, 1, 4), 16: (2, 2, 4), 32: (2, 4, 4)}
    try:
        return splits[m_total]
    except KeyError:
        raise ValueError(f"unsupported constellation size {m_total}; use one of {SUPPORTED_ORDERS}") from None


def gray_encode(n: int) -> int:
    return n ^ (n >> 1)


def gray_decode(g: int) -> int:
    n = 0
    while g:
        n ^= g
        g >>= 1
    return n


@dataclass(frozen=True)
class ApqConfig:
    """
    Immutable APQ constellation and power split.

    Only ``m_total`` and ``alpha`` are inputs; everything else is derived.
    ``powers`` has one entry per component that is actually transmitted
    (components with a PAM order of one are absent), strongest first in the
    order amplitude, phase, quadrant. ``strict`` controls whether a violated
    ``P_1 > sum(rest)`` condition raises or warns.
    """

    m_total: int = 16
    alpha: float = 0.3
    strict: bool = field(default=True, compare=False, repr=False)
    l_amp: int = field(init=False)
    l_phase: int = field(init=False)
    l_quad: int = field(init=False)
    powers: tuple[float, ...] = field(init=False)
    ring_amplitudes: tuple[float, ...] = field(init=False)
    phase_offsets: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        l_amp, l_phase, l_quad = split_for(self.m_total)
        n_active = sum(order > 1 for order in (l_amp, l_phase, l_quad))
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        set_("l_amp", l_amp)
        set_("l_phase", l_phase)
        set_("l_quad", l_quad)
        set_("powers", power_allocation(self.alpha, n_active, strict=self.strict))
        # Display-only geometry; the optical waveform depends on the PAM levels alone.
        set_("ring_amplitudes", tuple(float(k + 1) for k in range(l_amp)))
        set_("phase_offsets", tuple((2 * k + 1) * math.pi / (4 * l_phase) for k in range(l_phase)))
        if self.has_error_floor():
            warnings.warn(
                f"M={self.m_total}, alpha={self.alpha}: residual interference can cross a "
                "SIC threshold without noise, so the SER has an error floor",
                ErrorFloorWarning,
                stacklevel=3,
            )

    @property
    def orders(self) -> tuple[int, int, int]:
        return (self.l_amp, self.l_phase, self.l_quad)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.m_total))

    @property
    def stages(self) -> list[tuple[int, int, float]]:
        """``(component slot, PAM order, power)`` in SIC decoding order."""
        active = [(slot, order) for slot, order in enumerate(self.orders) if order > 1]
        return [(slot, order, power) for (slot, order), power in zip(active, self.powers)]

    def zero_floor_margins(self) -> np.ndarray:
        """
        Noiseless decision margin of each SIC stage.

        Stage ``i`` keeps a positive margin when half its PAM spacing,
        ``P_i / (2 (L_i - 1))``, exceeds the largest interference that the
        weaker components can add. A non-positive entry means an error floor.
        """
        powers = np.array(self.powers)
        margins = []
        for i, (_, order, power) in enumerate(self.stages):
            margins.append(power / (2 * (order - 1)) - powers[i + 1 :].sum())
        return np.array(margins)

    def has_error_floor(self) -> bool:
        return bool(self.zero_floor_margins().min() <= 0)

    def check(self, c: ComponentIndices) -> None:
        for value, order, name in zip(c, self.orders, ("amplitude", "phase", "quadrant")):
            if not 0 <= value < order:
                raise ValueError(f"{name} index {value} outside [0, {order})")

    @cached_property
    def waveform_table(self) -> np.ndarray:
        """Transmitted intensity for every symbol index, shape ``(M,)``."""
        return _waveform_table(self)

    @property
    def mean_intensity(self) -> float:
        return float(self.waveform_table.mean())


def index_to_components(symbol_index: int, cfg: ApqConfig) -> ComponentIndices:
    """
    Split a symbol index into its components.

    The most significant bits select the amplitude, the next ones the phase
    and the two least significant bits carry the Gray-coded quadrant.
    """
    if not 0 <= symbol_index < cfg.m_total:
        raise ValueError(f"symbol index {symbol_index} outside [0, {cfg.m_total})")
    quad_bits = symbol_index % cfg.l_quad
    rest = symbol_index // cfg.l_quad
    return ComponentIndices(rest // cfg.l_phase, rest % cfg.l_phase, gray_decode(quad_bits))


def components_to_index(c: ComponentIndices, cfg: ApqConfig) -> int:
    cfg.check(c)
    return (c.a * cfg.l_phase + c.p) * cfg.l_quad + gray_encode(c.q)


def components_to_complex(c: ComponentIndices, cfg: ApqConfig) -> complex:
    """Point of the ring constellation that the components describe."""
    cfg.check(c)
    angle = cfg.phase_offsets[c.p] + c.q * math.pi / 2
    return cfg.ring_amplitudes[c.a] * complex(math.cos(angle), math.sin(angle))


def pam_level(index: int, order: int) -> float:
    """Unipolar PAM level, equally spaced on [0, 1]."""
    if order < 1:
        raise ValueError(f"PAM order must be >= 1, got {order}")
    if not 0 <= index < order:
        raise ValueError(f"PAM index {index} outside [0, {order})")
    if order == 1:
        return 0.0
    return index / (order - 1)


def apq_modulate(c: ComponentIndices, cfg: ApqConfig) -> float:
    """Superimposed optical intensity for one symbol, in [0, 1]."""
    cfg.check(c)
    return math.fsum(power * pam_level(c[slot], order) for slot, order, power in cfg.stages)


def _waveform_table(cfg: ApqConfig) -> np.ndarray:
    return np.array([apq_modulate(index_to_components(k, cfg), cfg) for k in range(cfg.m_total)])


def _component_table(cfg: ApqConfig) -> np.ndarray:
    return np.array([tuple(index_to_components(k, cfg)) for k in range(cfg.m_total)])


def modulate_symbols(symbols: np.ndarray, cfg: ApqConfig) -> np.ndarray:
    """Vectorized :func:`apq_modulate` over an array of symbol indices."""
    return cfg.waveform_table[np.asarray(symbols)]


def sic_detect(received: np.ndarray, scale: float, cfg: ApqConfig) -> np.ndarray:
    """
    Successive interference cancellation on an array of received samples.

    Each stage slices the residual against midpoint thresholds of its own
    PAM levels (scaled by ``scale * P_i``) while treating the weaker
    components as noise, then subtracts the decided level. Thresholds are
    compared in the unnormalized domain so a zero scale still yields a
    decision. Returns an ``(n, 3)`` integer array of (a, p, q).
    """
    residual = np.array(received, dtype=float, copy=True).reshape(-1)
    decided = np.zeros((residual.size, 3), dtype=np.int64)
    for slot, order, power in cfg.stages:
        step = scale * power / (order - 1)
        idx = np.zeros(residual.size, dtype=np.int64)
        for k in range(order - 1):
            idx += residual >= step * (k + 0.5)
        decided[:, slot] = idx
        residual -= step * idx
    return decided


def sic_demodulate(received: float, scale: DetectionScale | float, cfg: ApqConfig) -> ComponentIndices:
    """Decide the components of a single received sample."""
    a, p, q = sic_detect(np.array([received]), float(scale), cfg)[0]
    return ComponentIndices(int(a), int(p), int(q))


def detect_symbols(received: np.ndarray, scale: float, cfg: ApqConfig) -> np.ndarray:
    """SIC decisions mapped back to symbol indices."""
    d = sic_detect(received, scale, cfg)
    q_bits = np.array([gray_encode(q) for q in range(cfg.l_quad)])[d[:, 2]]
    return (d[:, 0] * cfg.l_phase + d[:, 1]) * cfg.l_quad + q_bits


def serving_gain(luminaires: Sequence[Luminaire], rx: Photodetector) -> tuple[int, float]:
    """
    Index of the luminaire with the strongest direct path to ``rx`` and its gain.

    Ties go to the lowest index; the gain is 0.0 when no LED is in view.
    """
    if not luminaires:
        raise ValueError("at least one luminaire is required")
    gains = [channel_gain(tx, rx) for tx in luminaires]
    best = int(np.argmax(gains))
    return best, gains[best]
