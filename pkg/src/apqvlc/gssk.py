"""Generalized space shift keying: the bits of a symbol say which LEDs are on."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GsskConfig",
    "DEFAULT_LED_SUBSETS",
    "gssk_modulate",
    "gssk_received_mean",
    "gssk_detect_ml",
    "detect_ml",
]

# Tx1..Tx5 are luminaires 0..4 of the reference cross layout
DEFAULT_LED_SUBSETS = {3: (0, 1, 2), 4: (0, 1, 2, 3), 5: (0, 1, 2, 3, 4)}


@dataclass(frozen=True)
class GsskConfig:
    """
    One LED per bit, on-off keyed.

    ``amplitude_per_led`` is chosen so the total optical power averaged over
    all ``2 ** n_tx`` patterns equals one (half the LEDs are on on average).
    """

    n_tx: int = 3
    led_indices: tuple[int, ...] | None = None
    amplitude_per_led: float = field(init=False)

    def __post_init__(self) -> None:
        if self.n_tx < 1:
            raise ValueError(f"n_tx must be >= 1, got {self.n_tx}")
        leds = self.led_indices
        if leds is None:
            leds = DEFAULT_LED_SUBSETS.get(self.n_tx, tuple(range(self.n_tx)))
        leds = tuple(int(i) for i in leds)
        if len(leds) != self.n_tx:
            raise ValueError(f"need {self.n_tx} LED indices, got {len(leds)}")
        if len(set(leds)) != len(leds):
            raise ValueError(f"LED indices must be distinct, got {leds}")
        object.__setattr__(self, "led_indices", leds)
        object.__setattr__(self, "amplitude_per_led", 2.0 / self.n_tx)

    @property
    def m_total(self) -> int:
        return 2**self.n_tx

    @property
    def bits_per_symbol(self) -> int:
        return self.n_tx

    @cached_property
    def patterns(self) -> np.ndarray:
        """Activation pattern of every symbol, shape ``(M, n_tx)``."""
        return np.array([gssk_modulate(k, self.n_tx) for k in range(self.m_total)])


def gssk_modulate(symbol_index: int, n_tx: int) -> np.ndarray:
    """Binary expansion of the symbol; the most significant bit drives the first LED."""
    if not 0 <= symbol_index < 2**n_tx:
        raise ValueError(f"symbol index {symbol_index} outside [0, {2**n_tx})")
    return np.array([(symbol_index >> (n_tx - 1 - i)) & 1 for i in range(n_tx)], dtype=np.int64)


def gssk_received_mean(pattern, gains, cfg: GsskConfig) -> float:
    """
    Noiseless receiver output for an activation pattern.

    ``gains`` are the per-LED detection scales, i.e. channel gains already
    multiplied by the transmit amplitude factor of the operating SNR. With a
    0 dB transmit SNR they are the plain channel gains.
    """
    gains = np.asarray(gains, dtype=float)
    pattern = np.asarray(pattern)
    if gains.shape != (cfg.n_tx,) or pattern.shape != (cfg.n_tx,):
        raise ValueError(f"pattern and gains must both have length {cfg.n_tx}")
    return float(cfg.amplitude_per_led * np.dot(pattern, gains))


def _hypotheses(gains: np.ndarray, cfg: GsskConfig) -> np.ndarray:
    gains = np.asarray(gains, dtype=float)
    if gains.shape != (cfg.n_tx,):
        raise ValueError(f"gains must have length {cfg.n_tx}, got shape {gains.shape}")
    return cfg.amplitude_per_led * (cfg.patterns @ gains)


def detect_ml(received: np.ndarray, gains, cfg: GsskConfig) -> np.ndarray:
    """
    Maximum-likelihood symbol decisions for an array of received samples.

    With Gaussian noise this is the nearest noiseless hypothesis; ``argmin``
    resolves exact ties to the lowest symbol index.
    """
    means = _hypotheses(gains, cfg)
    received = np.asarray(received, dtype=float).reshape(-1, 1)
    return np.argmin((received - means) ** 2, axis=1)


def gssk_detect_ml(received: float, gains, cfg: GsskConfig) -> int:
    return int(detect_ml(np.array([received]), gains, cfg)[0])
