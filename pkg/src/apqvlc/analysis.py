"""
Closed-form symbol error rate of 16-ary APQ with three SIC stages.

Each stage error probability averages Gaussian tail terms over the
interference left by the weaker components. Later stages are conditioned on
the residual ``e`` in {-1, 0, +1} that a wrong earlier decision leaves
behind: ``e = 0`` with probability ``1 - Pr``, ``e = -1`` and ``e = +1`` with
``Pr / 2`` each. The stage probabilities combine as if independent.

``scale`` is the detection scale (gain times transmit amplitude over noise
standard deviation). Every function accepts a scalar or a numpy array of
scales and returns the same shape.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import erfc

__all__ = [
    "q_function",
    "DELTA2",
    "DELTA3",
    "QUAD_LEVELS",
    "residual_distribution",
    "ser_amplitude",
    "phase_error_given",
    "ser_phase",
    "quadrant_error_given",
    "ser_quadrant",
    "ser_total",
    "stage_errors",
]

QUAD_LEVELS = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
# every (phase level, quadrant level) pair a stage-1 decision sees as interference
DELTA2 = np.repeat([0.0, 1.0], 4)
DELTA3 = np.tile(QUAD_LEVELS, 2)
RESIDUALS = (-1, 0, 1)


def q_function(x):
    """Gaussian tail probability ``Q(x) = erfc(x / sqrt(2)) / 2``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def _unpack(powers: Sequence[float]) -> tuple[float, float, float]:
    if len(powers) != 3:
        raise ValueError(f"16-ary APQ needs three component powers, got {len(powers)}")
    p1, p2, p3 = (float(p) for p in powers)
    return p1, p2, p3


def _col(scale) -> np.ndarray:
    s = np.asarray(scale, dtype=float)
    if np.any(s < 0):
        raise ValueError("detection scale must be non-negative")
    return s[..., None]


def residual_distribution(error_probability) -> dict[int, np.ndarray]:
    """Probability of each residual ``e`` after a stage with the given error probability."""
    pr = np.asarray(error_probability, dtype=float)
    return {-1: pr / 2, 0: 1 - pr, 1: pr / 2}


def ser_amplitude(scale, powers):
    """Probability of a wrong amplitude (first stage) decision."""
    p1, p2, p3 = _unpack(powers)
    s = _col(scale)
    interference = p2 * DELTA2 + p3 * DELTA3
    terms = q_function(s * (p1 / 2 - interference)) + q_function(s * (p1 / 2 + interference))
    return terms.sum(axis=-1) / 16


def phase_error_given(e1: int, scale, powers):
    """Phase (second stage) error probability given the first-stage residual ``e1``."""
    p1, p2, p3 = _unpack(powers)
    s = _col(scale)
    shift = p3 * QUAD_LEVELS + e1 * p1
    terms = q_function(s * (p2 / 2 - shift)) + q_function(s * (p2 / 2 + shift))
    return terms.sum(axis=-1) / 8


def ser_phase(scale, powers):
    """Probability of a wrong phase decision, averaged over the first-stage residual."""
    pe1 = residual_distribution(ser_amplitude(scale, powers))
    return sum(pe1[e1] * phase_error_given(e1, scale, powers) for e1 in RESIDUALS)


def quadrant_error_given(e1: int, e2: int, scale, powers):
    """Quadrant (4-PAM, third stage) error probability given both earlier residuals."""
    p1, p2, p3 = _unpack(powers)
    s = np.asarray(scale, dtype=float)
    shift = e1 * p1 + e2 * p2
    return 0.75 * (q_function(s * (p3 / 6 - shift)) + q_function(s * (p3 / 6 + shift)))


def ser_quadrant(scale, powers):
    """Probability of a wrong quadrant decision, averaged over both earlier residuals."""
    pe1 = residual_distribution(ser_amplitude(scale, powers))
    total = 0.0
    for e1 in RESIDUALS:
        pe2 = residual_distribution(phase_error_given(e1, scale, powers))
        for e2 in RESIDUALS:
            total = total + pe2[e2] * pe1[e1] * quadrant_error_given(e1, e2, scale, powers)
    return total


def stage_errors(scale, powers) -> tuple:
    """``(Pr1, Pr2, Pr3)`` for the amplitude, phase and quadrant stages."""
    return ser_amplitude(scale, powers), ser_phase(scale, powers), ser_quadrant(scale, powers)


def ser_total(scale, powers):
    """Symbol error rate: a symbol is right only if all three stages are right."""
    pr1, pr2, pr3 = stage_errors(scale, powers)
    return 1 - (1 - pr1) * (1 - pr2) * (1 - pr3)
