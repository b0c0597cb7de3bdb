"""
Line-of-sight optical channel between an LED luminaire and a photodetector.

Every receiver in the package works with a single scalar: the channel gain
times the transmit amplitude scale implied by the transmit SNR. The total
transmit power is normalized to one and the receiver noise is a unit
variance Gaussian, so that scalar is the factor multiplying every Q-function
argument of the SER expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Vec3",
    "Luminaire",
    "Photodetector",
    "DetectionScale",
    "lambertian_order",
    "radiant_intensity",
    "concentrator_gain",
    "channel_gain",
    "detection_scale",
    "DOWN",
    "UP",
]


@dataclass(frozen=True)
class Vec3:
    """A point or direction in room coordinates (meters)."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Vec3.{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __iter__(self):
        return iter((self.x, self.y, self.z))


DOWN = Vec3(0.0, 0.0, -1.0)
UP = Vec3(0.0, 0.0, 1.0)


def _unit(v: Vec3, what: str) -> Vec3:
    norm = math.sqrt(v.x * v.x + v.y * v.y + v.z * v.z)
    if norm == 0.0:
        raise ValueError(f"{what} must be a non-zero vector")
    return Vec3(v.x / norm, v.y / norm, v.z / norm)


def _as_vec3(v) -> Vec3:
    if isinstance(v, Vec3):
        return v
    x, y, z = v
    return Vec3(x, y, z)


@dataclass(frozen=True)
class Luminaire:
    """
    LED transmitter with a Lambertian radiation pattern.

    Parameters
    ----------
    position : Vec3
        LED location in meters.
    semi_angle : float
        Half-power semi-angle in radians, strictly inside (0, pi/2).
    orientation : Vec3
        Boresight direction; normalized on construction. Straight down by
        default.
    """

    position: Vec3
    semi_angle: float = math.radians(30.0)
    orientation: Vec3 = DOWN
    lambertian_order: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", _as_vec3(self.position))
        object.__setattr__(self, "orientation", _unit(_as_vec3(self.orientation), "orientation"))
        object.__setattr__(self, "lambertian_order", lambertian_order(self.semi_angle))


@dataclass(frozen=True)
class Photodetector:
    """
    Photodetector front-end with a non-imaging concentrator and optical filter.

    Defaults are a 1 cm^2 detector with a 30 degree field of view, lens index
    1.5 and unit filter gain, facing straight up.
    """

    position: Vec3
    area: float = 1.0e-4
    fov: float = math.radians(30.0)
    lens_index: float = 1.5
    filter_gain: float = 1.0
    orientation: Vec3 = UP

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", _as_vec3(self.position))
        object.__setattr__(self, "orientation", _unit(_as_vec3(self.orientation), "orientation"))
        if not self.area > 0:
            raise ValueError(f"area must be positive, got {self.area}")
        if not 0 < self.fov <= math.pi / 2:
            raise ValueError(f"fov must lie in (0, pi/2], got {self.fov}")
        if not self.lens_index >= 1:
            raise ValueError(f"lens_index must be >= 1, got {self.lens_index}")
        if not 0 < self.filter_gain <= 1:
            raise ValueError(f"filter_gain must lie in (0, 1], got {self.filter_gain}")

    def moved_to(self, position) -> "Photodetector":
        """Same front-end optics at another location."""
        return Photodetector(
            position=_as_vec3(position),
            area=self.area,
            fov=self.fov,
            lens_index=self.lens_index,
            filter_gain=self.filter_gain,
            orientation=self.orientation,
        )


@dataclass(frozen=True)
class DetectionScale:
    """Channel gain times transmit amplitude over noise standard deviation."""

    value: float

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise ValueError(f"detection scale must be non-negative, got {self.value}")

    def __float__(self) -> float:
        return float(self.value)


def lambertian_order(semi_angle: float) -> float:
    """Lambertian emission order for a half-power semi-angle in radians."""
    if not 0 < semi_angle < math.pi / 2:
        raise ValueError(f"semi_angle must lie strictly inside (0, pi/2), got {semi_angle}")
    return -math.log(2.0) / math.log(math.cos(semi_angle))


def radiant_intensity(emergence_angle: float, order: float) -> float:
    """Normalized Lambertian radiant intensity (per steradian)."""
    if not order > 0:
        raise ValueError(f"order must be positive, got {order}")
    if not 0 <= emergence_angle <= math.pi / 2:
        raise ValueError(f"emergence_angle must lie in [0, pi/2], got {emergence_angle}")
    # cos(pi/2) is ~6e-17 in floating point, not zero
    cos_phi = 0.0 if emergence_angle == math.pi / 2 else math.cos(emergence_angle)
    return (order + 1.0) / (2.0 * math.pi) * cos_phi**order


def concentrator_gain(incidence_angle: float, lens_index: float, fov: float) -> float:
    """Gain of an ideal non-imaging concentrator; zero outside the FOV."""
    if incidence_angle < 0 or incidence_angle > fov:
        return 0.0
    return lens_index**2 / math.sin(fov) ** 2


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    return math.acos(float(np.clip(np.dot(a, b), -1.0, 1.0)))


def channel_gain(tx: Luminaire, rx: Photodetector) -> float:
    """
    DC gain of the direct path from ``tx`` to ``rx``.

    Returns exactly 0.0 when the receiver sees the LED outside its field of
    view or sits behind the LED's emitting plane.
    """
    offset = rx.position.array - tx.position.array
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        raise ValueError("luminaire and photodetector positions coincide")
    ray = offset / distance

    emergence = _angle(tx.orientation.array, ray)
    incidence = _angle(rx.orientation.array, -ray)
    if incidence > rx.fov or emergence > math.pi / 2:
        return 0.0

    return (
        rx.area
        / distance**2
        * radiant_intensity(emergence, tx.lambertian_order)
        * rx.filter_gain
        * concentrator_gain(incidence, rx.lens_index, rx.fov)
        * math.cos(incidence)
    )


def detection_scale(gain: float, snr_tx_db: float) -> DetectionScale:
    """Scale the channel gain by the transmit SNR (amplitude ratio, unit total power)."""
    if not gain >= 0:
        raise ValueError(f"gain must be non-negative, got {gain}")
    return DetectionScale(gain * 10.0 ** (snr_tx_db / 20.0))
