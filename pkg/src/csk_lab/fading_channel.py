"""Block-fading complex Gaussian links with complex AWGN."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "LinkKind",
    "LinkRole",
    "LinkRealization",
    "NoiseModel",
    "draw_channel",
    "draw_gains",
    "complex_noise",
    "apply_link",
]


class LinkKind(enum.Enum):
    SOURCE_DEST = "s-d"
    SOURCE_RELAY = "s-r"
    RELAY_DEST = "r-d"


@dataclass(frozen=True)
class LinkRole:
    kind: LinkKind
    relay: Optional[int] = None

    def __post_init__(self):
        if self.kind is LinkKind.SOURCE_DEST:
            if self.relay is not None:
                raise ValueError("the source-destination link has no relay index")
        elif self.relay is None or self.relay < 0:
            raise ValueError(f"{self.kind.value} link needs a nonnegative relay index")

    @classmethod
    def source_dest(cls) -> "LinkRole":
        return cls(LinkKind.SOURCE_DEST)

    @classmethod
    def source_relay(cls, n: int) -> "LinkRole":
        return cls(LinkKind.SOURCE_RELAY, n)

    @classmethod
    def relay_dest(cls, n: int) -> "LinkRole":
        return cls(LinkKind.RELAY_DEST, n)

    def __str__(self):
        if self.relay is None:
            return self.kind.value
        return f"{self.kind.value}{self.relay}"


@dataclass(frozen=True)
class LinkRealization:
    """One symbol's worth of fading on one link."""

    h: complex
    role: LinkRole
    variance: float


@dataclass(frozen=True)
class NoiseModel:
    """AWGN with one-sided density N0, i.e. N0/2 per real dimension."""

    N0: float

    def __post_init__(self):
        if not self.N0 > 0:
            raise ValueError(f"N0 must be positive, got {self.N0!r}")

    @property
    def sigma2(self) -> float:
        return self.N0 / 2.0


def _check_variance(variance: float) -> float:
    variance = float(variance)
    if not variance > 0:
        raise ValueError(f"channel variance must be positive, got {variance!r}")
    return variance


def draw_gains(variance: float, size, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian coefficients with E|h|^2 = variance."""
    variance = _check_variance(variance)
    scale = math.sqrt(variance / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return scale * (re + 1j * im)


def draw_channel(role: LinkRole, variance: float, rng: np.random.Generator) -> LinkRealization:
    h = draw_gains(variance, None, rng)
    return LinkRealization(complex(h), role, float(variance))


def complex_noise(shape, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    sigma = math.sqrt(noise.sigma2)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return sigma * (re + 1j * im)


def apply_link(samples, h, power: float, noise: Optional[NoiseModel],
               rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Received samples ``sqrt(power) * h * samples + z``.

    ``h`` is held constant over the last axis of ``samples`` (one symbol's
    chips); a per-symbol array of coefficients broadcasts against the
    leading axes. ``noise=None`` gives a noiseless link.
    """
    if power < 0:
        raise ValueError(f"transmit power must be nonnegative, got {power!r}")
    u = np.asarray(samples, dtype=np.float64)
    h = np.asarray(h, dtype=np.complex128)
    if u.ndim:
        h = h[..., None]
    out = math.sqrt(power) * h * u
    if noise is not None:
        if rng is None:
            raise ValueError("a random generator is required when noise is enabled")
        out = out + complex_noise(out.shape, noise, rng)
    return out
