"""Chaotic chip generators: the order-2 Chebyshev map (CPF) and the
piecewise-linear map (PWL).

Sequences are normalized to zero mean and unit variance with per-map
affine constants estimated once from a long calibration orbit.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MapTag",
    "MapKind",
    "ChaoticSequence",
    "cpf_iterate",
    "pwl_iterate",
    "fixed_points",
    "map_constants",
    "raw_orbit",
    "raw_orbits",
    "generate_sequence",
    "generate_sequences",
    "sequence_stats",
    "random_seed_state",
]

DEFAULT_BURN_IN = 1000
FIXED_POINT_TOL = 1e-6
CALIBRATION_LENGTH = 1_000_000
CALIBRATION_SEED = 0.2718281828459045

# Used only to restart an orbit that landed exactly on a fixed point in
# floating point (e.g. CPF: ... -> ~0 -> 1.0 -> -1.0 -> -1.0 ...).
_GOLDEN = 0.6180339887498949


class MapTag(enum.Enum):
    CPF = "cpf"
    PWL = "pwl"


@dataclass(frozen=True)
class MapKind:
    """Which map to iterate. ``pwl_L`` and ``pwl_phi`` only matter for PWL."""

    tag: MapTag = MapTag.CPF
    pwl_L: int = 3
    pwl_phi: float = 0.1

    def __post_init__(self):
        if self.tag is MapTag.PWL:
            if int(self.pwl_L) != self.pwl_L or self.pwl_L < 1:
                raise ValueError(f"pwl_L must be a positive integer, got {self.pwl_L!r}")
            if not 0.0 < self.pwl_phi < 1.0:
                raise ValueError(f"pwl_phi must lie in (0, 1), got {self.pwl_phi!r}")

    @classmethod
    def cpf(cls) -> "MapKind":
        return cls(MapTag.CPF)

    @classmethod
    def pwl(cls, L: int = 3, phi: float = 0.1) -> "MapKind":
        return cls(MapTag.PWL, int(L), float(phi))

    @classmethod
    def from_name(cls, name: str, L: int = 3, phi: float = 0.1) -> "MapKind":
        try:
            tag = MapTag(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown map {name!r}; expected 'cpf' or 'pwl'") from None
        return cls.pwl(L, phi) if tag is MapTag.PWL else cls.cpf()

    @property
    def name(self) -> str:
        return self.tag.value

    def to_dict(self) -> dict:
        if self.tag is MapTag.PWL:
            return {"tag": self.name, "pwl_L": self.pwl_L, "pwl_phi": self.pwl_phi}
        return {"tag": self.name}


@dataclass(frozen=True)
class ChaoticSequence:
    chips: np.ndarray
    map: MapKind
    seed_state: float
    normalized: bool
    raw_mean: float
    raw_std: float

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=np.float64)
        chips.setflags(write=False)
        object.__setattr__(self, "chips", chips)

    def __len__(self) -> int:
        return self.chips.size


def _check_unit_interval(x: float) -> None:
    if not abs(x) <= 1.0:
        raise ValueError(f"chaotic state must satisfy |x| <= 1, got {x!r}")


def cpf_iterate(x: float) -> float:
    """One step of x -> 1 - 2 x**2."""
    _check_unit_interval(x)
    return 1.0 - 2.0 * x * x


def pwl_iterate(x: float, L: int = 3, phi: float = 0.1) -> float:
    """One step of the PWL map; ``sign(0)`` is taken as +1."""
    _check_unit_interval(x)
    z = (L * abs(x) + phi) % 1.0
    return (2.0 * z - 1.0) if x >= 0.0 else -(2.0 * z - 1.0)


def fixed_points(kind: MapKind) -> tuple[float, ...]:
    """Fixed points of the map inside [-1, 1]."""
    if kind.tag is MapTag.CPF:
        return (-1.0, 0.5)
    # sign(x) * (2 frac(L|x| + phi) - 1) = x  has the same solutions |x| = y
    # on both branches, with y = (2j - 2 phi + 1) / (2L - 1).
    L, phi = kind.pwl_L, kind.pwl_phi
    pts = []
    for j in range(L + 1):
        y = (2 * j - 2 * phi + 1) / (2 * L - 1)
        if 0.0 <= y <= 1.0 and 0.0 <= L * y + phi - j < 1.0:
            pts.extend((y, -y))
    return tuple(sorted(set(pts)))


def _validate_seed(kind: MapKind, seed_state: float) -> float:
    seed_state = float(seed_state)
    if not -1.0 < seed_state < 1.0:
        raise ValueError(f"seed_state must lie in (-1, 1), got {seed_state!r}")
    for fp in fixed_points(kind):
        if abs(seed_state - fp) < FIXED_POINT_TOL:
            raise ValueError(
                f"seed_state {seed_state!r} is within {FIXED_POINT_TOL:g} of the "
                f"fixed point {fp!r} of the {kind.name} map"
            )
    return seed_state


def random_seed_state(kind: MapKind, rng: np.random.Generator) -> float:
    """Draw a valid seed uniformly from (-1, 1), avoiding fixed points."""
    while True:
        x = float(rng.uniform(-1.0, 1.0))
        try:
            return _validate_seed(kind, x)
        except ValueError:
            continue


def _restart_value(kind: MapKind, step: int) -> float:
    u = math.fmod((step + 1) * _GOLDEN, 1.0)
    if kind.tag is MapTag.CPF:
        return math.cos(math.pi * u)
    return 2.0 * u - 1.0


def _orbit_scalar(kind: MapKind, x: float, length: int, burn_in: int) -> np.ndarray:
    out = []
    append = out.append
    total = burn_in + length
    if kind.tag is MapTag.CPF:
        for k in range(total):
            y = 1.0 - 2.0 * x * x
            if y == x:
                y = _restart_value(kind, k)
            if k >= burn_in:
                append(y)
            x = y
    else:
        L, phi = float(kind.pwl_L), kind.pwl_phi
        for k in range(total):
            z = (L * abs(x) + phi) % 1.0
            y = (2.0 * z - 1.0) if x >= 0.0 else -(2.0 * z - 1.0)
            if y == x:
                y = _restart_value(kind, k)
            if k >= burn_in:
                append(y)
            x = y
    return np.array(out, dtype=np.float64)


def _orbit_batch(kind: MapKind, x: np.ndarray, length: int, burn_in: int) -> np.ndarray:
    # Lockstep over independent orbits. Elementwise IEEE arithmetic is the
    # same as the scalar loop, so each row matches _orbit_scalar bit for bit.
    x = np.array(x, dtype=np.float64)
    out = np.empty((length, x.size), dtype=np.float64)
    L, phi = float(kind.pwl_L), kind.pwl_phi
    for k in range(burn_in + length):
        if kind.tag is MapTag.CPF:
            y = 1.0 - 2.0 * x * x
        else:
            z = np.mod(L * np.abs(x) + phi, 1.0)
            y = 2.0 * z - 1.0
            y = np.where(x >= 0.0, y, -y)
        stuck = y == x
        if stuck.any():
            y[stuck] = _restart_value(kind, k)
        if k >= burn_in:
            out[k - burn_in] = y
        x = y
    return out.T.copy()


def raw_orbit(kind: MapKind, seed_state: float, length: int,
              burn_in: int = DEFAULT_BURN_IN) -> np.ndarray:
    """Un-normalized chips of one orbit, after ``burn_in`` discarded iterates."""
    seed_state = _validate_seed(kind, seed_state)
    if length < 1:
        raise ValueError("length must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    return _orbit_scalar(kind, seed_state, int(length), int(burn_in))


def raw_orbits(kind: MapKind, seed_states, length: int,
               burn_in: int = DEFAULT_BURN_IN) -> np.ndarray:
    """Vectorized :func:`raw_orbit`; returns shape ``(len(seed_states), length)``."""
    seeds = np.array([_validate_seed(kind, s) for s in np.ravel(seed_states)])
    if length < 1:
        raise ValueError("length must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    if seeds.size == 0:
        return np.empty((0, int(length)))
    return _orbit_batch(kind, seeds, int(length), int(burn_in))


@functools.lru_cache(maxsize=None)
def map_constants(kind: MapKind) -> tuple[float, float]:
    """Long-run (mean, std) of the raw map, from a fixed calibration orbit."""
    chips = _orbit_scalar(kind, CALIBRATION_SEED, CALIBRATION_LENGTH, DEFAULT_BURN_IN)
    return float(chips.mean()), float(chips.std())


def generate_sequence(kind: MapKind, seed_state: float, length: int,
                      burn_in: int = DEFAULT_BURN_IN) -> ChaoticSequence:
    raw = raw_orbit(kind, seed_state, length, burn_in)
    mean, std = map_constants(kind)
    return ChaoticSequence(
        chips=(raw - mean) / std,
        map=kind,
        seed_state=float(seed_state),
        normalized=True,
        raw_mean=mean,
        raw_std=std,
    )


def generate_sequences(kind: MapKind, seed_states, length: int,
                       burn_in: int = DEFAULT_BURN_IN) -> np.ndarray:
    """Normalized chips for many seeds at once, one row per seed.

    Row ``i`` equals ``generate_sequence(kind, seed_states[i], ...).chips``.
    """
    raw = raw_orbits(kind, seed_states, length, burn_in)
    mean, std = map_constants(kind)
    return (raw - mean) / std


def sequence_stats(seq) -> tuple[float, float]:
    """Sample mean and biased sample variance of the chips."""
    chips = np.asarray(seq.chips if isinstance(seq, ChaoticSequence) else seq,
                       dtype=np.float64)
    if chips.size == 0:
        raise ValueError("cannot compute statistics of an empty sequence")
    return float(chips.mean()), float(chips.var())
