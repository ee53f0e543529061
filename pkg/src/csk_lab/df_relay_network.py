"""Two-phase error-free decode-and-forward network with MRC at the destination.

Phase 1: the source broadcasts the CSK waveform to the destination and to
every relay. Phase 2: each relay retransmits the same waveform (relays never
make decoding errors), and the destination coherently combines all copies.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .chaos_maps import ChaoticSequence, MapKind
from .csk_modem import SymbolFrame, bit_energies, correlate, spread
from .fading_channel import NoiseModel, apply_link, draw_gains

__all__ = [
    "NetworkConfig",
    "ChannelSet",
    "DecisionRecord",
    "FrameDecisions",
    "draw_channel_set",
    "mrc_combine",
    "transmit_frame",
    "decision_mean",
    "decision_variance",
    "alpha_value",
    "alpha_values",
]


def _tuple_of(values, n: int, name: str) -> tuple[float, ...]:
    if np.ndim(values) == 0:
        return (float(values),) * n
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise ValueError(f"{name} has {len(out)} entries, expected one per relay ({n})")
    return out


@dataclass(frozen=True)
class NetworkConfig:
    """Powers, link variances and modulation settings for one network.

    Scalars given for ``P_j``, ``var_sr`` or ``var_rd`` are broadcast to every
    relay.
    """

    n_relays: int = 1
    P_s: float = 1.0
    P_j: tuple = 1.0
    var_sd: float = 1.0
    var_sr: tuple = 1.0
    var_rd: tuple = 1.0
    beta: int = 10
    map: MapKind = field(default_factory=MapKind.cpf)
    N0: float = 1.0

    def __post_init__(self):
        n = self.n_relays
        if int(n) != n or n < 0:
            raise ValueError(f"n_relays must be a nonnegative integer, got {n!r}")
        object.__setattr__(self, "n_relays", int(n))
        for name in ("P_j", "var_sr", "var_rd"):
            object.__setattr__(self, name, _tuple_of(getattr(self, name), int(n), name))
        if int(self.beta) != self.beta or self.beta < 1:
            raise ValueError(f"beta must be a positive integer, got {self.beta!r}")
        object.__setattr__(self, "beta", int(self.beta))
        for name in ("P_s", "var_sd", "N0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("P_j", "var_sr", "var_rd"):
            if any(not v > 0 for v in getattr(self, name)):
                raise ValueError(f"all entries of {name} must be positive")

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.N0)

    @property
    def mean_bit_energy(self) -> float:
        # unit-variance chips, T_c = 1
        return float(self.beta)

    @property
    def mean_alpha(self) -> float:
        """E[alpha] for independent links and unit-variance chips."""
        gain = self.P_s * self.var_sd + sum(p * v for p, v in zip(self.P_j, self.var_rd))
        return gain * self.mean_bit_energy

    def with_N0(self, N0: float) -> "NetworkConfig":
        return replace(self, N0=float(N0))

    def to_dict(self) -> dict:
        return {
            "n_relays": self.n_relays,
            "P_s": self.P_s,
            "P_j": list(self.P_j),
            "var_sd": self.var_sd,
            "var_sr": list(self.var_sr),
            "var_rd": list(self.var_rd),
            "beta": self.beta,
            "map": self.map.to_dict(),
            "N0": self.N0,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ChannelSet:
    """Fading coefficients for a run of symbols.

    Shapes: ``h_sd`` is ``(n,)``; ``h_sr`` and ``h_rd`` are ``(n, N)``.
    """

    h_sd: np.ndarray
    h_sr: np.ndarray
    h_rd: np.ndarray

    def __post_init__(self):
        h_sd = np.atleast_1d(np.asarray(self.h_sd, dtype=np.complex128))
        n = h_sd.shape[0]
        h_sr = np.asarray(self.h_sr, dtype=np.complex128).reshape(n, -1)
        h_rd = np.asarray(self.h_rd, dtype=np.complex128).reshape(n, -1)
        if h_sr.shape != h_rd.shape:
            raise ValueError("h_sr and h_rd must have the same shape")
        object.__setattr__(self, "h_sd", h_sd)
        object.__setattr__(self, "h_sr", h_sr)
        object.__setattr__(self, "h_rd", h_rd)

    @classmethod
    def fixed(cls, h_sd: complex, h_rd: Sequence[complex] = (), h_sr=None,
              n_symbols: int = 1) -> "ChannelSet":
        """The same coefficients repeated for ``n_symbols`` symbols."""
        h_rd = np.asarray(h_rd, dtype=np.complex128).reshape(1, -1)
        h_sr = h_rd if h_sr is None else np.asarray(h_sr, dtype=np.complex128).reshape(1, -1)
        return cls(
            np.full(n_symbols, complex(h_sd)),
            np.repeat(h_sr, n_symbols, axis=0),
            np.repeat(h_rd, n_symbols, axis=0),
        )

    def __len__(self) -> int:
        return self.h_sd.shape[0]

    @property
    def n_relays(self) -> int:
        return self.h_rd.shape[1]


def draw_channel_set(cfg: NetworkConfig, n_symbols: int, rng: np.random.Generator) -> ChannelSet:
    """Independent block-fading draws for every link and symbol."""
    N = cfg.n_relays
    h_sd = draw_gains(cfg.var_sd, n_symbols, rng)
    h_sr = np.empty((n_symbols, N), dtype=np.complex128)
    h_rd = np.empty((n_symbols, N), dtype=np.complex128)
    for j in range(N):
        h_sr[:, j] = draw_gains(cfg.var_sr[j], n_symbols, rng)
        h_rd[:, j] = draw_gains(cfg.var_rd[j], n_symbols, rng)
    return ChannelSet(h_sd, h_sr, h_rd)


class DecisionRecord(NamedTuple):
    symbol_index: int
    correlator_value: float
    decided: int
    alpha: float
    analytic_mean: float
    analytic_variance: float
    E_b: float


@dataclass(frozen=True)
class FrameDecisions:
    """Column-wise decision records for one frame."""

    correlator: np.ndarray
    decided: np.ndarray
    alpha: np.ndarray
    analytic_mean: np.ndarray
    analytic_variance: np.ndarray
    E_b: np.ndarray

    def __len__(self) -> int:
        return self.decided.size

    def __getitem__(self, l: int) -> DecisionRecord:
        return DecisionRecord(
            int(l % len(self)),
            float(self.correlator[l]),
            int(self.decided[l]),
            float(self.alpha[l]),
            float(self.analytic_mean[l]),
            float(self.analytic_variance[l]),
            float(self.E_b[l]),
        )

    def __iter__(self) -> Iterator[DecisionRecord]:
        return (self[l] for l in range(len(self)))

    def n_errors(self, symbols) -> int:
        return int(np.count_nonzero(self.decided != np.asarray(symbols)))


def mrc_combine(y_sd, y_rd, h_sd, h_rd, P_s: float, P_j, sigma: float) -> np.ndarray:
    """Real part of the maximum-ratio combination of all received copies.

    Weights are ``sqrt(P) * conj(h) / sigma`` per link. Coefficients are
    constant over the last (chip) axis of the sample arrays.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    y_sd = np.asarray(y_sd, dtype=np.complex128)
    y_rd = list(y_rd)
    h_rd = list(np.asarray(h_rd, dtype=np.complex128).T) if np.ndim(h_rd) == 2 else list(h_rd)
    P_j = [float(P_j)] * len(y_rd) if np.ndim(P_j) == 0 else list(P_j)
    if not len(y_rd) == len(h_rd) == len(P_j):
        raise ValueError(
            f"relay count mismatch: {len(y_rd)} signals, {len(h_rd)} coefficients, "
            f"{len(P_j)} powers"
        )

    def weight(h, P):
        w = math.sqrt(P) * np.conj(np.asarray(h, dtype=np.complex128)) / sigma
        return w[..., None] if y_sd.ndim else w

    acc = weight(h_sd, P_s) * y_sd
    for y, h, P in zip(y_rd, h_rd, P_j):
        y = np.asarray(y, dtype=np.complex128)
        if y.shape != y_sd.shape:
            raise ValueError(f"relay signal shape {y.shape} differs from {y_sd.shape}")
        acc = acc + weight(h, P) * y
    return acc.real


def alpha_value(h_sd: complex, h_rd: Sequence[complex], P_s: float, P_j: Sequence[float],
                E_b: float) -> float:
    """Received bit energy ``[P_s|h_sd|^2 + sum_j P_j|h_rj,d|^2] * E_b``."""
    h_rd = list(h_rd)
    P_j = list(P_j)
    if len(h_rd) != len(P_j):
        raise ValueError(f"{len(h_rd)} relay coefficients but {len(P_j)} relay powers")
    gain = P_s * abs(h_sd) ** 2 + sum(p * abs(h) ** 2 for h, p in zip(h_rd, P_j))
    return float(gain * E_b)


def alpha_values(channels: ChannelSet, P_s: float, P_j, E_b) -> np.ndarray:
    P_j = np.asarray(P_j, dtype=np.float64).reshape(-1)
    if P_j.size != channels.n_relays:
        raise ValueError(f"{channels.n_relays} relays but {P_j.size} relay powers")
    gain = P_s * np.abs(channels.h_sd) ** 2
    if P_j.size:
        gain = gain + np.sum(P_j * np.abs(channels.h_rd) ** 2, axis=1)
    return gain * np.asarray(E_b, dtype=np.float64)


def decision_mean(alpha: float, s: int) -> float:
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha!r}")
    if s not in (1, -1):
        raise ValueError(f"symbol must be +1 or -1, got {s!r}")
    return alpha * s


def decision_variance(alpha: float, N0: float) -> float:
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha!r}")
    if not N0 > 0:
        raise ValueError(f"N0 must be positive, got {N0!r}")
    return 0.5 * N0 * alpha


def transmit_frame(cfg: NetworkConfig, frame: SymbolFrame, chips, rng: np.random.Generator,
                   channels: Optional[ChannelSet] = None, noiseless: bool = False
                   ) -> FrameDecisions:
    """Send a frame through both phases and detect it at the destination.

    Fresh fading is drawn for every symbol unless ``channels`` is given (a
    single-symbol set is repeated over the frame). The correlator output is
    reported on the scale where its mean is ``alpha * s`` and its variance is
    ``(N0/2) * alpha``.
    """
    if frame.beta != cfg.beta:
        raise ValueError(f"frame beta {frame.beta} differs from network beta {cfg.beta}")
    x = chips.chips if isinstance(chips, ChaoticSequence) else np.asarray(chips, dtype=np.float64)
    n, beta, N = len(frame), cfg.beta, cfg.n_relays
    u = spread(frame, x).reshape(n, beta)
    x = x.reshape(n, beta)

    if channels is None:
        channels = draw_channel_set(cfg, n, rng)
    elif len(channels) == 1 and n > 1:
        channels = ChannelSet(
            np.repeat(channels.h_sd, n),
            np.repeat(channels.h_sr, n, axis=0),
            np.repeat(channels.h_rd, n, axis=0),
        )
    if len(channels) != n or channels.n_relays != N:
        raise ValueError(
            f"channel set covers {len(channels)} symbols and {channels.n_relays} relays; "
            f"frame has {n} symbols and the network {N} relays"
        )

    noise = None if noiseless else cfg.noise
    # Phase 1
    y_sd = apply_link(u, channels.h_sd, cfg.P_s, noise, rng)
    for j in range(N):
        # Ideal relays regenerate u exactly, so this observation is not used.
        apply_link(u, channels.h_sr[:, j], cfg.P_s, noise, rng)
    # Phase 2
    y_rd = [apply_link(u, channels.h_rd[:, j], cfg.P_j[j], noise, rng) for j in range(N)]

    sigma = math.sqrt(cfg.noise.sigma2)
    combined = mrc_combine(y_sd, y_rd, channels.h_sd, channels.h_rd, cfg.P_s, cfg.P_j, sigma)
    corr = sigma * correlate(combined, x, beta)

    E_b = bit_energies(x, beta)
    alpha = alpha_values(channels, cfg.P_s, cfg.P_j, E_b)
    return FrameDecisions(
        correlator=corr,
        decided=np.where(corr >= 0.0, 1, -1).astype(np.int8),
        alpha=alpha,
        analytic_mean=alpha * frame.symbols,
        analytic_variance=0.5 * cfg.N0 * alpha,
        E_b=E_b,
    )
