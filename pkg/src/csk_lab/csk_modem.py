"""CSK spreading and correlation detection at one sample per chip."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chaos_maps import ChaoticSequence

__all__ = [
    "CHIP_PERIOD",
    "SymbolFrame",
    "BitEnergy",
    "random_frame",
    "spread",
    "bit_energy",
    "bit_energies",
    "correlate",
    "despread_decide",
]

# One chip is one sample; the rectangular chip pulse reduces to the identity.
CHIP_PERIOD = 1.0


def _chips(chips) -> np.ndarray:
    if isinstance(chips, ChaoticSequence):
        return chips.chips
    return np.asarray(chips, dtype=np.float64)


@dataclass(frozen=True)
class SymbolFrame:
    symbols: np.ndarray
    beta: int

    def __post_init__(self):
        symbols = np.asarray(self.symbols)
        if symbols.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if not np.all((symbols == 1) | (symbols == -1)):
            raise ValueError("every symbol must be exactly +1 or -1")
        if int(self.beta) != self.beta or self.beta < 1:
            raise ValueError(f"beta must be a positive integer, got {self.beta!r}")
        symbols = symbols.astype(np.int8)
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "beta", int(self.beta))

    @property
    def chip_period(self) -> float:
        return CHIP_PERIOD

    @property
    def n_chips(self) -> int:
        return self.symbols.size * self.beta

    def __len__(self) -> int:
        return self.symbols.size


@dataclass(frozen=True)
class BitEnergy:
    value: float
    symbol_index: int


def random_frame(n_symbols: int, beta: int, rng: np.random.Generator) -> SymbolFrame:
    bits = rng.integers(0, 2, size=n_symbols, dtype=np.int8)
    return SymbolFrame(2 * bits - 1, beta)


def spread(frame: SymbolFrame, chips) -> np.ndarray:
    """Transmitted samples: symbol l multiplies chips [l*beta, (l+1)*beta)."""
    x = _chips(chips)
    if x.size != frame.n_chips:
        raise ValueError(
            f"need {frame.n_chips} chips for {len(frame)} symbols at beta={frame.beta}, "
            f"got {x.size}"
        )
    return (x.reshape(-1, frame.beta) * frame.symbols[:, None]).ravel()


def bit_energies(chips, beta: int) -> np.ndarray:
    """Energy of every complete chip block of length ``beta``."""
    x = _chips(chips)
    if x.size % beta:
        raise ValueError(f"chip count {x.size} is not a multiple of beta={beta}")
    return CHIP_PERIOD * np.sum(np.square(x.reshape(-1, beta)), axis=1)


def bit_energy(chips, symbol_index: int, beta: int) -> BitEnergy:
    x = _chips(chips)
    if symbol_index < 0 or (symbol_index + 1) * beta > x.size:
        raise IndexError(
            f"symbol {symbol_index} needs chips up to {(symbol_index + 1) * beta}, "
            f"sequence has {x.size}"
        )
    block = x[symbol_index * beta:(symbol_index + 1) * beta]
    return BitEnergy(float(CHIP_PERIOD * np.dot(block, block)), int(symbol_index))


def correlate(combined, chips, beta: int) -> np.ndarray:
    """Per-symbol correlator output: sum over the block of sample * chip."""
    y = np.asarray(combined, dtype=np.float64)
    x = _chips(chips)
    if y.shape != x.shape:
        raise ValueError(f"signal has shape {y.shape}, chips have shape {x.shape}")
    if x.size % beta:
        raise ValueError(f"chip count {x.size} is not a multiple of beta={beta}")
    return np.sum((y * x).reshape(-1, beta), axis=1)


def despread_decide(combined, chips, beta: int) -> np.ndarray:
    """Hard decisions; a zero correlator output decides +1."""
    return np.where(correlate(combined, chips, beta) >= 0.0, 1, -1).astype(np.int8)
