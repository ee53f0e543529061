"""Experiment configuration: a small INI document with strict keys.

Example::

    [network]
    map = cpf
    beta = 15
    n_relays = 1

    [sweep]
    mode = sweep
    grid = 0:5:15
    n_bits = 1000000
    seed = 1

    [output]
    path = ber.csv

Every key is optional; missing keys take the defaults in ``DEFAULTS``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .chaos_maps import MapKind
from .df_relay_network import NetworkConfig
from .energy_stats import MIN_FIT_SAMPLES

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULTS", "parse_config", "parse_grid"]

MODES = ("sweep", "fit", "compare")

DEFAULTS = {
    "network": {
        "map": "cpf",
        "beta": "15",
        "n_relays": "1",
        "P_s": "1.0",
        "P_j": "1.0",
        "var_sd": "1.0",
        "var_sr": "1.0",
        "var_rd": "1.0",
        "pwl_L": "3",
        "pwl_phi": "0.1",
    },
    "sweep": {
        "mode": "sweep",
        "grid": "0:5:15",
        "n_bits": "1000000",
        "min_errors": "100",
        "seed": "1",
        "fit_samples": "1000000",
        "bits_per_trial": "2000",
        "mgf_terms": "40",
        "pade_order": "19/20",
    },
    "output": {
        "path": "results.csv",
    },
}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    network: NetworkConfig
    eb_n0_grid_db: tuple
    n_bits: int
    master_seed: int
    output_path: str
    min_errors: int = 100
    fit_samples: int = 1_000_000
    bits_per_trial: int = 2000
    mgf_terms: int = 40
    pade_order: tuple = (19, 20)
    echo: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "network": self.network.to_dict(),
            "eb_n0_grid_db": list(self.eb_n0_grid_db),
            "n_bits": self.n_bits,
            "master_seed": self.master_seed,
            "output_path": self.output_path,
            "min_errors": self.min_errors,
            "fit_samples": self.fit_samples,
            "bits_per_trial": self.bits_per_trial,
            "mgf_terms": self.mgf_terms,
            "pade_order": list(self.pade_order),
        }


def parse_grid(text: str) -> tuple:
    """``start:step:stop`` (inclusive) or a comma-separated list, in dB."""
    text = text.strip()
    if not text:
        raise ConfigError("sweep.grid", "grid is empty")
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if not step > 0:
                raise ConfigError("sweep.grid", "step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            if n < 1:
                raise ConfigError("sweep.grid", "stop lies below start")
            values = [round(start + k * step, 12) for k in range(n)]
        else:
            values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("sweep.grid", f"cannot parse {text!r}") from None
    if not values:
        raise ConfigError("sweep.grid", "grid is empty")
    if len(set(values)) != len(values):
        raise ConfigError("sweep.grid", "duplicate grid entry")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("sweep.grid", "grid must be strictly increasing")
    if not all(math.isfinite(v) for v in values):
        raise ConfigError("sweep.grid", "grid entries must be finite")
    return tuple(values)


def _int(raw: dict, section: str, key: str, minimum: int) -> int:
    name = f"{section}.{key}"
    try:
        value = int(raw[section][key])
    except ValueError:
        raise ConfigError(name, f"expected an integer, got {raw[section][key]!r}") from None
    if value < minimum:
        raise ConfigError(name, f"must be >= {minimum}, got {value}")
    return value


def _float_list(raw: dict, section: str, key: str, n: int) -> tuple:
    name = f"{section}.{key}"
    try:
        values = [float(t) for t in raw[section][key].split(",") if t.strip()]
    except ValueError:
        raise ConfigError(name, f"expected numbers, got {raw[section][key]!r}") from None
    if len(values) == 1:
        values = values * n
    if len(values) != n:
        raise ConfigError(name, f"expected 1 or {n} values, got {len(values)}")
    if any(not (math.isfinite(v) and v > 0) for v in values):
        raise ConfigError(name, "values must be positive")
    return tuple(values)


def _read(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{exc.section}.{exc.option}", "duplicate key") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(exc.section, "duplicate section") from None
    except configparser.Error as exc:
        raise ConfigError("<document>", str(exc).splitlines()[0]) from None

    raw = {section: dict(keys) for section, keys in DEFAULTS.items()}
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(section, "unknown section")
        for key, value in parser.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            raw[section][key] = value
    return raw


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a configuration document.

    ``overrides`` maps dotted names such as ``"network.beta"`` to string
    values and is applied before validation (command-line flags use this).
    """
    raw = _read(text)
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ConfigError(dotted, "unknown key")
        raw[section][key] = str(value)

    net = raw["network"]
    mode = raw["sweep"]["mode"].strip().lower()
    if mode not in MODES:
        raise ConfigError("sweep.mode", f"expected one of {', '.join(MODES)}, got {mode!r}")
    try:
        kind = MapKind.from_name(net["map"], _int(raw, "network", "pwl_L", 1),
                                 float(net["pwl_phi"]))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        field_name = "network.map" if "map" in str(exc) else "network.pwl_phi"
        raise ConfigError(field_name, str(exc)) from None
    beta = _int(raw, "network", "beta", 1)
    n_relays = _int(raw, "network", "n_relays", 0)
    try:
        P_s = float(net["P_s"])
        var_sd = float(net["var_sd"])
    except ValueError as exc:
        raise ConfigError("network", str(exc)) from None
    if not (math.isfinite(P_s) and P_s > 0):
        raise ConfigError("network.P_s", "must be positive")
    if not (math.isfinite(var_sd) and var_sd > 0):
        raise ConfigError("network.var_sd", "must be positive")
    network = NetworkConfig(
        n_relays=n_relays,
        P_s=P_s,
        P_j=_float_list(raw, "network", "P_j", n_relays),
        var_sd=var_sd,
        var_sr=_float_list(raw, "network", "var_sr", n_relays),
        var_rd=_float_list(raw, "network", "var_rd", n_relays),
        beta=beta,
        map=kind,
    )

    sweep = raw["sweep"]
    grid = parse_grid(sweep["grid"])
    n_bits = _int(raw, "sweep", "n_bits", 1)
    if n_bits < beta:
        raise ConfigError("sweep.n_bits", f"must be at least beta ({beta}), got {n_bits}")
    if mode in ("fit", "compare") and n_bits < MIN_FIT_SAMPLES:
        raise ConfigError("sweep.n_bits", f"a fit needs at least {MIN_FIT_SAMPLES} samples, "
                                          f"got {n_bits}")
    seed = _int(raw, "sweep", "seed", 0)
    if seed >= 1 << 64:
        raise ConfigError("sweep.seed", "must fit in 64 bits")
    try:
        L, M = (int(t) for t in sweep["pade_order"].split("/"))
    except ValueError:
        raise ConfigError("sweep.pade_order", f"expected 'L/M', got {sweep['pade_order']!r}") from None
    mgf_terms = _int(raw, "sweep", "mgf_terms", 2)
    if L < 0 or M < 1 or L + M + 1 > mgf_terms:
        raise ConfigError("sweep.pade_order", f"[{L}/{M}] needs L >= 0, M >= 1 and "
                                              f"L + M + 1 <= mgf_terms ({mgf_terms})")
    path = raw["output"]["path"].strip()
    if not path:
        raise ConfigError("output.path", "must not be empty")

    return ExperimentConfig(
        mode=mode,
        network=network,
        eb_n0_grid_db=grid,
        n_bits=n_bits,
        master_seed=seed,
        output_path=path,
        min_errors=_int(raw, "sweep", "min_errors", 1),
        fit_samples=_int(raw, "sweep", "fit_samples", 1000),
        bits_per_trial=_int(raw, "sweep", "bits_per_trial", 1),
        mgf_terms=mgf_terms,
        pade_order=(L, M),
        echo=raw,
    )
