"""Experiment orchestration: BER sweeps, fit studies and their output files.

Trial ``i`` of a sweep draws everything it needs (chaotic seed, symbols,
fading, noise) from its own stream ``trial_rng(master_seed, i)``, and the
same streams are reused at every grid point, so neighbouring points differ
only through N0. Per-trial error tallies are reduced in trial order, which
makes the output independent of the worker count.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analytic_ber import (
    AnalyticError,
    BerPoint,
    ber_mgf,
    ber_quadrature,
    mgf_series_from_fit,
)
from .chaos_maps import generate_sequences, random_seed_state
from .config import ExperimentConfig
from .csk_modem import random_frame
from .df_relay_network import NetworkConfig, transmit_frame
from .energy_stats import (
    MIN_FIT_SAMPLES,
    FitError,
    GeneralizedGammaParams,
    collect_alpha,
    compare_candidates,
    fit_ggamma,
    fit_report,
    write_fit_report,
    write_histogram_csv,
)
from .seeding import trial_rng

__all__ = [
    "CSV_HEADER",
    "BerCurve",
    "AnalyticFailure",
    "wilson_interval",
    "eb_n0_to_N0",
    "fit_network",
    "run_sweep",
    "run_fit_study",
    "run_compare",
    "write_curve_csv",
    "curve_csv_text",
    "resolve_threads",
]

log = logging.getLogger(__name__)

CSV_HEADER = "eb_n0_db,method,ber,ci_half_width,n_bits,n_errors,map,beta,n_relays,seed"
WILSON_Z = 1.959963984540054
# Trial index reserved for the alpha stream used by fits; sweeps never get near it.
FIT_STREAM = 1 << 63
_TRIALS_PER_WORKER = 8
_METHOD_ORDER = {"simulated": 0, "quadrature": 1, "mgf_pade": 2}


@dataclass(frozen=True)
class AnalyticFailure:
    eb_n0_db: float
    method: str
    error: str


@dataclass
class BerCurve:
    points: list
    metadata: dict
    failures: list = field(default_factory=list)

    def by_method(self, method: str) -> list:
        return [p for p in self.points if p.method == method]

    def point(self, eb_n0_db: float, method: str) -> Optional[BerPoint]:
        for p in self.points:
            if p.method == method and p.eb_n0_db == eb_n0_db:
                return p
        return None

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "points": [
                {"eb_n0_db": p.eb_n0_db, "method": p.method, "ber": p.ber, **p.diagnostics}
                for p in self.points
            ],
            "failures": [vars(f) for f in self.failures],
        }


def wilson_interval(n_errors: int, n_bits: int, z: float = WILSON_Z) -> tuple[float, float, float]:
    """95% Wilson score interval: (low, high, half_width)."""
    if n_bits <= 0:
        raise ValueError("n_bits must be positive")
    if not 0 <= n_errors <= n_bits:
        raise ValueError(f"n_errors {n_errors} outside [0, {n_bits}]")
    p = n_errors / n_bits
    z2n = z * z / n_bits
    centre = (p + z2n / 2) / (1 + z2n)
    half = z * math.sqrt(p * (1 - p) / n_bits + z2n / (4 * n_bits)) / (1 + z2n)
    return centre - half, centre + half, half


def eb_n0_to_N0(network: NetworkConfig, eb_n0_db: float) -> float:
    """Noise density giving mean received bit energy over N0 equal to ``eb_n0_db``."""
    return network.mean_alpha / 10.0 ** (eb_n0_db / 10.0)


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get("CSK_LAB_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"CSK_LAB_THREADS must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


def fit_network(network: NetworkConfig, n_samples: int, master_seed: int) -> GeneralizedGammaParams:
    rng = trial_rng(master_seed, FIT_STREAM)
    return fit_ggamma(collect_alpha(network, n_samples, rng))


# -- simulation --------------------------------------------------------------

def _trial_bits(cfg: ExperimentConfig, i: int) -> int:
    return min(cfg.bits_per_trial, cfg.n_bits - i * cfg.bits_per_trial)


def _trial_chips(cfg: ExperimentConfig, indices) -> np.ndarray:
    """Chip streams for a batch of trials; each seed is the first draw of its stream."""
    kind = cfg.network.map
    seeds = [random_seed_state(kind, trial_rng(cfg.master_seed, i)) for i in indices]
    return generate_sequences(kind, seeds, cfg.bits_per_trial * cfg.network.beta)


def _run_trial(cfg: ExperimentConfig, network: NetworkConfig, i: int, chips) -> int:
    rng = trial_rng(cfg.master_seed, i)
    random_seed_state(network.map, rng)  # keep the stream aligned with _trial_chips
    n = _trial_bits(cfg, i)
    frame = random_frame(n, network.beta, rng)
    decisions = transmit_frame(network, frame, chips[: n * network.beta], rng)
    return decisions.n_errors(frame.symbols)


def _simulate(cfg: ExperimentConfig, pool: ThreadPoolExecutor, threads: int) -> dict:
    """Error tallies per grid point after the deterministic stopping rule."""
    n_trials = -(-cfg.n_bits // cfg.bits_per_trial)
    networks = {db: cfg.network.with_N0(eb_n0_to_N0(cfg.network, db)) for db in cfg.eb_n0_grid_db}
    tally = {db: [0, 0] for db in cfg.eb_n0_grid_db}
    active = set(cfg.eb_n0_grid_db)
    floor_bits = cfg.n_bits / 10
    batch = _TRIALS_PER_WORKER * threads
    start = 0
    while active and start < n_trials:
        indices = range(start, min(start + batch, n_trials))
        chips = _trial_chips(cfg, indices)
        for db in cfg.eb_n0_grid_db:
            if db not in active:
                continue
            net = networks[db]
            errors = list(pool.map(lambda k: _run_trial(cfg, net, indices[k], chips[k]),
                                   range(len(indices))))
            # Prefix scan in trial order: the first prefix meeting both floors wins.
            for k, e in enumerate(errors):
                tally[db][0] += _trial_bits(cfg, indices[k])
                tally[db][1] += e
                if tally[db][1] >= cfg.min_errors and tally[db][0] >= floor_bits:
                    active.discard(db)
                    break
        start += batch
    return {db: tuple(v) for db, v in tally.items()}


def _analytic_point(p: GeneralizedGammaParams, cfg: ExperimentConfig, db: float):
    N0 = eb_n0_to_N0(cfg.network, db)
    points, failures = [], []
    try:
        points.append(ber_quadrature(p, N0, db))
    except (AnalyticError, ValueError) as exc:
        failures.append(AnalyticFailure(db, "quadrature", str(exc)))
    try:
        series = mgf_series_from_fit(p, N0, cfg.mgf_terms)
        points.append(ber_mgf(series, cfg.pade_order, db))
    except (AnalyticError, ValueError) as exc:
        failures.append(AnalyticFailure(db, "mgf_pade", str(exc)))
    return points, failures


def _metadata(cfg: ExperimentConfig, started: float) -> dict:
    return {
        "fingerprint": cfg.network.fingerprint(),
        "map": cfg.network.map.name,
        "beta": cfg.network.beta,
        "n_relays": cfg.network.n_relays,
        "seed": cfg.master_seed,
        "started": _iso(started),
        "config": cfg.to_dict(),
        "config_echo": cfg.echo,
    }


def _iso(t: float) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def run_sweep(cfg: ExperimentConfig, threads: Optional[int] = None,
              fit: Optional[GeneralizedGammaParams] = None) -> BerCurve:
    """Simulated and analytic BER over the configured Eb/N0 grid.

    ``fit`` skips the alpha collection when the generalized gamma parameters
    for this network are already known.
    """
    started = time.time()
    threads = resolve_threads(threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        sims = _simulate(cfg, pool, threads)
        if fit is None:
            fit = fit_network(cfg.network, cfg.fit_samples, cfg.master_seed)
        analytic = list(pool.map(lambda db: _analytic_point(fit, cfg, db), cfg.eb_n0_grid_db))

    points, failures = [], []
    for db, (pts, fails) in zip(cfg.eb_n0_grid_db, analytic):
        n_bits, n_errors = sims[db]
        _, _, half = wilson_interval(n_errors, n_bits)
        points.append(BerPoint(db, n_errors / n_bits, "simulated", {
            "ci_half_width": half, "n_bits": n_bits, "n_errors": n_errors,
        }))
        points.extend(pts)
        failures.extend(fails)
    for f in failures:
        log.warning("%s at %g dB failed: %s", f.method, f.eb_n0_db, f.error)

    meta = _metadata(cfg, started)
    meta["fit"] = {"v": fit.v, "m": fit.m, "omega": fit.Omega,
                   "ks": fit.fit_ks, "n_samples": fit.n_samples}
    meta["finished"] = _iso(time.time())
    return BerCurve(points, meta, failures)


# -- output ------------------------------------------------------------------

def _g(x) -> str:
    return format(float(x), ".17g")


def curve_csv_text(curve: BerCurve) -> str:
    """CSV body; contains no timestamps, so equal inputs give equal bytes."""
    meta = curve.metadata
    rows = sorted(curve.points, key=lambda p: (p.eb_n0_db, _METHOD_ORDER[p.method]))
    lines = [CSV_HEADER]
    for p in rows:
        d = p.diagnostics
        sim = p.method == "simulated"
        lines.append(",".join([
            _g(p.eb_n0_db),
            p.method,
            _g(p.ber),
            _g(d["ci_half_width"]) if sim else "",
            str(d["n_bits"]) if sim else "",
            str(d["n_errors"]) if sim else "",
            meta["map"],
            str(meta["beta"]),
            str(meta["n_relays"]),
            str(meta["seed"]),
        ]))
    return "\n".join(lines) + "\n"


def write_curve_csv(curve: BerCurve, path) -> None:
    """Write the CSV and a ``.meta.json`` sidecar holding metadata and failures."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(curve_csv_text(curve))
    sidecar = {"metadata": curve.metadata, "failures": [vars(f) for f in curve.failures]}
    with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, default=str)
        fh.write("\n")


def _stem(path: str) -> str:
    root, ext = os.path.splitext(path)
    return root if ext.lower() in (".csv", ".json") else path


def run_fit_study(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Collect ``n_bits`` alpha samples, fit all candidate laws and report KS statistics.

    Writes ``<stem>.json`` (report) and ``<stem>_hist.csv`` next to the
    configured output path.
    """
    if cfg.n_bits < MIN_FIT_SAMPLES:
        raise FitError(f"fit study needs at least {MIN_FIT_SAMPLES} samples, got {cfg.n_bits}")
    rng = trial_rng(cfg.master_seed, FIT_STREAM)
    sample = collect_alpha(cfg.network, cfg.n_bits, rng)
    report = fit_report(sample, cfg.network, compare_candidates(sample))
    report["seed"] = cfg.master_seed
    report["fingerprint"] = cfg.network.fingerprint()
    report["config_echo"] = cfg.echo
    if write:
        stem = _stem(cfg.output_path)
        write_fit_report(report, stem + ".json")
        write_histogram_csv(sample, stem + "_hist.csv")
    return report


def run_compare(cfg: ExperimentConfig, threads: Optional[int] = None, write: bool = True) -> dict:
    """Fit study plus sweep, with a joint JSON report."""
    report = run_fit_study(cfg, write=False)
    curve = run_sweep(cfg, threads)
    joint = {"fit": report, "sweep": curve.to_dict()}
    if write:
        stem = _stem(cfg.output_path)
        write_curve_csv(curve, stem + ".csv")
        with open(stem + "_compare.json", "w", encoding="utf-8") as fh:
            json.dump(joint, fh, indent=2, default=str)
            fh.write("\n")
    return joint

