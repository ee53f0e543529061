"""Command-line entry point: ``csk-lab {sweep,fit,compare}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .analytic_ber import AnalyticError
from .config import ConfigError, parse_config
from .energy_stats import FitError
from .harness import resolve_threads, run_compare, run_fit_study, run_sweep, write_curve_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("csk_lab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csk-lab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="mode", required=True)
    for name, text in (("sweep", "BER sweep, simulated and analytic"),
                       ("fit", "alpha histogram and candidate fits"),
                       ("compare", "fit study and sweep with a joint report")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="INI configuration file")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--threads", type=int, metavar="N",
                       help="worker threads (default: $CSK_LAB_THREADS, then all cores)")
        p.add_argument("--map", choices=("cpf", "pwl"))
        p.add_argument("--beta", type=int)
        p.add_argument("--relays", type=int)
        p.add_argument("--bits", type=int)
        p.add_argument("--grid", metavar="START:STEP:STOP")
    return parser


_FLAG_KEYS = {
    "seed": "sweep.seed",
    "out": "output.path",
    "map": "network.map",
    "beta": "network.beta",
    "relays": "network.n_relays",
    "bits": "sweep.n_bits",
    "grid": "sweep.grid",
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        overrides = {key: getattr(args, flag) for flag, key in _FLAG_KEYS.items()
                     if getattr(args, flag) is not None}
        overrides["sweep.mode"] = args.mode
        cfg = parse_config(text, overrides)
        threads = resolve_threads(args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        if cfg.mode == "sweep":
            curve = run_sweep(cfg, threads)
            write_curve_csv(curve, cfg.output_path)
            if curve.failures:
                # A failed quadrature leaves no usable reference curve; MGF
                # failures are tolerated because quadrature covers them.
                if any(f.method == "quadrature" for f in curve.failures):
                    return EXIT_NUMERIC
        elif cfg.mode == "fit":
            report = run_fit_study(cfg)
            print(json.dumps({k: report[k] for k in ("v", "m", "omega", "ks_ggamma",
                                                      "ks_rayleigh", "ks_rician",
                                                      "ks_nakagami")}))
        else:
            joint = run_compare(cfg, threads)
            if any(f["method"] == "quadrature" for f in joint["sweep"]["failures"]):
                return EXIT_NUMERIC
    except (FitError, AnalyticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
