"""Command line interface: ``centralspin <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 scan finished with invalid
points (the output file is still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .analytic import segment_x
from .errors import CentralSpinError, ConfigError
from .exact import bistable_pair, build_liouvillian, low_spectrum, observables
from .params import ModelParams
from .probe import spin_pumping_rate_probe
from .scan import (ScanConfig, exact_point, gaussian_point, load_config, parse_config,
                   records_to_csv, records_to_json, scan, write_records)

EXIT_OK, EXIT_CONFIG, EXIT_INVALID = 0, 2, 3


def _add_point_args(p, omega=True):
    p.add_argument("--omega", type=float, default=1.5, help="omega / omega0")
    p.add_argument("--Omega", type=float, default=0.5, help="Omega / Omega0")
    p.add_argument("--gamma", type=float, default=1.0, help="gamma / a")
    p.add_argument("--J", type=float, default=20.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="centralspin",
                                 description="Driven central spin model: steady states and phases.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan", help="sweep an (omega, Omega) grid")
    s.add_argument("--config", help="key = value config file")
    for name in ("omega", "Omega"):
        s.add_argument(f"--{name}-min", dest=f"{name}_min", type=float)
        s.add_argument(f"--{name}-max", dest=f"{name}_max", type=float)
        s.add_argument(f"--{name}-steps", dest=f"{name}_steps", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--J", type=float)
    s.add_argument("--mode", choices=("exact", "gaussian"))
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--null-tol", dest="null_tol", type=float)
    s.add_argument("--bistable-tol", dest="bistable_tol", type=float)
    s.add_argument("--workers", type=int)
    s.add_argument("--no-timestamp", dest="timestamp", action="store_false", default=None)

    p = sub.add_parser("point", help="solve a single parameter point")
    _add_point_args(p)
    p.add_argument("--mode", choices=("exact", "gaussian"), default="gaussian")
    p.add_argument("--null-tol", dest="null_tol", type=float, default=None)

    b = sub.add_parser("bistable", help="extremal steady states of a bistable point (exact)")
    _add_point_args(b)
    b.add_argument("--null-tol", dest="null_tol", type=float, default=1e-5)

    q = sub.add_parser("pump-probe", help="pumping time relative to Omega = 0 (exact)")
    _add_point_args(q)
    q.add_argument("--initial", choices=("mixed", "polarized-up"), default="mixed")
    q.add_argument("--method", choices=("propagate", "spectral"), default="propagate")

    x = sub.add_parser("segment-x", help="closed-form solution at omega = omega0")
    x.add_argument("--Omega", type=float, default=0.5, help="Omega / Omega0")
    x.add_argument("--gamma", type=float, default=1.0, help="gamma / a")
    return ap


def _params(args) -> ModelParams:
    return ModelParams.from_ratios(args.omega, args.Omega, gamma=args.gamma, J=args.J)


def _dump(obj) -> None:
    def conv(v):
        if isinstance(v, complex):
            return [v.real, v.imag]
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        if isinstance(v, np.ndarray):
            return conv(v.tolist())
        if isinstance(v, (list, tuple)):
            return [conv(u) for u in v]
        if isinstance(v, (set, frozenset)):
            return sorted(v)
        return v
    print(json.dumps({k: conv(v) for k, v in obj.items()}, indent=1))


def _cmd_scan(args) -> int:
    over = {k: getattr(args, k) for k in ("omega_min", "omega_max", "omega_steps", "Omega_min",
                                          "Omega_max", "Omega_steps", "gamma", "J", "mode",
                                          "out", "format", "null_tol", "bistable_tol",
                                          "workers", "timestamp")}
    cfg = load_config(args.config, **over) if args.config else parse_config("", **over)
    records = scan(cfg)
    if cfg.out:
        write_records(records, cfg.out, cfg.format, cfg.timestamp)
    else:
        sys.stdout.write(records_to_csv(records, cfg.timestamp) if cfg.format == "csv"
                         else records_to_json(records))
    n_bad = sum(r.phase == "invalid" for r in records)
    if n_bad:
        logging.getLogger(__name__).warning("%d of %d points invalid", n_bad, len(records))
        return EXIT_INVALID
    return EXIT_OK


def _cmd_point(args) -> int:
    cfg = ScanConfig(mode=args.mode, gamma=args.gamma, J=args.J,
                     **({"null_tol": args.null_tol} if args.null_tol else {}))
    if args.mode == "exact":
        rec = exact_point(cfg, args.omega, args.Omega)
    else:
        rec = gaussian_point(cfg, args.omega, args.Omega)[0]
    _dump(rec.as_row())
    return EXIT_INVALID if rec.phase == "invalid" else EXIT_OK


def _cmd_bistable(args) -> int:
    L = build_liouvillian(_params(args))
    spec = low_spectrum(L)
    pair = bistable_pair(L, null_tol=args.null_tol)
    lo, up = (observables(r, L) for r in pair)
    _dump({"adr": spec.adr, "interval": pair.interval,
           "lo_nuclear_over_j": lo.i_over_j, "up_nuclear_over_j": up.i_over_j,
           "lo_var_iz": lo.nuclear_cov[2, 2], "up_var_iz": up.nuclear_cov[2, 2]})
    return EXIT_OK


def _cmd_pump(args) -> int:
    res = spin_pumping_rate_probe(_params(args), initial=args.initial, method=args.method)
    _dump({"time": res.probe.time, "baseline_time": res.baseline.time,
           "speedup": res.speedup, "adr": res.probe.adr, "baseline_adr": res.baseline.adr})
    return EXIT_OK


def _cmd_segment_x(args) -> int:
    sol = segment_x(ModelParams.from_ratios(1.0, args.Omega, gamma=args.gamma))
    _dump(vars(sol))
    return EXIT_OK


COMMANDS = {"scan": _cmd_scan, "point": _cmd_point, "bistable": _cmd_bistable,
            "pump-probe": _cmd_pump, "segment-x": _cmd_segment_x}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CentralSpinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
