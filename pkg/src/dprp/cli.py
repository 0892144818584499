"""Command-line entry point: ``dprp <subcommand> [options]``.

Every subcommand resolves an :class:`~dprp.config.ExperimentConfig` from a
preset, an optional ``--config`` file and ``--set key=value`` overrides, then
writes CSV (or JSON for ``allocate --format json``) to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import sweeps, verify
from .config import ConfigError, build

DEFAULT_PRESETS = {
    "simulate": "small",
    "ldp-curve": "reference",
    "conv-curve": "reference",
    "tradeoff": "reference",
    "allocate": "reference",
    "verify": None,
}


def _pair(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dprp", description=(
        "Private, dimension-reduced over-the-air federated SGD: simulation, bounds and checks."))
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "train on the synthetic task; per-round gap, bound and epsilon",
        "ldp-curve": "T-fold epsilon versus reduced dimension",
        "conv-curve": "convergence bound versus reduced dimension",
        "tradeoff": "convergence bound versus T-fold epsilon",
        "allocate": "optimal reduced dimension and noise fractions",
        "verify": "run the Monte Carlo verification suite",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="INI file with an [experiment] section")
        p.add_argument("--preset", help="reference or small (default depends on the subcommand)")
        p.add_argument("--set", dest="overrides", action="append", type=_pair, default=[],
                       metavar="KEY=VALUE", help="override one config field (repeatable)")
        p.add_argument("--seed", type=int, help="root seed (same as --set seed=N)")
        p.add_argument("--out", help="output path (default: stdout)")
        if name == "allocate":
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "verify":
            p.add_argument("--scale", type=float, help="trial-count multiplier (verify_scale)")
            p.add_argument("--seeds", type=int, help="number of root seeds (verify_seeds)")
            p.add_argument("--corrupt-tolerance", action="store_true",
                           help="debug: shrink every tolerance so the failure path runs")
    return parser


def _config(args):
    overrides = dict(args.overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "scale", None) is not None:
        overrides["verify_scale"] = args.scale
    if getattr(args, "seeds", None) is not None:
        overrides["verify_seeds"] = args.seeds
    return build(args.config, overrides, args.preset, DEFAULT_PRESETS[args.command])


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, list):
        return [_finite(v) for v in value]
    return value


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _verify(cfg, args) -> int:
    rows, failed = [], 0
    for k in range(cfg.verify_seeds):
        seed = cfg.seed + k
        for check in verify.run_suite(seed, cfg.verify_scale, args.corrupt_tolerance):
            # stdout carries the CSV unless --out is given
            print(f"seed={seed} {check.line()}", file=sys.stdout if args.out else sys.stderr)
            failed += not check.passed
            rows.append([seed, check.name, repr(float(check.measured)),
                         repr(float(check.expected)), repr(float(check.tolerance)),
                         "PASS" if check.passed else "FAIL", check.detail])
    table = sweeps.Table(("seed", "check", "measured", "expected", "tolerance", "status",
                          "detail"), rows)
    _emit(sweeps.render_csv(table, cfg, "verify"), args.out)
    summary = f"{len(rows) - failed}/{len(rows)} checks passed"
    print(summary if not failed else f"FAILED: {summary}", file=sys.stderr)
    return 1 if failed else 0


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "verify":
            return _verify(cfg, args)
        if args.command == "simulate":
            _, table = sweeps.simulate(cfg)
        elif args.command == "ldp-curve":
            table = sweeps.sweep_ldp(cfg)
        elif args.command == "conv-curve":
            table = sweeps.sweep_convergence(cfg)
        elif args.command == "tradeoff":
            table = sweeps.sweep_tradeoff(cfg)
        else:
            result, table = sweeps.allocate(cfg)
            if args.format == "json":
                payload = {"config": cfg.as_dict(), "config_hash": cfg.fingerprint(),
                           **{k: _finite(v) for k, v in result.to_dict().items()}}
                _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
                return 0
        _emit(sweeps.render_csv(table, cfg, args.command), args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
