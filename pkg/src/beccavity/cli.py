"""Command-line entry point.

    beccavity steady   [--config FILE] [--out DIR] [--seed N] [--override key=value ...]
    beccavity critical ...
    beccavity sweep    ...
    beccavity quench   ...
    beccavity g2       ...
    beccavity grid     --config FILE --axis protocol.eta=1,2 [--workers N] ...
    beccavity recipes  [--run NAME ...]

Exit codes: 0 success, 2 invalid specification, 3 numerical failure.
The default output root is taken from the BECCAVITY_OUT environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, _literal, apply_overrides, load_toml
from .harness import (
    EXPERIMENT_KINDS,
    NUMERICAL_ERRORS,
    OUTPUT_ROOT_ENV,
    ExperimentSpec,
    figure_recipes,
    grid_run,
    run,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

# specifications used when a subcommand is given no --config
DEFAULT_SPECS = {
    "steady": {
        "protocol": {"eta": "2 eta_cr", "detuning_min": "-8 kappa", "detuning_max": "4 kappa", "points": 601}
    },
    "critical": {"protocol": {"method": "analytic"}},
    "sweep": {
        "integrator": {"periods": 1, "points": 32, "dt_recoil": 5e-3, "sample_stride": 2},
        "protocol": {
            "eta": "1.51 kappa",
            "detuning_min": "-25 kappa",
            "detuning_max": "4 kappa",
            "scan_speed": "2π×1 MHz/ms",
            "interactions": False,
            "trap": False,
        },
    },
    "quench": {"integrator": {"periods": 2, "points": 64}, "protocol": {"n_target": 0.01}},
    "g2": {
        "integrator": {"periods": 2, "points": 64},
        "protocol": {"source": "quench", "n_target": 0.1, "duration": "4 ms", "window": "3 ms", "max_lag": "200 us"},
    },
}


def _parser():
    parser = argparse.ArgumentParser(prog="beccavity", description="BEC-cavity bistability simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run specification")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV}/<name>)")
        p.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override")

    for kind in EXPERIMENT_KINDS:
        common(sub.add_parser(kind, help=f"run a {kind} experiment"))
    grid = sub.add_parser("grid", help="run a parameter grid")
    common(grid)
    grid.add_argument("--axis", action="append", default=[], metavar="KEY=V1,V2", help="grid axis")
    grid.add_argument("--workers", type=int, help="parallel worker processes")
    rec = sub.add_parser("recipes", help="list or run the bundled figure specifications")
    rec.add_argument("--run", action="append", default=[], metavar="NAME", help="run this recipe")
    rec.add_argument("--out", help="output root for recipe runs")
    rec.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def _load(args, kind=None) -> ExperimentSpec:
    if args.config:
        mapping = load_toml(args.config)
        name = args.config.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    else:
        if kind is None:
            raise ConfigError("--config", "required for this command")
        mapping, name = json.loads(json.dumps(DEFAULT_SPECS[kind])), kind
    if kind is not None:
        if mapping.get("kind", kind) != kind:
            raise ConfigError("kind", f"config is {mapping['kind']!r} but the command is {kind!r}")
        mapping["kind"] = kind
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return ExperimentSpec.from_mapping(apply_overrides(mapping, overrides), name=name)


def _parse_axis(text):
    if "=" not in text:
        raise ConfigError(text, "axis must look like key.path=v1,v2,...")
    key, values = text.split("=", 1)
    items = [_literal(v.strip()) for v in values.split(",") if v.strip()]
    if not items:
        raise ConfigError(key, "axis has no values")
    return key.strip(), items


def _print_result(result):
    print(json.dumps({"directory": str(result.directory), "summary": result.summary}, indent=2, default=str))


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command in EXPERIMENT_KINDS:
            _print_result(run(_load(args, args.command), args.out))
        elif args.command == "grid":
            spec = _load(args)
            axes = dict(_parse_axis(a) for a in args.axis)
            if not axes:
                raise ConfigError("--axis", "at least one axis is required")
            results = grid_run(spec, axes, args.out, workers=args.workers)
            failed = [r for r in results if not r.ok]
            print(f"{len(results) - len(failed)}/{len(results)} cells succeeded")
            for r in failed:
                print(f"failed {r.directory}: {r.error}", file=sys.stderr)
        else:
            recipes = {s.name: s for s in figure_recipes()}
            if not args.run:
                for spec in recipes.values():
                    print(f"{spec.name}\t{spec.kind}\t{spec.spec_hash[:12]}")
            for name in args.run:
                if name not in recipes:
                    raise ConfigError("--run", f"unknown recipe {name!r}; choose from {sorted(recipes)}")
                spec = recipes[name].with_overrides(args.override)
                out = None if args.out is None else f"{args.out}/{name}"
                _print_result(run(spec, out))
    except ConfigError as exc:
        print(f"invalid specification: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FileNotFoundError, ValueError) as exc:
        print(f"invalid specification: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
