"""Command line front end: gen, ensemble, control, and audit verbs.

Flags mirror the scenario fields; a JSON config file passed with --config
overrides any flag value.  Exit codes: 0 on success, 2 when a control run
loses rigidity, 3 for an invalid configuration.
"""

import argparse
import json
import sys

from .control import ControlParams, RigidityLostError
from .experiments import (
    ConfigError,
    ScenarioConfig,
    framework_from_json,
    framework_to_json,
    generate_scenario,
    run_control_experiment,
    run_ensemble_experiment,
)
from .rigidity import rigidity_report

EXIT_OK = 0
EXIT_RIGIDITY_LOST = 2
EXIT_BAD_CONFIG = 3

_SCENARIO_FLAGS = {
    "seed": int,
    "n": int,
    "width": float,
    "height": float,
    "comm_range": float,
    "dim": int,
    "ensemble_count": int,
    "duration": float,
    "noise_std": float,
    "initial_estimate_error": float,
    "rejection_budget": int,
}


def _add_scenario_flags(parser):
    parser.add_argument("--config", help="JSON file whose values override flags")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--width", type=float)
    parser.add_argument("--height", type=float)
    parser.add_argument("--range", dest="comm_range", type=float)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--count", dest="ensemble_count", type=int)
    parser.add_argument("--duration", type=float)
    parser.add_argument("--noise", dest="noise_std", type=float)
    parser.add_argument("--estimate-error", dest="initial_estimate_error",
                        type=float)
    parser.add_argument("--rejection-budget", dest="rejection_budget",
                        type=int)
    parser.add_argument("--anchors", help="comma separated node ids")
    parser.add_argument("--ground-truth", action="store_true",
                        help="drive control from true positions")
    parser.add_argument("--flexible-ok", action="store_true",
                        help="accept non-rigid generated frameworks")


def _build_config(args):
    fields = {}
    for name in _SCENARIO_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if getattr(args, "anchors", None):
        fields["anchors"] = tuple(
            int(a) for a in args.anchors.split(",") if a != "")
    if getattr(args, "ground_truth", False):
        fields["use_estimates"] = False
    if getattr(args, "flexible_ok", False):
        fields["require_rigid"] = False
    if getattr(args, "config", None):
        try:
            with open(args.config) as fp:
                overrides = json.load(fp)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        if not isinstance(overrides, dict):
            raise ConfigError("config file must hold a JSON object")
        control = overrides.pop("control", None)
        for key, value in overrides.items():
            if key == "anchors":
                value = tuple(int(a) for a in value)
            fields[key] = value
        if control is not None:
            try:
                fields["control"] = ControlParams(**control)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad control parameters: {exc}")
    try:
        return ScenarioConfig(**fields)
    except TypeError as exc:
        raise ConfigError(f"unknown configuration field: {exc}")


def _cmd_gen(args):
    config = _build_config(args)
    fw = generate_scenario(config)
    text = json.dumps(framework_to_json(fw), indent=1) + "\n"
    if args.out:
        with open(args.out, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_ensemble(args):
    config = _build_config(args)
    _, summary = run_ensemble_experiment(
        config, csv_path=args.csv, json_path=args.json)
    sys.stdout.write(json.dumps(summary, indent=1) + "\n")
    return EXIT_OK


def _cmd_control(args):
    config = _build_config(args)
    world, rows, error = run_control_experiment(
        config, csv_path=args.csv, snapshot_path=args.snapshot)
    last = rows[-1] if rows else None
    sys.stdout.write(json.dumps({
        "time": world.time,
        "rows": len(rows),
        "min_rho": None if last is None else last["rho_min"],
        "rigidity_lost": error is not None,
    }, indent=1) + "\n")
    if error is not None:
        sys.stderr.write(f"rigidity lost: {error}\n")
        return EXIT_RIGIDITY_LOST
    return EXIT_OK


def _cmd_audit(args):
    if args.framework:
        try:
            with open(args.framework) as fp:
                fw = framework_from_json(json.load(fp))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read framework file: {exc}")
    else:
        fw = generate_scenario(_build_config(args))
    report = rigidity_report(fw)
    sys.stdout.write(report.to_json() + "\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rigidnet",
        description="rigidity analysis and maintenance experiments")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="generate a framework and write it as JSON")
    _add_scenario_flags(p)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("ensemble", help="measure many random networks")
    _add_scenario_flags(p)
    p.add_argument("--csv", help="per-network records CSV path")
    p.add_argument("--json", help="records plus summary JSON path")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("control", help="run the closed control loop")
    _add_scenario_flags(p)
    p.add_argument("--csv", help="time series CSV path")
    p.add_argument("--snapshot", help="diagnostic JSON path on rigidity loss")
    p.set_defaults(func=_cmd_control)

    p = sub.add_parser("audit", help="rigidity report of one framework")
    _add_scenario_flags(p)
    p.add_argument("--framework", help="framework JSON path (else generated)")
    p.set_defaults(func=_cmd_audit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_BAD_CONFIG
    except RigidityLostError as exc:
        sys.stderr.write(f"rigidity lost: {exc}\n")
        return EXIT_RIGIDITY_LOST


if __name__ == "__main__":
    sys.exit(main())
