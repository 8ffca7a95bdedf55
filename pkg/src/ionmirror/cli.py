"""Command-line entry point.

Exit status: 0 success, 1 invalid configuration or arguments, 2 numerical
failure (overflow or a truncation that is too small).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .analysis import product_comparator, witness
from .fock import NumericalError
from .interferometer import run_protocol
from .scenario import ConfigError, ScenarioConfig, SweepSpec, _layouts, _prepared_ion, _prepared_om, emit, run_scenario, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

EPILOG = "exit status: 0 success, 1 validation error, 2 numerical failure (overflow/truncation)"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("scenario (override values from --config)")
    group.add_argument("--config", type=Path, help="JSON or YAML file with any subset of the fields below")
    for f in fields(ScenarioConfig):
        group.add_argument(f"--{f.name}", default=None, metavar=f.name.upper())


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--output", type=Path, default=None, help="destination file (default stdout)")


def load_config_file(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("config", "file must hold a key-value mapping")
    return data


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    data = load_config_file(args.config) if args.config else {}
    for f in fields(ScenarioConfig):
        value = getattr(args, f.name)
        if value is not None:
            data[f.name] = value
    return ScenarioConfig.from_mapping(data)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ionmirror", description="Hybrid ion-mirror entanglement protocol simulator.",
                     epilog=EPILOG)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a single scenario", epilog=EPILOG)
    _add_scenario_flags(run)
    _add_output_flags(run)

    sweep = sub.add_parser("sweep", help="sweep one scenario parameter", epilog=EPILOG)
    _add_scenario_flags(sweep)
    _add_output_flags(sweep)
    sweep.add_argument("--parameter", required=True)
    sweep.add_argument("--values", help="comma-separated explicit values")
    sweep.add_argument("--start", type=float)
    sweep.add_argument("--stop", type=float)
    sweep.add_argument("--count", type=int)
    sweep.add_argument("--scale", choices=("linear", "log"), default="linear")
    sweep.add_argument("--workers", type=int, default=1)

    validate = sub.add_parser("validate", help="run invariant and closed-form checks", epilog=EPILOG)
    validate.add_argument("--json-out", type=Path, default=None, help="also write the JSON verdict here")

    wit = sub.add_parser("witness", help="run the local witness procedure on a generated state", epilog=EPILOG)
    _add_scenario_flags(wit)
    return parser


def _sweep_spec(args) -> SweepSpec:
    if args.values is not None:
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        if args.parameter not in ("sideband", "outcome"):
            try:
                values = [float(v) for v in values]
            except ValueError:
                raise ConfigError("values", "must be numbers") from None
        return SweepSpec(args.parameter, tuple(values))
    if None in (args.start, args.stop, args.count):
        raise ConfigError("sweep", "give --values or all of --start, --stop, --count")
    return SweepSpec.grid(args.parameter, args.start, args.stop, args.count, args.scale)


def _cmd_validate(args) -> int:
    from .validation import run_validation

    results = run_validation()
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  value={r.value:.3e}  tol: {r.tolerance}  {r.detail}")
    verdict = {
        "passed": bool(all(r.passed for r in results)),
        "checks": [
            {"name": r.name, "passed": bool(r.passed), "value": float(r.value), "tolerance": r.tolerance}
            for r in results
        ],
    }
    text = json.dumps(verdict, sort_keys=True)
    print(text)
    if args.json_out:
        args.json_out.write_text(text + "\n", encoding="utf-8")
    return EXIT_OK if verdict["passed"] else EXIT_NUMERICAL


def _cmd_witness(args) -> int:
    cfg = config_from_args(args)
    ip, op = cfg.ion_params(), cfg.om_params()
    ion_l, om_l = _layouts(cfg, op)
    result = run_protocol(_prepared_ion(ip, cfg.sideband, ion_l), _prepared_om(op, om_l),
                          t=cfg.detection_time, outcome=cfg.outcome)
    alpha0 = complex(cfg.alpha0)
    out = {}
    if result.empty:
        out["generated"] = None
    else:
        rep = witness(result.state, alpha0)
        out["generated"] = {
            "projection_probability": rep.projection_probability,
            "post_displacement_vacuum_probability": rep.post_displacement_vacuum_probability,
            "verdict": rep.verdict.value,
        }
    rep = witness(product_comparator(alpha0, cfg.kappa), alpha0)
    out["product_comparator"] = {
        "projection_probability": rep.projection_probability,
        "post_displacement_vacuum_probability": rep.post_displacement_vacuum_probability,
        "verdict": rep.verdict.value,
    }
    print(json.dumps(out, indent=1, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            emit([run_scenario(config_from_args(args))], args.format, args.output)
        elif args.command == "sweep":
            rows = run_sweep(config_from_args(args), _sweep_spec(args), workers=args.workers)
            emit(rows, args.format, args.output)
        elif args.command == "validate":
            return _cmd_validate(args)
        elif args.command == "witness":
            return _cmd_witness(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
