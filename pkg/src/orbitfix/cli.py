"""Batch command-line front end.

Subcommands: doppler, phase-error, condition, ambiguity, position, compare.
Output paths go to stdout, progress/log lines to stderr. Exit code 0 iff
every requested experiment completed; nonzero exit codes carry a
machine-readable error category on stderr.
"""

from __future__ import annotations

import argparse
import sys

from .exceptions import (
    ConfigError,
    InsufficientGeometryError,
    NumericError,
    OrbitfixError,
    ResourceLimitError,
)
from .experiments import (
    compare_systems,
    dump_first_seed_measurements,
    emit_csv,
    emit_verdict_csv,
    run_experiment,
)
from .scenarios import ScenarioConfig, config_from_dict, default_config, load_config

_EXIT_CODES = (
    (ConfigError, 2, "config-error"),
    (InsufficientGeometryError, 3, "insufficient-geometry"),
    (ResourceLimitError, 6, "resource-limit"),
    (NumericError, 4, "numeric-error"),
    (ValueError, 4, "invalid-input"),
    (OSError, 5, "io-error"),
    (OrbitfixError, 4, "error"),
)

_SUBCOMMANDS = {
    "doppler": "doppler",
    "phase-error": "phase_error",
    "condition": "condition",
    "ambiguity": "ambiguity",
    "position": "position",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitfix",
        description="LEO vs GNSS carrier-phase positioning experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", metavar="PATH", help="scenario config JSON (default: built-in LEO defaults)")
        p.add_argument("--out", metavar="DIR", default="out", help="output directory (default: ./out)")
        p.add_argument("--seeds", type=int, metavar="N", help="use seeds 1..N instead of the config seed list")
        p.add_argument(
            "--dump-measurements",
            action="store_true",
            help="also dump raw measurements of the first seed (debugging)",
        )
    cmp_p = sub.add_parser("compare", help="run both systems and emit a verdict table")
    cmp_p.add_argument("--experiment", required=True, choices=sorted(_SUBCOMMANDS), metavar="NAME")
    cmp_p.add_argument("--leo-config", metavar="PATH", help="LEO scenario config (default: built-in)")
    cmp_p.add_argument("--gnss-config", metavar="PATH", help="GNSS scenario config (default: built-in)")
    cmp_p.add_argument("--out", metavar="DIR", default="out")
    cmp_p.add_argument("--seeds", type=int, metavar="N")
    return parser


def _resolve_config(path: str | None, system: str, seeds: int | None) -> ScenarioConfig:
    raw = (load_config(path) if path else default_config(system)).to_dict()
    if seeds is not None:
        if seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        raw["seeds"] = list(range(1, seeds + 1))
    return config_from_dict(raw)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "compare":
            experiment = _SUBCOMMANDS[args.experiment]
            leo_cfg = _resolve_config(args.leo_config, "leo", args.seeds)
            gnss_cfg = _resolve_config(args.gnss_config, "gnss", args.seeds)
            _log(f"running {experiment} for leo and gnss ...")
            leo_res, gnss_res, verdict = compare_systems(leo_cfg, gnss_cfg, experiment)
            paths = emit_csv(leo_res, args.out) + emit_csv(gnss_res, args.out)
            paths.append(emit_verdict_csv(verdict, experiment, args.out))
            _log("verdict:")
            for i in range(len(verdict["system"])):
                _log(
                    f"  {verdict['system'][i]}: metric={verdict['metric'][i]} "
                    f"converged={bool(verdict['converged'][i])} "
                    f"time={verdict['convergence_time_s'][i]:.3g}s "
                    f"final={verdict['final_value'][i]:.6g}"
                )
        else:
            experiment = _SUBCOMMANDS[args.command]
            config = _resolve_config(args.config, "leo", args.seeds)
            _log(f"running {experiment} for {config.system} ...")
            result = run_experiment(config, experiment)
            paths = emit_csv(result, args.out)
            if args.dump_measurements:
                paths.append(dump_first_seed_measurements(config, args.out))
        for p in paths:
            print(p)
        return 0
    except tuple(exc for exc, _, _ in _EXIT_CODES) as err:
        for exc_type, code, category in _EXIT_CODES:
            if isinstance(err, exc_type):
                _log(f"error [{category}]: {err}")
                return code
        raise  # unreachable


if __name__ == "__main__":
    sys.exit(main())
