"""Command-line experiment runner.

Subcommands:
  run CONFIG        run one experiment described by a TOML config
  acceptance        run the acceptance battery and write its report
  dump-profiles     shorthand for the smoothed delta/step profile dump

Exit codes: 0 success, 1 numerical failure (including failed acceptance
criteria), 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, SingvarError


def _add_common(sub):
    sub.add_argument("--output-dir", default=None,
                     help="artifact directory (overrides the config)")
    sub.add_argument("--seed", type=int, default=None,
                     help="seed override for all randomized probes")
    sub.add_argument("--eps-points", type=int, default=None,
                     help="override the number of gauge grid points")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="singvar",
                                 description=__doc__.splitlines()[0])
    sp = ap.add_subparsers(dest="command", required=True)

    run = sp.add_parser("run", help="run one experiment config")
    run.add_argument("config", help="path to a TOML experiment config")
    _add_common(run)

    acc = sp.add_parser("acceptance", help="run the acceptance battery")
    acc.add_argument("--config-dir", default=None,
                     help="directory of experiment configs "
                          "(defaults to the bundled ones)")
    _add_common(acc)

    dump = sp.add_parser("dump-profiles",
                         help="dump smoothed delta/step profiles as CSV")
    dump.add_argument("--moment-order", type=int, default=4)
    _add_common(dump)
    return ap


def _overrides(args) -> dict:
    out = {}
    if args.output_dir is not None:
        out["output_dir"] = args.output_dir
    if args.seed is not None:
        out["seed"] = args.seed
    if args.eps_points is not None:
        out["gauge.points"] = args.eps_points
    return out


def bundled_config_dir() -> Path:
    return Path(__file__).parent / "configs"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            from .experiments import load_config, run_experiment
            cfg = load_config(args.config, overrides=_overrides(args))
            out = run_experiment(cfg)
            print(f"wrote artifacts to {out}")
            return 0

        if args.command == "dump-profiles":
            from .experiments import load_config, run_experiment
            text = ("experiment = \"embed_profiles\"\n"
                    f"[mollifier]\nmoment_order = {args.moment_order}\n")
            cfg = load_config(text, overrides=_overrides(args))
            out = run_experiment(cfg)
            print(f"wrote profiles to {out}")
            return 0

        if args.command == "acceptance":
            from .acceptance import run_acceptance
            config_dir = (Path(args.config_dir) if args.config_dir
                          else bundled_config_dir())
            out_dir = args.output_dir or "acceptance_out"
            results = run_acceptance(config_dir=config_dir, out_dir=out_dir)
            ok = all(r.passed for r in results)
            print(f"report: {Path(out_dir) / 'acceptance_report.json'}")
            return 0 if ok else 1

        raise AssertionError("unreachable")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SingvarError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
