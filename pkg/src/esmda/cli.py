"""Command-line entry point: ``esmda run|validate|oracle|compare``."""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import replace
from pathlib import Path

from esmda import schedule as sched
from esmda.config import ConfigError, load_config
from esmda.driver import run_esmda, summarize, write_record
from esmda.ensemble import Ensemble
from esmda.forward import LinearModel
from esmda.oracle import exact_posterior, posterior_distance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _config_args(p):
    p.add_argument("--config", required=True, help="path to a JSON run configuration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esmda", description="Ensemble smoother with multiple data assimilation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a configuration and write results")
    _config_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--allow-invalid-schedule", action="store_true")

    p = sub.add_parser("validate", help="check a configuration and its schedule")
    _config_args(p)

    p = sub.add_parser("oracle", help="print the exact posterior for a linear configuration")
    _config_args(p)

    p = sub.add_parser("compare", help="distance between an ensemble and the exact posterior")
    _config_args(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ensemble", help="ensemble CSV file")
    src.add_argument("--run", help="run directory; its last ensemble_iter*.csv is used")
    return parser


def _load(path, allow_invalid=False):
    return load_config(path, allow_invalid_schedule=allow_invalid)


def _linear_oracle(cfg):
    if not isinstance(cfg.model, LinearModel):
        raise ConfigError("config.forward_model.type", "the exact posterior needs a linear forward model")
    return exact_posterior(cfg.prior, cfg.model, cfg.d_hist, cfg.noise)


def _last_ensemble(run_dir: Path) -> Path:
    found = sorted(
        (int(m.group(1)), p)
        for p in run_dir.glob("ensemble_iter*.csv")
        if (m := re.fullmatch(r"ensemble_iter(\d+)\.csv", p.name))
    )
    if not found:
        raise ConfigError(str(run_dir), "no ensemble_iter*.csv files found")
    return found[-1][1]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = _load(args.config, args.allow_invalid_schedule)
            if args.seed is not None:
                cfg = replace(cfg, seed=args.seed)
            if args.parallelism is not None:
                cfg = replace(cfg, parallelism=args.parallelism)
            out = Path(args.out if args.out is not None else cfg.output_dir)
            record = run_esmda(cfg)
            write_record(record, out)
            for row in summarize(record):
                alpha = "final" if row["alpha"] is None else f"{row['alpha']:.6g}"
                print(f"iteration {row['iteration']:>3}  alpha {alpha:>8}  mean mismatch {row['phi_mean']:.6g}")
            print(f"evaluations: {record.evaluations}  output: {out}")
        elif args.command == "validate":
            cfg = load_config(args.config)
            status = sched.validate(cfg.schedule)
            print(
                f"config ok: N_m={cfg.prior.n_m} N_d={cfg.d_hist.size} N_e={cfg.n_e} "
                f"N_a={cfg.schedule.n_a} schedule residual {status.residual:+.3e}"
            )
            if not status.ok:
                print(f"warning: {status.message}", file=sys.stderr)
        elif args.command == "oracle":
            post = _linear_oracle(load_config(args.config))
            print(json.dumps({"mean": post.mean.tolist(), "covariance": post.covariance.tolist()}, indent=2))
        elif args.command == "compare":
            cfg = load_config(args.config)
            post = _linear_oracle(cfg)
            path = Path(args.ensemble) if args.ensemble else _last_ensemble(Path(args.run))
            try:
                ens = Ensemble.from_csv(path)
            except (OSError, ValueError) as exc:
                raise ConfigError(str(path), str(exc)) from None
            print(json.dumps(posterior_distance(ens, post).to_dict(), indent=2))
    except (ConfigError, sched.ScheduleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
