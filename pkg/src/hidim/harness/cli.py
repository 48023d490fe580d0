"""Command line entry point: ``hidim run | list | verify | tails``.

Exit codes: 0 success, 2 invalid configuration, 3 a check failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from ..errors import InvalidInput, IOFailure
from .checks import evaluate_all
from .config import ConfigFile, apply_overrides, discover_configs, load_config
from .experiments import REGISTRY, tail_bound
from .report import emit_csv, emit_json
from .runner import file_summary, run_config

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seeds", type=int, help="trials per sweep value")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output path prefix; .csv and .json are appended")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--record-runtime", action="store_true",
                   help="fill runtime_ms (makes the CSV differ between runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hidim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one config file")
    run.add_argument("config")
    _add_run_options(run)

    lst = sub.add_parser("list", help="list estimators and shipped configs")
    lst.add_argument("--configs", default="configs")

    ver = sub.add_parser("verify", help="run every config with checks")
    ver.add_argument("--configs", default="configs")
    ver.add_argument("--only", nargs="*", help="config names to run")
    _add_run_options(ver)

    tails = sub.add_parser("tails", help="print empirical tails against their bounds")
    tails.add_argument("config", nargs="?", default="configs/tails.toml")
    tails.add_argument("--bound", default="hoeffding")
    _add_run_options(tails)
    return parser


def _output_prefix(cfg: ConfigFile, out: Optional[str], multiple: bool) -> Optional[str]:
    if out is None:
        return cfg.runs[0].output_path
    return str(Path(out) / cfg.name) if multiple else out


def execute(cfg: ConfigFile, args, multiple: bool = False, stream=sys.stdout) -> bool:
    """Run a config, write its outputs, print its checks; returns whether all checks passed."""
    cfg = apply_overrides(cfg, seeds=args.seeds, master_seed=args.seed)
    results = run_config(cfg, threads=args.threads, record_runtime=args.record_runtime)
    checks = evaluate_all(cfg.checks, results)
    prefix = _output_prefix(cfg, args.out, multiple)
    if prefix:
        emit_csv([row for res in results.values() for row in res.rows], prefix + ".csv")
        emit_json(file_summary(cfg, results, checks), prefix + ".json")
    for name, res in results.items():
        fit = f"slope {res.fit.slope:+.3f} (r2 {res.fit.r_squared:.3f})" if res.fit else "no fit"
        print(f"{cfg.name}/{name}: {len(res.rows)} trials, {len(res.failures)} failed, {fit}", file=stream)
    for c in checks:
        print("  " + c.line(), file=stream)
    return all(c.passed for c in checks)


def _cmd_list(args) -> int:
    by_exp: dict[str, list] = {}
    for est in REGISTRY.values():
        by_exp.setdefault(est.experiment, []).append(est)
    for exp in sorted(by_exp):
        print(f"[{exp}]")
        for est in sorted(by_exp[exp], key=lambda e: e.name):
            print(f"  {est.name:32s} {est.description}")
    try:
        paths = discover_configs(args.configs)
    except InvalidInput:
        return EXIT_OK
    print("configs:")
    for p in paths:
        cfg = load_config(p)
        tag = f"criterion {cfg.criterion}" if cfg.criterion is not None else "invariant"
        print(f"  {p.name:32s} {tag}: {cfg.description}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    paths = discover_configs(args.configs)
    configs = [load_config(p) for p in paths]
    if args.only:
        configs = [c for c in configs if c.name in set(args.only)]
    ok = True
    for cfg in configs:
        if cfg.checks:
            ok &= execute(cfg, args, multiple=True)
    return EXIT_OK if ok else EXIT_CHECK


def _cmd_tails(args) -> int:
    cfg = apply_overrides(load_config(args.config), seeds=args.seeds, master_seed=args.seed)
    results = run_config(cfg, threads=args.threads, record_runtime=args.record_runtime)
    for name, res in results.items():
        batch = int(res.config.fixed.get("batch", 1))
        print(f"{name} ({res.config.seeds * batch} draws per t)")
        print(f"  {'t':>8s} {'empirical':>10s} {'bound':>10s}")
        for v in res.config.sweep_values:
            freq = float(res.errors_at(v).mean())
            print(f"  {v:8.3f} {freq:10.5f} {tail_bound(args.bound, float(v), res.config.fixed):10.5f}")
    checks = evaluate_all(cfg.checks, results)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return EXIT_OK if execute(load_config(args.config), args) else EXIT_CHECK
        if args.command == "list":
            return _cmd_list(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_tails(args)
    except InvalidInput as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOFailure as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
