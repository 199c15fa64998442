"""Command-line front end: single runs, preset experiments, verification.

Every failure path prints a one-line JSON error record to stderr and
returns a nonzero exit code, so callers can script against the tool
without scraping prose.
"""

import argparse
import json
import sys

from . import harness
from .errors import (ConfigError, EnumerationLimitError, NonConvergenceError,
                     SizeLimitError)
from .formation import form
from .scenario import scenario_from_config
from .valuation import PartitionEvaluator

_PRESET_COMMANDS = {
    "sweep-n": "sweep_n",
    "sweep-alpha": "sweep_alpha",
    "sweep-k": "sweep_k",
    "sizes": "sizes",
    "traffic": "traffic",
    "mobility": "mobility",
    "snapshot": "snapshot",
    "oracle": "oracle",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError, not SystemExit."""

    def error(self, message):
        raise ConfigError(message)


def _parse_seeds(text: str) -> list[int]:
    """Seed list syntax: "7", "0,3,9", "0-29", or combinations thereof."""
    seeds: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "-" in token[1:]:   # allow negative single values
            lo, _, hi = token.partition("-")
            try:
                lo_i, hi_i = int(lo), int(hi)
            except ValueError:
                raise ConfigError(f"bad seed range {token!r}") from None
            if hi_i < lo_i:
                raise ConfigError(f"empty seed range {token!r}")
            seeds.extend(range(lo_i, hi_i + 1))
        else:
            try:
                seeds.append(int(token))
            except ValueError:
                raise ConfigError(f"bad seed value {token!r}") from None
    if not seeds:
        raise ConfigError(f"no seeds in {text!r}")
    return seeds


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="single seed")
    parser.add_argument("--seeds", help='seed list, e.g. "0-29" or "1,4,7"')
    parser.add_argument("--out", help="output path")
    parser.add_argument("--format", choices=("csv", "json"),
                        help="main table format (default csv)")
    parser.add_argument("--jobs", type=int, help="worker processes")


def _build_parser() -> _Parser:
    parser = _Parser(prog="coalsense",
                     description="Coalition-based spectrum sensing and "
                                 "access simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate",
                         help="one scenario: baseline vs formed coalitions")
    _add_common(sim)
    for command in _PRESET_COMMANDS:
        p = sub.add_parser(command, help=f"run the {command} preset")
        _add_common(p)
    return parser


def _f12(value):
    return float(format(float(value), ".12g"))


def _simulate(args) -> int:
    config = _load_config(args.config) if args.config else {}
    if args.seed is not None:
        config["seed"] = args.seed
    config.setdefault("seed", 0)
    scenario = scenario_from_config(config)
    ev = PartitionEvaluator(scenario)
    n = scenario.n_sus
    singles = tuple((i,) for i in range(n))
    non = harness._partition_profile(ev, singles)
    trace = form(scenario, seed=scenario.seed, evaluator=ev)
    coop = harness._partition_profile(ev, trace.final_partition)
    report = {
        "n_sus": n,
        "n_channels": scenario.n_channels,
        "seed": scenario.seed,
        "converged": trace.converged,
        "switch_count": len(trace.records),
        "final_partition": [list(c) for c in trace.final_partition],
        "mean_noncoop_payoff": _f12(sum(non[i] for i in range(n)) / n),
        "mean_coop_payoff": _f12(sum(coop[i] for i in range(n)) / n),
        "payoffs": [{"su": i, "noncoop": _f12(non[i]), "coop": _f12(coop[i])}
                    for i in range(n)],
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def _run_preset(preset: str, args) -> int:
    config = _load_config(args.config) if args.config else {}
    seeds = None
    if args.seeds:
        seeds = _parse_seeds(args.seeds)
    elif args.seed is not None:
        seeds = [args.seed]
    out = args.out
    if out is None and preset == "oracle" and "out" not in config:
        out = "oracle.json"
    spec = harness.build_spec(preset, config=config, seeds=seeds, out=out,
                              fmt=args.format, jobs=args.jobs)
    paths = harness.run_and_emit(spec)
    for path in paths:
        print(path)
    if preset == "oracle":
        report = json.loads(paths[0].read_text())
        for suite in report["suites"]:
            state = "PASS" if suite["passed"] else "FAIL"
            detail = {k: v for k, v in suite.items()
                      if k not in ("suite", "passed", "seed", "runtime_ms")}
            print(f"{suite['suite']}: {state} {json.dumps(detail)}")
        return 0 if report["passed"] else 1
    return 0


def _fail(kind: str, exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _simulate(args)
        return _run_preset(_PRESET_COMMANDS[args.command], args)
    except ConfigError as exc:
        return _fail("ConfigError", exc, 2)
    except (EnumerationLimitError, SizeLimitError) as exc:
        return _fail(type(exc).__name__, exc, 2)
    except NonConvergenceError as exc:
        return _fail("NonConvergenceError", exc, 1)
    except OSError as exc:
        return _fail("OSError", exc, 1)


if __name__ == "__main__":
    sys.exit(main())
