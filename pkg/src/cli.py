"""Command-line interface: enumerate, sample, run, verify, gof, info.

Exit codes: 0 on success or pass, 1 when a verification or goodness-of-fit
test fails, 2 on usage errors (including invalid alpha, simulation spec or settings).
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from fractions import Fraction
from typing import Any

from .config import configure_logging, get_settings_info
from .constants import CAPABILITIES_DATA, CHAIN_NAMES, CHECK_NAMES, GROWTH_MODELS, PACKAGE_VERSION
from .distributions import RngStream, parse_alpha, read_pmf_csv, write_pmf_csv
from .exceptions import ConfigurationError, DownUpError
from .growth import GrowthConfig, sample_tree
from .harness import SimSpec, expected_occupancy, gof_test, read_counts_csv, run_sim
from .tree_core import count_trees, encode, enumerate_trees
from .verify import run_named_check, summarize

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _alpha(text: str | None) -> Fraction | None:
    return None if text is None else parse_alpha(text)


def _emit(payload: Any) -> None:
    print(json.dumps(payload, indent=2))


def _cmd_enumerate(args: argparse.Namespace) -> int:
    if args.count_only:
        _emit({"n": args.n, "count": count_trees(args.n)})
        return EXIT_OK
    trees = enumerate_trees(range(1, args.n + 1))
    if args.format == "json":
        _emit([t.to_lists() for t in trees])
    else:
        for t in trees:
            print(encode(t).decode("ascii"))
    return EXIT_OK


def _growth_config(model: str, alpha: Fraction | None) -> GrowthConfig:
    if model == "remy":
        if alpha not in (None, Fraction(1, 2)):
            raise ConfigurationError("remy growth has alpha = 1/2")
        return GrowthConfig()
    if alpha is None:
        raise ConfigurationError(f"model {model} needs --alpha")
    return GrowthConfig(alpha, modified=model == "ford-modified")


def _cmd_sample(args: argparse.Namespace) -> int:
    cfg = _growth_config(args.model, _alpha(args.alpha))
    if args.count < 1:
        raise ConfigurationError("--count must be positive", {"count": args.count})
    rng = RngStream(args.seed)
    lines = [encode(sample_tree(args.n, cfg, rng)).decode("ascii") for _ in range(args.count)]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.writelines(line + "\n" for line in lines)
    else:
        print("\n".join(lines))
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    spec = SimSpec.build(
        chain=args.chain,
        n=args.n,
        k=args.k,
        alpha=args.alpha,
        steps=args.steps,
        replicas=args.replicas,
        seed=args.seed,
        projection=args.project,
        thin=args.thin,
        burn_in=args.burn_in,
    )
    summary = run_sim(spec, workers=args.workers, trajectory=args.trajectory is not None)
    summary.write_counts_csv(args.out)
    if args.transitions:
        summary.write_transitions_csv(args.transitions)
    if args.trajectory:
        summary.write_trajectory(args.trajectory)

    result: dict[str, Any] = {
        "spec": spec.model_dump(mode="json"),
        "recorded": summary.total,
        "distinct_states": len(summary.occupancy),
        "counts": args.out,
    }
    status = EXIT_OK
    if args.expected_out or args.gof:
        expected = expected_occupancy(spec)
        if args.expected_out:
            write_pmf_csv(expected, args.expected_out)
        if args.gof:
            gof = gof_test(summary.occupancy, expected)
            result["gof"] = gof.to_dict()
            status = EXIT_OK if gof.passed else EXIT_FAIL
    _emit(result)
    return status


def _cmd_verify(args: argparse.Namespace) -> int:
    reports = run_named_check(
        args.check,
        n=args.n,
        k=args.k,
        alpha=_alpha(args.alpha),
        projection=args.project,
        start=args.start,
        label=args.label,
    )
    payload = summarize(reports)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
    _emit(payload)
    for report in reports:
        mark = "✓" if report.passed else "✗"
        print(f"{mark} {report.check}: {report.verdict}", file=sys.stderr)
    return EXIT_OK if payload["passed"] else EXIT_FAIL


def _cmd_gof(args: argparse.Namespace) -> int:
    observed = read_counts_csv(args.observed)
    expected = read_pmf_csv(args.expected)
    result = gof_test(observed, expected, args.min_expected)
    _emit(result.to_dict())
    return EXIT_OK if result.passed else EXIT_FAIL


def _cmd_info(args: argparse.Namespace) -> int:
    _emit({**CAPABILITIES_DATA, "settings": get_settings_info()})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="downup", description="Down-up chains on leaf-labelled binary trees."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {PACKAGE_VERSION}")
    parser.add_argument("--log-level", help="overrides DOWNUP_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list all trees on [n]")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--format", choices=("lines", "json"), default="lines")
    p.set_defaults(handler=_cmd_enumerate)

    p = sub.add_parser("sample", help="draw trees from a growth process")
    p.add_argument("--model", choices=GROWTH_MODELS, default="remy")
    p.add_argument("--alpha")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("run", help="simulate replicas of a chain")
    p.add_argument("--chain", choices=CHAIN_NAMES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--project", choices=("none", "mass", "star", "beads"), default="none")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True, help="occupancy counts CSV")
    p.add_argument("--transitions", help="transition counts CSV")
    p.add_argument("--trajectory", help="recorded states of replica 0, one per line")
    p.add_argument("--expected-out", help="exact stationary law of the recorded states, CSV")
    p.add_argument("--gof", action="store_true", help="test occupancy against the exact law")
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("verify", help="run an exact check")
    p.add_argument("check", choices=CHECK_NAMES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha")
    p.add_argument("--project", choices=("mass", "star", "beads"))
    p.add_argument("--start", choices=("stationary", "point-mass"), default="stationary")
    p.add_argument("--label", type=int, default=1, help="resampled label for resampling-law")
    p.add_argument("--report")
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("gof", help="chi-square test of counts against a pmf")
    p.add_argument("--observed", required=True)
    p.add_argument("--expected", required=True)
    p.add_argument("--min-expected", type=float, default=5.0)
    p.set_defaults(handler=_cmd_gof)

    p = sub.add_parser("info", help="print capabilities and settings")
    p.set_defaults(handler=_cmd_info)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, dispatch, and map errors to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure_logging(args.log_level)
        return int(args.handler(args))
    except DownUpError as exc:
        logger.debug("Command failed", exc_info=True)
        print(json.dumps(exc.to_dict(), indent=2, default=str), file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
