"""Command-line driver: ``akbrst verify`` and ``akbrst manifolds``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import IO, Sequence

import numpy as np

from .manifolds import ManifoldError, get_manifold, list_manifolds
from .suites import SUITES, ConfigError, SuiteConfig, SuiteReport, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def report_json(report: SuiteReport, include_wall_time: bool = True) -> str:
    d = report.to_dict()
    if not include_wall_time:
        d.pop("wall_time")
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def report_text(report: SuiteReport) -> str:
    lines = [f"# manifold={report.manifold} seed={report.seed} points={report.points}"]
    for r in report.records:
        if r.informational:
            status = "INFO"
        else:
            status = "PASS" if r.passed else "FAIL"
        op = "<=" if r.bound == "max" else ">="
        lines.append(f"{status} {r.check} [{r.anchor}] residual={r.residual:.3e} {op} {r.tolerance:.1e} "
                     f"(points={r.points})")
    lines.append(f"# overall={'PASS' if report.passed else 'FAIL'} wall_time={report.wall_time:.2f}s")
    return "\n".join(lines) + "\n"


def emit_report(report: SuiteReport, fmt: str, sink: IO[str]) -> None:
    if fmt == "json":
        sink.write(report_json(report))
    elif fmt == "text":
        sink.write(report_text(report))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _parse_tolerances(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        suite, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"tolerance override must look like suite=value, got {item!r}")
        try:
            out[suite.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"bad tolerance value in {item!r}") from None
    return out


def _parse_suites(arg: str | None) -> tuple[str, ...]:
    if arg is None or arg == "all":
        return SUITES
    return tuple(s.strip() for s in arg.split(",") if s.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="akbrst", description="Seeded identity suites for almost-Kahler BRST checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run identity suites on a manifold")
    v.add_argument("--manifold", required=True, help="built-in name or a YAML/JSON manifold file")
    v.add_argument("--suite", default="all", help=f"comma separated subset of {','.join(SUITES)} (default: all)")
    v.add_argument("--points", type=int, default=100)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--tolerance", action="append", default=[], metavar="SUITE=VAL")
    v.add_argument("--format", choices=("json", "text"), default="text")
    v.add_argument("--out", default=None, help="write the report here instead of stdout")

    m = sub.add_parser("manifolds", help="inspect registered manifolds")
    msub = m.add_subparsers(dest="action", required=True)
    msub.add_parser("list")
    show = msub.add_parser("show")
    show.add_argument("name")
    return parser


def _cmd_verify(args) -> int:
    cfg = SuiteConfig(args.manifold, _parse_suites(args.suite), args.points, args.seed,
                      _parse_tolerances(args.tolerance))
    report = run_suite(cfg)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                emit_report(report, args.format, fh)
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        emit_report(report, args.format, sys.stdout)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_manifolds(args) -> int:
    if args.action == "list":
        for name in list_manifolds():
            man = get_manifold(name)
            print(f"{name}\tdim={man.dim}\t{man.description}")
        return EXIT_PASS
    man = get_manifold(args.name)
    print(f"{man.name}: coordinates ({', '.join(man.coordinate_names)})")
    for label, spec in man.tensor_fields.items():
        print(f"{label} valence={spec.valence}")
        expr = spec.expressions()
        for idx in np.ndindex(expr.shape):
            print(f"  {label}{list(idx)} = {expr[idx]}")
    return EXIT_PASS


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage problems with code 2
        return int(exc.code or 0)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_manifolds(args)
    except (ConfigError, ManifoldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
