"""``weakkam <experiment> [--config FILE] [--lambda ...] [--n N] [--out DIR]``

Exit status is 0 when every verdict passes, 1 when some verdict fails and 2
for usage or precondition errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .exceptions import PreconditionError
from .experiments import ALIASES, EXPERIMENTS, canonical_name, default_config, run_experiment
from .io import load_config

log = logging.getLogger("weakkam")


def build_parser() -> argparse.ArgumentParser:
    names = sorted(EXPERIMENTS) + sorted(ALIASES)
    ap = argparse.ArgumentParser(prog="weakkam",
                                 description="Run one experiment and write its report.")
    ap.add_argument("experiment", help="one of: " + ", ".join(names))
    ap.add_argument("--config", help="TOML file; command-line flags override its values")
    ap.add_argument("--lambda", dest="lambdas", type=float, nargs="+", metavar="LAM",
                    help="discount value(s), strictly decreasing for sweeps")
    ap.add_argument("--n", type=int, help="grid size")
    ap.add_argument("--out", help="output directory (default: ./out/<experiment>)")
    ap.add_argument("--seed", type=int, help="seed for randomized perturbations")
    ap.add_argument("-q", "--quiet", action="store_true", help="only print the verdict lines")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    return ap


def resolve_config(args):
    name = canonical_name(args.experiment)
    if args.config:
        cfg = load_config(args.config, experiment=name)
        if canonical_name(cfg.experiment) != name:
            raise ValueError(f"config is for {cfg.experiment!r}, not {name!r}")
        cfg = replace(cfg, experiment=name)
    else:
        cfg = default_config(name)
    over = {}
    if args.lambdas is not None:
        over["lambdas"] = args.lambdas
    if args.n is not None:
        over["n"] = args.n
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    cfg = replace(cfg, **over)
    if cfg.out is None:
        cfg = replace(cfg, out=f"out/{name}")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        report = run_experiment(cfg)
    except (PreconditionError, ValueError, TypeError, OSError) as exc:
        print(f"weakkam: error: {exc}", file=sys.stderr)
        return 2
    out = report.write(cfg.out)
    for v in report.verdicts:
        shown = "" if v.value is None else f" value={v.value:.6g}"
        if v.threshold is not None:
            shown += f" threshold={v.threshold:.6g}"
        print(f"{'PASS' if v.passed else 'FAIL'} {v.name} [{v.invariant}]{shown}")
    if not args.quiet:
        print(f"{report.experiment}: {sum(v.passed for v in report.verdicts)}/"
              f"{len(report.verdicts)} verdicts passed in {report.timings['total']:.1f} s; "
              f"wrote {out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
