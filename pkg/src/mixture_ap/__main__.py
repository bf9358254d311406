"""
Command verbs: ``python -m mixture_ap run|oracle|compare|selftest``.

Exit codes: 0 success, 1 invalid configuration, 2 solver failure,
3 comparison or self-test failure.  ``MIXTURE_AP_THREADS`` sets the number
of worker threads of the compiled kernels.
"""

import argparse
import sys

from . import cli_io
from .errors import ConfigError, MismatchedSeries, MixtureError


def _run(path, force_mode=None):
    cfg = cli_io.load_config(path)
    if force_mode is not None:
        cfg = cfg.replace(mode=force_mode)
    return cli_io.run_scenario(cfg)


def _compare(a, b, tolspec):
    report = cli_io.compare_runs(a, b, tolspec)
    print(cli_io.report_json(report))
    return cli_io.EXIT_OK if report["passed"] else cli_io.EXIT_COMPARE


def main(argv=None):
    parser = argparse.ArgumentParser(prog="mixture_ap", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("run", help="run the scenario of a config file")
    p.add_argument("config")
    p = sub.add_parser("oracle", help="run the limit relaxation system of a config file")
    p.add_argument("config")
    p = sub.add_parser("compare", help="compare two CSV series")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("tolspec", help="'0.05' or 'T_L=0.05,T_H=0.05[,interp]'")
    sub.add_parser("selftest", help="run the quick invariant checks")
    args = parser.parse_args(argv)
    try:
        cli_io.set_threads_from_env()
        if args.verb == "run":
            return _run(args.config)
        if args.verb == "oracle":
            return _run(args.config, "oracle")
        if args.verb == "compare":
            return _compare(args.a, args.b, args.tolspec)
        from .selftest import run_selftest

        return cli_io.EXIT_OK if run_selftest() else cli_io.EXIT_COMPARE
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return cli_io.EXIT_VALIDATION
    except MismatchedSeries as exc:
        print(f"error: {exc}", file=sys.stderr)
        return cli_io.EXIT_COMPARE
    except MixtureError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return cli_io.EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
