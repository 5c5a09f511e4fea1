"""Command line entry point: ``fdelab run|sweep|verify-all``."""
import argparse
import logging
import os
import sys

from .config import parse_config
from .errors import FDELabError
from .runner import run, sweep, verify_all


def _parser():
    ap = argparse.ArgumentParser(prog="fdelab", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output root (default: ./out)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="max concurrent runs (default: logical cores)")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for randomised sampling (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run one scenario config")
    r.add_argument("config")

    s = sub.add_parser("sweep", parents=[common], help="sweep one numeric setting")
    s.add_argument("config")
    s.add_argument("--axis", required=True)
    s.add_argument("--values", required=True, help="comma separated list")

    v = sub.add_parser("verify-all", parents=[common], help="re-check verdict files")
    v.add_argument("dir")
    return ap


def _load(path, seed):
    sc = parse_config(path)
    if seed is not None:
        sc = sc.with_value("seed", seed)
    return sc


def _print_manifest(m):
    print(f"{m['scenario']['name']}  {m['config_hash'][:16]}  status={m['status']}  -> {m['path']}")
    if m["status"] != "ok":
        print(f"  error: {m['error']}")
    for rec in m.get("verdicts", []):
        flag = "PASS" if rec["pass"] else "FAIL"
        print(f"  {flag}  {rec['check']}: {rec['measured']} {rec['relation']} {rec['tolerance']}")


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            m = run(_load(args.config, args.seed), args.out)
            m.pop("_outcome", None)
            _print_manifest(m)
            return 0 if m["status"] == "ok" and m["passed"] else 1
        if args.command == "sweep":
            sc = _load(args.config, args.seed)
            values = [v for v in args.values.split(",") if v.strip()]
            ms = sweep(sc, args.axis, values, args.out, jobs=max(1, args.jobs))
            for m in ms:
                _print_manifest(m)
            return 0 if all(m["status"] == "ok" and m["passed"] for m in ms) else 1
        results = verify_all(args.dir)
        bad = 0
        for path, check, consistent, passed in results:
            state = "ok" if consistent else "INCONSISTENT"
            print(f"{state:12s} {'PASS' if passed else 'FAIL'}  {check}  {path}")
            bad += not consistent
        print(f"{len(results)} verdicts, {bad} inconsistent")
        return 0 if bad == 0 and results else 1
    except FDELabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
