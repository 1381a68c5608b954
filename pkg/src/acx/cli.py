"""Command line entry point: ``acx run | list | validate``.

Exit codes: 0 all enforced checks pass, 1 configuration error, 2 an enforced
check failed, 3 numerical failure (the report still records the error).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
import scipy

from . import __version__
from . import acstruct as acs
from . import config as cf
from . import experiments as ex
from . import jdisks as jd

NUMERICAL_ERRORS = (acs.DomainError, acs.NotAComplexStructure, jd.RadiusTooLarge, jd.NotConverged,
                    np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError)


def _clean(obj):
    """Convert numpy scalars and arrays to JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def build_report(cfg, seed, parallel=1, dump_disk=None):
    """Run the configured experiment; return ``(report, csv_files, exit_code)``."""
    exp = ex.EXPERIMENTS[cfg["experiment"]]
    ctx = ex.Context(cfg, seed=seed, parallel=parallel)
    error = None
    old = np.seterr(divide="ignore", invalid="ignore")
    try:
        if exp.name == "disk-solver":
            exp.run(ctx, dump=dump_disk)
        else:
            exp.run(ctx)
    except NUMERICAL_ERRORS as exc:
        error = {"type": type(exc).__name__, "message": str(exc)}
    finally:
        np.seterr(**old)
    report = {
        "experiment": exp.name,
        "criterion": exp.criterion,
        "schema_version": cf.SCHEMA_VERSION,
        "input_digest": cf.digest(cfg),
        "environment": {"acx": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                        "seed": seed},
        "checks": ctx.checks,
        "data": ctx.data,
        "error": error,
    }
    if error is not None:
        code = 3
    elif all(c["pass"] for c in ctx.checks if c["enforced"]):
        code = 0
    else:
        code = 2
    report["pass"] = code == 0
    return _clean(report), ctx.csv, code


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _cmd_run(args):
    try:
        cfg = cf.load(args.config)
    except cf.ConfigError as exc:
        print(f"config error at {exc.path}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = args.out or cfg.get("output", {}).get("dir", ".")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    dump = args.dump_disk or cfg.get("output", {}).get("dump_disk")
    if dump and cfg["experiment"] != "disk-solver":
        print("config error at output/dump_disk: only the disk-solver experiment dumps a disk",
              file=sys.stderr)
        return 1
    report, files, code = build_report(cfg, seed, args.parallel, dump)
    os.makedirs(out, exist_ok=True)
    name = cfg["experiment"]
    with open(os.path.join(out, f"{name}.json"), "w") as fh:
        fh.write(dumps(report))
    for key, text in files.items():
        with open(os.path.join(out, f"{name}.{key}.csv"), "w") as fh:
            fh.write(text)
    for c in report["checks"]:
        flag = "PASS" if c["pass"] else ("FAIL" if c["enforced"] else "info")
        print(f"[{flag}] {c['name']}: {c['value']} {c['op']} {c['threshold']}")
    if report["error"]:
        print(f"numerical error: {report['error']['type']}: {report['error']['message']}",
              file=sys.stderr)
    return code


def _cmd_list(args):
    for e in ex.EXPERIMENTS.values():
        print(f"{e.name:22s} criterion {e.criterion:2d}  {e.description}")
    return 0


def _cmd_validate(args):
    try:
        cf.load(args.config)
    except cf.ConfigError as exc:
        print(f"config error at {exc.path}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print("ok")
    return 0


def make_parser():
    p = argparse.ArgumentParser(prog="acx", description="Numerical experiments on almost complex manifolds.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment named in a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: output.dir or .)")
    r.add_argument("--parallel", type=int, default=1, help="worker threads for sample loops")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--dump-disk", help="write the solved disk (disk-solver only)")
    r.set_defaults(func=_cmd_run)
    ls = sub.add_parser("list", help="list experiments")
    ls.set_defaults(func=_cmd_list)
    v = sub.add_parser("validate", help="validate a config file")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    if getattr(args, "parallel", 1) < 1:
        print("config error at --parallel: must be >= 1", file=sys.stderr)
        return 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
