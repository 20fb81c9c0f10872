"""Command line front end: one subcommand per verification suite.

    landau-mhd <suite> [--config FILE] [--out DIR] [--seed N] [--threads N] [--set KEY=VALUE ...]

Every run writes ``config.txt``, ``report.md`` and ``manifest.json`` plus the
suite's CSV/JSON/field artifacts into the output directory. The exit status
is 0 only if every check of the suite passed, 1 if any failed and 2 for
configuration errors.
"""
import argparse
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io
from ._kernels import USING_NUMBA
from .errors import ConfigurationError
from .suites import SUITES, chain_table


def config_hash(cfg, seed):
    """Deterministic digest of the resolved config and seed."""
    blob = json.dumps({"config": io._jsonable(cfg), "seed": seed}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def versions():
    import scipy
    out = {"landau_mhd": __version__, "python": platform.python_version(),
           "numpy": np.__version__, "scipy": scipy.__version__, "numba_kernels": USING_NUMBA}
    try:
        import numba
        out["numba"] = numba.__version__
    except ImportError:
        pass
    return out


def resolve_config(suite, path=None, overrides=()):
    """Schema defaults, then the config file, then ``--set`` overrides."""
    schema = SUITES[suite][0]
    text = Path(path).read_text() if path else ""
    text += "\n" + "\n".join(overrides)
    return io.parse_config(text, schema)


def run_suite(suite, cfg, seed=0, out=None, threads=1, stream=None):
    """Run one suite, write report and manifest, return the report."""
    stream = sys.stdout if stream is None else stream
    fn = SUITES[suite][1]
    digest = config_hash(cfg, seed)
    kw = {"config_hash": digest} if suite in ("semigroup", "nonlinear", "sweep") else {}
    t0 = time.perf_counter()
    rep = fn(cfg, seed, out, threads, **kw)
    wall = time.perf_counter() - t0
    for c in rep.checks:
        print(c.line(), file=stream)
    for n in rep.notes:
        print(f"note: {n}", file=stream)
    if suite == "rates":
        print(chain_table(rep.records), file=stream)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(io.format_config(cfg))
        head = (f"# {suite}\n\nconfig hash `{digest}`, seed {seed}, "
                f"{'all checks passed' if rep.passed else 'SOME CHECKS FAILED'}\n\n")
        (out / "report.md").write_text(head + rep.markdown())
        manifest = {"suite": suite, "config_hash": digest, "seed": seed, "threads": threads,
                    "config": cfg, "versions": versions(), "wall_clock": wall,
                    "passed": rep.passed,
                    "outputs": sorted(str(Path(a).name) for a in rep.artifacts)
                    + ["config.txt", "report.md"]}
        io.write_json(out / "manifest.json", manifest)
    return rep


def build_parser():
    p = argparse.ArgumentParser(prog="landau-mhd", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="suite", required=True, metavar="SUITE")
    for name, (schema, fn) in SUITES.items():
        sp = sub.add_parser(name, help=(fn.__doc__ or "").strip().split("\n")[0])
        sp.add_argument("--config", type=Path, help="key = value config file")
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (default: results/<suite>)")
        sp.add_argument("--seed", type=int, default=0, help="seed for every random draw")
        sp.add_argument("--threads", type=int, default=1, help="FFT worker threads")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
        sp.add_argument("--show-config", action="store_true",
                        help="print the resolved config and exit")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = resolve_config(args.suite, args.config, args.set)
    except (ConfigurationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.show_config:
        sys.stdout.write(io.format_config(cfg))
        return 0
    out = args.out if args.out is not None else Path("results") / args.suite
    try:
        rep = run_suite(args.suite, cfg, args.seed, out, args.threads)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.suite}: {'PASS' if rep.passed else 'FAIL'} ({rep.wall_clock:.1f} s) -> {out}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
