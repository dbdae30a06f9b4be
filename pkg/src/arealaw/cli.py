"""Command line entry point: ``arealaw run | presets | fuzz``.

Exit status is 0 when every check passes, 1 when any check fails and 2 for
configuration errors (bad JSON, unknown keys or presets, caps exceeded).
The caps can be raised with AREALAW_DIM_CAP and AREALAW_CONFIG_CAP.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import fcs, gibbs_peps, harness
from .qstate import CapExceededError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _finish(report: harness.CheckReport, out: str | None, fmt: str) -> int:
    if out:
        for p in harness.emit(report, out, fmt):
            print(f"wrote {p}", file=sys.stderr)
    elif fmt == "csv":
        sys.stdout.write(report.csv_text())
    else:
        sys.stdout.write(report.json_text())
    status = "PASS" if report.passed else "FAIL"
    print(f"{report.experiment}: {status} ({report.pass_count} passed, {report.fail_count} failed)", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _guarded(fn):
    try:
        return fn()
    except (harness.ConfigError, CapExceededError, gibbs_peps.NonCommutingError, fcs.NonGenericSpectrumError,
            fcs.MixedGeneratorError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


def cmd_run(args) -> int:
    def go():
        cfg = harness.load_config(args.config)
        report = harness.run(cfg, args.preset_dir)
        out = args.out
        fmt = args.format
        if out is None and "output" in cfg:
            out = cfg["output"]["path"]
            fmt = args.format or cfg["output"].get("format", "both")
        return _finish(report, out, fmt or ("both" if out else "json"))

    return _guarded(go)


def cmd_presets(args) -> int:
    def go():
        cat = harness.list_presets(args.preset_dir)
        if args.json:
            sys.stdout.write(json.dumps(cat, sort_keys=True, indent=1) + "\n")
            return EXIT_PASS
        print("models:")
        for m in cat["models"]:
            print(f"  {m['name']:<22} {m['kind']:<9} N={m['sites']:<3} d={m['local_dim']}  {m['description']}")
        print("channels:")
        for c in cat["channels"]:
            print(f"  {c['name']:<22} D={c['bond_dim']!s:<4} d={c['phys_dim']!s:<4} {c['description']}")
        print("profiles:")
        for p in cat["profiles"]:
            print(f"  {p['name']:<22} {p['description']}")
        print("peps pairs:")
        for p in cat["peps_pairs"]:
            print(f"  {p['name']:<22} d={p['local_dim']}  {p['description']}")
        if cat["custom"]:
            print("custom:")
            for c in cat["custom"]:
                print(f"  {c['name']:<22} {c['kind']}")
        caps = cat["caps"]
        print(f"caps: dimension {caps['dimension']}, configurations {caps['configurations']}")
        return EXIT_PASS

    return _guarded(go)


def cmd_fuzz(args) -> int:
    def go():
        cfg = harness.fuzz_config(args.experiment, args.seed, args.draws, args.workers)
        return _finish(harness.run(cfg, args.preset_dir), args.out, args.format or ("both" if args.out else "json"))

    return _guarded(go)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arealaw", description="Area-law and correlation checks on small lattices")
    p.add_argument("--preset-dir", default=None, help=f"directory of custom preset JSON files (or ${harness.PRESET_DIR_ENV})")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output path without extension")
    r.add_argument("--format", choices=["csv", "json", "both"])
    r.set_defaults(func=cmd_run)

    ps = sub.add_parser("presets", help="list models, channels and profiles")
    ps.add_argument("--json", action="store_true")
    ps.set_defaults(func=cmd_presets)

    f = sub.add_parser("fuzz", help="randomized battery for one experiment")
    f.add_argument("experiment", choices=harness.FUZZ_EXPERIMENTS)
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--draws", type=int, default=100)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--out")
    f.add_argument("--format", choices=["csv", "json", "both"])
    f.set_defaults(func=cmd_fuzz)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, matching the config-error code
        return int(e.code or 0)
    if getattr(args, "draws", 1) is not None and getattr(args, "draws", 1) < 1:
        print("config error: --draws must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
