"""Command-line interface.

Every flag mirrors a key of the same name (dashes become underscores) in the
command's section of an INI config file; flags override the file::

    [decompose]
    realizations = 200
    seed = 7
    feature = lz76
    feature_options = normalize=true

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .features import FeatureError, REGISTRY, FeatureDescriptor
from .io import DataFormatError, load_segments
from .pipeline import (
    EXIT_OK,
    EXIT_RUNTIME,
    EXIT_VALIDATION,
    CellError,
    ConfigError,
    RunConfig,
    StudySpec,
    generate_study,
    run_decompose,
    run_naive_demo,
)
from .spectral import SpectralError
from .stats import StatsError
from .synthetic import SyntheticError

log = logging.getLogger("specphase")

VALIDATION_ERRORS = (ConfigError, DataFormatError, FeatureError, SpectralError, StatsError, SyntheticError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return v


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def parse_options(items) -> dict:
    """``["k=v", "a=b,c=d"]`` -> ``{"k": "v", "a": "b", "c": "d"}``."""
    out = {}
    for item in items or []:
        for part in str(item).split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ConfigError(f"feature option must look like key=value, got {part!r}")
            k, v = part.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _shared(p: argparse.ArgumentParser, out_default: str | None = None) -> None:
    p.add_argument("--config", metavar="PATH", help="INI file with a section per command")
    p.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    p.add_argument("--realizations", "-R", type=int, help="surrogate realizations")
    p.add_argument("--feature", help=f"feature name ({', '.join(sorted(REGISTRY))})")
    p.add_argument("--feature-option", action="append", metavar="KEY=VALUE", help="feature option, repeatable")
    p.add_argument("--alpha", type=float, help="significance level")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--format", choices=("csv", "bin"), help="dataset file format")
    p.add_argument("--threads", type=int, help="worker threads (default: $SPECPHASE_THREADS or 1)")
    p.add_argument("--quiet", action="store_true", help="suppress progress messages")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specphase", description="Spectral/phasic decomposition of feature differences.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="decompose every (subject, channel) cell of a study")
    p.add_argument("input", nargs="?", help="study root: <subject>/<x|y>/<channel>.<csv|bin>")
    _shared(p)
    p.add_argument("--window", type=int, help="window length T (0 keeps rows whole)")
    p.add_argument("--stride", type=int, help="window stride (0 = non-overlapping)")
    p.add_argument("--mirrored", action="store_true", default=None, help="y side reuses the x-side random streams")

    p = sub.add_parser("naive-demo", help="false-positive sweep of the naive surrogate test")
    _shared(p)
    p.add_argument("--cs", type=_floats, help="comma-separated phase roughness values")
    p.add_argument("--trials", type=int, help="trials per roughness value")
    p.add_argument("--length", type=int, help="segment length")
    p.add_argument("--decomp-trials", type=int, help="decomposition trials per roughness value")
    p.add_argument("--decomp-segments", type=int, help="segments per condition in decomposition trials")
    p.add_argument("--decomp-realizations", type=int, help="realizations in decomposition trials")

    p = sub.add_parser("feature", help="evaluate a feature on every segment of a dataset file")
    p.add_argument("input", nargs="?", help="dataset file")
    _shared(p)

    p = sub.add_parser("selftest", help="run the validation suites")
    _shared(p)
    p.add_argument("--scale", choices=("quick", "full"), help="suite size (default quick)")
    p.add_argument("--only", type=_floats, help="comma-separated suite numbers")

    p = sub.add_parser("gen", help="write a synthetic study directory")
    _shared(p)
    p.add_argument("--subjects", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--segments", type=int, help="segments per condition and cell")
    p.add_argument("--length", type=int, help="segment length")
    p.add_argument("--x-spectrum", help="demo_a, demo_b, power_law or flat")
    p.add_argument("--y-spectrum", help="demo_a, demo_b, power_law or flat")
    p.add_argument("--phase", help="constant, roughness or iid_uniform")
    p.add_argument("--c", type=float, help="phase roughness")
    p.add_argument("--shared-phase", action=argparse.BooleanOptionalAction, default=None,
                   help="x_j and y_j share phase draw j")
    p.add_argument("--copy-x", action="store_true", default=None, help="condition y is an exact copy of x")
    p.add_argument("--coupling", choices=("none", "amp_phase_coupled"), help="amplitude/phase coupling of x")
    return parser


# config handling ------------------------------------------------------------

def _coerce(value: str, like):
    if isinstance(like, bool):
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {value!r}")
    if isinstance(like, int):
        return int(value, 0)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, tuple):
        return _floats(value)
    return value


def _read_section(path, section: str) -> dict:
    if not path:
        return {}
    cp = configparser.ConfigParser()
    try:
        if not cp.read(path):
            raise ConfigError(f"config file not found: {path}")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return dict(cp[section]) if cp.has_section(section) else {}


def merge(defaults, section: dict, args: argparse.Namespace, aliases=None):
    """Apply config-file values, then explicit flags, onto a dataclass instance."""
    aliases = aliases or {}
    names = {f.name for f in fields(defaults)}
    for key, raw in section.items():
        name = aliases.get(key, key.replace("-", "_"))
        if name == "feature_options":
            defaults.feature_options = parse_options([raw])
            continue
        if name not in names:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(defaults, name, _coerce(raw, getattr(defaults, name)))
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
    for key, value in vars(args).items():
        name = aliases.get(key, key)
        if value is None or name not in names:
            continue
        if name == "feature_options":
            continue
        setattr(defaults, name, value)
    if getattr(args, "feature_option", None) and hasattr(defaults, "feature_options"):
        defaults.feature_options = {**defaults.feature_options, **parse_options(args.feature_option)}
    return defaults


# commands ---------------------------------------------------------------------

def cmd_decompose(args) -> int:
    cfg = merge(RunConfig(), _read_section(args.config, "decompose"), args)
    return run_decompose(cfg)


def cmd_naive_demo(args) -> int:
    cfg = merge(RunConfig(realizations=199, out="naive_demo"), _read_section(args.config, "naive-demo"), args)
    return run_naive_demo(cfg)


def cmd_feature(args) -> int:
    cfg = merge(RunConfig(out=""), _read_section(args.config, "feature"), args)
    cfg.validate(need_input=True)
    fd = cfg.descriptor()
    values = fd.batch(load_segments(cfg.input, cfg.format))
    if cfg.out:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        fh = open(Path(cfg.out) / "features.csv", "w", newline="")
    else:
        fh = sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", fd.name])
        for j, v in enumerate(values):
            w.writerow([j, repr(float(v))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .validation import run_all

    section = _read_section(args.config, "selftest")
    scale = args.scale or section.get("scale", "quick")
    if scale not in ("quick", "full"):
        raise ConfigError(f"scale must be quick or full, got {scale!r}")
    seed = args.seed if args.seed is not None else (int(section["seed"]) if "seed" in section else None)
    only = {int(v) for v in args.only} if args.only else None
    print(f"specphase selftest ({scale})")
    results = run_all(scale, seed, only)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed")
    return EXIT_OK if not failed else EXIT_RUNTIME


def cmd_gen(args) -> int:
    spec = merge(StudySpec(), _read_section(args.config, "gen"), args)
    out = args.out or _read_section(args.config, "gen").get("out") or "study"
    root = generate_study(spec, out)
    if not args.quiet:
        print(f"wrote {spec.subjects} subjects x {spec.channels} channels to {root}")
    return EXIT_OK


COMMANDS = {
    "decompose": cmd_decompose,
    "naive-demo": cmd_naive_demo,
    "feature": cmd_feature,
    "selftest": cmd_selftest,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - reported, mapped to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
