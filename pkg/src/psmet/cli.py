"""``psmet`` command line interface.

Exit codes: 0 success, 2 invalid arguments or configuration, 3 numerical
failure (including a failed oracle verification).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time

from .errors import InvalidArgumentError, PsmetError
from .sweep import (
    AXES,
    METRIC_SETS,
    PEAK_METRICS,
    RunConfig,
    build_config,
    coerce_setting,
    emit_csv,
    find_peak,
    format_report,
    run_ledger,
    run_recycle,
    run_sweep,
    run_verify,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

_NUMERIC_FLAGS = (
    ("--n", "mean photon number |alpha|^2"),
    ("--g", "coupling strength"),
    ("--theta-i", "preselection polar angle"),
    ("--theta-f", "postselection polar angle"),
    ("--phi0", "relative phase phi_i - phi_f"),
    ("--phi-i", "preselection azimuth (used with --phi-f instead of --phi0)"),
    ("--phi-f", "postselection azimuth"),
    ("--r", "recycling mirror amplitude reflectivity"),
    ("--cavity-phase", "single-pass cavity phase (0 = resonance)"),
    ("--from", "sweep start"),
    ("--to", "sweep end"),
    ("--steps", "number of sweep points"),
    ("--fd-step", "finite-difference step"),
    ("--trunc-tol", "Fock truncation tail tolerance"),
    ("--seed", "seed for the random verification grid"),
    ("--points", "number of verification points"),
    ("--prob-tol", "verification tolerance for probabilities and QFI"),
    ("--fd-tol", "verification tolerance for recycled quantities"),
)


def _dest(flag: str) -> str:
    return flag[2:].replace("-", "_")


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file, or a packaged preset name (fig1, fig2, ...)")
    for flag, text in _NUMERIC_FLAGS:
        # kept as text so that forms like 0.5pi reach parse_number
        common.add_argument(flag, dest=_dest(flag), metavar="X", help=text)
    common.add_argument("--axis", choices=AXES)
    common.add_argument("--metric", choices=METRIC_SETS + PEAK_METRICS)
    common.add_argument("--out", help="write the table to this path instead of stdout")
    common.add_argument("--format", choices=("csv", "tsv"))

    parser = argparse.ArgumentParser(
        prog="psmet", description="Fisher information of postselected coherent-state metrology."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ledger", parents=[common], help="information ledger at one point")
    sub.add_parser("sweep", parents=[common], help="ledger rows along --axis")
    sub.add_parser("peak", parents=[common], help="maximise --metric along --axis")
    sub.add_parser("recycle", parents=[common], help="ledger plus power-recycling columns")
    sub.add_parser("verify", parents=[common], help="cross-check against the Fock-basis oracle")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for flag, _ in _NUMERIC_FLAGS:
        raw = getattr(args, _dest(flag))
        if raw is not None:
            name, value = coerce_setting(flag[2:], raw)
            overrides[name] = value
    for name in ("axis", "metric", "out", "format"):
        overrides[name] = getattr(args, name)
    return build_config(args.config, **overrides)


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        try:
            with open(cfg.out, "w", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise InvalidArgumentError(f"cannot write {cfg.out}: {exc}") from None


def _table(cfg: RunConfig, command: str) -> str:
    if command == "recycle" and cfg.metric == "ledger":
        cfg = dataclasses.replace(cfg, metric="recycled")
    if command == "sweep" or (cfg.axis is not None and command in ("ledger", "recycle")):
        if cfg.axis is None:
            raise InvalidArgumentError("sweep needs --axis")
        return emit_csv(run_sweep(cfg), cfg.format, recycled=cfg.recycled)
    row = run_recycle(cfg) if cfg.recycled else run_ledger(cfg)
    return emit_csv([row], cfg.format, recycled=cfg.recycled)


def _peak(cfg: RunConfig) -> str:
    if cfg.axis is None:
        raise InvalidArgumentError("peak needs --axis")
    metric = cfg.metric if cfg.metric in PEAK_METRICS else "F_tot"
    res = find_peak(cfg, metric)
    sep = "," if cfg.format == "csv" else "\t"
    head = ("axis", "metric", "value", "bracket_width", "boundary")
    cells = (f"{res.x:.17g}", metric, f"{res.value:.17g}", f"{res.bracket_width:.17g}", str(res.boundary).lower())
    return sep.join(head) + "\n" + sep.join(cells) + "\n"


def _verify(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    report = run_verify(cfg)
    elapsed = time.perf_counter() - t0
    _emit(format_report(report, cfg.format), cfg)
    print(report.format_table(), file=sys.stderr)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"seed {cfg.seed}, {cfg.points} points, {elapsed:.2f} s: {verdict}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "verify":
            return _verify(cfg)
        _emit(_peak(cfg) if args.command == "peak" else _table(cfg, args.command), cfg)
    except InvalidArgumentError as exc:
        print(f"psmet: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PsmetError, ArithmeticError) as exc:
        print(f"psmet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
