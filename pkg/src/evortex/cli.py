"""Command line interface.

Subcommands mirror the pipeline stages plus a one-shot `run` and the
device `calibrate` helper:

    evortex run         --config scenario.cfg --out results/
    evortex mask        --config scenario.cfg --out results/
    evortex propagate   --config scenario.cfg --out results/
    evortex hologram    --config scenario.cfg --out results/
    evortex reconstruct --config scenario.cfg --out results/
    evortex analyze     --config scenario.cfg --out results/
    evortex calibrate   --config scenario.cfg --target -30

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage
errors (every config violation is listed, one per line, on stderr).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analysis import calibrate
from .config import ConfigError, DeviceElement, ScenarioConfig, load_scenario
from .pipeline import (
    output_lock,
    run_pipeline,
    stage_analyze,
    stage_hologram,
    stage_mask,
    stage_propagate,
    stage_reconstruct,
)
from .sources import two_wire_device

__all__ = ["main", "build_parser"]

_STAGE_HELP = {
    "run": "all stages in order",
    "mask": "build the source wave and imprint the element",
    "propagate": "propagate the masked wave to each defocus",
    "hologram": "record off-axis holograms",
    "reconstruct": "recover the wave from the holograms",
    "analyze": "measure the stored waves and write the manifest",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evortex",
        description="Electron vortex beams from closed-but-not-exact phase elements.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p: argparse.ArgumentParser, with_out: bool) -> None:
        p.add_argument("--config", required=True, type=Path, help="scenario config file")
        if with_out:
            p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="run seed recorded in the manifest")
        p.add_argument(
            "--threads", type=int, default=0, help="worker cap recorded in the manifest"
        )
        p.add_argument("--quiet", action="store_true", help="suppress per-file progress")

    for name, text in _STAGE_HELP.items():
        common(sub.add_parser(name, help=text), with_out=True)

    cal = sub.add_parser("calibrate", help="solve a device drive for a target winding")
    common(cal, with_out=False)
    cal.add_argument("--target", required=True, type=int, help="target topological charge")
    cal.add_argument(
        "--tolerance", type=float, default=1e-6, help="acceptable |achieved - target|"
    )
    return parser


def _print_violations(exc: ConfigError) -> None:
    print("error: invalid configuration", file=sys.stderr)
    for violation in exc.violations:
        print(f"  {violation}", file=sys.stderr)


def _run_calibrate(cfg: ScenarioConfig, args: argparse.Namespace) -> None:
    element = cfg.element
    if not isinstance(element, DeviceElement):
        raise ValueError("the config has no device element to calibrate")
    template = two_wire_device(
        gap=element.gap,
        wire_width=element.wire_width,
        length=element.length,
        density=element.density if element.density is not None else 0.0,
    )
    result = calibrate(template, cfg.beam, float(args.target), tolerance=args.tolerance)
    print(f"control_density = {result.control_value!r} C/m")
    if element.kappa is not None:
        print(f"control_voltage = {result.control_value / element.kappa!r} V")
    print(f"achieved_ell = {result.achieved_ell!r}")
    print(f"iterations = {result.iterations}")
    print(f"residual = {result.residual!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 0:
        parser.error("--threads must be >= 0")
    if args.seed < 0:
        parser.error("--seed must be >= 0")

    try:
        cfg = load_scenario(args.config)
    except ConfigError as exc:
        _print_violations(exc)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "calibrate":
            _run_calibrate(cfg, args)
            return 0
        with output_lock(args.out):
            if args.command == "run":
                written = run_pipeline(cfg, args.out, seed=args.seed, threads=args.threads)
            elif args.command == "mask":
                written = stage_mask(cfg, args.out)
            elif args.command == "propagate":
                written = stage_propagate(cfg, args.out)
            elif args.command == "hologram":
                written = stage_hologram(cfg, args.out)
            elif args.command == "reconstruct":
                written = stage_reconstruct(cfg, args.out)
            else:
                written = stage_analyze(cfg, args.out, seed=args.seed, threads=args.threads)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if not args.quiet:
        for name in written:
            print(f"wrote {Path(args.out) / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
