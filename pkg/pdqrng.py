#!/usr/bin/env python3
"""
pdqrng - phase-diffusion quantum random number generator simulator.
Runs the simulate -> certify -> extract -> test pipeline, or any stage alone.

Exit codes: 0 success, 1 invalid input, 2 stage failure, 3 certification failure.
"""

import argparse
import os
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from config import ConfigManager, defaults_text
from core.errors import EXIT_OK, PdqrngError, exit_code_for
from core.logger import enable_file_logging, enable_verbose_logging, log_error, log_info
from pipeline import (
    BITS_FILE, REPORT_FILE, SAMPLES_FILE, cmd_certify, cmd_extract, cmd_fit, cmd_simulate, cmd_test,
    open_manifest, run_all,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Phase-diffusion QRNG simulator")
    parser.add_argument("--config", dest="config_file", help="Path to config file")
    parser.add_argument("--seed", type=int, help="Master 64-bit seed")
    parser.add_argument("--out-dir", dest="out_dir", help="Output directory")
    parser.add_argument("--threads", type=int, help="Worker threads")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument("--print-defaults", action="store_true", help="Print the default config and exit")

    sub = parser.add_subparsers(dest="command")
    simulate = sub.add_parser("simulate", help="Laser, interferometer and ADC simulation")
    simulate.add_argument("--pulses", type=int, help="Number of digitized pulses")

    certify = sub.add_parser("certify", help="Estimate visibility and certify min-entropy")
    certify.add_argument("--samples", help=f"Sample file (default <out-dir>/{SAMPLES_FILE})")

    extract = sub.add_parser("extract", help="Hash-based randomness extraction")
    extract.add_argument("--samples", help=f"Sample file (default <out-dir>/{SAMPLES_FILE})")
    extract.add_argument("--report", help=f"Entropy report (default <out-dir>/{REPORT_FILE})")
    extract.add_argument("--out", help=f"Packed bit output (default <out-dir>/{BITS_FILE})")
    extract.add_argument("--text", action="store_true", help="Also write a 0/1 text stream")

    test = sub.add_parser("test", help="Statistical test battery on extracted bits")
    test.add_argument("--bits", help=f"Packed bit file (default <out-dir>/{BITS_FILE})")

    fit = sub.add_parser("fit", help="Fit laser parameters to a measured pulse trace")
    fit.add_argument("--trace", help="Observed trace CSV (time_s,power_w)")

    run = sub.add_parser("run-all", help="simulate, certify, extract and test in one go")
    run.add_argument("--pulses", type=int, help="Number of digitized pulses")
    run.add_argument("--text", action="store_true", help="Also write a 0/1 text stream")
    return parser


def _apply_overrides(manager: ConfigManager, args) -> None:
    if args.seed is not None:
        manager.set_param("seed", args.seed, "run")
    if args.out_dir:
        manager.set_param("out_dir", args.out_dir, "run")
    if args.threads is not None:
        manager.set_param("threads", args.threads, "run")
    if args.verbose:
        manager.set_param("verbose", True, "run")
    if getattr(args, "pulses", None) is not None:
        manager.set_param("pulses", args.pulses, "run")
    if getattr(args, "trace", None):
        manager.set_param("reference_trace", args.trace, "laser")


def run_command(args) -> int:
    manager = ConfigManager(args.config_file)
    _apply_overrides(manager, args)
    # Everything is validated before the first file is written
    cfg = manager.pipeline_config()
    enable_verbose_logging(cfg.run.verbose)
    out_dir = cfg.run.out_dir
    enable_file_logging(os.path.join(out_dir, "logs"))
    manifest = open_manifest(cfg, manager.effective_text())
    log_info(f"pdqrng {args.command}: out_dir={out_dir} seed={cfg.run.seed}", component="cli")

    def default(path, name):
        return path or os.path.join(out_dir, name)

    try:
        if args.command == "simulate":
            cmd_simulate(cfg, manifest)
        elif args.command == "certify":
            cmd_certify(default(args.samples, SAMPLES_FILE), cfg, manifest)
        elif args.command == "extract":
            cmd_extract(default(args.samples, SAMPLES_FILE), default(args.report, REPORT_FILE),
                        default(args.out, BITS_FILE), cfg, manifest, text_output=args.text)
        elif args.command == "test":
            cmd_test(default(args.bits, BITS_FILE), cfg, manifest)
        elif args.command == "fit":
            cmd_fit(cfg, manifest)
        elif args.command == "run-all":
            run_all(cfg, manifest, text_output=args.text)
    finally:
        manifest.save()
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        print(defaults_text(), end="")
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_OK
    try:
        return run_command(args)
    except PdqrngError as e:
        code = exit_code_for(e)
        log_error(f"{e} (exit {code})", component="cli")
        print(f"Error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
