"""Command-line front end: ``simulate``, ``verify`` and ``stitch-demo``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .errors import UndulatorError
from .report import build_report, emit_summary_json, emit_trajectory_csv
from .stitching import build_and_propagate, drift_entry_matrix, first_magnet_exit, stitch_magnet_to_drift

OUTPUT_DIR_ENV = "UNDULATOR_CS_OUTPUT_DIR"


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def output_dir(cfg: RunConfig) -> Path:
    out = Path(os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig) -> int:
    run = build_and_propagate(cfg)
    out = output_dir(cfg)
    emit_trajectory_csv(run, out / cfg.trajectory_file)
    report = build_report(run, cfg, grid=False, oracle=False)
    emit_summary_json(report, out / cfg.summary_file)
    print(f"wrote {len(run.samples)} samples to {out / cfg.trajectory_file}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    run = build_and_propagate(cfg)
    out = output_dir(cfg)
    emit_trajectory_csv(run, out / cfg.trajectory_file)
    report = build_report(run, cfg)
    emit_summary_json(report, out / cfg.summary_file)
    for section, checks in sorted(report.checks.items()):
        for name, c in sorted(checks.items()):
            flag = "PASS" if c.passed else "FAIL"
            print(f"{flag}  {section}.{name}: {c.value:.3e} (tol {c.tolerance:.1e})")
    print("overall:", "PASS" if report.overall else "FAIL")
    return 0 if report.overall else 1


def cmd_stitch_demo(cfg: RunConfig) -> int:
    p, w, C1 = cfg.params, cfg.omega, cfg.C1
    rhs = np.array(first_magnet_exit(cfg.alpha_I, p, w))
    sol = stitch_magnet_to_drift(cfg.alpha_I, p, w, C1)
    with np.printoptions(precision=10, suppress=True):
        print(f"omega = {w!r}  t1 = {cfg.t1!r}  C1 = {C1!r}")
        print("continuity system  M @ (Re a'', Im a'', Re b'', Im b'') = exit means")
        print(drift_entry_matrix(p, C1))
        print("exit means (x, y, px, py):", rhs)
    print(f"alpha'' = {sol.alpha_next!r}")
    print(f"beta''  = {sol.beta_next!r}")
    print("residuals:", ", ".join(f"{r:.3e}" for r in sol.residuals))
    print(f"compatibility defects: position {sol.compat_defect.position:.3e}, momentum {sol.compat_defect.momentum:.3e}")
    print("reference-form boundary relations:", ", ".join(f"{d:.6g}" for d in sol.reference_boundary_defect))
    print("reference-form compatibility relations:", ", ".join(f"{d:.6g}" for d in sol.reference_compat_defect))
    return 0


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "stitch-demo": cmd_stitch_demo}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="undulator-cs", description="Coherent and covariance states in a step-field undulator.")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "propagate and write the trajectory CSV",
        "verify": "propagate and run the oracle and grid checks",
        "stitch-demo": "show the first magnet-to-drift continuity solve",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config", help="key = value configuration file")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg)
    except (UndulatorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
