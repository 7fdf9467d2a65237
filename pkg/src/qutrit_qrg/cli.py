from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__
from .config import RunConfig, load_config
from .errors import (
    FlowTerminated,
    NoBracket,
    RootFindingError,
    SingularBlock,
    TensorFormatError,
    ZeroTensorError,
)
from .invariants import invariants_full
from .io_formats import (
    block_to_dict,
    boundaries_to_dict,
    invariants_to_dict,
    load_tensor_json,
    scan_csv,
    trajectory_json_lines,
    write_gnuplot,
    write_json,
)
from .phase_scan import bracket_boundary, scan_delta
from .rg_flow import rg_trajectory
from .spin_block import Couplings, block_solution, ed_check, verify_renormalized_operators
from .tensor_core import apply_local, random_sl_op
from .utils.logger import set_log_level, setup_logger

log = setup_logger("qutrit_qrg.cli")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_ZERO_TENSOR = 3
EXIT_SINGULAR = 4
EXIT_FLOW = 5

DEGREES = {"i6": 6, "i9": 9, "i12": 12}


def _depths(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out", default=None, help="Output path (default: stdout)")
    shared.add_argument("--jobs", type=int, default=None, help="Worker threads for grid evaluation")
    shared.add_argument("--config", default=None, help="Path to YAML config")
    shared.add_argument("--seed", type=int, default=None, help="Seed for random local operators")
    shared.add_argument("--log-level", dest="log_level", default=None, help="DEBUG, INFO, WARNING, ...")

    ap = argparse.ArgumentParser(prog="qutrit_qrg", description="Three-qutrit invariants along a spin-1 QRG flow")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariants", parents=[shared], help="I6, I9, I12, J12 and the hyperdeterminant of a tensor")
    p.add_argument("input", help="Tensor JSON file")
    p.add_argument("--check-sl", dest="check_sl", action="store_true",
                   help="Also apply a random SL(3)^3 operator and report the deviation")

    p = sub.add_parser("block", parents=[shared], help="Three-site block solution")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--J", dest="J", type=float, default=None)
    p.add_argument("--verify-ed", dest="verify_ed", action="store_true")

    p = sub.add_parser("flow", parents=[shared], help="RG trajectory as JSON lines")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--J", dest="J", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)

    for name, helptext in (("scan", "|I6| over a delta grid at fixed D"), ("phase", "Phase boundaries at fixed D")):
        p = sub.add_parser(name, parents=[shared], help=helptext)
        p.add_argument("--d", type=float, required=True)
        p.add_argument("--delta-min", dest="delta_min", type=float, default=None)
        p.add_argument("--delta-max", dest="delta_max", type=float, default=None)
        p.add_argument("--points", type=int, default=None)
        p.add_argument("--depths", type=_depths, default=None, help="Comma-separated step counts, e.g. 9,10,11")
        p.add_argument("--refine-tol", dest="refine_tol", type=float, default=None)
        p.add_argument("--J", dest="J", type=float, default=None)
    sub.choices["scan"].add_argument("--gnuplot", action="store_const", const=True, default=None,
                                     help="Also write a gnuplot script next to the CSV")
    sub.choices["phase"].add_argument("--bracket", type=float, nargs=2, default=None, metavar=("LO", "HI"),
                                      help="Bisect a single crossing of the two deepest depths on [LO, HI]")
    return ap


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    keys = ("log_level", "jobs", "seed", "J", "steps", "delta_min", "delta_max",
            "points", "depths", "refine_tol", "gnuplot")
    return cfg.merged({k: getattr(args, k, None) for k in keys})


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _dumps(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2) + "\n"


def _require_antiferro(delta: float) -> None:
    if delta < 0.0:
        raise ValueError(f"delta must be >= 0 (antiferromagnetic half-plane), got {delta}")


def cmd_invariants(args: argparse.Namespace, cfg: RunConfig) -> int:
    t = load_tensor_json(args.input)
    inv = invariants_full(t)
    out = invariants_to_dict(inv, floor=cfg.zero_floor)
    if args.check_sl:
        op = random_sl_op(cfg.seed)
        moved = invariants_full(apply_local(t, op))
        before, after = inv.raw(), moved.raw()
        devs = {}
        for key, deg in DEGREES.items():
            ref = max(abs(before[key]), inv.scale ** deg, moved.scale ** deg)
            devs[key] = abs(after[key] - before[key]) / ref
        out["sl_check"] = {"seed": cfg.seed, **devs, "max_rel_deviation": max(devs.values())}
        log.info(f"SL CHECK seed={cfg.seed} max_rel_deviation={out['sl_check']['max_rel_deviation']:.3e}")
    _emit(_dumps(out), args.out)
    return EXIT_OK


def cmd_block(args: argparse.Namespace, cfg: RunConfig) -> int:
    _require_antiferro(args.delta)
    sol = block_solution(args.delta, args.d, cfg.singular_tol)
    if args.verify_ed:
        data = block_to_dict(sol, verify_renormalized_operators(sol), ed_check(sol, cfg.J))
    else:
        data = block_to_dict(sol)
    data["J"] = cfg.J
    _emit(_dumps(data), args.out)
    return EXIT_OK


def cmd_flow(args: argparse.Namespace, cfg: RunConfig) -> int:
    _require_antiferro(args.delta)
    traj = rg_trajectory(
        Couplings(cfg.J, args.delta, args.d), cfg.steps,
        tol=cfg.singular_tol, fixed_point_tol=cfg.fixed_point_tol,
    )
    if not traj.completed:
        log.warning(f"FLOW delta={args.delta} D={args.d} status={traj.status} reason={traj.reason}")
    _emit(trajectory_json_lines(traj), args.out)
    return EXIT_OK


def _scan(args: argparse.Namespace, cfg: RunConfig, detect: bool = True):
    _require_antiferro(cfg.delta_min)
    return scan_delta(
        args.d, cfg.delta_min, cfg.delta_max, cfg.points, cfg.depths,
        jobs=cfg.jobs, j=cfg.J, tol=cfg.singular_tol, fixed_point_tol=cfg.fixed_point_tol,
        refine_tol=cfg.refine_tol if detect else None, haldane_floor=cfg.haldane_floor,
    )


def cmd_scan(args: argparse.Namespace, cfg: RunConfig) -> int:
    if cfg.gnuplot and not args.out:
        log.warning("gnuplot script skipped: it reads the CSV, so --out is required")
    scan = _scan(args, cfg)
    _emit(scan_csv(scan), args.out)
    bounds = boundaries_to_dict(scan)
    if args.out:
        write_json(bounds, str(Path(args.out).with_suffix(".boundaries.json")))
        if cfg.gnuplot:
            gp = write_gnuplot(args.out, scan.depths, scan.d)
            log.info(f"SCAN gnuplot script written to {gp}")
    for b in scan.boundaries:
        log.info(f"BOUNDARY D={scan.d} delta_c={b.delta_c:.6f} kind={b.kind} depths={b.depth_lo},{b.depth_hi}")
    return EXIT_OK


def cmd_phase(args: argparse.Namespace, cfg: RunConfig) -> int:
    if args.bracket is None:
        scan = _scan(args, cfg)
    else:
        if len(set(cfg.depths)) < 2:
            raise ValueError("--bracket needs at least two depths")
        scan = _scan(args, cfg, detect=False)
        b = bracket_boundary(scan, tuple(args.bracket), tol=cfg.refine_tol, j=cfg.J, singular_tol=cfg.singular_tol)
        log.info(f"BOUNDARY D={scan.d} delta_c={b.delta_c:.6f} kind={b.kind} depths={b.depth_lo},{b.depth_hi}")
        scan.boundaries = [b]
    _emit(_dumps(boundaries_to_dict(scan)), args.out)
    return EXIT_OK


COMMANDS = {
    "invariants": cmd_invariants,
    "block": cmd_block,
    "flow": cmd_flow,
    "scan": cmd_scan,
    "phase": cmd_phase,
}


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        cfg = _config(args)
        set_log_level(cfg.log_level)
    except (OSError, ValueError) as e:
        log.error(f"config error: {e}")
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args, cfg)
    except ZeroTensorError as e:
        log.error(f"zero tensor: {e}")
        return EXIT_ZERO_TENSOR
    except (SingularBlock, RootFindingError) as e:
        log.error(f"{e}")
        return EXIT_SINGULAR
    except (FlowTerminated, NoBracket) as e:
        log.error(f"{e}")
        return EXIT_FLOW
    except (TensorFormatError, ValueError, OSError) as e:
        log.error(f"bad input: {e}")
        return EXIT_USAGE
    except Exception:
        log.exception(f"internal error in {args.command}")
        return EXIT_INTERNAL
